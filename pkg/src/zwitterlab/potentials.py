"""Potential specifications.

``QuarticPotential`` uses V(x) = a + b x + c x^2/2 + d x^3/6 + e x^4/24.
``CoulombPotential`` is only used by the radial hydrogen pipeline.
``TabulatedPotential`` interpolates samples with a cubic spline.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, asdict
from typing import Union

import numpy as np
from scipy.interpolate import CubicSpline


@dataclass(frozen=True)
class QuarticPotential:
    a: float = 0.0
    b: float = 0.0
    c: float = 1.0
    d: float = 0.0
    e: float = 0.0

    kind = "quartic"

    def __post_init__(self):
        for k in "abcde":
            if not np.isfinite(getattr(self, k)):
                raise ValueError(f"coefficient {k} must be finite")
        if self.e < 0:
            raise ValueError("quartic coefficient e must be >= 0")

    @property
    def coeffs(self) -> np.ndarray:
        """Power-series coefficients of V, lowest order first."""
        return np.array([self.a, self.b, self.c / 2, self.d / 6, self.e / 24])

    def derivative(self, x, n: int = 1):
        x = np.asarray(x)
        poly = np.polynomial.Polynomial(self.coeffs)
        if n:
            poly = poly.deriv(n)
        return poly(x)

    def __call__(self, x):
        return self.derivative(x, 0)

    @property
    def is_harmonic(self) -> bool:
        return self.d == 0 and self.e == 0

    @property
    def confining(self) -> bool:
        return self.e > 0 or (self.d == 0 and self.c > 0)

    def to_dict(self) -> dict:
        return {"kind": "quartic", **asdict(self)}


@dataclass(frozen=True)
class CoulombPotential:
    """V(r) = strength / r with reduced mass ``mu`` (bound states need strength < 0)."""

    strength: float = -1.0
    mu: float = 1.0

    kind = "coulomb"

    def __post_init__(self):
        if not self.strength < 0:
            raise ValueError("Coulomb strength must be negative for bound states")
        if not self.mu > 0:
            raise ValueError("reduced mass must be positive")

    @property
    def bohr_radius(self) -> float:
        return 1.0 / (abs(self.strength) * self.mu)

    @property
    def ground_energy(self) -> float:
        return -0.5 * self.strength ** 2 * self.mu

    def __call__(self, r):
        return self.strength / np.asarray(r)

    def derivative(self, r, n: int = 1):
        r = np.asarray(r, dtype=float)
        # d^n/dr^n r^-1 = (-1)^n n! r^-(n+1)
        from math import factorial
        return self.strength * (-1) ** n * factorial(n) * r ** (-(n + 1))

    confining = True
    is_harmonic = False

    def to_dict(self) -> dict:
        return {"kind": "coulomb", **asdict(self)}


@dataclass(frozen=True)
class TabulatedPotential:
    xs: tuple
    vs: tuple

    kind = "tabulated"

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        vs = np.asarray(self.vs, dtype=float)
        if xs.ndim != 1 or xs.shape != vs.shape or len(xs) < 4:
            raise ValueError("tabulated potential needs matching 1-D samples (>= 4)")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("sample positions must be strictly increasing")
        object.__setattr__(self, "xs", tuple(xs.tolist()))
        object.__setattr__(self, "vs", tuple(vs.tolist()))

    @property
    def _spline(self) -> CubicSpline:
        sp = self.__dict__.get("_sp")
        if sp is None:
            sp = CubicSpline(np.array(self.xs), np.array(self.vs), bc_type="natural")
            object.__setattr__(self, "_sp", sp)
        return sp

    def derivative(self, x, n: int = 1):
        return self._spline(np.asarray(x, dtype=float), n)

    def __call__(self, x):
        return self.derivative(x, 0)

    @property
    def is_harmonic(self) -> bool:
        return False

    @property
    def confining(self) -> bool:
        vs = self.vs
        return vs[0] > min(vs) and vs[-1] > min(vs)

    def to_dict(self) -> dict:
        return {"kind": "tabulated", "xs": list(self.xs), "vs": list(self.vs)}


PotentialSpec = Union[QuarticPotential, CoulombPotential, TabulatedPotential]


def harmonic(c: float = 1.0) -> QuarticPotential:
    return QuarticPotential(c=c)


def potential_from_dict(d: dict) -> PotentialSpec:
    d = dict(d)
    kind = d.pop("kind", "quartic")
    if kind == "quartic":
        return QuarticPotential(**{k: float(v) for k, v in d.items()})
    if kind == "coulomb":
        return CoulombPotential(**{k: float(v) for k, v in d.items()})
    if kind == "tabulated":
        return TabulatedPotential(tuple(d["xs"]), tuple(d["vs"]))
    raise ValueError(f"unknown potential kind {kind!r}")


def potential_hash(pot: PotentialSpec) -> str:
    blob = json.dumps(pot.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def delta_kernel(x, y, potential) -> np.ndarray:
    """V'((x+y)/2)(x-y) - V(x) + V(y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return potential.derivative(0.5 * (x + y), 1) * (x - y) - potential(x) + potential(y)
