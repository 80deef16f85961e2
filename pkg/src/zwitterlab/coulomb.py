"""Hydrogen-like zwitter statics with closed-form radial orbitals and adaptive quadrature.

Units: hbar = 1, so a = 1/(mu |c|) and E_0 = -c^2 mu / 2.  Atomic units are mu = 1, c = -1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .state import StateError

QUAD = dict(epsabs=1e-13, epsrel=1e-11, limit=200)

HE3_BINDING_MEV = 7.718  # total nuclear binding energy of 3He
HE3_PER_NUCLEON_MEV = HE3_BINDING_MEV / 3
HE3_WIDTH_LIMIT_EV = 0.6e-20
PLANCK_MASS_GEV = 1.220890e19


def hydrogen_s(n: int, r, a: float = 1.0):
    """psi_n00(r), normalized so that int 4 pi r^2 psi^2 dr = 1."""
    if n < 1:
        raise ValueError("principal quantum number must be >= 1")
    r = np.asarray(r, dtype=float)
    rho = 2 * r / (n * a)
    norm = math.sqrt((2 / (n * a)) ** 3 / (2 * n * n))
    radial = norm * np.exp(-rho / 2) * special.eval_genlaguerre(n - 1, 1, rho)
    return radial / math.sqrt(4 * math.pi)


def hydrogen_energy(n: int, strength: float = -1.0, mu: float = 1.0) -> float:
    return -strength ** 2 * mu / (2 * n * n)


def _radial(fn, lo=0.0, hi=np.inf) -> float:
    val, _ = integrate.quad(fn, lo, hi, **QUAD)
    return float(val)


def radial_norm(psi) -> float:
    return _radial(lambda r: 4 * math.pi * r * r * psi(r) ** 2)


@dataclass
class CoulombProfile:
    r: np.ndarray
    f: np.ndarray
    f_bar: float  # density weighted
    f_bar_matched: float  # <f/r> / <1/r>
    f_of: object = field(repr=False, default=None)


def f_function(psi):
    """f(r) = 5 - 16 pi int_r^inf y^2 |psi(y)|^2 (1 + r/y) dy for a radial s-state."""

    def f(r: float) -> float:
        r = float(r)
        near = _radial(lambda y: y * y * psi(y) ** 2, r)
        lin = _radial(lambda y: y * psi(y) ** 2, r)
        return 5.0 - 16 * math.pi * (near + r * lin)

    return f


def hydrogen_1s_f(r, a: float = 1.0):
    """Closed form of f for the 1s orbital."""
    t = np.asarray(r, dtype=float) / a
    return 5.0 - np.exp(-2 * t) * (16 * t * t + 12 * t + 4)


def coulomb_f_profile(psi=None, a: float = 1.0, r=None, weight=None,
                      norm_tol: float = 1e-8) -> CoulombProfile:
    """f(r) samples plus the two scalar summaries of f.

    ``psi`` is a radial s-state callable (default: 1s at radius ``a``); ``weight``
    is the orbital used for averaging (default ``psi``).
    """
    if psi is None:
        psi = lambda r_: hydrogen_s(1, r_, a)  # noqa: E731
    weight = psi if weight is None else weight
    for fn, what in ((psi, "state"), (weight, "weight")):
        nrm = radial_norm(fn)
        if abs(nrm - 1) > norm_tol:
            raise StateError(f"radial {what} not normalized (norm {nrm:.10f})")
    f = f_function(psi)
    if r is None:
        r = np.linspace(0.0, 20.0 * a, 81)
    r = np.asarray(r, dtype=float)
    fr = np.array([f(v) for v in r])
    fbar = _radial(lambda v: 4 * math.pi * v * v * weight(v) ** 2 * f(v))
    inv_r = _radial(lambda v: 4 * math.pi * v * weight(v) ** 2)
    f_over_r = _radial(lambda v: 4 * math.pi * v * weight(v) ** 2 * f(v))
    return CoulombProfile(r, fr, fbar, f_over_r / inv_r, f)


@dataclass
class CoulombZwitterState:
    gamma: float
    sin2: float
    f_bar: float
    mu: float
    strength: float
    a: float
    a_gamma: float
    overlaps: dict  # n -> a_n00 by quadrature

    @property
    def e0(self) -> float:
        return hydrogen_energy(1, self.strength, self.mu)

    def psi(self, r):
        return hydrogen_s(1, r, self.a_gamma)

    @property
    def a100_closed(self) -> float:
        ag, a = self.a_gamma, self.a
        return 8 * (ag * a) ** 1.5 / (ag + a) ** 3

    @property
    def a200_closed(self) -> float:
        ag, a = self.a_gamma, self.a
        return 2 * math.sqrt(2) * (ag * a) ** 1.5 * (a - ag) * (a + ag / 2) ** -4

    @property
    def a200_linear(self) -> float:
        return -32 * math.sqrt(2) / 81 * self.sin2 * self.f_bar


def coulomb_zwitter_ground(gamma: float, f_bar: float, mu: float = 1.0, strength: float = -1.0,
                           n_max: int = 6) -> CoulombZwitterState:
    if strength >= 0:
        raise ValueError("Coulomb strength must be negative for bound states")
    s = math.sin(gamma) ** 2
    if s * f_bar >= 1:
        raise ValueError(f"sin^2(gamma) * f_bar = {s * f_bar:.3g} >= 1: no bound state")
    a = 1.0 / (mu * abs(strength))
    ag = a / (1 - s * f_bar)
    overlaps = {}
    for n in range(1, n_max + 1):
        overlaps[n] = _radial(lambda r, n=n: 4 * math.pi * r * r * hydrogen_s(n, r, a) * hydrogen_s(1, r, ag))
    return CoulombZwitterState(gamma, s, f_bar, mu, strength, a, ag, overlaps)


@dataclass
class CoulombBroadening:
    mean: float  # <H_Q> by quadrature
    shift: float
    width: float
    mean_closed: float
    shift_closed: float
    width_closed: float
    width_leading: float  # 2 sin^2 gamma f_bar |E_0|
    ratio: float  # shift / width
    ratio_leading: float
    basis_mean: float
    basis_coverage: float

    @property
    def basis_difference(self) -> float:
        return self.basis_mean - self.mean


def _h_q_psi(zs: CoulombZwitterState):
    ag, mu, c = zs.a_gamma, zs.mu, zs.strength

    def hpsi(r):
        # -(1/2mu)(psi'' + 2 psi'/r) + c psi / r for psi ~ exp(-r/ag)
        return (-1 / (2 * mu * ag * ag) + 1 / (mu * ag * r) + c / r) * zs.psi(r)

    return hpsi


def coulomb_broadening(zs: CoulombZwitterState) -> CoulombBroadening:
    hpsi = _h_q_psi(zs)
    mean = _radial(lambda r: 4 * math.pi * r * r * zs.psi(r) * hpsi(r))
    sq = _radial(lambda r: 4 * math.pi * r * r * hpsi(r) ** 2)
    width = math.sqrt(max(sq - mean * mean, 0.0))
    e0 = zs.e0
    u = zs.sin2 * zs.f_bar
    coeffs = {n: v * v for n, v in zs.overlaps.items()}
    cover = sum(coeffs.values())
    basis_mean = sum(c * hydrogen_energy(n, zs.strength, zs.mu) for n, c in coeffs.items()) / cover
    shift = mean - e0
    return CoulombBroadening(
        mean=mean, shift=shift, width=width,
        mean_closed=e0 * (1 - u * u), shift_closed=abs(e0) * u * u,
        width_closed=abs(e0) * 2 * u * (1 - u), width_leading=abs(e0) * 2 * u,
        ratio=shift / width if width > 0 else 0.0, ratio_leading=0.5 * u,
        basis_mean=basis_mean, basis_coverage=cover)


def virial_residual(a_gamma: float, mu: float = 1.0) -> float:
    """|<T> + E| for the 1s orbital at radius a_gamma in its own Coulomb field."""
    psi = lambda r: hydrogen_s(1, r, a_gamma)  # noqa: E731
    kin = _radial(lambda r: 4 * math.pi * r * r * (psi(r) / a_gamma) ** 2) / (2 * mu)
    energy = -1 / (2 * mu * a_gamma ** 2)
    return abs(kin + energy)


def iterated_f_bar(gamma: float, a: float = 1.0) -> float:
    """f_bar from f of the shifted orbital weighted by the shifted orbital."""
    fb0 = coulomb_f_profile(a=a, r=[0.0]).f_bar
    ag = a / (1 - math.sin(gamma) ** 2 * fb0)
    psi = lambda r: hydrogen_s(1, r, ag)  # noqa: E731
    return coulomb_f_profile(psi, r=[0.0]).f_bar


SWEEP_COLUMNS = ("gamma", "f_bar", "a_gamma", "E_mean", "delta_E", "width", "a100", "a200")


def coulomb_sweep(sin2_values, f_bars) -> list[dict]:
    rows = []
    for fb in f_bars:
        for s in sin2_values:
            g = math.asin(math.sqrt(s))
            zs = coulomb_zwitter_ground(g, fb)
            b = coulomb_broadening(zs)
            rows.append({"gamma": g, "f_bar": fb, "a_gamma": zs.a_gamma, "E_mean": b.mean,
                         "delta_E": b.shift, "width": b.width,
                         "a100": zs.overlaps[1], "a200": zs.overlaps[2]})
    return rows


@dataclass
class GammaBound:
    sin2: float
    gamma: float


def gamma_bound_from_width(delta_e_limit: float, e0: float, f_bar: float = 1.0) -> GammaBound:
    """Small-angle inversion of Delta E / |E_0| = 2 sin^2(gamma) f_bar."""
    if delta_e_limit <= 0 or f_bar <= 0 or e0 == 0:
        raise ValueError("inputs must be positive")
    s = delta_e_limit / (2 * f_bar * abs(e0))
    if s > 1:
        raise ValueError(f"width limit implies sin^2(gamma) = {s:.3g} > 1")
    return GammaBound(s, math.asin(math.sqrt(s)))


def he3_bound(per_nucleon: bool = False, f_bar: float = 1.0) -> GammaBound:
    e0 = (HE3_PER_NUCLEON_MEV if per_nucleon else HE3_BINDING_MEV) * 1e6
    return gamma_bound_from_width(HE3_WIDTH_LIMIT_EV, e0, f_bar)


def minimal_planck_exponent(bound: GammaBound, e0_ev: float, scale_gev: float = PLANCK_MASS_GEV) -> float:
    """Smallest n with gamma^2 = (E_0/M_F)^n compatible with the bound (pure arithmetic)."""
    return math.log(bound.gamma ** 2) / math.log(e0_ev / (scale_gev * 1e9))
