"""Periodic phase-space grid and spectral primitives.

Fields live on an ``(nx, n_p)`` array indexed as ``field[i, j] = f(x_i, p_j)``.
Axis 0 is position, axis 1 is momentum.  Derivatives and shifts are applied
as multipliers in the Fourier-dual representation of the relevant axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

_WORKERS = 1


def set_fft_workers(n: int) -> None:
    """Thread count for every FFT in the package (results are deterministic per count)."""
    global _WORKERS
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _WORKERS = int(n)


def fft_workers() -> int:
    return _WORKERS


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


AXES = {"x": 0, "p": 1}


def axis_index(axis) -> int:
    if axis in AXES:
        return AXES[axis]
    if axis in (0, 1):
        return int(axis)
    raise ValueError(f"axis must be 'x' or 'p', got {axis!r}")


@dataclass(frozen=True)
class PhaseGrid:
    nx: int
    n_p: int
    lx: float
    lp: float
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("nx", "n_p"):
            n = getattr(self, name)
            if int(n) != n or not _is_pow2(int(n)) or n < 16:
                raise ValueError(f"{name} must be a power of two >= 16, got {n}")
        for name in ("lx", "lp", "hbar"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.n_p)

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dp(self) -> float:
        return self.lp / self.n_p

    @property
    def measure(self) -> float:
        """Phase-space cell weight dx dp / (2 pi hbar)."""
        return self.dx * self.dp / (2.0 * np.pi * self.hbar)

    @cached_property
    def x(self) -> np.ndarray:
        return -0.5 * self.lx + self.dx * np.arange(self.nx)

    @cached_property
    def p(self) -> np.ndarray:
        return -0.5 * self.lp + self.dp * np.arange(self.n_p)

    @cached_property
    def kx(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)

    @cached_property
    def kp(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_p, d=self.dp)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable (x, p) columns: shapes (nx, 1) and (1, n_p)."""
        return self.x[:, None], self.p[None, :]

    def to_dict(self) -> dict:
        return {"nx": self.nx, "np": self.n_p, "lx": self.lx, "lp": self.lp, "hbar": self.hbar}

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseGrid":
        return cls(int(d["nx"]), int(d.get("np", d.get("n_p"))), float(d["lx"]), float(d["lp"]),
                   float(d.get("hbar", 1.0)))


def make_grid(nx: int, np_: int, lx: float, lp: float, hbar: float = 1.0) -> PhaseGrid:
    return PhaseGrid(nx, np_, lx, lp, hbar)


def flipped_nyquist(k: np.ndarray) -> np.ndarray:
    """Copy of ``k`` with the Nyquist entry negated (identity for odd lengths)."""
    out = k.copy()
    n = len(k)
    if n % 2 == 0:
        out[n // 2] = -out[n // 2]
    return out


def symmetric_multiplier(fn, k: np.ndarray) -> np.ndarray:
    """Evaluate ``fn(k)`` averaging the Nyquist bin over +k_N and -k_N.

    This keeps real fields real when the multiplier is odd in k.
    """
    a = np.asarray(fn(k))
    b = np.asarray(fn(flipped_nyquist(k)))
    return 0.5 * (a + b)


def fft(field: np.ndarray, axis: int) -> np.ndarray:
    return sfft.fft(field, axis=axis, workers=_WORKERS)


def ifft(field: np.ndarray, axis: int) -> np.ndarray:
    return sfft.ifft(field, axis=axis, workers=_WORKERS)


def apply_multiplier(field: np.ndarray, mult: np.ndarray, axis: int) -> np.ndarray:
    """Multiply ``field`` by ``mult`` in the Fourier representation of ``axis``.

    ``mult`` must broadcast against the transformed field, e.g. shape
    (nx, 1) for axis 0 or (1, n_p) / (nx, n_p) for axis 1.
    """
    return ifft(fft(field, axis) * mult, axis)


def _realify(out: np.ndarray, like: np.ndarray) -> np.ndarray:
    if np.isrealobj(like):
        return out.real.copy()
    return out


def spectral_derivative(grid: PhaseGrid, field: np.ndarray, axis="x", order: int = 1) -> np.ndarray:
    ax = axis_index(axis)
    if int(order) != order or order < 1:
        raise ValueError("order must be a positive integer")
    field = np.asarray(field)
    if field.shape != grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    k = grid.kx if ax == 0 else grid.kp
    mult = symmetric_multiplier(lambda kk: (1j * kk) ** order, k)
    mult = mult[:, None] if ax == 0 else mult[None, :]
    return _realify(apply_multiplier(field, mult, ax), field)


def spectral_shift(grid: PhaseGrid, field: np.ndarray, axis="p", shift=0.0) -> np.ndarray:
    """Translate ``field`` along ``axis``: result(q) = field(q - shift).

    ``shift`` may be a scalar or a 1-D profile over the other axis
    (e.g. a p-shift that depends on x).
    """
    ax = axis_index(axis)
    field = np.asarray(field)
    if field.shape != grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    s = np.asarray(shift, dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("shift values must be finite")
    if s.ndim == 1:
        s = s[None, :] if ax == 0 else s[:, None]
    k = grid.kx if ax == 0 else grid.kp
    kk = k[:, None] if ax == 0 else k[None, :]
    kf = flipped_nyquist(k)
    kf = kf[:, None] if ax == 0 else kf[None, :]
    mult = 0.5 * (np.exp(-1j * kk * s) + np.exp(-1j * kf * s))
    return _realify(apply_multiplier(field, mult, ax), field)


def boundary_mass(grid: PhaseGrid, w: np.ndarray, band: int | None = None) -> float:
    """Probability in the outer band of cells along both axes."""
    bx = band if band is not None else max(2, grid.nx // 16)
    bp = band if band is not None else max(2, grid.n_p // 16)
    mask = np.zeros(grid.shape, dtype=bool)
    mask[:bx, :] = True
    mask[-bx:, :] = True
    mask[:, :bp] = True
    mask[:, -bp:] = True
    return float(np.sum(w[mask]) * grid.measure)
