"""Classical wave functions on the phase-space grid and their constructors."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, signal

from .grid import PhaseGrid, boundary_mass

log = logging.getLogger(__name__)

NORM_TOL = 1e-10
IMAG_ABORT = 1e-8
BOUNDARY_LIMIT = 1e-8


class StateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuantumPureState:
    """psi_Q(x) sampled on the x-axis of ``grid``."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.nx,):
            raise StateError(f"expected {self.grid.nx} samples, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise StateError("non-finite values in quantum state")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx)

    def normalized(self) -> "QuantumPureState":
        return QuantumPureState(self.grid, self.values / np.sqrt(self.norm))

    def inner(self, other: "QuantumPureState") -> complex:
        return complex(np.vdot(self.values, other.values) * self.grid.dx)

    def boundary_mass(self) -> float:
        b = max(2, self.grid.nx // 16)
        d = np.abs(self.values) ** 2
        return float((d[:b].sum() + d[-b:].sum()) * self.grid.dx)


@dataclass(frozen=True, eq=False)
class ClassicalWaveFunction:
    """Real amplitude psi_C(x, p) with density w = psi_C**2."""

    grid: PhaseGrid
    values: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            raise StateError("classical wave function must be real")
        v = np.array(v, dtype=float)
        if v.shape != self.grid.shape:
            raise StateError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise StateError("non-finite values in classical wave function")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def norm(self) -> float:
        return float(np.sum(self.values ** 2) * self.grid.measure)

    def normalized(self) -> "ClassicalWaveFunction":
        return ClassicalWaveFunction(self.grid, self.values / np.sqrt(self.norm), dict(self.diagnostics))

    def check_normalized(self, tol: float = NORM_TOL) -> None:
        if abs(self.norm - 1.0) > tol:
            raise StateError(f"state not normalized: norm = {self.norm!r}")

    def boundary_mass(self) -> float:
        return boundary_mass(self.grid, self.values ** 2)

    def with_values(self, values: np.ndarray) -> "ClassicalWaveFunction":
        return ClassicalWaveFunction(self.grid, values)


def density(psi: ClassicalWaveFunction) -> np.ndarray:
    return psi.values ** 2


# ---------------------------------------------------------------------------
# pure-state and density-matrix kernel

def _upsample2(a: np.ndarray, axis: int) -> np.ndarray:
    """Trigonometric interpolation onto a grid with half the spacing."""
    return signal.resample(a, 2 * a.shape[axis], axis=axis)


def matrix_to_phase_space(grid: PhaseGrid, m: np.ndarray) -> np.ndarray:
    """Phase-space field of a kernel M(x, y):

        F(z, p) = int dr exp(-i p r / hbar) M(z + r/2, z - r/2)

    Returns the complex result; for Hermitian M it is real.
    """
    nx = grid.nx
    if m.shape != (nx, nx):
        raise ValueError(f"matrix must be {nx}x{nx}")
    if grid.lp > 2 * np.pi * grid.hbar / grid.dx * (1 + 1e-12):
        raise ValueError("momentum span exceeds the dual range of the position grid")
    mf = _upsample2(_upsample2(np.asarray(m, dtype=complex), 0), 1)
    j = np.arange(-nx, nx)
    i = np.arange(nx)
    a = 2 * i[:, None] + j[None, :]
    b = 2 * i[:, None] - j[None, :]
    ok = (a >= 0) & (a < 2 * nx) & (b >= 0) & (b < 2 * nx)
    g = np.zeros((nx, 2 * nx), dtype=complex)
    g[ok] = mf[a[ok], b[ok]]
    r = j * grid.dx
    kern = grid.dx * np.exp(-1j * np.outer(r, grid.p) / grid.hbar)
    return g @ kern


def phase_space_to_matrix(grid: PhaseGrid, field: np.ndarray) -> np.ndarray:
    """Inverse of :func:`matrix_to_phase_space`:

        M(x, y) = int dp/(2 pi hbar) exp(i p (x - y)/hbar) F((x + y)/2, p)
    """
    nx = grid.nx
    fu = _upsample2(np.asarray(field, dtype=complex), 0)
    j = np.arange(-nx, nx)
    r = j * grid.dx
    kern = grid.dp / (2 * np.pi * grid.hbar) * np.exp(1j * np.outer(grid.p, r) / grid.hbar)
    g = fu @ kern  # (2 nx, 2 nx): fine z index, r index
    a = np.arange(nx)
    zi = a[:, None] + a[None, :]
    ri = a[:, None] - a[None, :] + nx
    return g[zi, ri]


def _real_checked(arr: np.ndarray, what: str, diag: dict) -> np.ndarray:
    scale = max(np.max(np.abs(arr)), 1e-300)
    resid = float(np.max(np.abs(arr.imag)) / scale) if np.iscomplexobj(arr) else 0.0
    diag["imag_residue"] = resid
    if resid > IMAG_ABORT:
        raise StateError(f"{what}: imaginary residue {resid:.3e} exceeds {IMAG_ABORT}")
    if resid > 1e-10:
        log.debug("%s: imaginary residue %.3e discarded", what, resid)
    return np.real(arr)


def from_quantum_pure(psi_q: QuantumPureState, grid: PhaseGrid | None = None) -> ClassicalWaveFunction:
    grid = grid or psi_q.grid
    if abs(psi_q.norm - 1.0) > 1e-8:
        raise StateError(f"quantum state not normalized: {psi_q.norm!r}")
    if psi_q.boundary_mass() > BOUNDARY_LIMIT:
        raise StateError(f"quantum state boundary mass {psi_q.boundary_mass():.2e} too large")
    v = psi_q.values
    diag: dict = {}
    f = _real_checked(matrix_to_phase_space(grid, np.outer(v, v.conj())), "pure-state transform", diag)
    out = ClassicalWaveFunction(grid, f, diag)
    diag["norm_before"] = out.norm
    return out


def from_density(grid: PhaseGrid, w: np.ndarray, sign=None, tol: float = 1e-8) -> ClassicalWaveFunction:
    """psi_C = s sqrt(w); ``sign`` is +1 by default or a field of +-1 values."""
    w = np.asarray(w, dtype=float)
    if w.shape != grid.shape:
        raise StateError("density shape does not match grid")
    if np.any(w < 0):
        raise StateError("density has negative entries")
    total = float(w.sum() * grid.measure)
    if abs(total - 1.0) > tol:
        raise StateError(f"density not normalized: {total!r}")
    s = 1.0 if sign is None else np.asarray(sign, dtype=float)
    diag = {}
    if sign is None:
        diag["interior_zeros"] = _has_interior_zeros(w)
        if diag["interior_zeros"]:
            log.warning("density has interior zeros; a constant sign may not be analytic there")
    return ClassicalWaveFunction(grid, s * np.sqrt(w), diag)


def _has_interior_zeros(w: np.ndarray, rel: float = 1e-12) -> bool:
    support = w > rel * w.max()
    rows = np.where(support.any(axis=1))[0]
    cols = np.where(support.any(axis=0))[0]
    if len(rows) == 0:
        return False
    box = support[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
    # a zero strictly inside the support's row/column extent
    inner = box[1:-1, 1:-1] if min(box.shape) > 2 else box
    filled = np.zeros_like(inner)
    for k, row in enumerate(inner):
        idx = np.where(row)[0]
        if len(idx):
            filled[k, idx[0]:idx[-1] + 1] = True
    return bool(np.any(filled & ~inner))


# ---------------------------------------------------------------------------
# static classical states

def classical_energy(grid: PhaseGrid, potential, m: float = 1.0) -> np.ndarray:
    x, p = grid.mesh()
    return p ** 2 / (2 * m) + potential(x)


def _potential_minimum(potential) -> tuple[float, float]:
    res = optimize.minimize_scalar(lambda x: float(potential(x)), bracket=(-1.0, 0.0, 1.0))
    return float(res.x), float(res.fun)


def turning_points(potential, energy: float) -> tuple[float, float]:
    x0, v0 = _potential_minimum(potential)
    if energy <= v0:
        raise StateError(f"energy {energy} below potential minimum {v0}")
    f = lambda x: float(potential(x)) - energy
    step = 1.0
    lo = x0 - step
    while f(lo) < 0:
        step *= 2
        lo = x0 - step
        if step > 1e6:
            raise StateError("potential is not confining at this energy")
    step = 1.0
    hi = x0 + step
    while f(hi) < 0:
        step *= 2
        hi = x0 + step
        if step > 1e6:
            raise StateError("potential is not confining at this energy")
    return optimize.brentq(f, lo, x0, xtol=1e-14), optimize.brentq(f, x0, hi, xtol=1e-14)


def density_of_states(potential, energy: float, m: float = 1.0, hbar: float = 1.0) -> float:
    """f_N(E) = sqrt(m / (2 pi^2)) int dx (E - V(x))^(-1/2), per unit hbar."""
    x1, x2 = turning_points(potential, energy)
    mid, half = 0.5 * (x1 + x2), 0.5 * (x2 - x1)
    # Gauss-Chebyshev: the weight 1/sqrt((x - x1)(x2 - x)) absorbs both endpoint
    # singularities and the nodes stay clear of the cancellation in E - V near x1, x2
    prev = None
    for n in (64, 128, 256, 512, 1024, 2048):
        xk = mid + half * np.cos((2 * np.arange(n) + 1) * np.pi / (2 * n))
        gap = energy - np.asarray(potential(xk), dtype=float)
        val = np.pi / n * float(np.sum(np.sqrt(np.clip((xk - x1) * (x2 - xk), 0, None) / gap)))
        if prev is not None and abs(val - prev) <= 1e-13 * val:
            break
        prev = val
    return float(np.sqrt(m / (2 * np.pi ** 2)) * val / hbar)


def _shell_gradient(grid, potential, m, band_mask):
    x, p = grid.mesh()
    gx = potential.derivative(x, 1) * np.ones_like(p)
    gp = np.ones_like(x) * p / m
    g = np.sqrt(gx ** 2 + gp ** 2)
    return float(np.max(g[band_mask]))


def microcanonical_state(grid: PhaseGrid, epsilon: float, width: float, potential,
                         m: float = 1.0) -> ClassicalWaveFunction:
    """Gaussian-regularized energy shell: w ~ exp(-(E - eps)^2 / (2 width^2))."""
    _, vmin = _potential_minimum(potential)
    if epsilon <= vmin:
        raise StateError(f"epsilon {epsilon} below potential minimum {vmin}")
    if width <= 0:
        raise StateError("width must be positive")
    e = classical_energy(grid, potential, m)
    band = np.abs(e - epsilon) < width
    if not band.any():
        raise StateError("energy shell not resolved on the grid")
    sigma_n = width / _shell_gradient(grid, potential, m, band)
    if sigma_n < max(grid.dx, grid.dp):
        raise StateError(f"shell thickness {2 * sigma_n:.3g} thinner than 2 grid cells")
    w = np.exp(-((e - epsilon) ** 2) / (2 * width ** 2))
    raw = float(w.sum() * grid.measure)
    psi = ClassicalWaveFunction(grid, np.sqrt(w / raw))
    psi.diagnostics.update(raw_mass=raw, shell_sigma=sigma_n, boundary_mass=psi.boundary_mass())
    return psi


def shell_mass_quadrature(epsilon: float, width: float, potential, m: float = 1.0, hbar: float = 1.0) -> float:
    """int dE f_N(E) exp(-(E - eps)^2/(2 width^2)): the unnormalized shell mass."""
    _, vmin = _potential_minimum(potential)
    lo = max(vmin + 1e-14, epsilon - 12 * width)
    hi = epsilon + 12 * width
    val, _ = integrate.quad(
        lambda en: density_of_states(potential, en, m, hbar) * np.exp(-((en - epsilon) ** 2) / (2 * width ** 2)),
        lo, hi, epsabs=1e-14, epsrel=1e-11, limit=200)
    return float(val)


def two_delta_state(grid: PhaseGrid, epsilon: float, width: float, c: float = 1.0,
                    m: float = 1.0) -> ClassicalWaveFunction:
    """Uniform-in-z density inside V(z) < eps with momentum Gaussians at +-p_hat(z)."""
    if epsilon <= 0 or c <= 0:
        raise StateError("need epsilon > 0 and c > 0")
    if width < grid.dp:
        raise StateError(f"momentum width {width} under-resolved (dp = {grid.dp})")
    x, p = grid.mesh()
    v = 0.5 * c * x ** 2
    inside = v < epsilon
    phat = np.sqrt(2 * m * np.clip(epsilon - v, 0, None))
    g = np.exp(-((p - phat) ** 2) / (2 * width ** 2)) + np.exp(-((p + phat) ** 2) / (2 * width ** 2))
    w = np.where(inside, g, 0.0)
    w = w / (w.sum() * grid.measure)
    psi = ClassicalWaveFunction(grid, np.sqrt(w))
    psi.diagnostics["boundary_mass"] = psi.boundary_mass()
    return psi


def static_state_from_profile(grid: PhaseGrid, profile, potential, m: float = 1.0,
                              e_max: float | None = None) -> ClassicalWaveFunction:
    """psi_C(z, p) = profile(E(z, p)), normalized by int dE f_N(E) profile(E)^2 = 1."""
    _, vmin = _potential_minimum(potential)
    xs = np.array([grid.x[0], grid.x[-1]])
    rep_max = min(float(np.min(potential(xs))), (0.5 * grid.lp) ** 2 / (2 * m))
    samples = np.linspace(vmin, 2 * rep_max - vmin, 2001)
    prof = np.abs(np.asarray([profile(s) for s in samples], dtype=float))
    beyond = samples > rep_max
    if prof.max() == 0:
        raise StateError("profile vanishes identically")
    if np.max(prof[beyond], initial=0.0) > 1e-7 * prof.max():
        raise StateError("profile support extends beyond the representable energy range")
    upper = e_max if e_max is not None else rep_max
    norm, _ = integrate.quad(lambda en: density_of_states(potential, en, m, grid.hbar) * profile(en) ** 2,
                             vmin + 1e-14, upper, limit=400, epsabs=1e-14, epsrel=1e-11)
    e = classical_energy(grid, potential, m)
    vals = np.vectorize(profile, otypes=[float])(e) / np.sqrt(norm)
    psi = ClassicalWaveFunction(grid, vals)
    psi.diagnostics.update(quadrature_norm=norm, grid_norm=psi.norm)
    return psi


# ---------------------------------------------------------------------------
# simple quantum states

def gaussian_packet(grid: PhaseGrid, x0: float = 0.0, p0: float = 0.0, sigma: float = 1.0) -> QuantumPureState:
    x = grid.x
    v = np.exp(-((x - x0) ** 2) / (4 * sigma ** 2) + 1j * p0 * x / grid.hbar)
    return QuantumPureState(grid, v).normalized()


def superpose(*states: QuantumPureState, weights=None) -> QuantumPureState:
    weights = np.ones(len(states)) if weights is None else np.asarray(weights)
    v = sum(w * s.values for w, s in zip(weights, states))
    return QuantumPureState(states[0].grid, v).normalized()


def reflect_momentum(psi: ClassicalWaveFunction) -> ClassicalWaveFunction:
    """psi'(x, p) = psi(x, -p) on the grid (index j -> (n_p - j) mod n_p)."""
    n = psi.grid.n_p
    idx = (-np.arange(n)) % n
    return ClassicalWaveFunction(psi.grid, psi.values[:, idx])
