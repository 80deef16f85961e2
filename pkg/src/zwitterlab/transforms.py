"""Position basis, coarse graining, Wigner function and position probabilities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import PhaseGrid
from .state import (ClassicalWaveFunction, QuantumPureState, StateError, _real_checked,
                    _upsample2, matrix_to_phase_space, phase_space_to_matrix)
from . import observables as obs


@dataclass(frozen=True, eq=False)
class PositionBasisState:
    """psi~_C(x, y) on the x-grid squared."""

    grid: PhaseGrid
    values: np.ndarray

    @property
    def hermiticity_residual(self) -> float:
        v = self.values
        return float(np.max(np.abs(v - v.conj().T)))


@dataclass(frozen=True, eq=False)
class QuantumDensityMatrix:
    grid: PhaseGrid
    values: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.values)) * self.grid.dx)

    def eigenvalues(self) -> np.ndarray:
        """Spectrum of the operator (kernel times dx), ascending."""
        h = 0.5 * (self.values + self.values.conj().T) * self.grid.dx
        return np.linalg.eigvalsh(h)

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.values)).copy()

    def purity(self) -> float:
        return float(np.real(np.sum(self.values * self.values.T)) * self.grid.dx ** 2)


@dataclass(frozen=True, eq=False)
class WignerFunction:
    grid: PhaseGrid
    values: np.ndarray

    @property
    def total(self) -> float:
        return float(self.values.sum() * self.grid.measure)

    def position_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.grid.dp / (2 * np.pi * self.grid.hbar)

    def momentum_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.grid.dx


def to_position_basis(psi: ClassicalWaveFunction) -> PositionBasisState:
    return PositionBasisState(psi.grid, phase_space_to_matrix(psi.grid, psi.values))


def from_position_basis(pbs: PositionBasisState) -> ClassicalWaveFunction:
    diag: dict = {}
    vals = _real_checked(matrix_to_phase_space(pbs.grid, pbs.values), "position-basis inverse", diag)
    return ClassicalWaveFunction(pbs.grid, vals, diag)


def coarse_grain(pbs: PositionBasisState, tol: float = 1e-6) -> QuantumDensityMatrix:
    # the inner sum runs on a half-spacing grid: the product of two band-limited
    # kernels carries twice their bandwidth and would alias on the original one
    v = _upsample2(pbs.values, 1)
    rho = 0.5 * pbs.grid.dx * (v @ v.conj().T)
    out = QuantumDensityMatrix(pbs.grid, rho)
    if abs(out.trace - 1.0) > tol:
        raise StateError(f"coarse-grained trace {out.trace!r} deviates from 1")
    return out


def density_matrix_from_pure(psi_q: QuantumPureState) -> QuantumDensityMatrix:
    v = psi_q.values
    return QuantumDensityMatrix(psi_q.grid, np.outer(v, v.conj()))


def reduced_density_matrix(psi: ClassicalWaveFunction) -> QuantumDensityMatrix:
    return coarse_grain(to_position_basis(psi))


def wigner(rho: QuantumDensityMatrix) -> WignerFunction:
    diag: dict = {}
    vals = _real_checked(matrix_to_phase_space(rho.grid, rho.values), "Wigner transform", diag)
    return WignerFunction(rho.grid, vals)


def wigner_folding(psi: ClassicalWaveFunction) -> WignerFunction:
    """Direct double folding of psi_C (slow; only for grids with nx, n_p <= 32).

    rho_w(x, p) = int_{r, r', s, s'} psi(x + r/2, p + s) psi(x + r'/2, p + s') cos(s' r - s r')

    with int_r = dr and int_s = ds / (2 pi hbar).  Substituting q = p + s turns
    the momentum sums into plain sums over grid momenta, so no wrap-around is
    involved.
    """
    g = psi.grid
    if g.nx > 32 or g.n_p > 32:
        raise ValueError("folding oracle is limited to grids of at most 32 x 32")
    nx, h = g.nx, g.hbar
    fu = _upsample2(psi.values, 0)
    j = np.arange(-nx, nx)
    r = j * g.dx
    fine = 2 * np.arange(nx)[:, None] + j[None, :]
    ok = (fine >= 0) & (fine < 2 * nx)
    shifted = np.zeros((nx, 2 * nx, g.n_p))
    shifted[ok] = fu[fine[ok]]
    # F[x, r, r'] = sum_q psi(x + r/2, q) exp(-i q r'/hbar) dq/(2 pi hbar)
    ph = np.exp(-1j * np.outer(g.p, r) / h) * g.dp / (2 * np.pi * h)
    f = shifted @ ph
    gmat = f * np.conj(np.transpose(f, (0, 2, 1)))  # F(x,r,r') conj F(x,r',r)
    out = np.empty(g.shape)
    dr = g.dx
    for ip, p in enumerate(g.p):
        phase = np.exp(1j * p * (r[None, :] - r[:, None]) / h)  # [r, r'] -> exp(i p (r' - r))
        out[:, ip] = np.real(np.einsum("xab,ab->x", gmat, phase)) * dr * dr
    return WignerFunction(g, out)


def quantum_position_probability(psi: ClassicalWaveFunction) -> np.ndarray:
    """w_Q(x) assembled directly from psi_C by the r, q, q' folding."""
    g = psi.grid
    nx, h = g.nx, g.hbar
    fu = _upsample2(psi.values, 0)
    j = np.arange(-nx, nx)
    r = j * g.dx
    fine = 2 * np.arange(nx)[:, None] + j[None, :]
    ok = (fine >= 0) & (fine < 2 * nx)
    shifted = np.zeros((nx, 2 * nx, g.n_p))
    shifted[ok] = fu[fine[ok]]
    ph = np.exp(1j * np.outer(g.p, r) / h) * g.dp / (2 * np.pi * h)
    # sum_{q,q'} psi(q) psi(q') cos((q' - q) r) = |sum_q psi(q) exp(i q r)|^2
    amp = np.einsum("xrq,qr->xr", shifted, ph)
    w = np.sum(np.abs(amp) ** 2, axis=1) * g.dx
    return _clip_probability(w)


def quantum_position_probability_via_rho(psi: ClassicalWaveFunction) -> np.ndarray:
    rho = reduced_density_matrix(psi)
    return _clip_probability(wigner(rho).position_marginal())


def _clip_probability(w: np.ndarray) -> np.ndarray:
    if np.min(w) < -1e-10:
        raise StateError(f"position probability negative ({np.min(w):.2e})")
    return np.clip(w, 0.0, None)


def classical_position_probability(psi: ClassicalWaveFunction) -> np.ndarray:
    g = psi.grid
    return (psi.values ** 2).sum(axis=1) * g.dp / (2 * np.pi * g.hbar)


def expectation_via_rho(rho: QuantumDensityMatrix, op: obs.Op) -> float:
    if not op.is_hermitian():
        raise obs.OperatorError("observable must be Hermitian")
    mat = obs.position_matrix(op, rho.grid)
    val = np.trace(mat @ rho.values) * rho.grid.dx
    return float(np.real(val))


def trace_distance(a: QuantumDensityMatrix, b: QuantumDensityMatrix) -> float:
    d = (a.values - b.values) * a.grid.dx
    d = 0.5 * (d + d.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(d))))
