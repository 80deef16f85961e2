"""Eigenstates, the effective zwitter potential and ground-state broadening on the x-grid."""
from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from .grid import PhaseGrid
from .potentials import QuarticPotential, delta_kernel, potential_hash
from .state import QuantumPureState
from .transforms import QuantumDensityMatrix

log = logging.getLogger(__name__)


class SpectrumError(ValueError):
    pass


def harmonic_eigenstate(grid: PhaseGrid, n: int, m: float = 1.0, omega: float = 1.0) -> QuantumPureState:
    """Normalized Hermite function via the stable three-term recursion."""
    if n < 0:
        raise SpectrumError("level must be >= 0")
    h = grid.hbar
    alpha = m * omega / h
    turning = math.sqrt((2 * n + 1) / alpha)
    pmax = math.sqrt((2 * n + 1) * m * omega * h)
    if turning > 0.35 * grid.lx or pmax > 0.5 * math.pi * h / grid.dx:
        raise SpectrumError(f"level {n} is too large for this grid")
    xi = math.sqrt(alpha) * grid.x
    prev = np.zeros_like(xi)
    cur = (alpha / math.pi) ** 0.25 * np.exp(-0.5 * xi ** 2)
    for k in range(n):
        prev, cur = cur, math.sqrt(2.0 / (k + 1)) * xi * cur - math.sqrt(k / (k + 1)) * prev
    out = QuantumPureState(grid, cur)
    if out.boundary_mass() > 1e-10:
        raise SpectrumError(f"level {n} is too large for this grid")
    return out


def kinetic_matrix(grid: PhaseGrid, m: float = 1.0) -> np.ndarray:
    n = grid.nx
    k = grid.kx
    t = grid.hbar ** 2 * k ** 2 / (2 * m)
    f = np.fft.fft(np.eye(n), axis=0)
    mat = np.fft.ifft(t[:, None] * f, axis=0)
    return np.real(0.5 * (mat + mat.conj().T))


def hamiltonian_matrix(grid: PhaseGrid, potential, m: float = 1.0) -> np.ndarray:
    return kinetic_matrix(grid, m) + np.diag(potential(grid.x))


def _fix_sign(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return v if v[i] >= 0 else -v


@dataclass
class Eigenbasis:
    grid: PhaseGrid
    energies: np.ndarray
    vectors: np.ndarray  # columns normalized with the dx weight
    residuals: np.ndarray

    def state(self, n: int) -> QuantumPureState:
        return QuantumPureState(self.grid, self.vectors[:, n])

    def __len__(self):
        return len(self.energies)

    def __iter__(self):
        for n in range(len(self)):
            yield float(self.energies[n]), self.state(n)


def eigensolve(grid: PhaseGrid, potential, count: int, m: float = 1.0,
               edge_tol: float = 1e-8) -> Eigenbasis:
    if not getattr(potential, "confining", False):
        raise SpectrumError("potential is not confining")
    count = int(count)
    if not 1 <= count <= grid.nx:
        raise SpectrumError("level count out of range")
    h = hamiltonian_matrix(grid, potential, m)
    w, v = linalg.eigh(h, subset_by_index=[0, count - 1])
    v = np.column_stack([_fix_sign(v[:, i]) for i in range(count)]) / math.sqrt(grid.dx)
    res = np.linalg.norm(h @ v - v * w, axis=0) * math.sqrt(grid.dx)
    b = max(2, grid.nx // 16)
    edge = (np.abs(v[:b]) ** 2).sum(axis=0) + (np.abs(v[-b:]) ** 2).sum(axis=0)
    if np.any(edge * grid.dx > edge_tol):
        worst = int(np.argmax(edge))
        raise SpectrumError(f"level {worst} reaches the box edge; enlarge lx")
    return Eigenbasis(grid, w, v, res)


class EigenCache:
    """npz files keyed by potential, grid and mass."""

    def __init__(self, directory):
        self.dir = Path(directory)

    def key(self, grid, potential, count, m) -> str:
        blob = json.dumps({"g": grid.to_dict(), "v": potential_hash(potential), "n": count, "m": m},
                          sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:20]

    def get(self, grid, potential, count, m=1.0) -> Eigenbasis:
        path = self.dir / f"eig_{self.key(grid, potential, count, m)}.npz"
        if path.exists():
            d = np.load(path)
            return Eigenbasis(grid, d["energies"], d["vectors"], d["residuals"])
        basis = eigensolve(grid, potential, count, m)
        self.dir.mkdir(parents=True, exist_ok=True)
        np.savez(path, energies=basis.energies, vectors=basis.vectors, residuals=basis.residuals)
        return basis


# ---------------------------------------------------------------------------
# zwitter potential

def zwitter_potential(grid: PhaseGrid, rho, potential, gamma: float) -> np.ndarray:
    """W(x) = sin^2(gamma) sum_y Delta(x, y) rho(y, y) dx.

    ``rho`` is a QuantumDensityMatrix or the diagonal density as a vector.
    """
    diag = rho.diagonal() if isinstance(rho, QuantumDensityMatrix) else np.real(np.asarray(rho))
    x = grid.x
    kern = delta_kernel(x[:, None], x[None, :], potential)
    return math.sin(gamma) ** 2 * (kern @ diag) * grid.dx


def quartic_zwitter_potential(x, moments, potential: QuarticPotential, gamma: float) -> np.ndarray:
    """Closed form for quartic V in terms of <X_Q^n>, n = 1..4 (``moments[n]``)."""
    x = np.asarray(x, dtype=float)
    m1, m2, m3, m4 = (moments[k] for k in (1, 2, 3, 4))
    d, e = potential.d, potential.e
    s = math.sin(gamma) ** 2
    return s / 24 * ((3 * m1 * x ** 2 - 3 * m2 * x - x ** 3 + m3) * d
                     + (m1 * x ** 3 - m3 * x - 0.5 * x ** 4 + 0.5 * m4) * e)


@dataclass
class ZwitterGroundState:
    gamma: float
    psi: QuantumPureState
    energy: float  # lowest eigenvalue of H_Q + W
    iterations: int = 0
    residuals: list = field(default_factory=list)
    damping: float = 1.0
    zwitter_potential: np.ndarray | None = None
    f_bar: float | None = None


def zwitter_ground_iterate(grid: PhaseGrid, potential, gamma: float, max_iter: int = 200,
                           tol: float = 1e-12, m: float = 1.0, first_order: bool = False) -> ZwitterGroundState:
    """Fixed point of psi -> ground state of H_Q + W_gamma[|psi|^2].

    Densities are mixed with weight 1 until the residual grows, then 0.5.
    ``first_order`` stops after the single correction built from the H_Q ground state.
    """
    h0 = hamiltonian_matrix(grid, potential, m)
    x = grid.x
    kern = delta_kernel(x[:, None], x[None, :], potential) * grid.dx * math.sin(gamma) ** 2

    def ground(w):
        e, v = linalg.eigh(h0 + np.diag(w), subset_by_index=[0, 0])
        return float(e[0]), _fix_sign(v[:, 0]) / math.sqrt(grid.dx)

    e, v = ground(np.zeros_like(x))
    dens = np.abs(v) ** 2
    alpha = 1.0
    history = []
    it = 0
    w = kern @ dens
    for it in range(1, max_iter + 1):
        e, v = ground(w)
        new = np.abs(v) ** 2
        res = float(np.sum(np.abs(new - dens)) * grid.dx)
        history.append(res)
        if first_order:
            break
        if len(history) > 1 and res > history[-2] and alpha == 1.0:
            alpha = 0.5
            log.info("zwitter iteration: residual grew, damping set to 0.5")
        dens = dens + alpha * (new - dens)
        w = kern @ dens
        if res < tol:
            break
    else:
        raise SpectrumError(f"zwitter iteration did not converge: residuals {history[-5:]}")
    if not first_order:
        # final consistent eigenpair for the converged density
        e, v = ground(w)
    return ZwitterGroundState(gamma, QuantumPureState(grid, v), e, it, history, alpha, w)


@dataclass
class Broadening:
    mean: float
    shift: float
    width: float
    coefficients: np.ndarray
    coverage: float
    mean_direct: float


def broadening_analysis(zgs: ZwitterGroundState, basis: Eigenbasis, potential=None,
                        m: float = 1.0, depth: int = 40, completeness: float = 1e-4) -> Broadening:
    depth = min(depth, len(basis))
    vecs = basis.vectors[:, :depth]
    amp = vecs.conj().T @ zgs.psi.values * basis.grid.dx
    c = np.abs(amp) ** 2
    cover = float(c.sum())
    if cover < 1 - completeness:
        raise SpectrumError(f"basis covers only {cover:.6f} of the state")
    en = basis.energies[:depth]
    shift = float(np.sum(c * (en - en[0])) / cover)
    mean = float(en[0] + shift)
    width = float(np.sqrt(np.sum(c * (en - mean) ** 2) / cover))
    direct = float("nan")
    if potential is not None:
        h = hamiltonian_matrix(basis.grid, potential, m)
        v = zgs.psi.values
        direct = float(np.real(np.vdot(v, h @ v)) * basis.grid.dx)
    return Broadening(mean, shift, width, c, cover, direct)


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(np.asarray(xs)), np.log(np.asarray(ys)), 1)[0])
