"""Commutator identities for energy candidates and the conserved-energy scan.

Closed forms are written for hbar = 1.  Every check compares the directly
evaluated A B psi - B A psi with an operator expression built from the same atoms.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .grid import PhaseGrid
from .observables import (Op, Pq, Pt, Xq, Xt, commutator_apply, hamiltonian_expr,
                          energy_observable, vfun, inner)
from .state import ClassicalWaveFunction

__all__ = [
    "EnergyAnsatz", "commutator_apply", "ansatz_commutator_rhs", "verify_ansatz_commutator",
    "ezgamma_commutator_rhs", "ezgamma_cubic_rhs", "verify_ezgamma_commutator",
    "hq_commutator_rhs", "verify_hq_commutator", "intermediate_identities",
    "random_test_states", "default_test_grid", "no_conserved_energy_scan", "ScanReport", "NON_PROOF_NOTE",
]

NON_PROOF_NOTE = ("a strictly positive floor supports, does not prove, the absence of a "
                  "conserved energy; only the six-term ansatz space is scanned")

COEFFS = ("A", "At", "B", "E", "Et", "F")


@dataclass(frozen=True)
class EnergyAnsatz:
    """(A/2m) Pq^2 + (At/2m) Pt^2 + (B/m) Pq Pt + E V(Xq) + Et V(Xt) + F V(Xcl)."""

    A: float = 0.0
    At: float = 0.0
    B: float = 0.0
    E: float = 0.0
    Et: float = 0.0
    F: float = 0.0

    @classmethod
    def quantum(cls):
        return cls(A=1.0, E=1.0)

    @classmethod
    def classical(cls):
        return cls(A=0.25, At=0.25, B=-0.25, F=1.0)

    @classmethod
    def e_gamma(cls, gamma: float):
        c, s = math.cos(gamma) ** 2, math.sin(gamma) ** 2
        return cls(A=c + 0.25 * s, At=0.25 * s, B=-0.25 * s, E=c, F=s)

    @classmethod
    def cubic_invariant(cls, gamma: float):
        """H_Q + H~_Q + 2 tan^2(gamma) H_cl.

        Commutes with H_gamma whenever the third derivative of V is constant:
        H_W - H_L is then a function of X_Q - X~_Q alone.
        """
        c, s = math.cos(gamma) ** 2, math.sin(gamma) ** 2
        if c < 1e-15:
            raise ValueError("undefined at gamma = pi/2")
        b = 2 * s / c
        return cls(A=1 + 0.25 * b, At=1 + 0.25 * b, B=-0.25 * b, E=1.0, Et=1.0, F=b)

    @classmethod
    def from_vector(cls, v):
        return cls(*map(float, v))

    def vector(self) -> np.ndarray:
        return np.array([self.A, self.At, self.B, self.E, self.Et, self.F])

    def expr(self, potential, m: float = 1.0) -> Op:
        return sum(float(c) * op for c, op in zip(self.vector(), _basis_ops(potential, m)) if c != 0) \
            or 0.0 * _basis_ops(potential, m)[0]


def _basis_ops(potential, m: float = 1.0) -> list:
    return [
        (0.5 / m) * (Pq * Pq),
        (0.5 / m) * (Pt * Pt),
        (1.0 / m) * (Pq * Pt),
        vfun(potential, "q"),
        vfun(potential, "t"),
        vfun(potential, "cl"),
    ]


def _v(potential, arg, order):
    return vfun(potential, arg, order)


def ansatz_commutator_rhs(ansatz: EnergyAnsatz, gamma: float, potential, m: float = 1.0) -> Op:
    """Closed form of [H_gamma, H_ansatz]."""
    A, At, B, E, Et, F = ansatz.vector()
    c, s = math.cos(gamma) ** 2, math.sin(gamma) ** 2
    v1q, v1t, v1c = _v(potential, "q", 1), _v(potential, "t", 1), _v(potential, "cl", 1)
    v2q, v2t, v2c = _v(potential, "q", 2), _v(potential, "t", 2), _v(potential, "cl", 2)
    v3c = _v(potential, "cl", 3)
    d = Xq - Xt
    terms = [
        (2j * (A * c - E)) * (v1q * Pq),
        (-2j * (At * c - Et)) * (v1t * Pt),
        (2j * B * c) * (v1q * Pt - v1t * Pq),
        (A * c - E) * v2q,
        (-(At * c - Et)) * v2t,
        (2j * (A - B) * s - 1j * F) * (v1c * Pq),
        (-(2j * (At - B) * s - 1j * F)) * (v1c * Pt),
        ((A - At) * s) * v2c,
        (1j * s) * (v2c * d * ((A + B) * Pq + (At + B) * Pt)),
        (0.25 * (A + At + 2 * B) * s) * (v3c * d),
    ]
    return (0.5 / m) * sum(terms[1:], terms[0])


def ezgamma_commutator_rhs(gamma: float, potential, m: float = 1.0) -> Op:
    """Full closed form of [H_gamma, E_gamma]."""
    c, s = math.cos(gamma) ** 2, math.sin(gamma) ** 2
    v1q, v1t, v1c = _v(potential, "q", 1), _v(potential, "t", 1), _v(potential, "cl", 1)
    v2q, v2t, v2c = _v(potential, "q", 2), _v(potential, "t", 2), _v(potential, "cl", 2)
    v3c = _v(potential, "cl", 3)
    d = Xq - Xt
    body = (1j * ((v1c - 0.5 * v1q - 0.5 * v1t) * (Pq + Pt))
            + 1j * ((v1t - v1q) * Pq)
            + v2c - 0.75 * v2q - 0.25 * v2t
            + 1j * (v2c * d * Pq)
            + 0.25 * (v3c * d))
    return (c * s / (2 * m)) * body


def ezgamma_cubic_rhs(gamma: float, potential, m: float = 1.0) -> Op:
    """Leading form -(i d cos^2 sin^2 / 16 m)(Xq - Xt)^2 (Pq + Pt); exact for e = 0."""
    c, s = math.cos(gamma) ** 2, math.sin(gamma) ** 2
    d = Xq - Xt
    return (-1j * potential.d * c * s / (16 * m)) * (d * d * (Pq + Pt))


def hq_commutator_rhs(gamma: float, potential, m: float = 1.0) -> Op:
    """Closed form of [H_gamma, H_Q]."""
    s = math.sin(gamma) ** 2
    v1q, v1c = _v(potential, "q", 1), _v(potential, "cl", 1)
    v2q, v2c, v3c = _v(potential, "q", 2), _v(potential, "cl", 2), _v(potential, "cl", 3)
    d = Xq - Xt
    body = 2j * ((v1c - v1q + 0.5 * (v2c * d)) * Pq) + v2c - v2q + 0.25 * (v3c * d)
    return (s / (2 * m)) * body


def hq_cubic_rhs(gamma: float, potential, m: float = 1.0) -> Op:
    """-(i d sin^2 / 16 m) {(Xq - Xt)^2, Pq}; exact for e = 0."""
    s = math.sin(gamma) ** 2
    d2 = (Xq - Xt) * (Xq - Xt)
    return (-1j * potential.d * s / (16 * m)) * (d2 * Pq + Pq * d2)


# ---------------------------------------------------------------------------
# checks

def _hbar_one(grid: PhaseGrid):
    if abs(grid.hbar - 1.0) > 1e-15:
        raise ValueError("closed-form commutators are written for hbar = 1")


def _norm(grid, f) -> float:
    return float(math.sqrt(max(inner(grid, f, f).real, 0.0)))


@dataclass
class StateResidual:
    commutator_norm: float
    residual: float
    residual_cubic: float | None = None


@dataclass
class CommutatorReport:
    label: str
    gamma: float
    potential: dict
    states: list = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max(r.residual for r in self.states)

    @property
    def max_cubic_residual(self) -> float:
        return max(r.residual_cubic for r in self.states)

    @property
    def max_commutator(self) -> float:
        return max(r.commutator_norm for r in self.states)

    def to_dict(self) -> dict:
        return {"label": self.label, "gamma": self.gamma, "potential": self.potential,
                "states": [asdict(r) for r in self.states]}


def _check(label, gamma, potential, lhs_a, lhs_b, rhs, states, cubic=None):
    rep = CommutatorReport(label, gamma, potential.to_dict())
    for psi in states:
        _hbar_one(psi.grid)
        g = psi.grid
        lhs = commutator_apply(lhs_a, lhs_b, psi)
        scale = _norm(g, psi.values)
        res = _norm(g, lhs - rhs.apply_array(g, psi.values)) / scale
        cub = None
        if cubic is not None:
            cub = _norm(g, lhs - cubic.apply_array(g, psi.values)) / scale
        rep.states.append(StateResidual(_norm(g, lhs) / scale, res, cub))
    return rep


def verify_ansatz_commutator(ansatz: EnergyAnsatz, gamma: float, potential, test_states,
                             m: float = 1.0) -> CommutatorReport:
    hg = hamiltonian_expr("gamma", potential, gamma, m)
    return _check(f"ansatz {ansatz}", gamma, potential, hg, ansatz.expr(potential, m),
                  ansatz_commutator_rhs(ansatz, gamma, potential, m), test_states)


def verify_ezgamma_commutator(gamma: float, potential, test_states, m: float = 1.0) -> CommutatorReport:
    if not hasattr(potential, "d"):
        raise ValueError("the E_gamma check needs a quartic potential")
    hg = hamiltonian_expr("gamma", potential, gamma, m)
    eg = energy_observable("E_gamma", potential, gamma, m).expr
    return _check("E_gamma", gamma, potential, hg, eg, ezgamma_commutator_rhs(gamma, potential, m),
                  test_states, cubic=ezgamma_cubic_rhs(gamma, potential, m))


def verify_hq_commutator(gamma: float, potential, test_states, m: float = 1.0) -> CommutatorReport:
    hg = hamiltonian_expr("gamma", potential, gamma, m)
    hq = energy_observable("H_Q", potential, m=m).expr
    cubic = hq_cubic_rhs(gamma, potential, m) if hasattr(potential, "d") else None
    return _check("H_Q", gamma, potential, hg, hq, hq_commutator_rhs(gamma, potential, m),
                  test_states, cubic=cubic)


def intermediate_identities(potential, test_states, m: float = 1.0) -> dict:
    """Worst relative residual of each elementary commutator used in the closed forms."""
    v, vt, vc = vfun(potential, "q"), vfun(potential, "t"), vfun(potential, "cl")
    v1q, v1t, v1c = _v(potential, "q", 1), _v(potential, "t", 1), _v(potential, "cl", 1)
    v2q, v2t, v2c = _v(potential, "q", 2), _v(potential, "t", 2), _v(potential, "cl", 2)
    v3c = _v(potential, "cl", 3)
    d = Xq - Xt
    kin = (0.5 / m)
    hw = hamiltonian_expr("W", potential, m=m)
    hl = hamiltonian_expr("L", potential, m=m)
    pq2, pt2, pqt = kin * (Pq * Pq), kin * (Pt * Pt), (1.0 / m) * (Pq * Pt)
    cases = {
        # [P^2/2m, V(X)] for each argument
        "Pq2_Vq": (pq2, v, kin * (-2j * (v1q * Pq) - v2q)),
        "Pt2_Vt": (pt2, vt, kin * (-2j * (v1t * Pt) - v2t)),
        "Pq2_Vcl": (pq2, vc, kin * (-1j * (v1c * Pq) - 0.25 * v2c)),
        "Pt2_Vcl": (pt2, vc, kin * (-1j * (v1c * Pt) - 0.25 * v2c)),
        "PqPt_Vq": (pqt, v, (1.0 / m) * (-1j * (v1q * Pt))),
        "PqPt_Vt": (pqt, vt, (1.0 / m) * (-1j * (v1t * Pq))),
        "PqPt_Vcl": (pqt, vc, (1.0 / m) * (-0.5j * (v1c * (Pq + Pt)) - 0.25 * v2c)),
        # H_W and H_L against the elementary energies
        "HW_Pq2": (hw, pq2, kin * (2j * (v1q * Pq) + v2q)),
        "HW_Pt2": (hw, pt2, kin * (-2j * (v1t * Pt) - v2t)),
        "HW_PqPt": (hw, pqt, (1.0 / m) * (1j * (v1q * Pt - v1t * Pq))),
        "HL_Pq2": (hl, pq2, kin * (2j * (v1c * Pq) + 1j * (v2c * d * Pq) + v2c + 0.25 * (v3c * d))),
        "HL_Pt2": (hl, pt2, kin * (-2j * (v1c * Pt) + 1j * (v2c * d * Pt) - v2c + 0.25 * (v3c * d))),
        "HL_PqPt": (hl, pqt, (1.0 / m) * (1j * (v1c * (Pt - Pq)) + 0.5j * (v2c * d * (Pq + Pt))
                                        + 0.25 * (v3c * d))),
        "HL_Vq": (hl, v, kin * (-2j * (v1q * Pq) - v2q)),
        "HL_Vcl": (hl, vc, kin * (-1j * (v1c * (Pq - Pt)))),
    }
    out = {}
    for name, (a, b, rhs) in cases.items():
        worst = 0.0
        for psi in test_states:
            _hbar_one(psi.grid)
            g = psi.grid
            diff = commutator_apply(a, b, psi) - rhs.apply_array(g, psi.values)
            worst = max(worst, _norm(g, diff) / _norm(g, psi.values))
        out[name] = worst
    return out


# ---------------------------------------------------------------------------
# test states

TEST_GRID = dict(nx=128, n_p=128, lx=22.0, lp=22.0)


def default_test_grid() -> PhaseGrid:
    return PhaseGrid(**TEST_GRID)


def random_test_states(grid: PhaseGrid, count: int, seed: int = 0, packets: int = 3,
                       spread: float = 1.0, width=(0.9, 1.3)) -> list[ClassicalWaveFunction]:
    """Normalized real superpositions of phase-space Gaussians, band limited to half Nyquist."""
    rng = np.random.default_rng(seed)
    x, p = grid.mesh()
    kx = np.abs(grid.kx)[:, None]
    kp = np.abs(grid.kp)[None, :]
    keep = (kx <= 0.5 * np.max(kx)) & (kp <= 0.5 * np.max(kp))
    out = []
    for _ in range(count):
        f = np.zeros(grid.shape)
        for _ in range(packets):
            x0, p0 = rng.uniform(-spread, spread, 2)
            sx, sp = rng.uniform(width[0], width[1], 2)
            amp = rng.uniform(-1, 1)
            f = f + amp * np.exp(-((x - x0) / sx) ** 2 / 2 - ((p - p0) / sp) ** 2 / 2)
        f = np.real(np.fft.ifft2(np.fft.fft2(f) * keep))
        f = f / math.sqrt(np.sum(f * f) * grid.measure)
        out.append(ClassicalWaveFunction(grid, f))
    return out


# ---------------------------------------------------------------------------
# scan

@dataclass
class ScanReport:
    gamma: float
    potential: dict
    resolution: float
    points: int
    excluded: int
    floor: float
    argmin: list
    eigen_floor: float
    eigen_vector: list
    per_state: list
    note: str = NON_PROOF_NOTE

    @property
    def argmin_ansatz(self) -> EnergyAnsatz:
        return EnergyAnsatz.from_vector(self.argmin)

    def to_dict(self) -> dict:
        return asdict(self)


def _gram(gamma, potential, states, m):
    hg = hamiltonian_expr("gamma", potential, gamma, m)
    ops = _basis_ops(potential, m)
    blocks = []
    for psi in states:
        g = psi.grid
        w = math.sqrt(g.measure / len(states))
        blocks.append(np.stack([commutator_apply(hg, o, psi).ravel() * w for o in ops], axis=1))
    mat = np.concatenate(blocks, axis=0)
    gram = np.real(mat.conj().T @ mat)
    return 0.5 * (gram + gram.T), blocks


def _representable(gamma, potential) -> np.ndarray | None:
    """Ansatz vector of H_gamma when it lies in the ansatz span."""
    c, s = math.cos(gamma) ** 2, math.sin(gamma) ** 2
    if s < 1e-15 or getattr(potential, "is_harmonic", False):
        return np.array([1.0, -1.0, 0.0, 1.0, -1.0, 0.0])
    if c < 1e-15:
        return None
    return None


def no_conserved_energy_scan(gamma: float, potential, test_states, resolution: float = 0.1,
                             m: float = 1.0, require_anharmonic: bool = True) -> ScanReport:
    """Minimum of sqrt(mean_s |[H_gamma, H_c] psi_s|^2) / |c| over a coefficient grid.

    Coefficients run over [-1, 1] in steps of ``resolution``; the zero vector and
    multiples of H_gamma (when representable) are excluded.  The smallest
    eigenvalue of the Gram matrix is reported alongside as the exact infimum
    over the continuous span.
    """
    if require_anharmonic and getattr(potential, "is_harmonic", False):
        raise ValueError("scan requires an anharmonic potential")
    if require_anharmonic and not (0 < gamma < 0.5 * math.pi):
        raise ValueError("gamma must lie strictly inside (0, pi/2)")
    gram, blocks = _gram(gamma, potential, test_states, m)
    vals = np.round(np.arange(-1.0, 1.0 + 0.5 * resolution, resolution), 12)
    if vals.size == 0:
        raise ValueError("scan grid is empty")
    half = np.array(list(itertools.product(vals, repeat=3)))
    exclude = _representable(gamma, potential)
    ex_dir = None if exclude is None else exclude / np.linalg.norm(exclude)
    best, arg, excluded = np.inf, None, 0
    # split c = (u, v): c^T G c = u G11 u + 2 u G12 v + v G22 v
    g11, g12, g22 = gram[:3, :3], gram[:3, 3:], gram[3:, 3:]
    qa = np.einsum("ij,jk,ik->i", half, g11, half)
    qb = np.einsum("ij,jk,ik->i", half, g22, half)
    na = np.einsum("ij,ij->i", half, half)
    cross_left = half @ g12
    chunk = 512
    for start in range(0, len(half), chunk):
        u = half[start:start + chunk]
        q = qa[start:start + chunk, None] + 2 * cross_left[start:start + chunk] @ half.T + qb[None, :]
        n2 = na[start:start + chunk, None] + na[None, :]
        bad = n2 < 1e-20
        if ex_dir is not None:
            dot = (u @ ex_dir[:3])[:, None] + (half @ ex_dir[3:])[None, :]
            par = np.abs(dot) ** 2 >= (1 - 1e-9) * n2
            excluded += int(np.count_nonzero(par & ~bad))
            bad = bad | par
        ratio = np.where(bad, np.inf, np.maximum(q, 0.0) / np.where(bad, 1.0, n2))
        i = np.unravel_index(np.argmin(ratio), ratio.shape)
        if ratio[i] < best:
            best = float(ratio[i])
            arg = np.concatenate([u[i[0]], half[i[1]]])
    if arg is None:
        raise ValueError("scan grid is empty after excluding multiples of H_gamma")
    w, vecs = np.linalg.eigh(gram)
    if ex_dir is not None:
        # restrict the eigen-problem to the complement of the excluded direction
        proj = np.eye(6) - np.outer(ex_dir, ex_dir)
        basis = np.linalg.svd(proj)[0][:, :5]
        w, sub = np.linalg.eigh(basis.T @ gram @ basis)
        vecs = basis @ sub
    ev = vecs[:, 0] / np.max(np.abs(vecs[:, 0])) * np.sign(vecs[np.argmax(np.abs(vecs[:, 0])), 0])
    per_state = []
    for blk in blocks:
        r = blk @ arg
        per_state.append(float(np.sqrt(np.sum(np.abs(r) ** 2) * len(blocks)) / np.linalg.norm(arg)))
    return ScanReport(gamma=gamma, potential=potential.to_dict(), resolution=resolution,
                      points=len(half) ** 2 - 1 - excluded, excluded=excluded,
                      floor=math.sqrt(best), argmin=[float(a) for a in arg],
                      eigen_floor=math.sqrt(max(w[0], 0.0)), eigen_vector=[float(a) for a in ev],
                      per_state=per_state)
