"""Phase-space operators as expression trees.

Every atom is diagonal in one of two mixed representations:

* X-kind atoms in (x, k_p): X_Q = x - hbar k_p/2 and X~_Q = x + hbar k_p/2,
* P-kind atoms in (k_x, p): P_Q = p + hbar k_x/2 and P~_Q = -p + hbar k_x/2.

An atom is a real function f(a, b) of the corresponding pair (Q, Q~), so
X_cl = (a + b)/2, X_s = a - b, P_cl = (a - b)/2, P_s = a + b.  Products are
applied right to left; runs of same-kind factors are fused into a single
multiplier so each run costs one transform pair.
"""
from __future__ import annotations

import ast
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import PhaseGrid, fft, ifft, flipped_nyquist
from .state import ClassicalWaveFunction

log = logging.getLogger(__name__)

_AXIS = {"x": 1, "p": 0}  # axis transformed to reach the diagonal representation


class OperatorError(ValueError):
    pass


def _pair_arrays(grid: PhaseGrid, kind: str, nyquist_flip: bool = False):
    h = grid.hbar
    if kind == "x":
        k = flipped_nyquist(grid.kp) if nyquist_flip else grid.kp
        x = grid.x[:, None]
        k = k[None, :]
        return x - 0.5 * h * k, x + 0.5 * h * k
    k = flipped_nyquist(grid.kx) if nyquist_flip else grid.kx
    p = grid.p[None, :]
    k = k[:, None]
    return p + 0.5 * h * k, -p + 0.5 * h * k


class Op:
    """Base node.  Subclasses set ``kind`` to 'x', 'p', 'any' (scalar) or None (mixed)."""

    kind: str | None = None

    # algebra -------------------------------------------------------------
    def __add__(self, other):
        return Sum((self, as_op(other)))

    def __radd__(self, other):
        return Sum((as_op(other), self))

    def __sub__(self, other):
        return Sum((self, Scaled(-1.0, as_op(other))))

    def __rsub__(self, other):
        return Sum((as_op(other), Scaled(-1.0, self)))

    def __neg__(self):
        return Scaled(-1.0, self)

    def __mul__(self, other):
        if isinstance(other, Op):
            return Product((self, other))
        return Scaled(complex(other) if isinstance(other, complex) else float(other), self)

    def __rmul__(self, other):
        return Scaled(complex(other) if isinstance(other, complex) else float(other), self)

    def __truediv__(self, other):
        return Scaled(1.0 / other, self)

    def __pow__(self, n: int):
        if int(n) != n or n < 0:
            raise OperatorError("only non-negative integer powers are supported")
        if n == 0:
            return Scalar(1.0)
        return Product((self,) * int(n)) if n > 1 else self

    # evaluation ----------------------------------------------------------
    def multiplier(self, grid: PhaseGrid) -> np.ndarray:
        """Diagonal multiplier of a single-kind node, Nyquist-averaged."""
        if self.kind not in ("x", "p", "any"):
            raise OperatorError("multiplier() needs a single-representation node")
        cache = self.__dict__.setdefault("_mcache", {})
        m = cache.get(grid)
        if m is None:
            kind = "x" if self.kind == "any" else self.kind
            a, b = _pair_arrays(grid, kind)
            fa, fb = _pair_arrays(grid, kind, True)
            m = 0.5 * (np.broadcast_to(self._mult(a, b), grid.shape) + self._mult(fa, fb))
            if self.kind == "any":
                m = np.broadcast_to(m, grid.shape)
            cache[grid] = m
        return m

    def _mult(self, a, b):
        raise NotImplementedError

    def apply_array(self, grid: PhaseGrid, f: np.ndarray) -> np.ndarray:
        if self.kind == "any":
            return self.multiplier(grid) * f
        if self.kind in ("x", "p"):
            ax = _AXIS[self.kind]
            return ifft(fft(f, ax) * self.multiplier(grid), ax)
        return self._apply_mixed(grid, f)

    def _apply_mixed(self, grid, f):
        raise NotImplementedError

    # structure -----------------------------------------------------------
    def monomials(self) -> dict:
        raise NotImplementedError

    @property
    def potentials(self) -> set:
        return set()

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        cached = self.__dict__.get("_herm")
        if cached is None:
            mono = _canonical(self.monomials())
            adj = _canonical({tuple(reversed(k)): np.conj(v) for k, v in self.monomials().items()})
            keys = set(mono) | set(adj)
            cached = all(abs(mono.get(k, 0) - adj.get(k, 0)) <= tol * (1 + abs(mono.get(k, 0))) for k in keys)
            self.__dict__["_herm"] = cached
        return cached


def _commute(a, b) -> bool:
    # same-kind atoms share a diagonal representation; classical atoms are
    # plain multiplications in (x, p) and commute with each other
    return a[0] == b[0] or (a[2] and b[2])


def _normal_form(word: tuple) -> tuple:
    """Lexicographically smallest reordering reachable by swapping commuting neighbours."""
    rest, out = list(word), []
    while rest:
        best = None
        for i, a in enumerate(rest):
            if (best is None or a < rest[best]) and all(_commute(a, b) for b in rest[:i]):
                best = i
        out.append(rest.pop(best))
    return tuple(out)


def _canonical(mono: dict) -> dict:
    out: dict = {}
    for key, c in mono.items():
        k = _normal_form(key)
        out[k] = out.get(k, 0) + c
    return {k: v for k, v in out.items() if abs(v) > 0}


def _combine_kind(kinds):
    ks = {k for k in kinds if k != "any"}
    if None in ks or len(ks) > 1:
        return None
    return ks.pop() if ks else "any"


@dataclass(frozen=True, eq=False)
class Scalar(Op):
    value: complex

    kind = "any"

    def _mult(self, a, b):
        return self.value * np.ones(np.broadcast_shapes(np.shape(a), np.shape(b)))

    def monomials(self):
        return {(): complex(self.value)}

    def __repr__(self):
        return repr(self.value)


@dataclass(frozen=True, eq=False)
class Atom(Op):
    """Real function of (Q, Q~) for one kind; ``q_only`` marks functions of Q alone."""

    name: str
    atom_kind: str
    fn: Callable
    q_only: bool = False
    potential: object = None
    classical: bool = False  # function of X_cl or P_cl alone

    @property
    def kind(self):
        return self.atom_kind

    def _mult(self, a, b):
        return self.fn(a, b)

    def monomials(self):
        return {((self.atom_kind, self.key, self.classical),): 1.0}

    @property
    def key(self) -> str:
        return self.name if self.potential is None else f"{self.name}#{id(self.potential)}"

    @property
    def potentials(self):
        return {self.potential} if self.potential is not None else set()

    def __repr__(self):
        return self.name


@dataclass(frozen=True, eq=False)
class Scaled(Op):
    coef: complex
    op: Op

    @property
    def kind(self):
        return self.op.kind

    def _mult(self, a, b):
        return self.coef * self.op._mult(a, b)

    def apply_array(self, grid, f):
        if self.kind is not None:
            return Op.apply_array(self, grid, f)
        return self.coef * self.op.apply_array(grid, f)

    def monomials(self):
        return {k: self.coef * v for k, v in self.op.monomials().items()}

    @property
    def potentials(self):
        return self.op.potentials

    def __repr__(self):
        return f"{self.coef}*({self.op!r})"


@dataclass(frozen=True, eq=False)
class Sum(Op):
    terms: tuple

    def __post_init__(self):
        flat = []
        for t in self.terms:
            flat.extend(t.terms if isinstance(t, Sum) else (t,))
        object.__setattr__(self, "terms", tuple(flat))

    @property
    def kind(self):
        return _combine_kind(t.kind for t in self.terms)

    def _mult(self, a, b):
        return sum(t._mult(a, b) for t in self.terms)

    def _parts(self):
        parts = self.__dict__.get("_parts_cache")
        if parts is None:
            groups: dict = {}
            mixed = []
            for t in self.terms:
                if t.kind is None:
                    mixed.append(t)
                else:
                    groups.setdefault("x" if t.kind == "any" else t.kind, []).append(t)
            parts = [ts[0] if len(ts) == 1 else _FusedSum(tuple(ts), k) for k, ts in groups.items()] + mixed
            self.__dict__["_parts_cache"] = parts
        return parts

    def _apply_mixed(self, grid, f):
        out = np.zeros(f.shape, dtype=complex)
        for t in self._parts():
            out += t.apply_array(grid, f)
        return out

    def monomials(self):
        out: dict = {}
        for t in self.terms:
            for k, v in t.monomials().items():
                out[k] = out.get(k, 0) + v
        return out

    @property
    def potentials(self):
        return set().union(*(t.potentials for t in self.terms))

    def __repr__(self):
        return " + ".join(repr(t) for t in self.terms)


@dataclass(frozen=True, eq=False)
class _FusedSum(Op):
    terms: tuple
    fused_kind: str

    @property
    def kind(self):
        return self.fused_kind

    def _mult(self, a, b):
        return sum(t._mult(a, b) for t in self.terms)


@dataclass(frozen=True, eq=False)
class Product(Op):
    """Ordered product; the rightmost factor acts first."""

    factors: tuple

    def __post_init__(self):
        flat = []
        for f in self.factors:
            flat.extend(f.factors if isinstance(f, Product) else (f,))
        object.__setattr__(self, "factors", tuple(flat))

    @property
    def kind(self):
        return _combine_kind(f.kind for f in self.factors)

    def _mult(self, a, b):
        out = 1.0
        for f in self.factors:
            out = out * f._mult(a, b)
        return out

    def _runs(self):
        cached = self.__dict__.get("_runs_cache")
        if cached is None:
            runs = []
            for f in self.factors:
                k = f.kind
                if runs and k is not None and runs[-1][0] is not None and _combine_kind((runs[-1][0], k)) is not None:
                    runs[-1] = (_combine_kind((runs[-1][0], k)), runs[-1][1] + [f])
                else:
                    runs.append((k, [f]))
            cached = [fs[0] if len(fs) == 1 else Product.__new_fused(fs) for _, fs in runs]
            self.__dict__["_runs_cache"] = cached
        return cached

    @staticmethod
    def __new_fused(fs):
        p = object.__new__(Product)
        object.__setattr__(p, "factors", tuple(fs))
        return p

    def _apply_mixed(self, grid, f):
        out = f
        for op in reversed(self._runs()):
            out = op.apply_array(grid, out)
        return out

    def monomials(self):
        out = {(): 1.0}
        for fac in self.factors:
            nxt: dict = {}
            fm = fac.monomials()
            for k1, v1 in out.items():
                for k2, v2 in fm.items():
                    k = k1 + k2
                    nxt[k] = nxt.get(k, 0) + v1 * v2
            out = nxt
        return out

    @property
    def potentials(self):
        return set().union(*(f.potentials for f in self.factors))

    def __repr__(self):
        return "*".join(f"({f!r})" for f in self.factors)


def sym(*factors: Op) -> Op:
    """Average over all distinct orderings of ``factors``."""
    if len(factors) == 1 and isinstance(factors[0], Product):
        factors = factors[0].factors
    if len(factors) == 1 and isinstance(factors[0], Sum):
        return Sum(tuple(sym(t) for t in factors[0].terms))
    coef = 1.0
    plain = []
    for f in factors:
        if isinstance(f, Scaled):
            coef *= f.coef
            f = f.op
        if isinstance(f, Scalar):
            coef *= f.value
            continue
        plain.append(f)
    if not plain:
        return Scalar(coef)
    orders = set(itertools.permutations(range(len(plain))))
    # identical factor objects give identical orderings; dedupe by identity
    seen = {}
    for o in orders:
        key = tuple(id(plain[i]) for i in o)
        seen[key] = o
    terms = tuple(Product(tuple(plain[i] for i in o)) if len(o) > 1 else plain[o[0]] for o in seen.values())
    weight = coef / len(terms)
    return Scaled(weight, Sum(terms)) if len(terms) > 1 else Scaled(weight, terms[0])


def as_op(v) -> Op:
    return v if isinstance(v, Op) else Scalar(v)


# ---------------------------------------------------------------------------
# atoms

Xq = Atom("Xq", "x", lambda a, b: a, q_only=True)
Xt = Atom("Xt", "x", lambda a, b: b)
Xcl = Atom("Xcl", "x", lambda a, b: 0.5 * (a + b), classical=True)
Xs = Atom("Xs", "x", lambda a, b: a - b)
Pq = Atom("Pq", "p", lambda a, b: a, q_only=True)
Pt = Atom("Pt", "p", lambda a, b: b)
Pcl = Atom("Pcl", "p", lambda a, b: 0.5 * (a - b), classical=True)
Ps = Atom("Ps", "p", lambda a, b: a + b)
IDENTITY = Scalar(1.0)

ATOMS = {a.name: a for a in (Xq, Xt, Xcl, Xs, Pq, Pt, Pcl, Ps)}

_ARGS = {
    "q": (lambda a, b: a, "Xq"),
    "t": (lambda a, b: b, "Xt"),
    "cl": (lambda a, b: 0.5 * (a + b), "Xcl"),
}


def vfun(potential, arg: str = "q", order: int = 0) -> Atom:
    """V^(order) evaluated at X_Q ('q'), X~_Q ('t') or X_cl ('cl')."""
    if potential is None:
        raise OperatorError("expression references a potential but none was supplied")
    sel, label = _ARGS[arg]
    prime = "'" * order
    if order == 0:
        fn = lambda a, b: potential(sel(a, b))
    else:
        fn = lambda a, b: potential.derivative(sel(a, b), order)
    return Atom(f"V{prime}({label})", "x", fn, q_only=(arg == "q"), potential=potential,
                classical=(arg == "cl"))


def xfun(name: str, fn: Callable, q_only: bool = False) -> Atom:
    """Custom real function F(X_Q, X~_Q)."""
    return Atom(name, "x", fn, q_only=q_only)


def pfun(name: str, fn: Callable, q_only: bool = False) -> Atom:
    """Custom real function G(P_Q, P~_Q)."""
    return Atom(name, "p", fn, q_only=q_only)


# ---------------------------------------------------------------------------
# application and expectation

def _check_grid(op: Op, grid: PhaseGrid):
    return grid


def apply(op: Op, psi) -> np.ndarray:
    """Operator action; accepts a ClassicalWaveFunction or (grid, array) pair."""
    grid, f = _unpack(psi)
    return op.apply_array(grid, f)


def _unpack(psi):
    if isinstance(psi, ClassicalWaveFunction):
        return psi.grid, psi.values
    grid, f = psi
    return grid, np.asarray(f)


def commutator_apply(a: Op, b: Op, psi) -> np.ndarray:
    grid, f = _unpack(psi)
    return a.apply_array(grid, b.apply_array(grid, f)) - b.apply_array(grid, a.apply_array(grid, f))


def inner(grid: PhaseGrid, f: np.ndarray, g: np.ndarray) -> complex:
    return complex(np.vdot(f, g) * grid.measure)


def expectation(op: Op, psi: ClassicalWaveFunction, imag_tol: float = 1e-8) -> float:
    if not op.is_hermitian():
        raise OperatorError(f"expectation needs a Hermitian operator: {op!r}")
    val = inner(psi.grid, psi.values, apply(op, psi))
    scale = 1.0 + abs(val.real)
    if abs(val.imag) > 1e-10 * scale:
        log.debug("expectation imaginary residue %.3e discarded", val.imag)
    if abs(val.imag) > imag_tol * scale:
        raise OperatorError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def energy_moments(psi: ClassicalWaveFunction, energy) -> tuple[float, float]:
    op = energy.expr if isinstance(energy, EnergyObservable) else energy
    if not op.is_hermitian():
        raise OperatorError("energy operator must be Hermitian")
    hpsi = apply(op, psi)
    mean = inner(psi.grid, psi.values, hpsi).real
    second = float(np.sum(np.abs(hpsi) ** 2) * psi.grid.measure)
    return float(mean), float(second - mean ** 2)


# ---------------------------------------------------------------------------
# named observables

def sharpened(beta: float) -> tuple[Op, Op]:
    if not (-1e-12 <= beta <= 0.5 * np.pi + 1e-12):
        raise OperatorError("beta must lie in [0, pi/2]")
    c2, s2 = math.cos(beta) ** 2, math.sin(beta) ** 2
    return c2 * Xq + s2 * Xcl, c2 * Pq + s2 * Pcl


def uncertainty_product(psi: ClassicalWaveFunction, beta: float, tol: float = 1e-6) -> float:
    xb, pb = sharpened(beta)
    mx, mp = expectation(xb, psi), expectation(pb, psi)
    if abs(mx) > tol or abs(mp) > tol:
        raise OperatorError(f"first moments must vanish: <X>={mx:.2e}, <P>={mp:.2e}")
    return float(np.sqrt(expectation(xb * xb, psi) * expectation(pb * pb, psi)))


def kinetic_cross(m: float = 1.0) -> Op:
    """(2/m) P_cl (P_Q - P_cl): the common kinetic generator -i hbar (p/m) d/dx."""
    return (2.0 / m) * (Pcl * (Pq - Pcl))


def hamiltonian_expr(kind: str, potential, gamma: float | None = None, m: float = 1.0) -> Op:
    if potential is None:
        raise OperatorError("hamiltonian needs a potential")
    kin = kinetic_cross(m)
    w_part = vfun(potential, "q") - vfun(potential, "t")
    l_part = 2.0 * (vfun(potential, "cl", 1) * (Xq - Xcl))
    if kind == "W":
        return kin + w_part
    if kind == "L":
        return kin + l_part
    if kind == "gamma":
        if gamma is None:
            raise OperatorError("kind 'gamma' needs an angle")
        c2, s2 = math.cos(gamma) ** 2, math.sin(gamma) ** 2
        return kin + c2 * w_part + s2 * l_part
    raise OperatorError(f"unknown hamiltonian kind {kind!r}")


@dataclass(frozen=True, eq=False)
class EnergyObservable:
    name: str
    expr: Op


def energy_observable(name: str, potential, gamma: float | None = None, m: float = 1.0) -> EnergyObservable:
    hq = (0.5 / m) * (Pq * Pq) + vfun(potential, "q")
    if name == "H_Q":
        return EnergyObservable(name, hq)
    if name == "H_Qt":
        return EnergyObservable(name, (0.5 / m) * (Pt * Pt) + vfun(potential, "t"))
    hcl = (0.5 / m) * (Pcl * Pcl) + vfun(potential, "cl")
    if name == "H_cl":
        return EnergyObservable(name, hcl)
    if name == "E_gamma":
        if gamma is None:
            raise OperatorError("E_gamma needs an angle")
        return EnergyObservable(name, math.cos(gamma) ** 2 * hq + math.sin(gamma) ** 2 * hcl)
    raise OperatorError(f"unknown energy {name!r}")


# ---------------------------------------------------------------------------
# position-basis matrices (functions of X_Q and P_Q only)

def position_matrix(op: Op, grid: PhaseGrid) -> np.ndarray:
    """Matrix of ``op`` on the x-grid, valid for expressions in X_Q, P_Q only."""
    n = grid.nx
    if isinstance(op, Scalar):
        return op.value * np.eye(n, dtype=complex)
    if isinstance(op, Atom):
        if not op.q_only:
            raise OperatorError(f"{op.name} is not a function of X_Q or P_Q alone")
        if op.atom_kind == "x":
            return np.diag(op.fn(grid.x, grid.x).astype(complex))
        k = grid.hbar * grid.kx
        diag = 0.5 * (op.fn(k, k) + op.fn(grid.hbar * flipped_nyquist(grid.kx), k))
        f = np.fft.fft(np.eye(n), axis=0)
        return np.fft.ifft(diag[:, None] * f, axis=0)
    if isinstance(op, Scaled):
        return op.coef * position_matrix(op.op, grid)
    if isinstance(op, (Sum, _FusedSum)):
        return sum(position_matrix(t, grid) for t in op.terms)
    if isinstance(op, Product):
        out = np.eye(n, dtype=complex)
        for f in op.factors:
            out = out @ position_matrix(f, grid)
        return out
    raise OperatorError(f"cannot convert {op!r}")


# ---------------------------------------------------------------------------
# mini-language

def parse(text: str, potential=None) -> Op:
    """Parse e.g. ``"Xq*Pq + Pq*Xq"``, ``"sym(Xq^2*Pq)"``, ``"Pq^2/2 + V(Xq)"``.

    Names: Xq Pq Xt Pt Xcl Pcl Xs Ps; functions V(arg), dV(arg), d2V(arg),
    d3V(arg) with arg in {Xq, Xt, Xcl}; sym(expr); numbers and ``1j``.
    """
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise OperatorError(f"cannot parse {text!r}: {exc.msg}") from None
    return _build(tree.body, potential)


_VORDER = {"V": 0, "dV": 1, "d2V": 2, "d3V": 3}
_VARG = {"Xq": "q", "Xt": "t", "Xcl": "cl"}


def _build(node, pot) -> Op:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
        return Scalar(node.value)
    if isinstance(node, ast.Name):
        if node.id in ATOMS:
            return ATOMS[node.id]
        raise OperatorError(f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp):
        inner_op = _build(node.operand, pot)
        if isinstance(node.op, ast.USub):
            return -inner_op
        if isinstance(node.op, ast.UAdd):
            return inner_op
    if isinstance(node, ast.BinOp):
        left = _build(node.left, pot)
        if isinstance(node.op, ast.Pow):
            if not (isinstance(node.right, ast.Constant) and isinstance(node.right.value, int)):
                raise OperatorError("exponent must be a non-negative integer")
            return left ** node.right.value
        right = _build(node.right, pot)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            if isinstance(left, Scalar):
                return left.value * right
            if isinstance(right, Scalar):
                return right.value * left
            return left * right
        if isinstance(node.op, ast.Div):
            if not isinstance(right, Scalar):
                raise OperatorError("can only divide by numbers")
            return left / right.value
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        fname = node.func.id
        if fname == "sym":
            if len(node.args) != 1:
                raise OperatorError("sym() takes one argument")
            return sym(_build(node.args[0], pot))
        if fname in _VORDER:
            if len(node.args) != 1 or not isinstance(node.args[0], ast.Name) or node.args[0].id not in _VARG:
                raise OperatorError(f"{fname}() takes one of Xq, Xt, Xcl")
            return vfun(pot, _VARG[node.args[0].id], _VORDER[fname])
    raise OperatorError(f"unsupported syntax: {ast.dump(node)[:60]}")
