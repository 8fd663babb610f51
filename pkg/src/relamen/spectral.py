"""Windowed averaging operators and spectral checks.

A ``WindowOperator`` is the compression of pi_X(f) = sum_g f(g) pi_X(g) to a
finite window of the carrier: transitions leaving the window are dropped.
Compressions of a self-adjoint contraction only ever under-estimate the
top of its spectrum, so ``top_rayleigh`` values are lower bounds and are
reported as evidence, never as proofs that 1 is outside the spectrum.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .actions import ActionSpec, Complement, act, sorted_points
from .errors import AsymmetricWeights, NotUnitVector, SpecMismatch, ValidationError
from .groups import Element, inverse

FLOAT_EPS = 1e-9


@dataclass(frozen=True)
class WeightFunction:
    support: tuple  # ((Element, Fraction), ...)

    def __post_init__(self):
        total = sum((w for _, w in self.support), Fraction(0))
        if any(w < 0 for _, w in self.support):
            raise ValidationError("weights must be nonnegative", key="weights")
        if total != 1:
            raise ValidationError(f"weights must sum to 1, got {total}", key="weights")

    @staticmethod
    def uniform(elements: Iterable[Element]) -> "WeightFunction":
        els = list(dict.fromkeys(elements))
        w = Fraction(1, len(els))
        return WeightFunction(tuple((g, w) for g in els))

    @property
    def symmetric(self) -> bool:
        d = dict(self.support)
        return all(d.get(inverse(g)) == w for g, w in d.items())

    @property
    def elements(self) -> list[Element]:
        return [g for g, _ in self.support]


@dataclass
class WindowOperator:
    window: list
    entries: dict  # (row, col) -> Fraction, M[x, y] = sum_{g: g.y = x} f(g)
    action: str
    complement_compressed: bool
    symmetric_weights: bool

    @property
    def size(self) -> int:
        return len(self.window)

    def to_sparse(self) -> sp.csr_matrix:
        n = len(self.window)
        if not self.entries:
            return sp.csr_matrix((n, n))
        rows, cols, vals = zip(*((i, j, float(v)) for (i, j), v in self.entries.items()))
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def row_sums(self) -> list[Fraction]:
        sums = [Fraction(0)] * len(self.window)
        for (i, _), v in self.entries.items():
            sums[i] += v
        return sums

    def quadratic_form_exact(self, support: Iterable) -> Fraction:
        """<M xi | xi> for xi = |S|^-1/2 1_S, S inside the window, exactly."""
        index = {p: i for i, p in enumerate(self.window)}
        idx = {index[p] for p in support}
        total = sum((v for (i, j), v in self.entries.items() if i in idx and j in idx), Fraction(0))
        return total / len(idx)

    def export_coo(self) -> str:
        lines = [f"{len(self.window)} {len(self.window)} {len(self.entries)}"]
        for (i, j), v in sorted(self.entries.items()):
            lines.append(f"{i} {j} {v.numerator}/{v.denominator}")
        return "\n".join(lines) + "\n"


def averaging_matrix(
    action: ActionSpec,
    f: WeightFunction,
    window: Iterable,
    symmetric_only: bool = True,
) -> WindowOperator:
    """Exact compression of pi_X(f) to ``window``.

    With a window drawn from G minus H and a conjugation action this is the
    complement-compressed operator, since conjugation by H preserves G minus H.
    """
    sym = f.symmetric
    if not sym:
        if symmetric_only:
            raise AsymmetricWeights("spectral certificates need f(g) = f(g^-1)")
        warnings.warn("asymmetric weights: matrix is for exploration only", stacklevel=2)
    for g in f.elements:
        if g.spec != action.actor:
            raise SpecMismatch(f"{g!r} is not in the acting group")
    pts = list(dict.fromkeys(window))
    index = {p: i for i, p in enumerate(pts)}
    entries: dict[tuple[int, int], Fraction] = {}
    for j, y in enumerate(pts):
        for g, w in f.support:
            if w == 0:
                continue
            i = index.get(act(action, g, y))
            if i is not None:
                entries[(i, j)] = entries.get((i, j), Fraction(0)) + w
    return WindowOperator(pts, entries, action.name, isinstance(action.carrier, Complement), sym)


@dataclass
class RayleighResult:
    lower_bound: float
    iterations: int
    residual: float
    vector: np.ndarray
    starts: list  # per-start (lambda, iterations, residual)


def _power(Ms: sp.csr_matrix, v: np.ndarray, tol: float, max_iters: int):
    # iterate on (M + I)/2, whose top eigenvector is M's top one and whose spectrum is >= 0
    v = v / np.linalg.norm(v)
    lam, res = float(v @ (Ms @ v)), math.inf
    it = 0
    for it in range(1, max_iters + 1):
        Mv = Ms @ v
        lam = float(v @ Mv)
        res = float(np.linalg.norm(Mv - lam * v))
        if res <= tol:
            break
        w = 0.5 * (Mv + v)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            break
        v = w / nrm
    return lam, it, res, v


def top_rayleigh(
    op: WindowOperator,
    tol: float = 1e-10,
    max_iters: int = 10000,
    restarts: int = 3,
    seed: int = 0,
) -> RayleighResult:
    """Certified lower bound on sup spec(pi_X(f)) from a windowed operator.

    Seeds: the normalized all-ones vector plus ``restarts`` random vectors
    from a fixed-seed generator; the largest Rayleigh quotient wins.
    """
    if not op.symmetric_weights:
        raise AsymmetricWeights("top_rayleigh needs symmetric weights")
    n = op.size
    if n == 0:
        raise ValidationError("empty window", key="window")
    Ms = op.to_sparse()
    rng = np.random.default_rng(seed)
    seeds = [np.ones(n)] + [rng.standard_normal(n) for _ in range(restarts)]
    best = None
    starts = []
    for v0 in seeds:
        lam, it, res, v = _power(Ms, v0, tol, max_iters)
        starts.append((lam, it, res))
        if best is None or lam > best[0]:
            best = (lam, it, res, v)
    lam, it, res, v = best
    return RayleighResult(lam, it, res, v, starts)


# ---------------------------------------------------------------------------
# the quantitative bound


@dataclass(frozen=True)
class BoundCheck:
    delta: float
    rayleigh: float
    bound: float
    bound_ok: bool


def _norm_sq(xi: Mapping) -> float:
    return float(sum(abs(c) ** 2 for c in xi.values()))


def translate_vector(action: ActionSpec, g: Element, xi: Mapping) -> dict:
    """(pi(g) xi)(x) = xi(g^-1 x): the mass at x moves to g.x."""
    out: dict = {}
    for x, c in xi.items():
        y = act(action, g, x)
        out[y] = out.get(y, 0) + c
    return out


def spectral_gap_bound_check(action: ActionSpec, F: Sequence[Element], xi: Mapping) -> BoundCheck:
    """delta = max_g ||pi(g)xi - xi||, rayleigh = <a xi|xi> for a = |F|^-1 sum_g pi(g).

    ``bound_ok`` is rayleigh <= 1 - delta^2 / (2|F|) (+ 1e-9).
    """
    F = list(dict.fromkeys(F))
    if not F:
        raise ValidationError("F must be nonempty", key="F")
    if any(inverse(g) not in F for g in F):
        raise ValidationError("F must be symmetric", key="F")
    if abs(_norm_sq(xi) - 1.0) > 1e-9:
        raise NotUnitVector(f"||xi||^2 = {_norm_sq(xi)}")
    n = len(F)
    delta_sq = 0.0
    total = 0j
    for g in F:
        gx = translate_vector(action, g, xi)
        keys = set(gx) | set(xi)
        d = sum(abs(gx.get(k, 0) - xi.get(k, 0)) ** 2 for k in keys)
        delta_sq = max(delta_sq, float(d))
        total += sum(complex(gx[k]) * complex(xi[k]).conjugate() for k in gx if k in xi)
    rayleigh = float(total.real) / n
    bound = 1.0 - delta_sq / (2 * n)
    return BoundCheck(math.sqrt(delta_sq), rayleigh, bound, rayleigh <= bound + FLOAT_EPS)


def window_of(points: Iterable) -> list:
    return sorted_points(dict.fromkeys(points))
