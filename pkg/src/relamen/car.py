"""CAR algebra over an abstract one-particle space, with the quasi-free trace.

Conventions: the inner product is antilinear in its first argument,
a(xi) is linear in xi and a*(xi) antilinear, and

    a*(xi) a(eta) + a(eta) a*(xi) = <xi|eta>,    a(xi) a(eta) + a(eta) a(xi) = 0.

Normal-ordered monomials are a*(xi_m) ... a*(xi_1) a(eta_1) ... a(eta_n)
stored left to right, and the trace is

    tau(monomial) = 2^-n delta_{n,m} det(<xi_i|eta_j>).

Scalars are whatever the vectors carry: ints/Fractions give exact
arithmetic (exact determinants by fraction-free elimination), floats or
complex numbers give double precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import NonIsometric, ValidationError
from .groups import Element

FLOAT_EPS = 1e-9


def _is_exact(c) -> bool:
    return isinstance(c, Rational)


def _index_key(i):
    return (0, i) if isinstance(i, int) else (1, tuple(i))


class Vec1P:
    """Finitely supported vector over an orthonormal basis indexed by ints or tuples."""

    __slots__ = ("items", "_hash")

    def __init__(self, coeffs: Mapping | Iterable = ()):
        d = dict(coeffs)
        self.items = tuple(sorted(((i, c) for i, c in d.items() if c != 0), key=lambda ic: _index_key(ic[0])))
        self._hash = hash(self.items)

    @staticmethod
    def basis(i, coeff=1) -> "Vec1P":
        return Vec1P({i: coeff})

    def __eq__(self, other):
        return isinstance(other, Vec1P) and self.items == other.items

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "Vec1P(" + self.text() + ")"

    def text(self) -> str:
        return "[" + ", ".join(f"{_idx_text(i)}:{_scalar_text(c)}" for i, c in self.items) + "]"

    def as_dict(self) -> dict:
        return dict(self.items)

    def inner(self, other: "Vec1P"):
        """<self|other>, antilinear in self."""
        return _inner(self, other)

    def norm_sq(self):
        return self.inner(self)

    def __add__(self, other: "Vec1P") -> "Vec1P":
        d = dict(self.items)
        for i, c in other.items:
            d[i] = d.get(i, 0) + c
        return Vec1P(d)

    def __sub__(self, other: "Vec1P") -> "Vec1P":
        return self + other.scale(-1)

    def scale(self, c) -> "Vec1P":
        return Vec1P({i: c * v for i, v in self.items})

    def __rmul__(self, c):
        return self.scale(c)

    @property
    def exact(self) -> bool:
        return all(_is_exact(c) for _, c in self.items)

    def is_zero(self) -> bool:
        return not self.items


@lru_cache(maxsize=1 << 16)
def _inner(u: Vec1P, v: Vec1P):
    d = dict(v.items)
    total = 0
    for i, c in u.items:
        w = d.get(i)
        if w is not None:
            total += c.conjugate() * w
    return total


def tensor(n: int, eta: Vec1P) -> Vec1P:
    """delta_n (x) eta with flattened pair indices (n, j)."""
    return Vec1P({(n, j): c for j, c in eta.items})


def _idx_text(i) -> str:
    return str(i) if isinstance(i, int) else "(" + ",".join(map(str, i)) + ")"


def _scalar_text(c) -> str:
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    if isinstance(c, complex):
        if c.imag == 0:
            return repr(c.real)
        return f"({c.real!r}{c.imag:+r}j)"
    return repr(c) if isinstance(c, float) else str(c)


# ---------------------------------------------------------------------------
# exact and floating determinants


def det_exact(m: Sequence[Sequence]) -> Fraction:
    """Fraction-free (Bareiss) elimination with row pivoting."""
    n = len(m)
    if n == 0:
        return Fraction(1)
    a = [[Fraction(x) for x in row] for row in m]
    sign = 1
    prev = Fraction(1)
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def det(m: Sequence[Sequence]):
    if all(_is_exact(x) for row in m for x in row):
        return det_exact(m)
    if not m:
        return 1.0
    return complex(np.linalg.det(np.array(m, dtype=complex)))


def _rank_deficient(vecs: Sequence[Vec1P]) -> bool:
    """True when the vectors are linearly dependent (the wedge product vanishes)."""
    return _rank_deficient_cached(tuple(vecs))


@lru_cache(maxsize=1 << 16)
def _rank_deficient_cached(vecs: tuple) -> bool:
    if any(v.is_zero() for v in vecs):
        return True
    if len(vecs) < 2:
        return False
    if len(set(vecs)) < len(vecs):
        return True
    gram = [[u.inner(v) for v in vecs] for u in vecs]
    d = det(gram)
    if _is_exact(d):
        return d == 0
    scale = math.prod(float(abs(u.norm_sq())) for u in vecs)
    return abs(d) <= 1e-24 * scale


# ---------------------------------------------------------------------------
# expressions


class CarExpr:
    """Finite sum of normal-ordered monomials; immutable."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        # (creations, annihilations) -> coefficient
        self.terms = {k: c for k, c in (terms or {}).items() if c != 0}

    # construction
    @staticmethod
    def scalar(c) -> "CarExpr":
        return CarExpr({((), ()): c})

    @staticmethod
    def one() -> "CarExpr":
        return CarExpr.scalar(1)

    @staticmethod
    def zero() -> "CarExpr":
        return CarExpr()

    def __repr__(self):
        return f"CarExpr({self.text()})"

    def text(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for (cre, ann), c in sorted(self.terms.items(), key=lambda kv: _mono_key(kv[0])):
            factors = [f"a*{v.text()}" for v in cre] + [f"a{v.text()}" for v in ann]
            out.append(f"{_scalar_text(c)} * " + (" ".join(factors) if factors else "1"))
        return " + ".join(out)

    def __eq__(self, other):
        if isinstance(other, (int, float, complex, Fraction)):
            other = CarExpr.scalar(other)
        return isinstance(other, CarExpr) and self.terms == other.terms

    __hash__ = None

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    # linear structure
    def __add__(self, other):
        if not isinstance(other, CarExpr):
            other = CarExpr.scalar(other)
        d = dict(self.terms)
        for k, c in other.terms.items():
            d[k] = d.get(k, 0) + c
        return CarExpr(d)

    __radd__ = __add__

    def __neg__(self):
        return CarExpr({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, CarExpr):
            other = CarExpr.scalar(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "CarExpr":
        return CarExpr({k: c * v for k, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, CarExpr):
            return self.scale(other)
        out: dict = {}
        for (c1, a1), x in self.terms.items():
            for (c2, a2), y in other.terms.items():
                factors = [(True, v) for v in c1] + [(False, v) for v in a1]
                factors += [(True, v) for v in c2] + [(False, v) for v in a2]
                _normal_order_into(factors, x * y, "leftmost", out)
        return CarExpr(out)

    def __rmul__(self, c):
        return self.scale(c)

    def adjoint(self) -> "CarExpr":
        return CarExpr(
            {(tuple(reversed(ann)), tuple(reversed(cre))): c.conjugate() for (cre, ann), c in self.terms.items()}
        )

    def vectors(self) -> list[Vec1P]:
        seen = {}
        for cre, ann in self.terms:
            for v in cre + ann:
                seen.setdefault(v, None)
        return list(seen)

    def map_vectors(self, fn: Callable[[Vec1P], Vec1P]) -> "CarExpr":
        out: dict = {}
        for (cre, ann), c in self.terms.items():
            cre2, ann2 = tuple(fn(v) for v in cre), tuple(fn(v) for v in ann)
            if _rank_deficient(cre2) or _rank_deficient(ann2):
                continue
            k = (cre2, ann2)
            out[k] = out.get(k, 0) + c
        return CarExpr(out)


def _mono_key(k):
    cre, ann = k
    return (len(cre), len(ann), [v.text() for v in cre], [v.text() for v in ann])


def a(v: Vec1P) -> CarExpr:
    """Annihilation operator a(v)."""
    return CarExpr({((), (v,)): 1})


def a_star(v: Vec1P) -> CarExpr:
    """Creation operator a*(v)."""
    return CarExpr({((v,), ()): 1})


def number_projection(v: Vec1P) -> CarExpr:
    """a*(v) a(v); a projection of trace 1/2 when ||v|| = 1."""
    return CarExpr({((v,), (v,)): 1})


def unitary_from_projection(e: CarExpr) -> CarExpr:
    """u = 2e - 1."""
    return e.scale(2) - CarExpr.one()


# ---------------------------------------------------------------------------
# normal ordering

ANNIHILATION, CREATION = "a", "a*"


def _normal_order_into(factors, coeff, strategy: str, out: dict) -> None:
    """Rewrite a(eta) a*(xi) -> <xi|eta> - a*(xi) a(eta) until creations precede annihilations."""
    stack = [(coeff, tuple(factors))]
    leftmost = strategy == "leftmost"
    if strategy not in ("leftmost", "rightmost"):
        raise ValueError(f"unknown strategy {strategy!r}")
    while stack:
        c, fs = stack.pop()
        n = len(fs)
        idx = -1
        rng = range(n - 1) if leftmost else range(n - 2, -1, -1)
        for i in rng:
            if not fs[i][0] and fs[i + 1][0]:
                idx = i
                break
        if idx < 0:
            cre = tuple(v for is_c, v in fs if is_c)
            ann = tuple(v for is_c, v in fs if not is_c)
            if _rank_deficient(cre) or _rank_deficient(ann):
                continue
            k = (cre, ann)
            out[k] = out.get(k, 0) + c
            continue
        eta, xi = fs[idx][1], fs[idx + 1][1]
        ip = xi.inner(eta)
        if ip != 0:
            stack.append((c * ip, fs[:idx] + fs[idx + 2:]))
        stack.append((-c, fs[:idx] + ((True, xi), (False, eta)) + fs[idx + 2:]))


def normal_order(raw: Sequence[tuple[str, Vec1P]], coeff=1, strategy: str = "leftmost") -> CarExpr:
    """Normal-order a product of tagged factors ``("a" | "a*", vector)``."""
    factors = []
    for tag, v in raw:
        if tag not in (ANNIHILATION, CREATION):
            raise ValidationError(f"factor tag must be 'a' or 'a*', got {tag!r}", key="factor")
        factors.append((tag == CREATION, v))
    out: dict = {}
    _normal_order_into(factors, coeff, strategy, out)
    return CarExpr(out)


# ---------------------------------------------------------------------------
# trace and norms


def monomial_trace(cre: Sequence[Vec1P], ann: Sequence[Vec1P]):
    m, n = len(cre), len(ann)
    if m != n:
        return 0
    if n == 0:
        return 1
    xis = list(reversed(cre))  # xi_1 ... xi_m
    gram = [[xis[i].inner(ann[j]) for j in range(n)] for i in range(n)]
    d = det(gram)
    if _is_exact(d):
        return Fraction(1, 2**n) * d
    return d / 2**n


def quasi_free_trace(x: CarExpr):
    """tau(x); exact (Fraction) when every scalar involved is rational."""
    total = 0
    for (cre, ann), c in x.terms.items():
        t = monomial_trace(cre, ann)
        if t != 0:
            total += c * t
    if not x.terms:
        return 0
    return total


def two_norm_sq(x: CarExpr):
    """||x||_2^2 = tau(x* x), real and clamped at 0."""
    t = quasi_free_trace(x.adjoint() * x)
    if _is_exact(t):
        return max(Fraction(t), Fraction(0))
    re = complex(t).real
    return max(re, 0.0)


# ---------------------------------------------------------------------------
# Bogoliubov transformations


class OneParticleMap:
    """Linear map on the one-particle space: an index map plus an optional finite block.

    Basis vector i goes to ``index_map(i)`` unless i is one of
    ``block_indices``, in which case e_{idx[c]} -> sum_r block[r][c] e_{idx[r]}.
    """

    def __init__(self, index_map: Callable | Mapping | None = None, block_indices: Sequence = (), block=None, name: str = ""):
        if isinstance(index_map, Mapping):
            d = dict(index_map)
            index_map = lambda i: d.get(i, i)  # noqa: E731
        self.index_map = index_map or (lambda i: i)
        self.block_indices = tuple(block_indices)
        self.block = None if block is None else [list(row) for row in block]
        self._pos = {i: k for k, i in enumerate(self.block_indices)}
        self.name = name

    @staticmethod
    def identity() -> "OneParticleMap":
        return OneParticleMap(name="identity")

    @staticmethod
    def shift(k: int) -> "OneParticleMap":
        """Basis shift on the first tensor coordinate: i -> i+k, (n, j) -> (n+k, j)."""

        def f(i):
            return i + k if isinstance(i, int) else (i[0] + k,) + tuple(i[1:])

        return OneParticleMap(f, name=f"shift({k})")

    @staticmethod
    def unitary_block(indices: Sequence, U) -> "OneParticleMap":
        return OneParticleMap(None, indices, U, name="block")

    def image_of_basis(self, i) -> dict:
        k = self._pos.get(i)
        if k is None:
            return {self.index_map(i): 1}
        return {self.block_indices[r]: self.block[r][k] for r in range(len(self.block_indices))}

    def __call__(self, v: Vec1P) -> Vec1P:
        out: dict = {}
        for i, c in v.items:
            for j, u in self.image_of_basis(i).items():
                out[j] = out.get(j, 0) + c * u
        return Vec1P(out)

    def check_isometric(self, vecs: Sequence[Vec1P]) -> None:
        imgs = [self(v) for v in vecs]
        for p, (u, fu) in enumerate(zip(vecs, imgs)):
            for v, fv in zip(vecs[p:], imgs[p:]):
                before, after = u.inner(v), fu.inner(fv)
                if _is_exact(before) and _is_exact(after):
                    ok = before == after
                else:
                    ok = abs(complex(before) - complex(after)) <= FLOAT_EPS
                if not ok:
                    raise NonIsometric(u, v, before, after)


def bogoliubov(x: CarExpr, V: OneParticleMap) -> CarExpr:
    """sigma(a(xi)) = a(V xi), extended multiplicatively; V must be isometric on x's vectors."""
    V.check_isometric(x.vectors())
    return x.map_vectors(V)


# ---------------------------------------------------------------------------
# the identities used for central freeness, commutators and mixing


@dataclass(frozen=True)
class DefectCheck:
    engine_value: float
    closed_form: float
    match: bool


def central_freeness_defect(eta: Vec1P, U: OneParticleMap) -> DefectCheck:
    """||sigma(e) - e||_2^2 for e = a*(eta)a(eta), against 1/2 - |<eta|U eta>|^2 / 2."""
    ns = eta.norm_sq()
    if abs(complex(ns) - 1) > FLOAT_EPS:
        raise ValidationError(f"eta must be a unit vector, ||eta||^2 = {ns}", key="eta")
    U.check_isometric([eta, U(eta)])
    e = number_projection(eta)
    engine = two_norm_sq(bogoliubov(e, U) - e)
    c = eta.inner(U(eta))
    if _is_exact(c) and _is_exact(engine):
        closed = Fraction(1, 2) - Fraction(1, 2) * c * c
        return DefectCheck(engine, closed, engine == closed)
    closed = 0.5 - 0.5 * abs(complex(c)) ** 2
    return DefectCheck(float(engine), closed, abs(float(engine) - closed) <= FLOAT_EPS)


def commutator_norm_check(n: int, exact: bool = True, eta: Vec1P | None = None, replace_f_by_e: bool = False):
    """||[e_n, f_n]||_2^2 with xi = delta_n (x) eta, zeta = 2^-1/2 (delta_n + delta_{n+1}) (x) eta.

    In exact mode eta defaults to a basis vector and f_n is written as
    1/2 a*(u) a(u) with u = (delta_n + delta_{n+1}) (x) eta, which keeps
    every scalar rational.
    """
    if eta is None:
        eta = Vec1P.basis(0)
    xi = tensor(n, eta)
    e = number_projection(xi)
    u = tensor(n, eta) + tensor(n + 1, eta)
    if exact:
        if not eta.exact:
            raise ValidationError("exact mode needs a rational eta", key="eta")
        f = number_projection(u).scale(Fraction(1, 2))
    else:
        f = number_projection(u.scale(2 ** -0.5))
    if replace_f_by_e:
        f = e
    return two_norm_sq(e * f - f * e)


def mixing_defect(V: OneParticleMap, x: CarExpr, y: CarExpr):
    """|tau(sigma(x) y) - tau(x) tau(y)|."""
    lhs = quasi_free_trace(bogoliubov(x, V) * y)
    rhs = quasi_free_trace(x) * quasi_free_trace(y)
    d = lhs - rhs
    return abs(d) if _is_exact(d) else abs(complex(d))


# ---------------------------------------------------------------------------
# positive definiteness of exp(-t psi)


def word_length(g: Element) -> int:
    return g.word_length()


def word_length_plus(g: Element) -> int:
    """psi + 1 - delta_1: pushes psi >= 1 off the identity."""
    return 0 if g.is_identity() else g.word_length() + 1


_PSI = {"word_length": word_length, "word_length_plus": word_length_plus}


@dataclass(frozen=True)
class NcdSpec:
    psi: str | Callable = "word_length"
    t: float = 1.0

    def __post_init__(self):
        if not self.t > 0:
            raise ValidationError("t must be positive", key="t")
        if isinstance(self.psi, str) and self.psi not in _PSI:
            raise ValidationError(f"unknown psi {self.psi!r}", key="psi")

    def __call__(self, g: Element) -> float:
        fn = _PSI[self.psi] if isinstance(self.psi, str) else self.psi
        return fn(g)


def pd_gram_check(ncd: NcdSpec, elements: Sequence[Element], tol: float = 1e-9) -> tuple[float, bool]:
    """Smallest eigenvalue of [exp(-t psi(g_i^-1 g_j))] and whether it is >= -tol."""
    els = list(elements)
    if not els:
        raise ValidationError("need at least one element", key="elements")
    n = len(els)
    G = np.empty((n, n))
    invs = [~g for g in els]
    for i in range(n):
        for j in range(n):
            G[i, j] = math.exp(-ncd.t * ncd(invs[i] * els[j]))
    lam = float(np.linalg.eigvalsh(G)[0])
    return lam, lam >= -tol
