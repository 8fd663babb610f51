"""Exact Følner quotients, certified lifts and a heuristic Følner set search.

All quotients are ``fractions.Fraction``; nothing here is floating point
except the annealing acceptance probability inside ``folner_search``.
"""
from __future__ import annotations

import heapq
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

from .actions import (
    ActionSpec,
    SubgroupPair,
    act,
    automorphic_action,
    base_action,
    bernoulli_action,
    conjugation_action,
    sorted_points,
)
from .errors import (
    EmptySet,
    EquivarianceViolation,
    IdentityInPhi,
    IdentityLamp,
    LiftMismatch,
    SpecMismatch,
    ValidationError,
)
from .groups import Element, LampConfig, Semidirect, Wreath, ball


def frac_str(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class FolnerCertificate:
    action: ActionSpec
    points: tuple
    gens: tuple
    quotients: tuple  # ((gen, Fraction), ...) in generator order
    max_quotient: Fraction
    base: "FolnerCertificate | None" = None

    def quotient(self, g: Element) -> Fraction:
        for h, q in self.quotients:
            if h == g:
                return q
        raise KeyError(g)

    def recompute(self) -> "FolnerCertificate":
        return folner_quotient(self.action, self.points, self.gens)

    def to_record(self) -> dict:
        ser = self.action.serialize_point
        rec = {
            "action": self.action.name,
            "size": len(self.points),
            "points": [ser(p) for p in self.points],
            "quotients": {str(g): frac_str(q) for g, q in self.quotients},
            "max_quotient": frac_str(self.max_quotient),
        }
        if self.base is not None:
            rec["base"] = self.base.to_record()
        return rec


def _check_set(action: ActionSpec, F) -> list:
    pts = list(dict.fromkeys(F))
    if not pts:
        raise EmptySet("Følner quotients need a nonempty set")
    for x in pts:
        if not action.carrier.contains(x):
            raise ValidationError(f"{x!r} is not a point of the carrier", key="set")
    return pts


def symmetric_difference_size(action: ActionSpec, F: set, g: Element) -> int:
    gF = {act(action, g, x) for x in F}
    return len(F ^ gF)


def folner_quotient(action: ActionSpec, F: Iterable, gens: Sequence[Element] | None = None) -> FolnerCertificate:
    """|F ^ gF| / |F| for every generator, as exact rationals."""
    pts = _check_set(action, F)
    if gens is None:
        gens = action.standard_gens()
    fs = set(pts)
    quots = tuple((g, Fraction(symmetric_difference_size(action, fs, g), len(fs))) for g in gens)
    mx = max((q for _, q in quots), default=Fraction(0))
    return FolnerCertificate(action, tuple(sorted_points(pts)), tuple(gens), quots, mx)


def indicator_defect(action: ActionSpec, F: Iterable, g: Element) -> tuple[Fraction, Fraction]:
    """(||pi(g)xi - xi||_2^2, ||pi(g)eta - eta||_1) for xi = |F|^-1/2 1_F and eta = |F|^-1 1_F.

    Computed from the translated indicator vectors rather than from set
    operations, so it serves as an independent check of the quotient.
    """
    pts = _check_set(action, F)
    n = len(pts)
    u = {x: 1 for x in pts}
    moved: dict[Any, int] = {}
    for x, v in u.items():
        y = act(action, g, x)
        moved[y] = moved.get(y, 0) + v
    diff = dict(moved)
    for x, v in u.items():
        diff[x] = diff.get(x, 0) - v
    l2 = Fraction(sum(d * d for d in diff.values()), n)
    l1 = Fraction(sum(abs(d) for d in diff.values()), n)
    return l2, l1


# ---------------------------------------------------------------------------
# certified lifts


def semidirect_folner_lift(phi: Iterable, pair: SubgroupPair, gens: Sequence[Element] | None = None) -> FolnerCertificate:
    """Lift a finite Phi in A minus {1} to Phi x {1} in G = A x| H, G minus H.

    Conjugating (a, 1) by (1, h) gives (sigma_h(a), 1), so the conjugation
    quotients of the lift equal the twist-action quotients of Phi; the base
    certificate is attached as ``.base`` and equality is enforced.
    """
    if pair.kind != "actor":
        raise ValidationError("the lift needs H embedded as the actor of a semidirect or wreath product", key="embedding")
    amb = pair.ambient
    if isinstance(amb, Wreath):
        phi = [amb.config_from_raw(a) for a in phi]
        if any(not a for a in phi):
            raise IdentityInPhi("Phi must not contain the trivial configuration")
        base_act = bernoulli_action(amb)
        lifted = [Element(amb, (a, amb.actor.identity_nf())) for a in phi]
    elif isinstance(amb, Semidirect):
        phi = list(phi)
        for a in phi:
            if a.spec != amb.base:
                raise SpecMismatch(f"{a!r} is not in the base group")
        if any(a.is_identity() for a in phi):
            raise IdentityInPhi("Phi must not contain the identity")
        base_act = automorphic_action(amb)
        lifted = [Element(amb, (a.nf, amb.actor.identity_nf())) for a in phi]
    else:  # pragma: no cover - SubgroupPair already validates this
        raise ValidationError("unsupported ambient group", key="group")
    if gens is None:
        gens = pair.subgroup.symmetric_generators()
    base_cert = folner_quotient(base_act, phi, gens)
    cert = folner_quotient(conjugation_action(pair), lifted, gens)
    for (g, q), (_, qb) in zip(cert.quotients, base_cert.quotients):
        if q != qb:
            raise LiftMismatch(f"lift quotient {q} != base quotient {qb} for {g}")
    return FolnerCertificate(cert.action, cert.points, cert.gens, cert.quotients, cert.max_quotient, base_cert)


def point_lamp(wreath: Wreath, x, z0) -> LampConfig:
    """phi_x: the configuration with value z0 at x and 1 elsewhere."""
    z = z0.nf if isinstance(z0, Element) else wreath.lamp.parse_nf(z0) if isinstance(z0, str) else z0
    if z == wreath.lamp.identity_nf():
        raise IdentityLamp("z0 must differ from the identity")
    return LampConfig([(x, z)])


def wreath_folner_lift(F_X: Iterable, z0, wreath: Wreath, gens: Sequence[Element] | None = None) -> FolnerCertificate:
    """Transport F_X in X to {phi_x : x in F_X} in Z^(X) minus {1} under the Bernoulli shift."""
    pts = list(dict.fromkeys(F_X))
    if not pts:
        raise EmptySet("F_X must be nonempty")
    lamps = [point_lamp(wreath, x, z0) for x in pts]
    if gens is None:
        gens = wreath.actor.symmetric_generators()
    base_cert = folner_quotient(base_action(wreath), pts, gens)
    cert = folner_quotient(bernoulli_action(wreath), lamps, gens)
    for (g, q), (_, qb) in zip(cert.quotients, base_cert.quotients):
        if q != qb:
            raise LiftMismatch(f"lift quotient {q} != base quotient {qb} for {g}")
    return FolnerCertificate(cert.action, cert.points, cert.gens, cert.quotients, cert.max_quotient, base_cert)


# ---------------------------------------------------------------------------
# equivariant transport


@dataclass
class TransportReport:
    image: list
    source: FolnerCertificate
    target: FolnerCertificate
    injective: bool
    bound_ok: dict = field(default_factory=dict)  # gen -> target quotient <= source quotient

    @property
    def all_bounds_ok(self) -> bool:
        return all(self.bound_ok.values())

    @property
    def quotients_equal(self) -> bool:
        return all(q == p for (_, q), (_, p) in zip(self.target.quotients, self.source.quotients))


def map_transport(
    F: Iterable,
    phi: Callable,
    source: ActionSpec,
    target: ActionSpec,
    gens: Sequence[Element] | None = None,
    probe_radius: int = 2,
) -> TransportReport:
    """Push F forward along an equivariant map phi: X -> Y.

    Equivariance act_Y(g, phi(x)) == phi(act_X(g, x)) is checked for g in the
    actor ball of ``probe_radius`` and every x in F before anything else.
    """
    if source.actor != target.actor:
        raise SpecMismatch("source and target must be actions of the same group")
    pts = _check_set(source, F)
    if gens is None:
        gens = source.standard_gens()
    for g in ball(source.actor, None, probe_radius):
        for x in pts:
            lhs = act(target, g, phi(x))
            rhs = phi(act(source, g, x))
            if lhs != rhs:
                raise EquivarianceViolation(g, x, lhs, rhs)
    image = list(dict.fromkeys(phi(x) for x in pts))
    src = folner_quotient(source, pts, gens)
    tgt = folner_quotient(target, image, gens)
    bound = {str(g): q <= p for (g, q), (_, p) in zip(tgt.quotients, src.quotients)}
    return TransportReport(sorted_points(image), src, tgt, len(image) == len(pts), bound)


# ---------------------------------------------------------------------------
# heuristic search


@dataclass
class SearchResult:
    certificate: FolnerCertificate
    met_target: bool
    target: Fraction
    evaluations: int
    trace: list  # best max-quotient (as Fraction) after each phase

    @property
    def label(self) -> str:
        return "certificate found" if self.met_target else "no certificate found"

    def to_record(self) -> dict:
        return {
            "met_target": self.met_target,
            "label": self.label,
            "target": frac_str(self.target),
            "best_max_quotient": frac_str(self.certificate.max_quotient),
            "evaluations": self.evaluations,
            "trace": [frac_str(q) for q in self.trace],
            "certificate": self.certificate.to_record(),
        }


class _SubsetState:
    """Subset of an indexed window with incremental internal-edge counts per generator."""

    def __init__(self, fwd: list[list[int]], bwd: list[list[int]], n: int):
        self.fwd, self.bwd, self.n = fwd, bwd, n
        self.inF = [False] * n
        self.size = 0
        self.edges = [0] * len(fwd)
        self.nbr = [0] * n
        self.members: list[int] = []
        self.mpos: dict[int, int] = {}
        self.frontier: list[int] = []
        self.fpos: dict[int, int] = {}

    @staticmethod
    def _add_idx(lst, pos, i):
        pos[i] = len(lst)
        lst.append(i)

    @staticmethod
    def _del_idx(lst, pos, i):
        k = pos.pop(i)
        last = lst.pop()
        if last != i:
            lst[k] = last
            pos[last] = k

    def delta_add(self, i: int) -> list[int]:
        inF = self.inF
        out = []
        for f, b in zip(self.fwd, self.bwd):
            j, k = f[i], b[i]
            d = 0
            if j == i:
                d = 1
            else:
                if j >= 0 and inF[j]:
                    d += 1
                if k >= 0 and inF[k]:
                    d += 1
            out.append(d)
        return out

    def objective_after(self, i: int, adding: bool) -> float:
        d = self.delta_add(i)
        if adding:
            size = self.size + 1
            e = [x + y for x, y in zip(self.edges, d)]
        else:
            size = self.size - 1
            if size == 0:
                return math.inf
            # removal delta equals the add delta evaluated without i
            e = [x - y for x, y in zip(self.edges, d)]
        return max((2 * (size - x) / size for x in e), default=0.0)

    def add(self, i: int):
        d = self.delta_add(i)
        self.inF[i] = True
        self.size += 1
        self.edges = [x + y for x, y in zip(self.edges, d)]
        self._add_idx(self.members, self.mpos, i)
        if i in self.fpos:
            self._del_idx(self.frontier, self.fpos, i)
        for f, b in zip(self.fwd, self.bwd):
            for j in (f[i], b[i]):
                if j >= 0:
                    self.nbr[j] += 1
                    if not self.inF[j] and j not in self.fpos:
                        self._add_idx(self.frontier, self.fpos, j)

    def remove(self, i: int):
        self.inF[i] = False
        d = self.delta_add(i)
        self.size -= 1
        self.edges = [x - y for x, y in zip(self.edges, d)]
        self._del_idx(self.members, self.mpos, i)
        for f, b in zip(self.fwd, self.bwd):
            for j in (f[i], b[i]):
                if j >= 0:
                    self.nbr[j] -= 1
                    if self.nbr[j] == 0 and j in self.fpos:
                        self._del_idx(self.frontier, self.fpos, j)
        if self.nbr[i] > 0:
            self._add_idx(self.frontier, self.fpos, i)

    def exact(self) -> Fraction:
        if self.size == 0:
            return Fraction(10**9)
        return max((Fraction(2 * (self.size - e), self.size) for e in self.edges), default=Fraction(0))

    def snapshot(self) -> tuple:
        return tuple(sorted(self.members))


def _better(q1: Fraction, s1: tuple, q2: Fraction | None, s2: tuple | None) -> bool:
    if q2 is None:
        return True
    if q1 != q2:
        return q1 < q2
    return s1 < s2


def folner_search(
    action: ActionSpec,
    window: Iterable,
    gens: Sequence[Element] | None = None,
    target: Fraction | str | float = Fraction(1, 10),
    budget: int = 20000,
    seed: int = 0,
    restarts: int = 3,
    threads: int = 1,
) -> SearchResult:
    """Minimize the max Følner quotient over subsets of a finite window.

    Candidates: the whole window, greedy growth from the first window point,
    then ``restarts`` simulated-annealing chains from the greedy optimum.
    Deterministic for fixed ``seed``; ties are broken towards the
    lexicographically smaller point list.  A miss is reported as "no
    certificate found", never as non-amenability.
    """
    target = Fraction(target)
    pts = sorted_points(dict.fromkeys(window))
    if not pts:
        raise EmptySet("the search window is empty")
    if gens is None:
        gens = action.standard_gens()
    n = len(pts)
    index = {p: i for i, p in enumerate(pts)}
    fwd = [[index.get(act(action, g, p), -1) for p in pts] for g in gens]
    bwd = [[index.get(act(action, g ** -1, p), -1) for p in pts] for g in gens]
    evaluations = 0
    trace: list[Fraction] = []

    whole = _SubsetState(fwd, bwd, n)
    for i in range(n):
        whole.add(i)
    best_q, best_s = whole.exact(), whole.snapshot()
    evaluations += 1
    trace.append(best_q)

    # greedy growth: always add the frontier point with most links into F
    st = _SubsetState(fwd, bwd, n)
    st.add(0)
    g_best_q, g_best_s = st.exact(), st.snapshot()
    heap: list[tuple[int, int]] = []

    def links(j):
        return sum(st.delta_add(j))

    for j in st.frontier:
        heapq.heappush(heap, (-links(j), j))
    steps = min(n - 1, max(budget // 4, 1))
    for _ in range(steps):
        while heap:
            negc, j = heapq.heappop(heap)
            if not st.inF[j] and -negc == links(j):
                break
        else:
            break
        st.add(j)
        evaluations += 1
        q = st.exact()
        snap = None
        if q <= g_best_q:
            snap = st.snapshot()
            if _better(q, snap, g_best_q, g_best_s):
                g_best_q, g_best_s = q, snap
        for f, b in zip(fwd, bwd):
            for k in (f[j], b[j]):
                if k >= 0 and not st.inF[k]:
                    heapq.heappush(heap, (-links(k), k))
    if _better(g_best_q, g_best_s, best_q, best_s):
        best_q, best_s = g_best_q, g_best_s
    trace.append(best_q)

    start = g_best_s

    def chain(r: int):
        rng = random.Random(seed * 1_000_003 + r)
        s = _SubsetState(fwd, bwd, n)
        for i in start:
            s.add(i)
        cur = float(s.exact())
        bq, bs = s.exact(), s.snapshot()
        steps = max(budget // max(restarts, 1), 1)
        t0, t1 = 0.2, 1e-4
        evals = 0
        for k in range(steps):
            temp = t0 * (t1 / t0) ** (k / steps)
            if s.frontier and (s.size <= 1 or rng.random() < 0.5):
                i = s.frontier[rng.randrange(len(s.frontier))]
                new = s.objective_after(i, True)
                adding = True
            elif s.size > 1:
                i = s.members[rng.randrange(len(s.members))]
                s.inF[i] = False
                new = s.objective_after(i, False)
                s.inF[i] = True
                adding = False
            else:
                break
            evals += 1
            if new <= cur or rng.random() < math.exp(-(new - cur) / temp):
                if adding:
                    s.add(i)
                else:
                    s.remove(i)
                cur = new
                if cur <= float(bq) + 1e-12:
                    q = s.exact()
                    if q <= bq:
                        snap = s.snapshot()
                        if _better(q, snap, bq, bs):
                            bq, bs = q, snap
        return bq, bs, evals

    if restarts > 0 and budget > 0:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(chain, range(restarts)))
        else:
            results = [chain(r) for r in range(restarts)]
        for q, s, ev in results:
            evaluations += ev
            if _better(q, s, best_q, best_s):
                best_q, best_s = q, s
        trace.append(best_q)

    cert = folner_quotient(action, [pts[i] for i in best_s], gens)
    return SearchResult(cert, cert.max_quotient <= target, target, evaluations, trace)
