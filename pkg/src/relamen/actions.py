"""Computable group actions on countable sets and structural probes.

Carriers (``XSetSpec`` kinds) are ``IntLine``, ``GroupCarrier``,
``Complement`` (G minus H for a ``SubgroupPair``) and ``LampConfigs``
(nontrivial finitely supported lamp configurations of a wreath product).
Points of a carrier are plain ints, ``Element`` objects or ``LampConfig``
objects respectively.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from .errors import (
    CarrierViolation,
    EmptyComplementWindow,
    IdentityLamp,
    NotInComplement,
    OrbitNotFinite,
    SpecMismatch,
    ValidationError,
)
from .groups import (
    Automorphism,
    Cyclic,
    Direct,
    Element,
    FreeProduct,
    GroupSpec,
    LampConfig,
    Semidirect,
    Wreath,
    ball,
    inverse,
    multiply,
    point_sort_key,
)

logger = logging.getLogger(__name__)

DEFAULT_ORBIT_CAP = 10**5

# ---------------------------------------------------------------------------
# carriers


@dataclass(frozen=True)
class IntLine:
    """The integers, acted on by Z through shifts."""

    kind = "intline"

    @property
    def natural_actor(self) -> GroupSpec:
        return Cyclic(0)

    def natural_act(self, h_nf, p):
        return p + h_nf

    def base_point(self):
        return 0

    def transporter(self, p):
        return p

    def contains(self, p) -> bool:
        return isinstance(p, int) and not isinstance(p, bool)

    def serialize_point(self, p) -> str:
        return str(p)

    def parse_point(self, text: str):
        return int(text.strip())


@dataclass(frozen=True)
class GroupCarrier:
    """A group as a set; ``punctured`` removes the identity (the set G*)."""

    spec: GroupSpec
    punctured: bool = False

    kind = "group"

    @property
    def natural_actor(self) -> GroupSpec:
        return self.spec

    def natural_act(self, h_nf, p: Element) -> Element:
        return Element(self.spec, self.spec.mul_nf(h_nf, p.nf))

    def base_point(self):
        return self.spec.identity()

    def transporter(self, p: Element):
        return p.nf

    def contains(self, p) -> bool:
        if not isinstance(p, Element) or p.spec != self.spec:
            return False
        return not (self.punctured and p.is_identity())

    def serialize_point(self, p) -> str:
        return str(p)

    def parse_point(self, text: str) -> Element:
        return Element(self.spec, self.spec.parse_nf(text))


@dataclass(frozen=True)
class SubgroupPair:
    """A subgroup H of ``ambient`` given by a named embedding.

    kinds: ``diagonal`` (H in H x H), ``left`` / ``right`` (a factor of a
    direct product), ``actor`` (acting group of a semidirect or wreath
    product), ``base`` (base of a semidirect product, or left factor of a
    free product), ``whole`` (H = G) and ``product`` (H1 x H2 in G1 x G2,
    with ``parts`` the two factor pairs).
    """

    ambient: GroupSpec
    kind: str
    parts: tuple = ()

    def __post_init__(self):
        amb, k = self.ambient, self.kind
        ok = {
            "diagonal": isinstance(amb, Direct) and amb.left == amb.right,
            "left": isinstance(amb, Direct),
            "right": isinstance(amb, Direct),
            "actor": isinstance(amb, (Semidirect, Wreath)),
            "base": isinstance(amb, (Semidirect, FreeProduct)),
            "whole": True,
            "product": isinstance(amb, Direct)
            and len(self.parts) == 2
            and self.parts[0].ambient == amb.left
            and self.parts[1].ambient == amb.right,
        }
        if k not in ok:
            raise ValidationError(f"unknown embedding kind {k!r}", key="embedding")
        if not ok[k]:
            raise ValidationError(f"embedding {k!r} does not fit a {amb.kind} ambient group", key="embedding")

    @property
    def subgroup(self) -> GroupSpec:
        amb, k = self.ambient, self.kind
        if k in ("diagonal", "left"):
            return amb.left
        if k == "right":
            return amb.right
        if k == "actor":
            return amb.actor
        if k == "base":
            return amb.base if isinstance(amb, Semidirect) else amb.left
        if k == "product":
            return Direct(self.parts[0].subgroup, self.parts[1].subgroup)
        return amb

    def embed_nf(self, h):
        amb, k = self.ambient, self.kind
        if k == "diagonal":
            return (h, h)
        if k == "left":
            return (h, amb.right.identity_nf())
        if k == "right":
            return (amb.left.identity_nf(), h)
        if k == "actor":
            if isinstance(amb, Wreath):
                return (LampConfig(), h)
            return (amb.base.identity_nf(), h)
        if k == "base":
            if isinstance(amb, Semidirect):
                return (h, amb.actor.identity_nf())
            return () if h == amb.left.identity_nf() else ((0, h),)
        if k == "product":
            return (self.parts[0].embed_nf(h[0]), self.parts[1].embed_nf(h[1]))
        return h

    def embed(self, h: Element) -> Element:
        if h.spec != self.subgroup:
            raise SpecMismatch(f"{h!r} is not in the subgroup")
        return Element(self.ambient, self.embed_nf(h.nf))

    def contains_nf(self, g) -> bool:
        amb, k = self.ambient, self.kind
        if k == "diagonal":
            return g[0] == g[1]
        if k == "left":
            return g[1] == amb.right.identity_nf()
        if k == "right":
            return g[0] == amb.left.identity_nf()
        if k == "actor":
            if isinstance(amb, Wreath):
                return not g[0]
            return g[0] == amb.base.identity_nf()
        if k == "base":
            if isinstance(amb, Semidirect):
                return g[1] == amb.actor.identity_nf()
            return len(g) == 0 or (len(g) == 1 and g[0][0] == 0)
        if k == "product":
            return self.parts[0].contains_nf(g[0]) and self.parts[1].contains_nf(g[1])
        return True

    def contains(self, g: Element) -> bool:
        return self.contains_nf(g.nf)


@dataclass(frozen=True)
class Complement:
    """G minus H for a subgroup pair, acted on by H through conjugation."""

    pair: SubgroupPair

    kind = "complement"

    def contains(self, p) -> bool:
        return (
            isinstance(p, Element)
            and p.spec == self.pair.ambient
            and not self.pair.contains_nf(p.nf)
        )

    def serialize_point(self, p) -> str:
        return str(p)

    def parse_point(self, text: str) -> Element:
        return Element(self.pair.ambient, self.pair.ambient.parse_nf(text))


@dataclass(frozen=True)
class LampConfigs:
    """Nontrivial finitely supported lamp configurations Z^(X) minus {1}."""

    wreath: Wreath

    kind = "lamps"

    def contains(self, p) -> bool:
        return isinstance(p, LampConfig) and bool(p)

    def serialize_point(self, p) -> str:
        return self.wreath.serialize_config(p)

    def parse_point(self, text: str) -> LampConfig:
        return self.wreath.parse_config(text)


# ---------------------------------------------------------------------------
# laws


@dataclass(frozen=True)
class LeftTranslation:
    name = "translation"

    def apply(self, action, h: Element, x):
        carrier = action.carrier
        if isinstance(carrier, IntLine):
            return x + h.nf
        return multiply(h, x)


@dataclass(frozen=True)
class Conjugation:
    """h.x = h x h^-1 on a group carrier."""

    name = "conjugation"

    def apply(self, action, h, x):
        return multiply(multiply(h, x), inverse(h))


@dataclass(frozen=True)
class ConjugationOnComplement:
    """h.x = h x h^-1 for h in H, x in G minus H."""

    name = "conjugation-complement"

    def apply(self, action, h, x):
        pair = action.carrier.pair
        amb = pair.ambient
        g = pair.embed_nf(h.nf)
        return Element(amb, amb.mul_nf(amb.mul_nf(g, x.nf), amb.inv_nf(g)))


@dataclass(frozen=True)
class BernoulliShift:
    """(sigma_g a)(x) = a(g^-1 x) on lamp configurations."""

    name = "bernoulli"

    def apply(self, action, h, x):
        return action.carrier.wreath.shift_config(h.nf, x)


@dataclass(frozen=True)
class TwistedConjugation:
    """h.x = h x theta(h^-1)."""

    theta: Automorphism

    name = "twisted-conjugation"

    def apply(self, action, h, x):
        spec = h.spec
        t = self.theta.apply_nf(spec.inv_nf(h.nf))
        return Element(spec, spec.mul_nf(spec.mul_nf(h.nf, x.nf), t))


@dataclass(frozen=True)
class Automorphic:
    """Actor of a semidirect product acting on its base through the twist."""

    semidirect: Semidirect

    name = "twist"

    def apply(self, action, h, x):
        return Element(x.spec, self.semidirect.automorphism(h.nf).apply_nf(x.nf))


@dataclass(frozen=True)
class ActionSpec:
    actor: GroupSpec
    carrier: Any
    law: Any

    def __post_init__(self):
        law, carrier, actor = self.law, self.carrier, self.actor
        bad = None
        if isinstance(law, LeftTranslation):
            if isinstance(carrier, IntLine):
                if actor != Cyclic(0):
                    bad = "shifts of the integer line need actor Z"
            elif not (isinstance(carrier, GroupCarrier) and carrier.spec == actor and not carrier.punctured):
                bad = "left translation needs the actor group itself as carrier"
        elif isinstance(law, Conjugation):
            if not (isinstance(carrier, GroupCarrier) and carrier.spec == actor):
                bad = "conjugation needs the actor group as carrier"
        elif isinstance(law, ConjugationOnComplement):
            if not (isinstance(carrier, Complement) and carrier.pair.subgroup == actor):
                bad = "conjugation on a complement needs the pair's subgroup as actor"
        elif isinstance(law, BernoulliShift):
            if not (isinstance(carrier, LampConfigs) and carrier.wreath.actor == actor):
                bad = "Bernoulli shift needs lamp configurations of a wreath product over the actor"
        elif isinstance(law, TwistedConjugation):
            if not (isinstance(carrier, GroupCarrier) and carrier.spec == actor and law.theta.spec == actor):
                bad = "twisted conjugation needs the actor group as carrier"
        elif isinstance(law, Automorphic):
            sd = law.semidirect
            if not (isinstance(carrier, GroupCarrier) and carrier.spec == sd.base and actor == sd.actor):
                bad = "twist action needs the semidirect base as carrier and its actor as actor"
        else:
            bad = f"unknown law {law!r}"
        if bad:
            raise ValidationError(bad, key="law")

    @property
    def name(self) -> str:
        return f"{self.law.name}/{self.carrier.kind}"

    def serialize_point(self, x) -> str:
        return self.carrier.serialize_point(x)

    def parse_point(self, text: str):
        return self.carrier.parse_point(text)

    def standard_gens(self) -> list[Element]:
        return self.actor.symmetric_generators()


def act(action: ActionSpec, h: Element, x):
    if not (h.spec is action.actor or h.spec == action.actor):
        raise SpecMismatch(f"{h!r} is not in the acting group")
    y = action.law.apply(action, h, x)
    if not action.carrier.contains(y):
        raise CarrierViolation(f"{action.name}: {h} . {x} = {y} left the carrier")
    return y


def _act_unchecked(action, h, x):
    return action.law.apply(action, h, x)


# ---------------------------------------------------------------------------
# convenience constructors


def shift_action() -> ActionSpec:
    return ActionSpec(Cyclic(0), IntLine(), LeftTranslation())


def translation_action(spec: GroupSpec) -> ActionSpec:
    return ActionSpec(spec, GroupCarrier(spec), LeftTranslation())


def inner_conjugation_action(spec: GroupSpec, punctured: bool = True) -> ActionSpec:
    return ActionSpec(spec, GroupCarrier(spec, punctured), Conjugation())


def conjugation_action(pair: SubgroupPair) -> ActionSpec:
    return ActionSpec(pair.subgroup, Complement(pair), ConjugationOnComplement())


def bernoulli_action(wreath: Wreath) -> ActionSpec:
    return ActionSpec(wreath.actor, LampConfigs(wreath), BernoulliShift())


def base_action(wreath: Wreath) -> ActionSpec:
    """The action of the wreath actor on the base set X."""
    if isinstance(wreath.baseset, IntLine):
        return shift_action()
    return translation_action(wreath.baseset.spec)


def twisted_conjugation_action(spec: GroupSpec, theta: Automorphism) -> ActionSpec:
    return ActionSpec(spec, GroupCarrier(spec), TwistedConjugation(theta))


def automorphic_action(sd: Semidirect) -> ActionSpec:
    return ActionSpec(sd.actor, GroupCarrier(sd.base, punctured=True), Automorphic(sd))


def complement_window(pair: SubgroupPair, radius: int, gens=None) -> list[Element]:
    return [g for g in ball(pair.ambient, gens, radius) if not pair.contains(g)]


def symmetrize(gens: Iterable[Element]) -> list[Element]:
    out: list[Element] = []
    for g in gens:
        for s in (g, inverse(g)):
            if s not in out:
                out.append(s)
    return out


# ---------------------------------------------------------------------------
# orbits


@dataclass(frozen=True)
class OrbitReport:
    status: str  # "finite" or "exceeds_cap"
    points: frozenset
    cap: int
    gens: tuple

    @property
    def finite(self) -> bool:
        return self.status == "finite"

    def __len__(self):
        return len(self.points)


def orbit_probe(action: ActionSpec, x, gens: Sequence[Element] | None = None, cap: int = DEFAULT_ORBIT_CAP) -> OrbitReport:
    """BFS closure of ``x`` under ``gens`` and their inverses.

    ``exceeds_cap`` is evidence of a large orbit, never a proof of infiniteness.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if gens is None:
        gens = action.standard_gens()
    sgens = symmetrize(gens)
    seen = {x}
    frontier = [x]
    while frontier:
        nxt = []
        for y in frontier:
            for g in sgens:
                z = act(action, g, y)
                if z not in seen:
                    if len(seen) >= cap:
                        return OrbitReport("exceeds_cap", frozenset(seen), cap, tuple(gens))
                    seen.add(z)
                    nxt.append(z)
        frontier = nxt
    return OrbitReport("finite", frozenset(seen), cap, tuple(gens))


@dataclass
class StarReport:
    verdicts: list  # [(point, OrbitReport)]
    falsified: bool
    witness: Any = None

    @property
    def verdict(self) -> str:
        return "star falsified" if self.falsified else "no finite orbit found"


def star_condition_probe(
    pair: SubgroupPair,
    gens_H: Sequence[Element] | None = None,
    sample_radius: int = 2,
    cap: int = 1000,
    ambient_gens: Sequence[Element] | None = None,
    threads: int = 1,
) -> StarReport:
    """Look for complement points with a finite H-conjugation orbit.

    Points are taken exhaustively from the ambient ball of ``sample_radius``
    minus H.  A finite orbit falsifies the condition that every orbit
    {h g h^-1} with g outside H is infinite.
    """
    window = complement_window(pair, sample_radius, ambient_gens)
    if not window:
        raise EmptyComplementWindow(f"ball of radius {sample_radius} has no point outside H")
    action = conjugation_action(pair)
    if gens_H is None:
        gens_H = pair.subgroup.symmetric_generators()

    def probe(x):
        return orbit_probe(action, x, gens_H, cap)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(probe, window))
    else:
        reports = [probe(x) for x in window]
    verdicts = list(zip(window, reports))
    witness = next((x for x, r in verdicts if r.finite), None)
    return StarReport(verdicts, witness is not None, witness)


# ---------------------------------------------------------------------------
# free products


def in_transversal(w: Element) -> bool:
    """Membership in the set of reduced words k1 g1 ... kn gn (first factor from K)."""
    return bool(w.nf) and w.nf[0][0] == 1


def free_product_decompose(g: Element) -> tuple[Element, Element]:
    """Write g outside H (left factor of H*K) as h w h^-1 with w in the transversal.

    Returns ``(h, w)`` with ``h`` an element of H and ``w`` of H*K.
    """
    spec = g.spec
    if not isinstance(spec, FreeProduct):
        raise SpecMismatch("free_product_decompose needs an element of a free product")
    nf = g.nf
    if len(nf) == 0 or (len(nf) == 1 and nf[0][0] == 0):
        raise NotInComplement(f"{g} lies in H")
    if nf[0][0] == 1:
        return spec.left.identity(), g
    h = nf[0][1]
    rest = nf[1:]
    w = spec.mul_nf(rest, ((0, h),))
    return Element(spec.left, h), Element(spec, w)


def embed_left(spec: FreeProduct, h: Element) -> Element:
    return Element(spec, () if h.is_identity() else ((0, h.nf),))


# ---------------------------------------------------------------------------
# stabilizers and fixed points


def stabilizer_probe(action: ActionSpec, x, gens: Sequence[Element] | None = None, radius: int = 2) -> list[Element]:
    """Elements of the actor ball of ``radius`` fixing ``x``."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    return [h for h in ball(action.actor, gens, radius) if act(action, h, x) == x]


def bernoulli_fixed_point(wreath: Wreath, orbit: OrbitReport, z0) -> LampConfig:
    """The configuration equal to z0 on a finite orbit O of the base action and 1 elsewhere."""
    if not orbit.finite:
        raise OrbitNotFinite("the base orbit was not shown to be finite")
    z = z0.nf if isinstance(z0, Element) else wreath.lamp.parse_nf(z0) if isinstance(z0, str) else z0
    if z == wreath.lamp.identity_nf():
        raise IdentityLamp("z0 must differ from the identity")
    a0 = LampConfig((p, z) for p in orbit.points)
    bern = bernoulli_action(wreath)
    for g in symmetrize(orbit.gens):
        if act(bern, g, a0) != a0:
            raise CarrierViolation(f"configuration not fixed by {g}; orbit is not closed")
    return a0


def sorted_points(points: Iterable) -> list:
    return sorted(points, key=point_sort_key)
