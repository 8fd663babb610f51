"""Paradoxical-decomposition certificates verified exhaustively on finite windows.

Predicates are decided on exact normal forms, so a counterexample found in
a window is a genuine counterexample, and a pass is a proof restricted to
the window.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable

from .actions import ActionSpec, act, twisted_conjugation_action
from .errors import ParseError, ValidationError
from .groups import Automorphism, Element, Free, inverse, split_top

logger = logging.getLogger(__name__)


class SetPredicate:
    def contains(self, action: ActionSpec, x) -> bool:
        raise NotImplementedError

    def text(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class EndsInPowerOf(SetPredicate):
    """Nontrivial reduced words whose last letter is the given generator or its inverse."""

    generator_id: int

    def contains(self, action, x):
        return bool(x.nf) and x.nf[-1].generator_id == self.generator_id

    def text(self):
        return f"ends_in({chr(ord('a') + self.generator_id)})"


def ends_in_power_of_b() -> EndsInPowerOf:
    return EndsInPowerOf(1)


@dataclass(frozen=True)
class Translate(SetPredicate):
    """g.P = {x : g^-1 . x in P}."""

    g: Element
    inner: SetPredicate

    def contains(self, action, x):
        return self.inner.contains(action, act(action, inverse(self.g), x))

    def text(self):
        return f"translate({self.g}, {self.inner.text()})"


@dataclass(frozen=True)
class Not(SetPredicate):
    inner: SetPredicate

    def contains(self, action, x):
        return not self.inner.contains(action, x)

    def text(self):
        return f"not({self.inner.text()})"


@dataclass(frozen=True)
class FiniteSet(SetPredicate):
    points: frozenset

    def contains(self, action, x):
        return x in self.points

    def text(self):
        return "set(" + ", ".join(sorted(map(str, self.points))) + ")"


@dataclass(frozen=True)
class ParadoxCertificate:
    action: ActionSpec
    cover: tuple  # ((translator, predicate), ...): union must be the carrier
    disjoint: tuple  # ((translator, predicate), ...): pairwise disjoint

    def __post_init__(self):
        for g, _ in self.cover + self.disjoint:
            if g.spec != self.action.actor:
                raise ValidationError(f"translator {g} is not in the acting group", key="certificate")

    def to_text(self) -> str:
        lines = [f"cover {g} {p.text()}" for g, p in self.cover]
        lines += [f"disjoint {g} {p.text()}" for g, p in self.disjoint]
        return "\n".join(lines) + "\n"


def in_translate(action: ActionSpec, g: Element, pred: SetPredicate, x) -> bool:
    """x in g.P  <=>  g^-1 . x in P."""
    return pred.contains(action, act(action, inverse(g), x))


def swap_action():
    F = Free(2)
    return twisted_conjugation_action(F, Automorphism.swap(F))


def f2_swap_certificate(predicate: SetPredicate | None = None) -> ParadoxCertificate:
    """Built-in certificate for h.x = h x theta(h^-1) on F2, theta swapping a and b.

    E = words ending in a power of b; F2 = E u a.E and E, b.E, b^-1.E are
    pairwise disjoint.  ``predicate`` replaces E (used for negative tests).
    """
    action = swap_action()
    F = action.actor
    a, b = F.generators()
    E = predicate if predicate is not None else ends_in_power_of_b()
    e = F.identity()
    return ParadoxCertificate(action, ((e, E), (a, E)), ((e, E), (b, E), (inverse(b), E)))


@dataclass
class ParadoxReport:
    covering_ok: bool
    disjoint_ok: bool
    checked: int
    uncovered: list = field(default_factory=list)
    overlaps: list = field(default_factory=list)  # (point, clause indices)
    warnings: list = field(default_factory=list)

    @property
    def counterexamples(self) -> list:
        return self.uncovered + [x for x, _ in self.overlaps]

    def to_record(self, action: ActionSpec) -> dict:
        ser = action.serialize_point
        return {
            "covering_ok": self.covering_ok,
            "disjoint_ok": self.disjoint_ok,
            "checked": self.checked,
            "uncovered": [ser(x) for x in self.uncovered],
            "overlaps": [{"point": ser(x), "clauses": list(c)} for x, c in self.overlaps],
            "counterexample_count": len(self.uncovered) + len(self.overlaps),
            "warnings": list(self.warnings),
        }


def verify_paradox_certificate(
    cert: ParadoxCertificate,
    window: Iterable,
    frontier_margin: int = 0,
    max_counterexamples: int = 50,
) -> ParadoxReport:
    """Check every covering and disjointness clause at every window point.

    ``frontier_margin`` is informational only: predicate evaluation is exact
    everywhere, so no boundary points need to be discarded.
    """
    action = cert.action
    pts = list(window)
    warns = []
    if not pts:
        warns.append("empty window: verification is vacuous")
        logger.warning(warns[-1])
    if frontier_margin:
        warns.append(f"frontier_margin={frontier_margin} recorded; exact predicates need no margin")
    cover = [(inverse(g), p) for g, p in cert.cover]
    disj = [(inverse(g), p) for g, p in cert.disjoint]
    uncovered, overlaps = [], []
    n_unc = n_ov = 0
    for x in pts:
        if not any(p.contains(action, act(action, gi, x)) for gi, p in cover):
            n_unc += 1
            if len(uncovered) < max_counterexamples:
                uncovered.append(x)
        hits = tuple(i for i, (gi, p) in enumerate(disj) if p.contains(action, act(action, gi, x)))
        if len(hits) > 1:
            n_ov += 1
            if len(overlaps) < max_counterexamples:
                overlaps.append((x, hits))
    return ParadoxReport(n_unc == 0, n_ov == 0, len(pts), uncovered, overlaps, warns)


# ---------------------------------------------------------------------------
# text format: "cover <word> <PREDICATE>" / "disjoint <word> <PREDICATE>"


def parse_predicate(text: str, action: ActionSpec) -> SetPredicate:
    text = text.strip()
    head, _, rest = text.partition("(")
    if not rest.endswith(")"):
        raise ParseError(f"bad predicate {text!r}")
    body = rest[:-1]
    head = head.strip()
    if head == "ends_in":
        letter = body.strip()
        if len(letter) != 1 or not letter.isalpha():
            raise ParseError(f"ends_in takes one letter, got {body!r}")
        gid = ord(letter) - ord("a")
        if gid >= action.actor.ngens:
            raise ParseError(f"unknown generator {letter!r}")
        return EndsInPowerOf(gid)
    if head == "not":
        return Not(parse_predicate(body, action))
    if head == "translate":
        w, p = split_top(body, ",")
        return Translate(action.actor.element(action.actor.parse_nf(w)), parse_predicate(p, action))
    if head == "set":
        pts = [action.parse_point(t) for t in split_top(body, ",") if t]
        return FiniteSet(frozenset(pts))
    raise ParseError(f"unknown predicate {head!r}")


def parse_certificate(text: str, action: ActionSpec) -> ParadoxCertificate:
    cover, disjoint = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, _, rest = line.partition(" ")
        if kind not in ("cover", "disjoint"):
            raise ParseError(f"expected 'cover' or 'disjoint', got {kind!r}", lineno)
        k = rest.find("(")
        if k < 0:
            raise ParseError("missing predicate", lineno)
        # the predicate starts at the first token that contains "("
        start = rest.rfind(" ", 0, k) + 1
        word, pred = rest[:start].strip() or "1", rest[start:]
        try:
            g = action.actor.element(action.actor.parse_nf(word))
            p = parse_predicate(pred, action)
        except ParseError as exc:
            raise ParseError(str(exc), lineno) from None
        (cover if kind == "cover" else disjoint).append((g, p))
    return ParadoxCertificate(action, tuple(cover), tuple(disjoint))


def report_json(report: ParadoxReport, action: ActionSpec) -> str:
    return json.dumps(report.to_record(action), sort_keys=True)
