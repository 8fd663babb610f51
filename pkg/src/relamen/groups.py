"""Exact normal forms for the groups used throughout relamen.

Every group is described by an immutable ``GroupSpec``.  Elements are
``Element`` objects pairing a spec with a hashable normal form (``nf``);
equality and hashing go through the normal form, so elements can be put in
sets and dicts directly.

Supported constructions: free groups, cyclic groups (order 0 is Z), free
products, direct products, semidirect products twisted by generator-defined
automorphisms, and restricted wreath products over a computable base set.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Iterable, NamedTuple, Sequence

from .errors import BudgetExceeded, SpecMismatch, TwistError, UnknownGenerator

DEFAULT_BALL_CAP = 10**6


class Letter(NamedTuple):
    generator_id: int
    inverted: bool = False

    def inverse(self) -> "Letter":
        return Letter(self.generator_id, not self.inverted)

    def __str__(self) -> str:
        return f"a{self.generator_id}" + ("^-1" if self.inverted else "")


def free_reduce(letters: Iterable[Letter]) -> tuple:
    out: list[Letter] = []
    for let in letters:
        if out and out[-1].generator_id == let.generator_id and out[-1].inverted != let.inverted:
            out.pop()
        else:
            out.append(let)
    return tuple(out)


# ---------------------------------------------------------------------------
# text helpers

_TOKEN = re.compile(r"^([a-z])(\d*)(?:\^(-?\d+))?$")


def parse_letters(text: str, rank: int | None = None) -> list[Letter]:
    """Parse ``a b^-1`` / ``a0 a1^-1`` / ``a^3`` into letters.

    A bare letter maps to its alphabet position (a=0, b=1, ...); a letter
    followed by digits is ``a<index>``.  ``1`` denotes the empty word.
    """
    from .errors import ParseError

    letters: list[Letter] = []
    for tok in text.split():
        if tok in ("1", "e"):
            continue
        m = _TOKEN.match(tok)
        if not m:
            raise ParseError(f"bad letter token {tok!r}")
        name, digits, power = m.groups()
        if digits:
            if name != "a":
                raise ParseError(f"indexed letters must use 'a<index>', got {tok!r}")
            gid = int(digits)
        else:
            gid = ord(name) - ord("a")
        if rank is not None and gid >= rank:
            raise UnknownGenerator(f"letter {tok!r} exceeds rank {rank}")
        k = int(power) if power is not None else 1
        letters.extend([Letter(gid, k < 0)] * abs(k))
    return letters


def split_top(text: str, sep: str) -> list[str]:
    """Split on ``sep`` outside any (), [] or {} nesting."""
    parts, depth, cur = [], 0, []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if depth == 0 and text.startswith(sep, i):
            parts.append("".join(cur))
            cur = []
            i += len(sep)
            continue
        cur.append(ch)
        i += 1
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def bracket_groups(text: str) -> list[str]:
    """Bodies of the top-level ``[...]`` groups of ``text``; ``1`` is the empty list."""
    from .errors import ParseError

    text = text.strip()
    if text in ("", "1"):
        return []
    out, depth, start = [], 0, None
    for i, ch in enumerate(text):
        if ch == "[":
            if depth == 0:
                start = i + 1
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth < 0:
                raise ParseError(f"unbalanced brackets in {text!r}")
            if depth == 0:
                out.append(text[start:i])
        elif depth == 0 and not ch.isspace():
            raise ParseError(f"unexpected {ch!r} outside brackets in {text!r}")
    if depth:
        raise ParseError(f"unbalanced brackets in {text!r}")
    return out


def _strip_outer(text: str, open_: str, close: str) -> str:
    from .errors import ParseError

    text = text.strip()
    if not (text.startswith(open_) and text.endswith(close)):
        raise ParseError(f"expected {open_}...{close}, got {text!r}")
    return text[1:-1]


# ---------------------------------------------------------------------------
# specs


class GroupSpec:
    """Base class; subclasses are frozen dataclasses."""

    def identity_nf(self): raise NotImplementedError
    def mul_nf(self, x, y): raise NotImplementedError
    def inv_nf(self, x): raise NotImplementedError
    def generators_nf(self) -> list: raise NotImplementedError
    def generator_order(self, i: int) -> int: raise NotImplementedError
    def word_nf(self, x) -> list[tuple[int, int]]:
        """Run-length word ``[(generator, exponent), ...]`` whose product is x."""
        raise NotImplementedError
    def serialize_nf(self, x) -> str: raise NotImplementedError
    def parse_nf(self, text: str): raise NotImplementedError
    def from_raw(self, raw): raise NotImplementedError
    def word_length_nf(self, x) -> int:
        raise NotImplementedError(f"no word length for {self.kind}")

    kind = "abstract"

    @property
    def ngens(self) -> int:
        return len(self.generators_nf())

    # public conveniences ---------------------------------------------------
    def element(self, nf) -> "Element":
        return Element(self, nf)

    def identity(self) -> "Element":
        return Element(self, self.identity_nf())

    def generators(self) -> list["Element"]:
        return [Element(self, g) for g in self.generators_nf()]

    def symmetric_generators(self) -> list["Element"]:
        out: list[Element] = []
        for g in self.generators():
            for s in (g, inverse(g)):
                if s not in out and not s.is_identity():
                    out.append(s)
        return out

    def power_nf(self, x, k: int):
        if k < 0:
            x, k = self.inv_nf(x), -k
        result = self.identity_nf()
        while k:
            if k & 1:
                result = self.mul_nf(result, x)
            k >>= 1
            if k:
                x = self.mul_nf(x, x)
        return result

    def letters_nf(self, letters: Sequence[Letter]):
        gens = self.generators_nf()
        out = self.identity_nf()
        for let in letters:
            if not 0 <= let.generator_id < len(gens):
                raise UnknownGenerator(
                    f"generator {let.generator_id} out of range for {self.kind} of rank {len(gens)}"
                )
            g = gens[let.generator_id]
            out = self.mul_nf(out, self.inv_nf(g) if let.inverted else g)
        return out


@dataclass(frozen=True)
class Free(GroupSpec):
    rank: int

    kind = "free"

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("rank must be nonnegative")

    def identity_nf(self):
        return ()

    def mul_nf(self, x, y):
        i = 0
        n = min(len(x), len(y))
        while i < n:
            p, q = x[len(x) - 1 - i], y[i]
            if p.generator_id == q.generator_id and p.inverted != q.inverted:
                i += 1
            else:
                break
        return x[: len(x) - i] + y[i:]

    def inv_nf(self, x):
        return tuple(Letter(l.generator_id, not l.inverted) for l in reversed(x))

    def generators_nf(self):
        return [(Letter(i, False),) for i in range(self.rank)]

    def generator_order(self, i):
        return 0

    def word_nf(self, x):
        out: list[tuple[int, int]] = []
        for l in x:
            e = -1 if l.inverted else 1
            if out and out[-1][0] == l.generator_id:
                out[-1] = (l.generator_id, out[-1][1] + e)
            else:
                out.append((l.generator_id, e))
        return out

    def word_length_nf(self, x):
        return len(x)

    def serialize_nf(self, x):
        return " ".join(str(l) for l in x) if x else "1"

    def parse_nf(self, text):
        return free_reduce(parse_letters(text, self.rank))

    def from_raw(self, raw):
        letters = list(raw)
        for l in letters:
            if not isinstance(l, Letter):
                raise TypeError(f"free group raw input must be Letters, got {l!r}")
            if l.generator_id >= self.rank or l.generator_id < 0:
                raise UnknownGenerator(f"generator {l.generator_id} exceeds rank {self.rank}")
        return free_reduce(letters)


@dataclass(frozen=True)
class Cyclic(GroupSpec):
    """Cyclic group of the given order; order 0 means the integers."""

    order: int

    kind = "cyclic"

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be >= 0")

    def _norm(self, k: int) -> int:
        return k % self.order if self.order else k

    def identity_nf(self):
        return 0

    def mul_nf(self, x, y):
        return self._norm(x + y)

    def inv_nf(self, x):
        return self._norm(-x)

    def power_nf(self, x, k):
        return self._norm(x * k)

    def generators_nf(self):
        return [] if self.order == 1 else [self._norm(1)]

    def generator_order(self, i):
        return self.order

    def word_nf(self, x):
        return [(0, x)] if x else []

    def word_length_nf(self, x):
        if self.order:
            return min(x, self.order - x)
        return abs(x)

    def serialize_nf(self, x):
        return str(x)

    def parse_nf(self, text):
        return self._norm(int(text.strip()))

    def from_raw(self, raw):
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise TypeError(f"cyclic raw input must be an int, got {raw!r}")
        return self._norm(raw)


_SIDES = {0: 0, 1: 1, "L": 0, "R": 1, "H": 0, "K": 1}


@dataclass(frozen=True)
class FreeProduct(GroupSpec):
    left: GroupSpec
    right: GroupSpec

    kind = "free_product"

    def _side(self, s):
        return self.left if s == 0 else self.right

    def identity_nf(self):
        return ()

    def mul_nf(self, x, y):
        x, y = list(x), list(y)
        while x and y and x[-1][0] == y[0][0]:
            side = x[-1][0]
            grp = self._side(side)
            merged = grp.mul_nf(x[-1][1], y[0][1])
            x.pop()
            y = y[1:]
            if merged != grp.identity_nf():
                x.append((side, merged))
                break
        return tuple(x + y)

    def inv_nf(self, x):
        return tuple((s, self._side(s).inv_nf(v)) for s, v in reversed(x))

    def generators_nf(self):
        return [((0, g),) for g in self.left.generators_nf()] + [
            ((1, g),) for g in self.right.generators_nf()
        ]

    def generator_order(self, i):
        nl = self.left.ngens
        return self.left.generator_order(i) if i < nl else self.right.generator_order(i - nl)

    def word_nf(self, x):
        nl = self.left.ngens
        out = []
        for s, v in x:
            off = 0 if s == 0 else nl
            out.extend((g + off, e) for g, e in self._side(s).word_nf(v))
        return out

    def word_length_nf(self, x):
        return sum(self._side(s).word_length_nf(v) for s, v in x)

    def serialize_nf(self, x):
        if not x:
            return "1"
        return "".join(
            f"[{'L' if s == 0 else 'R'} {self._side(s).serialize_nf(v)}]" for s, v in x
        )

    def parse_nf(self, text):
        out = self.identity_nf()
        for chunk in bracket_groups(text):
            tag, _, body = chunk.strip().partition(" ")
            if tag not in ("L", "R"):
                from .errors import ParseError

                raise ParseError(f"free product factor must start with L or R: {chunk!r}")
            side = 0 if tag == "L" else 1
            grp = self._side(side)
            v = grp.parse_nf(body)
            if v != grp.identity_nf():
                out = self.mul_nf(out, ((side, v),))
        return out

    def from_raw(self, raw):
        out = self.identity_nf()
        for side, sub in raw:
            if side not in _SIDES:
                raise ValueError(f"unknown free product side {side!r}")
            s = _SIDES[side]
            grp = self._side(s)
            v = _to_nf(grp, sub)
            if v != grp.identity_nf():
                out = self.mul_nf(out, ((s, v),))
        return out


@dataclass(frozen=True)
class Direct(GroupSpec):
    left: GroupSpec
    right: GroupSpec

    kind = "direct"

    def identity_nf(self):
        return (self.left.identity_nf(), self.right.identity_nf())

    def mul_nf(self, x, y):
        return (self.left.mul_nf(x[0], y[0]), self.right.mul_nf(x[1], y[1]))

    def inv_nf(self, x):
        return (self.left.inv_nf(x[0]), self.right.inv_nf(x[1]))

    def power_nf(self, x, k):
        return (self.left.power_nf(x[0], k), self.right.power_nf(x[1], k))

    def generators_nf(self):
        li, ri = self.left.identity_nf(), self.right.identity_nf()
        return [(g, ri) for g in self.left.generators_nf()] + [
            (li, g) for g in self.right.generators_nf()
        ]

    def generator_order(self, i):
        nl = self.left.ngens
        return self.left.generator_order(i) if i < nl else self.right.generator_order(i - nl)

    def word_nf(self, x):
        nl = self.left.ngens
        return self.left.word_nf(x[0]) + [(g + nl, e) for g, e in self.right.word_nf(x[1])]

    def word_length_nf(self, x):
        return self.left.word_length_nf(x[0]) + self.right.word_length_nf(x[1])

    def serialize_nf(self, x):
        return f"({self.left.serialize_nf(x[0])} ; {self.right.serialize_nf(x[1])})"

    def parse_nf(self, text):
        parts = split_top(_strip_outer(text, "(", ")"), ";")
        if len(parts) != 2:
            from .errors import ParseError

            raise ParseError(f"expected a pair, got {text!r}")
        return (self.left.parse_nf(parts[0]), self.right.parse_nf(parts[1]))

    def from_raw(self, raw):
        l, r = raw
        return (_to_nf(self.left, l), _to_nf(self.right, r))


# ---------------------------------------------------------------------------
# automorphisms and semidirect twists


@dataclass(frozen=True)
class Automorphism:
    """Endomorphism of ``spec`` given by the images of its generators."""

    spec: GroupSpec
    images: tuple

    def apply_nf(self, x):
        spec = self.spec
        if isinstance(spec, Cyclic):
            return spec.power_nf(self.images[0], x) if self.images else 0
        out = spec.identity_nf()
        for g, e in spec.word_nf(x):
            out = spec.mul_nf(out, spec.power_nf(self.images[g], e))
        return out

    def __call__(self, x: "Element") -> "Element":
        if x.spec != self.spec:
            raise SpecMismatch("automorphism applied outside its group")
        return Element(self.spec, self.apply_nf(x.nf))

    def compose(self, other: "Automorphism") -> "Automorphism":
        """``self o other``."""
        return Automorphism(self.spec, tuple(self.apply_nf(img) for img in other.images))

    def power(self, k: int, inverse: "Automorphism | None" = None) -> "Automorphism":
        if k < 0:
            if inverse is None:
                raise TwistError("negative power needs the inverse automorphism")
            return inverse.power(-k)
        result = Automorphism.identity(self.spec)
        base = self
        while k:
            if k & 1:
                result = result.compose(base)
            k >>= 1
            if k:
                base = base.compose(base)
        return result

    @staticmethod
    def identity(spec: GroupSpec) -> "Automorphism":
        return Automorphism(spec, tuple(spec.generators_nf()))

    @staticmethod
    def from_elements(spec: GroupSpec, images: Sequence) -> "Automorphism":
        return Automorphism(spec, tuple(_to_nf(spec, im) for im in images))

    @staticmethod
    def swap(spec: GroupSpec, i: int = 0, j: int = 1) -> "Automorphism":
        imgs = list(spec.generators_nf())
        imgs[i], imgs[j] = imgs[j], imgs[i]
        return Automorphism(spec, tuple(imgs))

    @staticmethod
    def inversion(spec: GroupSpec) -> "Automorphism":
        """x -> x^-1; an automorphism only for abelian ``spec``."""
        return Automorphism(spec, tuple(spec.inv_nf(g) for g in spec.generators_nf()))

    def is_identity(self) -> bool:
        return self.images == tuple(self.spec.generators_nf())

    def inverse(self) -> "Automorphism":
        """Inverse when it is computable from generator images alone."""
        spec = self.spec
        if isinstance(spec, Cyclic):
            (u,) = self.images or (0,)
            n = spec.order
            try:
                inv = pow(u, -1, n) if n else {1: 1, -1: -1}[u]
            except (ValueError, KeyError):
                raise TwistError(f"{u} is not a unit, map is not invertible") from None
            return Automorphism(spec, (spec._norm(inv),))
        # signed permutation of free generators
        gens = spec.generators_nf()
        inv_imgs: list[Any] = [None] * len(gens)
        for i, img in enumerate(self.images):
            w = spec.word_nf(img)
            if len(w) != 1 or abs(w[0][1]) != 1 or spec.generator_order(w[0][0]) != 0:
                raise TwistError("cannot invert a twist that is not a signed generator permutation")
            j, e = w[0]
            if inv_imgs[j] is not None:
                raise TwistError("twist images are not a permutation of generators")
            inv_imgs[j] = gens[i] if e == 1 else spec.inv_nf(gens[i])
        if any(v is None for v in inv_imgs):
            raise TwistError("twist images are not a permutation of generators")
        return Automorphism(spec, tuple(inv_imgs))


@dataclass(frozen=True)
class Twist:
    """Action of an actor group on a base group, one automorphism per actor generator."""

    name: str
    automorphisms: tuple  # tuple[Automorphism, ...]
    inverses: tuple | None = None

    @staticmethod
    def swap(base: GroupSpec, actor: GroupSpec) -> "Twist":
        return Twist("swap", tuple(Automorphism.swap(base) for _ in actor.generators_nf()))

    @staticmethod
    def trivial(base: GroupSpec, actor: GroupSpec) -> "Twist":
        return Twist("trivial", tuple(Automorphism.identity(base) for _ in actor.generators_nf()))

    @staticmethod
    def inversion(base: GroupSpec, actor: GroupSpec) -> "Twist":
        return Twist("invert", tuple(Automorphism.inversion(base) for _ in actor.generators_nf()))

    @staticmethod
    def from_images(name: str, base: GroupSpec, images: Sequence[Sequence]) -> "Twist":
        return Twist(name, tuple(Automorphism.from_elements(base, im) for im in images))


@dataclass(frozen=True)
class Semidirect(GroupSpec):
    """base x| actor with law (a1, g1)(a2, g2) = (a1 twist_g1(a2), g1 g2)."""

    base: GroupSpec
    actor: GroupSpec
    twist: Twist

    kind = "semidirect"

    def __post_init__(self):
        if len(self.twist.automorphisms) != self.actor.ngens:
            raise TwistError(
                f"twist gives {len(self.twist.automorphisms)} automorphisms for an actor of rank {self.actor.ngens}"
            )
        for aut in self.twist.automorphisms:
            if aut.spec != self.base or len(aut.images) != self.base.ngens:
                raise TwistError("twist images must be base elements, one per base generator")

    def _gen_inverse(self, i: int) -> Automorphism:
        return _twist_generator_inverse(self, i)

    def automorphism(self, g_nf) -> Automorphism:
        return _twist_of(self, g_nf)

    def identity_nf(self):
        return (self.base.identity_nf(), self.actor.identity_nf())

    def mul_nf(self, x, y):
        b1, g1 = x
        b2, g2 = y
        return (
            self.base.mul_nf(b1, self.automorphism(g1).apply_nf(b2)),
            self.actor.mul_nf(g1, g2),
        )

    def inv_nf(self, x):
        b, g = x
        gi = self.actor.inv_nf(g)
        return (self.automorphism(gi).apply_nf(self.base.inv_nf(b)), gi)

    def generators_nf(self):
        bi, ai = self.base.identity_nf(), self.actor.identity_nf()
        return [(g, ai) for g in self.base.generators_nf()] + [
            (bi, g) for g in self.actor.generators_nf()
        ]

    def generator_order(self, i):
        nb = self.base.ngens
        return self.base.generator_order(i) if i < nb else self.actor.generator_order(i - nb)

    def word_nf(self, x):
        nb = self.base.ngens
        return self.base.word_nf(x[0]) + [(g + nb, e) for g, e in self.actor.word_nf(x[1])]

    def serialize_nf(self, x):
        return f"({self.base.serialize_nf(x[0])} ; {self.actor.serialize_nf(x[1])})"

    def parse_nf(self, text):
        parts = split_top(_strip_outer(text, "(", ")"), ";")
        if len(parts) != 2:
            from .errors import ParseError

            raise ParseError(f"expected a pair, got {text!r}")
        return (self.base.parse_nf(parts[0]), self.actor.parse_nf(parts[1]))

    def from_raw(self, raw):
        b, g = raw
        return (_to_nf(self.base, b), _to_nf(self.actor, g))


@lru_cache(maxsize=None)
def _twist_generator_inverse(spec: Semidirect, i: int) -> Automorphism:
    tw = spec.twist
    if tw.inverses is not None:
        return tw.inverses[i]
    aut = tw.automorphisms[i]
    order = spec.actor.generator_order(i)
    if order:
        return aut.power(order - 1)
    return aut.inverse()


@lru_cache(maxsize=1 << 16)
def _twist_of(spec: Semidirect, g_nf) -> Automorphism:
    result = Automorphism.identity(spec.base)
    for gen, e in spec.actor.word_nf(g_nf):
        aut = spec.twist.automorphisms[gen]
        step = aut.power(e) if e > 0 else _twist_generator_inverse(spec, gen).power(-e)
        result = result.compose(step)
    return result


# ---------------------------------------------------------------------------
# restricted wreath products


class LampConfig:
    """Finitely supported map from base-set points to non-identity lamp values (normal forms)."""

    __slots__ = ("items", "_hash")

    def __init__(self, items: Iterable[tuple] = ()):
        self.items = frozenset(items)
        self._hash = hash(self.items)

    def __eq__(self, other):
        return isinstance(other, LampConfig) and self.items == other.items

    def __hash__(self):
        return self._hash

    def __len__(self):
        return len(self.items)

    def __bool__(self):
        return bool(self.items)

    def as_dict(self) -> dict:
        return dict(self.items)

    def support(self) -> frozenset:
        return frozenset(p for p, _ in self.items)

    def __repr__(self):
        return f"LampConfig({dict(self.items)!r})"


@dataclass(frozen=True)
class Wreath(GroupSpec):
    """Restricted wreath product lamp wr_X actor, X = ``baseset`` with its natural action.

    ``baseset`` is an ``IntLine`` (actor Z by shifts) or a ``GroupCarrier``
    (actor = carrier group by left translation).
    """

    lamp: GroupSpec
    baseset: Any

    kind = "wreath"

    @property
    def actor(self) -> GroupSpec:
        return self.baseset.natural_actor

    def shift_config(self, g_nf, cfg: LampConfig) -> LampConfig:
        """Bernoulli shift: (sigma_g a)(x) = a(g^-1 x), i.e. a lamp at p moves to g.p."""
        act = self.baseset.natural_act
        return LampConfig((act(g_nf, p), v) for p, v in cfg.items)

    def mul_config(self, c1: LampConfig, c2: LampConfig) -> LampConfig:
        if not c2.items:
            return c1
        if not c1.items:
            return c2
        lamp = self.lamp
        e = lamp.identity_nf()
        d = dict(c1.items)
        for p, v in c2.items:
            if p in d:
                w = lamp.mul_nf(d[p], v)
                if w == e:
                    del d[p]
                else:
                    d[p] = w
            else:
                d[p] = v
        return LampConfig(d.items())

    def inv_config(self, c: LampConfig) -> LampConfig:
        return LampConfig((p, self.lamp.inv_nf(v)) for p, v in c.items)

    def identity_nf(self):
        return (LampConfig(), self.actor.identity_nf())

    def mul_nf(self, x, y):
        a1, g1 = x
        a2, g2 = y
        return (self.mul_config(a1, self.shift_config(g1, a2)), self.actor.mul_nf(g1, g2))

    def inv_nf(self, x):
        a, g = x
        gi = self.actor.inv_nf(g)
        return (self.shift_config(gi, self.inv_config(a)), gi)

    def generators_nf(self):
        x0 = self.baseset.base_point()
        ai = self.actor.identity_nf()
        lamps = [(LampConfig([(x0, z)]), ai) for z in self.lamp.generators_nf()]
        return lamps + [(LampConfig(), g) for g in self.actor.generators_nf()]

    def generator_order(self, i):
        nl = self.lamp.ngens
        return self.lamp.generator_order(i) if i < nl else self.actor.generator_order(i - nl)

    def word_nf(self, x):
        a, g = x
        nl = self.lamp.ngens
        actor = self.actor
        out: list[tuple[int, int]] = []
        for p, v in sorted(a.items, key=lambda pv: point_sort_key(pv[0])):
            t = self.baseset.transporter(p)
            out += [(i + nl, e) for i, e in actor.word_nf(t)]
            out += self.lamp.word_nf(v)
            out += [(i + nl, e) for i, e in actor.word_nf(actor.inv_nf(t))]
        out += [(i + nl, e) for i, e in actor.word_nf(g)]
        return out

    def serialize_config(self, c: LampConfig) -> str:
        items = sorted(c.items, key=lambda pv: point_sort_key(pv[0]))
        body = ", ".join(
            f"{self.baseset.serialize_point(p)} -> {self.lamp.serialize_nf(v)}" for p, v in items
        )
        return "{" + body + "}"

    def parse_config(self, text: str) -> LampConfig:
        body = _strip_outer(text, "{", "}").strip()
        e = self.lamp.identity_nf()
        d = {}
        if body:
            for item in split_top(body, ","):
                p, v = split_top(item, "->")
                vv = self.lamp.parse_nf(v)
                if vv != e:
                    d[self.baseset.parse_point(p)] = vv
        return LampConfig(d.items())

    def serialize_nf(self, x):
        return f"({self.serialize_config(x[0])} ; {self.actor.serialize_nf(x[1])})"

    def parse_nf(self, text):
        parts = split_top(_strip_outer(text, "(", ")"), ";")
        if len(parts) != 2:
            from .errors import ParseError

            raise ParseError(f"expected (config ; actor), got {text!r}")
        return (self.parse_config(parts[0]), self.actor.parse_nf(parts[1]))

    def config_from_raw(self, raw) -> LampConfig:
        if isinstance(raw, LampConfig):
            return raw
        e = self.lamp.identity_nf()
        d = {}
        for p, v in dict(raw).items():
            if not self.baseset.contains(p):
                raise ValueError(f"{p!r} is not a point of {self.baseset!r}")
            vv = _to_nf(self.lamp, v)
            if vv != e:
                d[p] = vv
        return LampConfig(d.items())

    def from_raw(self, raw):
        cfg, g = raw
        return (self.config_from_raw(cfg), _to_nf(self.actor, g))


# ---------------------------------------------------------------------------
# elements


class Element:
    """A group element: a spec together with its unique normal form."""

    __slots__ = ("spec", "nf", "_hash")

    def __init__(self, spec: GroupSpec, nf):
        self.spec = spec
        self.nf = nf
        self._hash = hash(nf)

    def __eq__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.nf == other.nf
            and (self.spec is other.spec or self.spec == other.spec)
        )

    def __hash__(self):
        return self._hash

    def __mul__(self, other):
        return multiply(self, other)

    def __invert__(self):
        return inverse(self)

    def __pow__(self, k: int):
        return Element(self.spec, self.spec.power_nf(self.nf, k))

    def __str__(self):
        return self.spec.serialize_nf(self.nf)

    def __repr__(self):
        return f"<{self.spec.kind} {self}>"

    def is_identity(self) -> bool:
        return self.nf == self.spec.identity_nf()

    def word_length(self) -> int:
        return self.spec.word_length_nf(self.nf)

    # structural accessors
    @property
    def letters(self) -> tuple:
        return self.nf

    @property
    def left(self) -> "Element":
        return Element(self.spec.left, self.nf[0])

    @property
    def right(self) -> "Element":
        return Element(self.spec.right, self.nf[1])

    @property
    def base(self) -> "Element":
        return Element(self.spec.base, self.nf[0])

    @property
    def actor(self) -> "Element":
        return Element(self.spec.actor, self.nf[1])

    @property
    def lamps(self) -> LampConfig:
        return self.nf[0]

    @property
    def factors(self) -> list[tuple[int, "Element"]]:
        return [(s, Element(self.spec._side(s), v)) for s, v in self.nf]


def _to_nf(spec: GroupSpec, raw):
    if isinstance(raw, Element):
        if raw.spec != spec:
            raise SpecMismatch(f"{raw!r} does not belong to {spec.kind}")
        return raw.nf
    if isinstance(raw, str):
        return spec.parse_nf(raw)
    if isinstance(raw, (list, tuple)) and raw and all(isinstance(r, Letter) for r in raw):
        return spec.letters_nf(raw) if not isinstance(spec, Free) else spec.from_raw(raw)
    if isinstance(raw, (list, tuple)) and not raw and not isinstance(spec, (Direct, Semidirect, Wreath)):
        return spec.identity_nf()
    return spec.from_raw(raw)


def reduce(raw, spec: GroupSpec) -> Element:
    """Normal form of ``raw`` in ``spec``.

    ``raw`` may be a sequence of ``Letter`` (product of the spec's generators),
    canonical text, an ``Element`` of the spec, or a spec-specific raw form:
    an int for cyclic groups, ``[(side, raw), ...]`` factors for free
    products, ``(raw, raw)`` for direct and semidirect products and
    ``({point: raw}, raw)`` for wreath products.
    """
    return Element(spec, _to_nf(spec, raw))


def element(spec: GroupSpec, raw) -> Element:
    return reduce(raw, spec)


def identity(spec: GroupSpec) -> Element:
    return spec.identity()


def multiply(x: Element, y: Element) -> Element:
    if not (x.spec is y.spec or x.spec == y.spec):
        raise SpecMismatch(f"cannot multiply {x!r} and {y!r}")
    return Element(x.spec, x.spec.mul_nf(x.nf, y.nf))


def inverse(x: Element) -> Element:
    return Element(x.spec, x.spec.inv_nf(x.nf))


def conjugate(h: Element, x: Element) -> Element:
    """h x h^-1."""
    return multiply(multiply(h, x), inverse(h))


def serialize(x: Element) -> str:
    return str(x)


def parse_element(text: str, spec: GroupSpec) -> Element:
    return Element(spec, spec.parse_nf(text))


def ball(
    spec: GroupSpec,
    gens: Sequence[Element] | None = None,
    radius: int = 1,
    cap: int = DEFAULT_BALL_CAP,
) -> list[Element]:
    """All elements of word length <= radius, in BFS discovery order."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if gens is None:
        gens = spec.symmetric_generators()
    for g in gens:
        if g.spec != spec:
            raise SpecMismatch(f"generator {g!r} is not in {spec.kind}")
    gen_nfs = [g.nf for g in gens]
    e = spec.identity_nf()
    seen = {e}
    order = [e]
    frontier = [e]
    for _ in range(radius):
        nxt = []
        for x in frontier:
            for s in gen_nfs:
                y = spec.mul_nf(x, s)
                if y not in seen:
                    seen.add(y)
                    order.append(y)
                    nxt.append(y)
                    if len(order) > cap:
                        raise BudgetExceeded(f"ball exceeded cap of {cap} elements")
        if not nxt:
            break
        frontier = nxt
    return [Element(spec, x) for x in order]


def free_ball_size(k: int, r: int) -> int:
    """|ball(Free(k), r)| = 1 + 2k((2k-1)^r - 1)/(2k-2) for k >= 2."""
    return 1 + 2 * k * ((2 * k - 1) ** r - 1) // (2 * k - 2)


# ---------------------------------------------------------------------------
# twist probes


def check_twist_is_action(spec: Semidirect, radius: int = 2) -> list[tuple[Element, Element]]:
    """Pairs (g, h) of the actor ball with twist(g) o twist(h) != twist(gh); empty when consistent."""
    failures = []
    actor_ball = ball(spec.actor, radius=radius)
    for g in actor_ball:
        for h in actor_ball:
            lhs = spec.automorphism(g.nf).compose(spec.automorphism(h.nf))
            rhs = spec.automorphism(spec.actor.mul_nf(g.nf, h.nf))
            if lhs.images != rhs.images:
                failures.append((g, h))
    return failures


def check_twist_consistency(spec: Semidirect, radius: int = 3) -> list[tuple[Element, Element]]:
    """For each actor generator automorphism check it is a homomorphism on a base ball.

    Catches images that violate the relations of a non-free base (Cyclic
    bases in particular).  Returns (x, y) witnesses with phi(xy) != phi(x)phi(y).
    """
    failures = []
    base = spec.base
    pts = ball(base, radius=radius)
    for aut in spec.twist.automorphisms:
        for x in pts:
            for y in pts:
                lhs = aut.apply_nf(base.mul_nf(x.nf, y.nf))
                rhs = base.mul_nf(aut.apply_nf(x.nf), aut.apply_nf(y.nf))
                if lhs != rhs:
                    failures.append((x, y))
    return failures


# ---------------------------------------------------------------------------
# point ordering (shared by every module that needs deterministic output)


def point_sort_key(p):
    if isinstance(p, bool):
        return (2, str(p))
    if isinstance(p, int):
        return (0, p, "")
    if isinstance(p, Element):
        s = str(p)
        return (1, len(s), s)
    if isinstance(p, LampConfig):
        return (1, len(p), repr(sorted(map(repr, p.items))))
    return (3, 0, repr(p))


def semidirect_swap_f2() -> Semidirect:
    """F2 x| Z/2 where the generator of Z/2 exchanges a and b."""
    base, actor = Free(2), Cyclic(2)
    return Semidirect(base, actor, Twist.swap(base, actor))
