"""Declarative jobs: a sectioned key = value file describing group, subgroup, action and task.

    # comment
    [group]
    group = free(2)
    [subgroup]
    embedding = whole
    [action]
    kind = twisted
    theta = swap
    [task]
    kind = paradox-verify
    radius = 8

Group expressions: free(k), cyclic(n), z, freeproduct(A, B), direct(A, B),
semidirect(A, B, swap|trivial|invert), wreath(L, intline|group(S)).
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from . import __version__
from .actions import (
    ActionSpec,
    Complement,
    GroupCarrier,
    IntLine,
    LampConfigs,
    SubgroupPair,
    automorphic_action,
    base_action,
    bernoulli_action,
    complement_window,
    conjugation_action,
    inner_conjugation_action,
    orbit_probe,
    shift_action,
    sorted_points,
    star_condition_probe,
    translation_action,
    twisted_conjugation_action,
)
from .car import Vec1P, OneParticleMap, central_freeness_defect, commutator_norm_check, mixing_defect, number_projection, quasi_free_trace
from .errors import ParseError, RelamenError, ValidationError
from .folner import folner_quotient, folner_search, frac_str, wreath_folner_lift
from .groups import (
    Automorphism,
    Cyclic,
    Direct,
    Free,
    FreeProduct,
    GroupSpec,
    Semidirect,
    Twist,
    Wreath,
    ball,
    split_top,
)
from .paradox import EndsInPowerOf, f2_swap_certificate, parse_predicate, verify_paradox_certificate
from .spectral import WeightFunction, averaging_matrix, top_rayleigh

logger = logging.getLogger(__name__)

SCHEMA = "relamen-report/1"
SECTIONS = ("group", "subgroup", "action", "task")
TASKS = ("orbits", "star", "folner-verify", "folner-search", "spectral", "paradox-verify", "car")
ACTIONS = ("shift", "translation", "conjugation", "inner", "bernoulli", "base", "twisted", "automorphic")
EMBEDDINGS = ("whole", "diagonal", "left", "right", "actor", "base")
PROVEN, EVIDENCE = "PROVEN-ON-INPUT", "EVIDENCE"
MAX_RADIUS = 64


# ---------------------------------------------------------------------------
# group expressions


def _call(text: str) -> tuple[str, list[str]]:
    text = text.strip()
    if "(" not in text:
        return text.lower(), []
    head, _, rest = text.partition("(")
    if not rest.endswith(")"):
        raise ParseError(f"unbalanced parentheses in {text!r}")
    return head.strip().lower(), [a.strip() for a in split_top(rest[:-1], ",")]


def _int_arg(s: str, what: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {s!r}") from None


def parse_group(text: str) -> GroupSpec:
    head, args = _call(text)
    if head == "z" and not args:
        return Cyclic(0)
    if head == "free" and len(args) == 1:
        k = _int_arg(args[0], "free rank")
        if k < 1:
            raise ValidationError("free rank must be >= 1", key="group")
        return Free(k)
    if head == "cyclic" and len(args) == 1:
        n = _int_arg(args[0], "cyclic order")
        if n < 0 or n == 1:
            raise ValidationError("cyclic order must be 0 (for Z) or >= 2", key="group")
        return Cyclic(n)
    if head == "freeproduct" and len(args) == 2:
        return FreeProduct(parse_group(args[0]), parse_group(args[1]))
    if head == "direct" and len(args) == 2:
        return Direct(parse_group(args[0]), parse_group(args[1]))
    if head == "semidirect" and len(args) == 3:
        base, actor = parse_group(args[0]), parse_group(args[1])
        makers = {"swap": Twist.swap, "trivial": Twist.trivial, "invert": Twist.inversion}
        if args[2] not in makers:
            raise ValidationError(f"unknown twist {args[2]!r}", key="group")
        return Semidirect(base, actor, makers[args[2]](base, actor))
    if head == "wreath" and len(args) == 2:
        lamp = parse_group(args[0])
        bh, bargs = _call(args[1])
        if bh == "intline" and not bargs:
            return Wreath(lamp, IntLine())
        if bh == "group" and len(bargs) == 1:
            return Wreath(lamp, GroupCarrier(parse_group(bargs[0])))
        raise ValidationError(f"unknown wreath base set {args[1]!r}", key="group")
    raise ValidationError(f"unknown group expression {text!r}", key="group")


def group_text(spec: GroupSpec) -> str:
    if isinstance(spec, Free):
        return f"free({spec.rank})"
    if isinstance(spec, Cyclic):
        return "z" if spec.order == 0 else f"cyclic({spec.order})"
    if isinstance(spec, FreeProduct):
        return f"freeproduct({group_text(spec.left)}, {group_text(spec.right)})"
    if isinstance(spec, Direct):
        return f"direct({group_text(spec.left)}, {group_text(spec.right)})"
    if isinstance(spec, Semidirect):
        return f"semidirect({group_text(spec.base)}, {group_text(spec.actor)}, {spec.twist.name})"
    if isinstance(spec, Wreath):
        b = spec.baseset
        bt = "intline" if isinstance(b, IntLine) else f"group({group_text(b.spec)})"
        return f"wreath({group_text(spec.lamp)}, {bt})"
    raise ValidationError(f"group {spec!r} has no text form", key="group")


# ---------------------------------------------------------------------------
# job files


@dataclass
class JobSpec:
    group: str
    embedding: str = "whole"
    action: str = "translation"
    action_params: dict = field(default_factory=dict)
    task: str = "orbits"
    params: dict = field(default_factory=dict)

    @property
    def group_spec(self) -> GroupSpec:
        return parse_group(self.group)


def _read_sections(text: str) -> dict:
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"bad section header {line!r}", lineno)
            current = line[1:-1].strip()
            if current not in SECTIONS:
                raise ParseError(f"unknown section [{current}]", lineno)
            if current in sections:
                raise ParseError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            continue
        if current is None:
            raise ParseError("entry before any section", lineno)
        key, eq, value = line.partition("=")
        if not eq:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = key.strip(), value.strip()
        if not key:
            raise ParseError("empty key", lineno)
        if key in sections[current]:
            raise ParseError(f"duplicate key {key!r}", lineno)
        sections[current][key] = (value, lineno)
    return sections


def _nonneg_int(params: dict, key: str, lo: int = 0, hi: int | None = None):
    if key not in params:
        return
    value, line = params[key]
    try:
        v = int(value)
    except ValueError:
        raise ValidationError(f"{key} must be an integer, got {value!r}", key=key, line=line) from None
    if v < lo or (hi is not None and v > hi):
        rng = f">= {lo}" if hi is None else f"in [{lo}, {hi}]"
        raise ValidationError(f"{key} must be {rng}, got {v}", key=key, line=line)


def parse_spec(text: str) -> JobSpec:
    """Parse and validate a job file; errors carry line numbers."""
    sec = _read_sections(text)
    if "group" not in sec:
        raise ValidationError("missing section [group]", key="group")
    if "group" not in sec["group"]:
        raise ValidationError("missing key 'group' in [group]", key="group")
    gtext, gline = sec["group"]["group"]
    try:
        gspec = parse_group(gtext)
    except (ParseError, ValidationError) as exc:
        raise ValidationError(str(exc), key="group", line=gline) from None
    except RelamenError as exc:
        raise ValidationError(str(exc), key="group", line=gline) from None

    for name in ("action", "task"):
        if name not in sec:
            raise ValidationError(f"missing section [{name}]", key=name)

    embedding = "whole"
    if "subgroup" in sec:
        sub = sec["subgroup"]
        if "embedding" in sub:
            embedding, eline = sub["embedding"]
            if embedding not in EMBEDDINGS:
                raise ValidationError(f"unknown embedding kind {embedding!r}", key="embedding", line=eline)

    act = dict(sec["action"])
    if "kind" not in act:
        raise ValidationError("missing key 'kind' in [action]", key="kind")
    akind, aline = act.pop("kind")
    if akind not in ACTIONS:
        raise ValidationError(f"unknown action kind {akind!r}", key="kind", line=aline)

    task = dict(sec["task"])
    if "kind" not in task:
        raise ValidationError("missing key 'kind' in [task]", key="kind")
    tkind, tline = task.pop("kind")
    if tkind not in TASKS:
        raise ValidationError(f"unknown task kind {tkind!r}", key="kind", line=tline)
    _nonneg_int(task, "radius", 0, MAX_RADIUS)
    _nonneg_int(task, "cap", 1)
    _nonneg_int(task, "budget", 1)
    _nonneg_int(task, "restarts", 0)
    _nonneg_int(task, "seed", 0)
    _nonneg_int(task, "n", 0)
    _nonneg_int(task, "trials", 1)
    if "target" in task:
        value, line = task["target"]
        try:
            t = Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"target must be a rational, got {value!r}", key="target", line=line) from None
        if not 0 < t <= 2:
            raise ValidationError("target must be in (0, 2]", key="target", line=line)

    job = JobSpec(
        group=group_text(gspec),
        embedding=embedding,
        action=akind,
        action_params={k: v for k, (v, _) in act.items()},
        task=tkind,
        params={k: v for k, (v, _) in task.items()},
    )
    try:
        build_action(job)
    except RelamenError as exc:
        raise ValidationError(str(exc), key="kind", line=aline) from None
    return job


def serialize_job(job: JobSpec) -> str:
    lines = ["[group]", f"group = {job.group}", "", "[subgroup]", f"embedding = {job.embedding}", ""]
    lines += ["[action]", f"kind = {job.action}"] + [f"{k} = {v}" for k, v in job.action_params.items()]
    lines += ["", "[task]", f"kind = {job.task}"] + [f"{k} = {v}" for k, v in job.params.items()]
    return "\n".join(lines) + "\n"


def load_job(path: str) -> JobSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())


def bundled_jobs() -> dict[str, str]:
    """Name -> text of the example job files shipped with the package."""
    root = resources.files("relamen") / "jobs"
    return {p.name[:-4]: p.read_text(encoding="utf-8") for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".job")}


# ---------------------------------------------------------------------------
# building actions


def build_action(job: JobSpec) -> ActionSpec:
    G = job.group_spec
    kind, p = job.action, job.action_params
    if kind == "shift":
        if G != Cyclic(0):
            raise ValidationError("shift needs group = z", key="kind")
        return shift_action()
    if kind == "translation":
        return translation_action(G)
    if kind == "inner":
        return inner_conjugation_action(G, punctured=p.get("punctured", "true") == "true")
    if kind == "conjugation":
        return conjugation_action(SubgroupPair(G, job.embedding))
    if kind in ("bernoulli", "base"):
        if not isinstance(G, Wreath):
            raise ValidationError(f"{kind} needs a wreath product group", key="kind")
        return bernoulli_action(G) if kind == "bernoulli" else base_action(G)
    if kind == "twisted":
        theta = p.get("theta", "swap")
        if theta == "swap":
            aut = Automorphism.swap(G)
        elif theta == "invert":
            aut = Automorphism.inversion(G)
        else:
            raise ValidationError(f"unknown theta {theta!r}", key="theta")
        return twisted_conjugation_action(G, aut)
    if kind == "automorphic":
        if not isinstance(G, Semidirect):
            raise ValidationError("automorphic needs a semidirect product group", key="kind")
        return automorphic_action(G)
    raise ValidationError(f"unknown action kind {kind!r}", key="kind")


def _points(action: ActionSpec, text: str) -> list:
    text = text.strip()
    if ".." in text and isinstance(action.carrier, IntLine):
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [action.parse_point(t) for t in split_top(text, ";") if t.strip()]


def window_points(action: ActionSpec, radius: int) -> list:
    """A canonical finite window of the carrier, indexed by a radius."""
    c = action.carrier
    if isinstance(c, IntLine):
        return list(range(-radius, radius + 1))
    if isinstance(c, Complement):
        return complement_window(c.pair, radius)
    if isinstance(c, GroupCarrier):
        return [x for x in ball(c.spec, None, radius) if c.contains(x)]
    if isinstance(c, LampConfigs):
        return sorted_points({g.lamps for g in ball(c.wreath, None, radius) if g.lamps})
    raise ValidationError(f"no window for carrier {c!r}", key="carrier")


# ---------------------------------------------------------------------------
# tasks


def _num(x, exact: bool):
    if isinstance(x, Fraction) and exact:
        return frac_str(x)
    if isinstance(x, complex):
        return float(x.real) if x.imag == 0 else [x.real, x.imag]
    return float(x)


def _task_orbits(job, action, seed, threads, exact):
    p = job.params
    cap = int(p.get("cap", 10000))
    pts = _points(action, p["points"]) if "points" in p else [action.carrier.base_point()]
    rows = []
    for x in pts:
        r = orbit_probe(action, x, None, cap)
        rows.append({"point": action.serialize_point(x), "status": r.status, "size": len(r)})
    ev = PROVEN if all(r["status"] == "finite" for r in rows) else EVIDENCE
    return {"orbits": rows, "cap": cap}, ev


def _task_star(job, action, seed, threads, exact):
    p = job.params
    G = job.group_spec
    pair = SubgroupPair(G, job.embedding)
    rep = star_condition_probe(pair, None, int(p.get("radius", 2)), int(p.get("cap", 1000)), threads=threads)
    payload = {
        "verdict": rep.verdict,
        "falsified": rep.falsified,
        "witness": None if rep.witness is None else str(rep.witness),
        "points_probed": len(rep.verdicts),
        "finite_orbits": sum(1 for _, r in rep.verdicts if r.finite),
    }
    return payload, PROVEN if rep.falsified else EVIDENCE


def _task_folner_verify(job, action, seed, threads, exact):
    p = job.params
    if "set" not in p:
        raise ValidationError("folner-verify needs 'set'", key="set")
    if p.get("lift") == "wreath":
        G = job.group_spec
        base = base_action(G)
        F_X = _points(base, p["set"])
        z0 = G.lamp.parse_nf(p.get("lamp", "1"))
        cert = wreath_folner_lift(F_X, G.lamp.element(z0), G)
    else:
        cert = folner_quotient(action, _points(action, p["set"]))
    return {"certificate": cert.to_record(), "max_quotient": frac_str(cert.max_quotient)}, PROVEN


def _task_folner_search(job, action, seed, threads, exact):
    p = job.params
    window = window_points(action, int(p.get("radius", 3)))
    res = folner_search(
        action,
        window,
        target=Fraction(p.get("target", "1/10")),
        budget=int(p.get("budget", 20000)),
        seed=seed,
        restarts=int(p.get("restarts", 3)),
        threads=threads,
    )
    rec = res.to_record()
    rec["window_size"] = len(window)
    return rec, EVIDENCE


def _task_spectral(job, action, seed, threads, exact):
    p = job.params
    radii = [int(r) for r in p["radii"].split(",")] if "radii" in p else [int(p.get("radius", 4))]
    for r in radii:
        if not 0 <= r <= MAX_RADIUS:
            raise ValidationError(f"radius {r} out of range", key="radii")
    f = WeightFunction.uniform(action.standard_gens())
    series = []
    for r in radii:
        op = averaging_matrix(action, f, window_points(action, r))
        res = top_rayleigh(op, tol=float(p.get("tolerance", 1e-10)), seed=seed)
        series.append(
            {"radius": r, "window_size": op.size, "lower_bound": res.lower_bound, "iterations": res.iterations, "residual": res.residual}
        )
    return {"weights": "uniform on symmetric generators", "series": series}, EVIDENCE


def _task_paradox(job, action, seed, threads, exact):
    p = job.params
    G = job.group_spec
    if G != Free(2) or job.action != "twisted" or job.action_params.get("theta", "swap") != "swap":
        raise ValidationError("paradox-verify runs on free(2) with the swap-twisted action", key="kind")
    pred = parse_predicate(p["predicate"], action) if "predicate" in p else EndsInPowerOf(1)
    cert = f2_swap_certificate(pred)
    window = ball(G, None, int(p.get("radius", 6)))
    rep = verify_paradox_certificate(cert, window)
    rec = rep.to_record(action)
    rec["certificate"] = cert.to_text().splitlines()
    return rec, PROVEN


def _task_car(job, action, seed, threads, exact):
    p = job.params
    check = p.get("check", "commutator")
    use_exact = exact or p.get("exact", "false") == "true"
    n = int(p.get("n", 0))
    if check == "commutator":
        v = commutator_norm_check(n, exact=use_exact)
        return {"check": check, "n": n, "value": _num(v, use_exact)}, PROVEN
    if check == "trace-projection":
        v = quasi_free_trace(number_projection(Vec1P.basis(n) if use_exact else Vec1P({n: 1.0})))
        return {"check": check, "n": n, "value": _num(v, use_exact)}, PROVEN
    if check == "central-freeness":
        eta = Vec1P({0: Fraction(3, 5), 1: Fraction(4, 5)}) if use_exact else Vec1P({0: 0.6, 1: 0.8})
        U = OneParticleMap.unitary_block([0, 1], [[0, 1], [1, 0]])
        d = central_freeness_defect(eta, U)
        return {"check": check, "engine": _num(d.engine_value, use_exact), "closed_form": _num(d.closed_form, use_exact), "match": d.match}, PROVEN
    if check == "mixing":
        k = int(p.get("shift", 1))
        x = number_projection(Vec1P.basis(0))
        v = mixing_defect(OneParticleMap.shift(k), x, x)
        return {"check": check, "shift": k, "value": _num(Fraction(v) if use_exact else v, use_exact)}, PROVEN
    raise ValidationError(f"unknown car check {check!r}", key="check")


_TASKS = {
    "orbits": _task_orbits,
    "star": _task_star,
    "folner-verify": _task_folner_verify,
    "folner-search": _task_folner_search,
    "spectral": _task_spectral,
    "paradox-verify": _task_paradox,
    "car": _task_car,
}

DISCLAIMERS = {
    PROVEN: "exact verification on the finite input only; no statement about the infinite object is implied",
    EVIDENCE: "capped search or windowed numerics; a lower bound or a miss is evidence, not proof",
}


def run(job: JobSpec, seed: int | None = None, threads: int = 1, exact: bool = False) -> tuple[dict, int]:
    """Execute a job; returns (report, exit code). Mathematical verdicts never change the code."""
    if seed is None:
        seed = int(job.params.get("seed", 0))
    t0 = time.perf_counter()
    report = {
        "schema": SCHEMA,
        "artifact_version": __version__,
        "job": {
            "group": job.group,
            "embedding": job.embedding,
            "action": dict(job.action_params, kind=job.action),
            "task": dict(job.params, kind=job.task),
        },
        "seed": seed,
        "exact": exact,
    }
    code = 0
    try:
        action = build_action(job)
        payload, evidence = _TASKS[job.task](job, action, seed, threads, exact)
        report.update(status="completed", payload=payload, evidence=evidence, disclaimers=[DISCLAIMERS[evidence]])
    except (RelamenError, KeyError, ValueError) as exc:
        code = 2
        report.update(status="error", error={"type": type(exc).__name__, "message": str(exc)})
    report["wall_time"] = round(time.perf_counter() - t0, 6)
    return report, code


def report_text(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
