"""Acceptance gate: nine criteria, each timed, each recorded as one PASS/FAIL line."""
import json
import math
import random
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np

from conftest import ACCEPTANCE
from relamen.actions import (
    SubgroupPair,
    complement_window,
    conjugation_action,
    embed_left,
    free_product_decompose,
    in_transversal,
    inner_conjugation_action,
    orbit_probe,
    shift_action,
    star_condition_probe,
    translation_action,
    twisted_conjugation_action,
)
from relamen.car import (
    NcdSpec,
    OneParticleMap,
    Vec1P,
    central_freeness_defect,
    commutator_norm_check,
    normal_order,
    number_projection,
    pd_gram_check,
    quasi_free_trace,
)
from relamen.folner import map_transport, semidirect_folner_lift, wreath_folner_lift
from relamen.groups import Automorphism, Cyclic, Direct, Free, FreeProduct, Wreath, ball, element, identity, inverse, semidirect_swap_f2
from relamen.actions import IntLine
from relamen.jobs import bundled_jobs
from relamen.paradox import EndsInPowerOf, f2_swap_certificate, in_translate, verify_paradox_certificate
from relamen.spectral import WeightFunction, averaging_matrix, spectral_gap_bound_check, top_rayleigh

F2 = Free(2)
Z = Cyclic(0)


class Gate:
    def __init__(self, n, limit):
        self.n, self.limit = n, limit
        self.failures = []

    def check(self, ok, what):
        if not ok:
            self.failures.append(what)

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        if exc is not None:
            self.failures.append(f"{exc_type.__name__}: {exc}")
        if elapsed > self.limit:
            self.failures.append(f"runtime {elapsed:.1f}s over {self.limit}s")
        ok = not self.failures
        ACCEPTANCE[self.n] = (ok, "; ".join(self.failures) or "ok", elapsed, self.limit)
        print(f"criterion {self.n}: {'PASS' if ok else 'FAIL'} {'; '.join(self.failures)}")
        if exc is None:
            assert ok, "; ".join(self.failures)


def _unit(rng, dim):
    v = np.array([complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(dim)])
    v /= np.linalg.norm(v)
    return Vec1P({i: complex(c) for i, c in enumerate(v)})


def _unitary(rng, n):
    z = np.array([[complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(n)] for _ in range(n)])
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


def test_criterion_1_car_identities():
    with Gate(1, 5) as g:
        rng = random.Random(1)
        exact = {n: commutator_norm_check(n, exact=True) for n in range(8)}
        flt = {n: commutator_norm_check(n, exact=False) for n in range(8)}
        bad = [n for n in range(8) if exact[n] != Fraction(1, 4)]
        g.check(not bad, f"exact ||[e_n,f_n]||_2^2 = {sorted(set(map(str, exact.values())))} for n in {bad}, want 1/4")
        bad = [n for n in range(8) if abs(flt[n] - 0.25) > 1e-12]
        g.check(not bad, f"float ||[e_n,f_n]||_2^2 = {max(flt.values()):.15f} for n in {bad}, want 0.25")
        for _ in range(20):
            t = quasi_free_trace(number_projection(_unit(rng, 5)))
            g.check(abs(complex(t) - 0.5) <= 1e-12, f"tau(a*(xi)a(xi)) = {t}")
        for _ in range(100):
            d = central_freeness_defect(_unit(rng, 4), OneParticleMap.unitary_block(range(4), _unitary(rng, 4)))
            g.check(abs(d.engine_value - d.closed_form) <= 1e-9, f"defect {d}")


def _raw(rng):
    m, n = rng.randint(0, 4), rng.randint(0, 4)
    tags = ["a*"] * m + ["a"] * n
    rng.shuffle(tags)
    out = []
    for t in tags:
        idx = rng.sample(range(6), rng.randint(1, 6))
        out.append((t, Vec1P({i: complex(rng.gauss(0, 1), rng.gauss(0, 1)) for i in idx})))
    return out


def test_criterion_2_wick_oracle():
    with Gate(2, 30) as g:
        rng = random.Random(2)
        corpus = []
        for _ in range(500):
            raw = _raw(rng)
            left = normal_order(raw, strategy="leftmost")
            right = normal_order(raw, strategy="rightmost")
            tl, tr = complex(quasi_free_trace(left)), complex(quasi_free_trace(right))
            g.check(abs(tl - tr) <= 1e-10, f"strategies disagree: {tl} vs {tr}")
            corpus.append(left)
        for i, x in enumerate(corpus):
            y = corpus[(i + 1) % len(corpus)]
            txy, tyx = complex(quasi_free_trace(x * y)), complex(quasi_free_trace(y * x))
            g.check(abs(txy - tyx) <= 1e-10 * max(1.0, abs(txy)), f"traciality {txy} vs {tyx}")
            p = complex(quasi_free_trace(x.adjoint() * x))
            g.check(p.real >= -1e-10 and abs(p.imag) <= 1e-10 * max(1.0, abs(p)), f"positivity {p}")


def test_criterion_3_folner_lifts():
    with Gate(3, 5) as g:
        rng = random.Random(3)
        W = Wreath(Z, IntLine())
        sd = semidirect_swap_f2()
        base_pts = ball(F2, radius=3)[1:]
        for k in range(50):
            if k % 2 == 0:
                pair = SubgroupPair(W, "actor")
                xs = rng.sample(range(-10, 11), rng.randint(1, 6))
                phi = [{x: rng.choice([-2, -1, 1, 2])} for x in xs]
                h = element(Z, rng.choice([-3, -2, -1, 1, 2, 3]))
            else:
                pair = SubgroupPair(sd, "actor")
                phi = rng.sample(base_pts, rng.randint(1, 8))
                h = element(Cyclic(2), 1)
            cert = semidirect_folner_lift(phi, pair, [h, inverse(h)])
            g.check(
                [q for _, q in cert.quotients] == [q for _, q in cert.base.quotients],
                f"lift mismatch on case {k}",
            )
        for n in range(1, 8):
            cert = wreath_folner_lift(range(n + 1), element(Z, 1), W)
            g.check(cert.max_quotient == Fraction(2, n + 1), f"window 0..{n}: {cert.max_quotient}")
        cert = wreath_folner_lift(range(5), element(Z, 1), W)
        g.check(cert.max_quotient == Fraction(2, 5), f"F_X = 0..4 gave {cert.max_quotient}")


def test_criterion_4_paradox():
    with Gate(4, 10) as g:
        window = ball(F2, radius=8)
        g.check(len(window) == 13121, f"ball(8) has {len(window)} points")
        rep = verify_paradox_certificate(f2_swap_certificate(), window)
        g.check(rep.covering_ok and rep.disjoint_ok and not rep.counterexamples, "built-in certificate failed")
        bad = f2_swap_certificate(EndsInPowerOf(0))
        rep = verify_paradox_certificate(bad, window)
        g.check(not rep.covering_ok, "perturbed certificate passed")
        if rep.uncovered:
            x = rep.uncovered[0]
            g.check(not any(in_translate(bad.action, h, p, x) for h, p in bad.cover), "witness is covered")


def _sparse_unit(rng, pts, k=6):
    chosen = rng.sample(pts, k)
    v = np.array([rng.gauss(0, 1) for _ in chosen])
    v /= np.linalg.norm(v)
    return dict(zip(chosen, v.tolist()))


def test_criterion_5_spectral_bound_law():
    with Gate(5, 30) as g:
        rng = random.Random(5)
        cases = [
            (shift_action(), list(range(-30, 31)), Z.symmetric_generators()),
            (translation_action(F2), ball(F2, radius=4), F2.symmetric_generators()),
            (twisted_conjugation_action(F2, Automorphism.swap(F2)), ball(F2, radius=4), F2.symmetric_generators()),
        ]
        for action, pts, Fs in cases:
            for _ in range(500):
                rep = spectral_gap_bound_check(action, Fs, _sparse_unit(rng, pts))
                g.check(rep.bound_ok, f"{action.name}: {rep}")


def test_criterion_6_spectral_numerics():
    with Gate(6, 60) as g:
        shift = shift_action()
        f = WeightFunction.uniform(shift.standard_gens())
        op = averaging_matrix(shift, f, range(21))
        lam = top_rayleigh(op).lower_bound
        dense = float(np.linalg.eigvalsh(op.to_dense())[-1])
        g.check(abs(lam - math.cos(math.pi / 22)) <= 1e-8, f"Z window: {lam}")
        g.check(abs(dense - math.cos(math.pi / 22)) <= 1e-8, f"Z window dense: {dense}")
        tr = translation_action(F2)
        fw = WeightFunction.uniform(tr.standard_gens())
        vals = {r: top_rayleigh(averaging_matrix(tr, fw, ball(F2, radius=r))).lower_bound for r in range(4, 9)}
        g.check(all(vals[r + 1] >= vals[r] - 1e-10 for r in range(4, 8)), f"not monotone: {vals}")
        g.check(0.84 < vals[8] < 0.867, f"F2 ball(8) top = {vals[8]:.6f}, outside (0.84, 0.867)")


def test_criterion_7_structure_probes():
    with Gate(7, 30) as g:
        for spec in (FreeProduct(Cyclic(2), Cyclic(2)), FreeProduct(Cyclic(2), Cyclic(3))):
            pair = SubgroupPair(spec, "base")
            Hb = ball(spec.left, radius=6)
            for x in complement_window(pair, 6):
                h, w = free_product_decompose(x)
                hh = embed_left(spec, h)
                g.check(hh * w * inverse(hh) == x and in_transversal(w), f"round trip failed at {x}")
                hits = [k for k in Hb if in_transversal(inverse(embed_left(spec, k)) * x * embed_left(spec, k))]
                g.check(hits == [h], f"non-unique decomposition at {x}: {hits}")
        rep = star_condition_probe(SubgroupPair(Direct(F2, F2), "left"), sample_radius=1, cap=100)
        g.check(rep.verdict == "star falsified", "direct-product pair not falsified")
        if rep.witness is not None:
            orb = orbit_probe(conjugation_action(SubgroupPair(Direct(F2, F2), "left")), rep.witness, cap=100)
            g.check(orb.finite and len(orb) == 1, "witness orbit is not a singleton")
        diag = SubgroupPair(Direct(F2, F2), "diagonal")
        src, tgt = inner_conjugation_action(F2), conjugation_action(diag)
        phi = lambda h: element(diag.ambient, (h, identity(F2)))  # noqa: E731
        pts = ball(F2, radius=3)[1:]
        rng = random.Random(7)
        for _ in range(10):
            F = rng.sample(pts, rng.randint(1, 20))
            t = map_transport(F, phi, src, tgt, probe_radius=1)
            g.check(t.quotients_equal, "diagonal transport changed a quotient")


def test_criterion_8_psd():
    with Gate(8, 5) as g:
        for t in (0.1, 0.5, 1.0, 2.0):
            for n in range(1, 13):
                lam, ok = pd_gram_check(NcdSpec("word_length", t), [element(Z, k) for k in range(n)])
                g.check(ok and lam >= -1e-9, f"Z, n={n}, t={t}: {lam}")
            for psi in ("word_length", "word_length_plus"):
                lam, ok = pd_gram_check(NcdSpec(psi, t), ball(F2, radius=2))
                g.check(ok and lam >= -1e-9, f"F2 ball(2), {psi}, t={t}: {lam}")


def _run_cli(name):
    proc = subprocess.run(
        [sys.executable, "-m", "relamen", f"example:{name}", "--seed", "11"], capture_output=True, text=True
    )
    return proc.returncode, proc.stdout


def _without_timing(text):
    return "\n".join(ln for ln in text.splitlines() if '"wall_time"' not in ln)


def test_criterion_9_cli_determinism():
    with Gate(9, 120) as g:
        for name in bundled_jobs():
            c1, out1 = _run_cli(name)
            c2, out2 = _run_cli(name)
            g.check(c1 == c2 == 0, f"{name}: exit codes {c1}, {c2}")
            g.check(_without_timing(out1) == _without_timing(out2), f"{name}: reports differ")
            g.check(json.loads(out1)["schema"] == "relamen-report/1", f"{name}: schema")
