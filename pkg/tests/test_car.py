import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import JW
from relamen.car import (
    CarExpr,
    NcdSpec,
    OneParticleMap,
    Vec1P,
    a,
    a_star,
    bogoliubov,
    central_freeness_defect,
    commutator_norm_check,
    det_exact,
    mixing_defect,
    normal_order,
    number_projection,
    pd_gram_check,
    quasi_free_trace,
    tensor,
    two_norm_sq,
    unitary_from_projection,
)
from relamen.errors import NonIsometric
from relamen.groups import Cyclic, Free, ball, element

DIM = 6


def rand_vec(rng, dim=DIM, k=None):
    idx = rng.sample(range(dim), k or rng.randint(1, dim))
    return Vec1P({i: complex(rng.gauss(0, 1), rng.gauss(0, 1)) for i in idx})


def rand_unit(rng, dim=DIM):
    v = rand_vec(rng, dim, dim)
    return v.scale(1 / math.sqrt(v.norm_sq().real))


def rand_raw(rng, max_m=4, max_n=4):
    m, n = rng.randint(0, max_m), rng.randint(0, max_n)
    tags = ["a*"] * m + ["a"] * n
    rng.shuffle(tags)
    return [(t, rand_vec(rng)) for t in tags]


def rand_unitary(rng, n):
    z = np.array([[complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(n)] for _ in range(n)])
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


def to_jw(factors):
    return [(t, dict(v.items)) for t, v in factors]


def test_inner_product_antilinear_in_first_slot():
    x, y = Vec1P({0: 1j}), Vec1P({0: 1})
    assert x.inner(y) == -1j
    assert y.inner(x) == 1j


def test_basic_rewrite():
    xi, eta = Vec1P({0: 1, 1: 2}), Vec1P({1: 1, 2: 1})
    got = normal_order([("a", xi), ("a*", eta)])
    assert got == CarExpr.scalar(eta.inner(xi)) - a_star(eta) * a(xi)


def test_square_of_annihilator_vanishes():
    xi = Vec1P({0: 1, 3: -2})
    assert normal_order([("a", xi), ("a", xi)]).is_zero()
    assert (a_star(xi) * a_star(xi)).is_zero()


def test_projection_is_idempotent_exact():
    eta = Vec1P({0: Fraction(3, 5), 1: Fraction(4, 5)})
    e = number_projection(eta)
    assert e * e - e == CarExpr.zero()
    assert e.adjoint() == e


def test_trace_examples():
    xi, eta = Vec1P({0: 1, 1: 1j}), Vec1P({1: 2})
    assert quasi_free_trace(a_star(xi) * a(eta)) == pytest.approx(0.5 * xi.inner(eta))
    assert quasi_free_trace(number_projection(Vec1P.basis(4))) == Fraction(1, 2)
    assert quasi_free_trace(a(xi)) == 0
    assert quasi_free_trace(CarExpr.one()) == 1


def test_orthogonal_projections_factorize():
    e, f = number_projection(Vec1P.basis(0)), number_projection(Vec1P.basis(1))
    assert quasi_free_trace(e * f) == Fraction(1, 4) == quasi_free_trace(e) * quasi_free_trace(f)


def test_determinant_row_order():
    # a*(x2) a*(x1) a(y1) a(y2) pairs x_i with y_j by the Gram matrix <x_i|y_j>
    x1, x2 = Vec1P.basis(0), Vec1P.basis(1)
    y1, y2 = Vec1P.basis(0), Vec1P.basis(1)
    mono = normal_order([("a*", x2), ("a*", x1), ("a", y1), ("a", y2)])
    assert quasi_free_trace(mono) == Fraction(1, 4)
    swapped = normal_order([("a*", x1), ("a*", x2), ("a", y1), ("a", y2)])
    assert quasi_free_trace(swapped) == Fraction(-1, 4)
    jw = JW(2)
    M = jw.word(to_jw([("a*", x2), ("a*", x1), ("a", y1), ("a", y2)]))
    assert jw.trace(M) == pytest.approx(0.25)


def test_bareiss_matches_numpy():
    rng = random.Random(3)
    for n in range(1, 7):
        m = [[Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(n)] for _ in range(n)]
        assert float(det_exact(m)) == pytest.approx(np.linalg.det(np.array(m, dtype=float)), rel=1e-9, abs=1e-9)


def test_unitary_from_projection():
    e = number_projection(Vec1P.basis(2))
    u = unitary_from_projection(e)
    assert two_norm_sq(u) == 1
    assert quasi_free_trace(u) == 0
    assert u.adjoint() * u == CarExpr.one()


def test_norms():
    assert two_norm_sq(CarExpr.one()) == 1
    assert two_norm_sq(CarExpr.zero()) == 0


def test_wick_oracle_and_jordan_wigner():
    rng = random.Random(2024)
    jw = JW(DIM)
    for _ in range(150):
        raw = rand_raw(rng)
        left = quasi_free_trace(normal_order(raw, strategy="leftmost"))
        right = quasi_free_trace(normal_order(raw, strategy="rightmost"))
        ref = jw.trace(jw.word(to_jw(raw)))
        assert abs(complex(left) - complex(right)) < 1e-10
        assert abs(complex(left) - ref) < 1e-10


def test_traciality_and_positivity():
    rng = random.Random(9)
    for _ in range(60):
        x = normal_order(rand_raw(rng, 2, 2)) + normal_order(rand_raw(rng, 2, 2)).scale(0.5j)
        y = normal_order(rand_raw(rng, 2, 2))
        assert abs(complex(quasi_free_trace(x * y)) - complex(quasi_free_trace(y * x))) < 1e-10
        assert two_norm_sq(x) >= 0
        assert complex(quasi_free_trace(x.adjoint() * x)).real > -1e-10


def test_trace_is_linear():
    rng = random.Random(4)
    for _ in range(30):
        x, y = normal_order(rand_raw(rng)), normal_order(rand_raw(rng))
        c = complex(rng.gauss(0, 1), rng.gauss(0, 1))
        lhs = quasi_free_trace(x + y.scale(c))
        assert abs(complex(lhs) - complex(quasi_free_trace(x)) - c * complex(quasi_free_trace(y))) < 1e-10


@pytest.mark.parametrize("seed", range(10))
def test_projection_laws_random_unit(seed):
    eta = rand_unit(random.Random(seed))
    e = number_projection(eta)
    assert (e * e - e).is_zero(1e-12)
    assert quasi_free_trace(e) == pytest.approx(0.5)


def test_bogoliubov_shift():
    e = number_projection(Vec1P.basis(0))
    moved = bogoliubov(e, OneParticleMap.shift(1))
    assert moved == number_projection(Vec1P.basis(1))
    assert quasi_free_trace(moved) == Fraction(1, 2)
    assert bogoliubov(e, OneParticleMap.identity()) == e


def test_bogoliubov_rejects_non_isometry():
    U = np.eye(2)
    U[:, 0] *= 2
    V = OneParticleMap.unitary_block([0, 1], U)
    with pytest.raises(NonIsometric) as info:
        bogoliubov(number_projection(Vec1P.basis(0)), V)
    u, v = info.value.witness
    assert u.inner(v) == info.value.before != info.value.after


def test_bogoliubov_invariance_random():
    rng = random.Random(17)
    for _ in range(200):
        U = rand_unitary(rng, DIM)
        V = OneParticleMap.unitary_block(range(DIM), U)
        x = normal_order(rand_raw(rng, 2, 2))
        y = bogoliubov(x, V)
        assert abs(complex(quasi_free_trace(y)) - complex(quasi_free_trace(x))) < 1e-9
        assert abs(two_norm_sq(y) - two_norm_sq(x)) < 1e-9


def test_central_freeness_examples():
    eta = Vec1P({0: 1.0})
    d = central_freeness_defect(eta, OneParticleMap.identity())
    assert d.engine_value == pytest.approx(0) and d.closed_form == 0 and d.match
    d = central_freeness_defect(eta, OneParticleMap.shift(1))
    assert d.closed_form == 0.5 and d.match


def test_central_freeness_random_blocks():
    rng = random.Random(8)
    for _ in range(100):
        U = OneParticleMap.unitary_block(range(4), rand_unitary(rng, 4))
        assert central_freeness_defect(rand_unit(rng, 4), U).match


def test_commutator_against_jordan_wigner():
    # f = projection onto 2^-1/2 (e0 + e1); normalized trace on 4-dim Fock space
    jw = JW(2)
    e = jw.word([("a*", {0: 1}), ("a", {0: 1})])
    s = 2 ** -0.5
    f = jw.word([("a*", {0: s, 1: s}), ("a", {0: s, 1: s})])
    C = e @ f - f @ e
    oracle = jw.trace(C.conj().T @ C).real
    assert oracle == pytest.approx(1 / 8)
    for n in range(8):
        assert commutator_norm_check(n) == Fraction(1, 8)
        assert abs(commutator_norm_check(n, exact=False) - oracle) < 1e-12


@pytest.mark.xfail(strict=True, reason="the quoted 1/4 disagrees with the normalized trace; the engine and oracle give 1/8")
def test_commutator_quoted_quarter():
    assert commutator_norm_check(0) == Fraction(1, 4)


def test_commutator_with_complex_eta_is_index_free():
    rng = random.Random(1)
    eta = rand_unit(rng, 3)
    vals = [commutator_norm_check(n, exact=False, eta=eta) for n in (0, 3, 7)]
    assert max(vals) - min(vals) < 1e-12


def test_self_commutator_vanishes():
    assert commutator_norm_check(2, replace_f_by_e=True) == 0


def test_mixing():
    x = number_projection(Vec1P.basis(0))
    for k in (1, 2, -3):
        assert mixing_defect(OneParticleMap.shift(k), x, x) == 0
    assert mixing_defect(OneParticleMap.identity(), x, x) == Fraction(1, 4)
    y = a_star(Vec1P.basis(1)) * a(Vec1P.basis(2))
    assert mixing_defect(OneParticleMap.shift(5), CarExpr.one(), y) == 0


def test_mixing_vanishes_beyond_support_width():
    x = number_projection(Vec1P({0: Fraction(1, 2), 1: Fraction(1, 2)})) + a_star(Vec1P.basis(1)) * a(Vec1P.basis(0))
    y = number_projection(Vec1P.basis(1))
    for k in range(2, 6):
        assert mixing_defect(OneParticleMap.shift(k), x, y) == 0
        assert mixing_defect(OneParticleMap.shift(-k), x, y) == 0


def test_tensor_indices():
    v = tensor(3, Vec1P({0: 1, 2: 1j}))
    assert v.as_dict() == {(3, 0): 1, (3, 2): 1j}


def test_text_form():
    e = number_projection(Vec1P.basis(0)).scale(Fraction(1, 2))
    assert e.text() == "1/2 * a*[0:1] a[0:1]"
    assert CarExpr.zero().text() == "0"


def test_pd_gram_examples():
    Z = Cyclic(0)
    lam, ok = pd_gram_check(NcdSpec("word_length", 1.0), [element(Z, k) for k in range(3)])
    assert ok and lam > 0
    assert pd_gram_check(NcdSpec(), [element(Z, 0)]) == (1.0, True)
    F2 = Free(2)
    lam, ok = pd_gram_check(NcdSpec("word_length_plus", 0.5), ball(F2, radius=2))
    assert ok


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 3.0), st.integers(1, 12))
def test_pd_gram_on_integers(t, n):
    Z = Cyclic(0)
    assert pd_gram_check(NcdSpec("word_length", t), [element(Z, k) for k in range(n)])[1]


@pytest.mark.parametrize("theta", [0.0, 0.3, math.pi / 4, 1.2, math.pi / 2])
def test_commutator_of_two_number_projections(theta):
    # ||[e, f]||_2^2 = c(1 - c)/2 with c = |<xi|zeta>|^2, never above 1/8
    xi = Vec1P({0: 1.0})
    zeta = Vec1P({0: math.cos(theta), 1: math.sin(theta)})
    e, f = number_projection(xi), number_projection(zeta)
    c = math.cos(theta) ** 2
    assert two_norm_sq(e * f - f * e) == pytest.approx(c * (1 - c) / 2, abs=1e-12)
