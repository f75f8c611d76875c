import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import constant_resolvent, linear_resolvent
from resolvent_lab.moduli import harmonic_t, lambda_of_t
from resolvent_lab.operators import (
    Mapping,
    SamplePlan,
    ball,
    constant_target,
    diagonal_operator,
    id_minus,
    matrix_operator,
    whole_space,
    zero_operator,
)
from resolvent_lab.resolvent import (
    ResolventError,
    check_domain_closure,
    check_resolvent_nonexpansive,
    compute_curve,
    lambda_sequence,
    psc_bridge,
    resolve,
    resolvent_residual,
)
from resolvent_lab.space import LpSpace
from resolvent_lab.zoo import make_entry, rotation_mapping, shipped_zoo

PS = [1.5, 2.0, 3.0]
LAMS = [0.1, 1.0, 10.0, 100.0, 1000.0]


def test_zero_operator_resolvent_is_identity():
    s = LpSpace(2.0, 3)
    x = np.array([1.0, -2.0, 0.5])
    r = resolve(zero_operator(whole_space(s)), 5.0, x)
    np.testing.assert_array_equal(r.point, x)
    assert r.residual == 0.0 and r.method == "closed_form"


def test_identity_matrix_example():
    s = LpSpace(2.0, 2)
    r = resolve(matrix_operator(np.eye(2), whole_space(s)), 1.0, [2.0, 0.0])
    np.testing.assert_allclose(r.point, [1.0, 0.0])
    assert r.method == "linear_solve"


@pytest.mark.parametrize("lam", LAMS)
@pytest.mark.parametrize("method", ["closed_form", "banach_iteration", "root_find"])
def test_constant_target_methods_agree_with_algebra(lam, method):
    s = LpSpace(3.0, 2)
    c = np.array([0.2, -0.1])
    A = constant_target(c, ball(s, [0.0, 0.0], 2.0))
    x = np.array([0.9, 0.4])
    r = resolve(A, lam, x, method=method)
    np.testing.assert_allclose(r.point, constant_resolvent(c, lam, x), atol=1e-9)


@pytest.mark.parametrize("p", PS)
@pytest.mark.parametrize("lam", LAMS)
def test_matrix_newton_vs_exact_solve(p, lam):
    s = LpSpace(p, 3)
    M = np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
    A = matrix_operator(M, whole_space(s))
    x = np.array([0.3, -0.7, 1.1])
    want = linear_resolvent(M, lam, x)
    for method in ("linear_solve", "root_find"):
        np.testing.assert_allclose(resolve(A, lam, x, method=method).point, want, atol=1e-9)


@pytest.mark.parametrize("p", PS)
@pytest.mark.parametrize("lam", LAMS)
def test_id_minus_linear_T_iteration_vs_exact(p, lam):
    s = LpSpace(p, 2)
    Tm = np.array([[0.0, 1.0], [1.0, 0.0]])  # coordinate swap, isometric in every l_p
    T = Mapping("swap", lambda u: u @ Tm.T, whole_space(s))
    A = id_minus(T)
    x = np.array([0.8, -0.3])
    want = linear_resolvent(np.eye(2) - Tm, lam, x)
    for method in ("banach_iteration", "root_find", "auto"):
        r = resolve(A, lam, x, 1e-11, method=method)
        assert np.max(np.abs(r.point - want)) <= 1e-9, method


def test_diagonal_root_find_and_closed_form():
    s = LpSpace(2.0, 3)
    A = make_entry("diag_cubic", s).operator
    x = np.array([0.6, -0.4, 0.3])
    for lam in LAMS:
        y = resolve(A, lam, x).point
        np.testing.assert_allclose(y + lam * (y + y ** 3), x, atol=1e-10)
    dz = make_entry("dead_zone", s).operator
    for lam in LAMS:
        r = resolve(dz, lam, [2.0, -1.5, 0.5])
        assert r.method == "closed_form" and r.residual <= 1e-12


@pytest.mark.parametrize("lam", [0.0, -1.0])
def test_lambda_must_be_positive(lam):
    s = LpSpace(2.0, 1)
    with pytest.raises(ValueError, match="lambda must be positive"):
        resolve(zero_operator(whole_space(s)), lam, [1.0])


def test_unknown_method():
    s = LpSpace(2.0, 1)
    with pytest.raises(ValueError):
        resolve(zero_operator(whole_space(s)), 1.0, [1.0], method="magic")


def test_non_convergence_raises_with_last_iterate():
    s = LpSpace(2.0, 2)
    T = rotation_mapping(s, math.pi / 2, [0.0, 0.0], ball(s, [0.0, 0.0], 1.0))
    with pytest.raises(ResolventError) as info:
        resolve(id_minus(T), 5.0, [0.5, 0.5], method="banach_iteration", max_iter=3)
    assert info.value.result is not None and info.value.result.iterations == 3
    assert info.value.result.residual > 1e-10


@pytest.mark.parametrize("p", PS)
@given(lam=st.floats(0.01, 1e4), seed=st.integers(0, 2**32 - 1))
def test_residual_certificate_recomputed(p, lam, seed):
    s = LpSpace(p, 3)
    for e in shipped_zoo(s):
        x = e.operator.domain.sample(np.random.default_rng(seed), 1)[0]
        r = resolve(e.operator, lam, x)
        assert resolvent_residual(e.operator, lam, x, r.point) == r.residual <= 1e-10


@pytest.mark.parametrize("p", PS)
def test_error_bounded_by_residual(p):
    # accretive A: ||y - Jx|| <= ||y + lam A y - x|| for any y
    s = LpSpace(p, 2)
    M = np.array([[1.0, 0.5], [0.0, 2.0]])
    A = matrix_operator(M, whole_space(s))
    rng = np.random.default_rng(3)
    x = np.array([1.0, -1.0])
    for lam in LAMS:
        J = linear_resolvent(M, lam, x)
        for y in rng.standard_normal((20, 2)):
            assert s.norm(y - J) <= resolvent_residual(A, lam, x, y) * (1 + 1e-12)


# bridge ---------------------------------------------------------------------------


@pytest.mark.parametrize("p", PS)
def test_bridge_identity_map(p):
    s = LpSpace(p, 2)
    T = Mapping("id", lambda u: u.copy(), ball(s, [0.0, 0.0], 1.0))
    x = np.array([0.3, 0.2])
    for t in (0.1, 0.5, 0.99):
        np.testing.assert_allclose(psc_bridge(T, t, x), x)


@pytest.mark.parametrize("t", [0.1, 0.5, 0.9])
def test_bridge_constant(t):
    s = LpSpace(2.0, 2)
    c = np.array([0.25, 0.1])
    T = Mapping("c", lambda u: np.broadcast_to(c, np.shape(u)).copy(), ball(s, [0, 0], 1.0))
    x = np.array([0.6, -0.4])
    np.testing.assert_allclose(psc_bridge(T, t, x), t * c + (1 - t) * x, atol=1e-12)


@pytest.mark.parametrize("p", PS)
def test_bridge_matches_resolve_on_rotation(p):
    tol = 1e-10
    e = make_entry("rotation", LpSpace(p, 2))
    T = e.operator.mapping
    got = psc_bridge(T, 0.5, e.base_point, tol)
    want = resolve(e.operator, 1.0, e.base_point, tol).point
    assert e.operator.space.norm(got - want) <= 2 * tol


def test_bridge_t_domain():
    s = LpSpace(2.0, 1)
    T = Mapping("id", lambda u: u.copy(), ball(s, [0.0], 1.0))
    for t in (0.0, 1.0, -0.5):
        with pytest.raises(ValueError):
            psc_bridge(T, t, [0.0])


# audits ---------------------------------------------------------------------------


@pytest.mark.parametrize("p", PS)
def test_nonexpansive_audit_on_zoo(p):
    s = LpSpace(p, 3)
    for e in shipped_zoo(s):
        rep = check_resolvent_nonexpansive(e.operator, 1.0, SamplePlan(60), e.zeros)
        assert rep.passed, rep.line()
        assert max(rep.details["zero_fixed_gaps"]) <= 1e-9


def test_identity_matrix_contraction_factor():
    s = LpSpace(2.0, 2)
    A = matrix_operator(np.eye(2), ball(s, [0.0, 0.0], 1.0))
    rep = check_resolvent_nonexpansive(A, 3.0, SamplePlan(50))
    # ||Ju - Jv|| - ||u - v|| = -(3/4)||u - v||
    assert rep.worst_margin < 0


def test_nonexpansive_audit_rejects_uncertified_zero():
    s = LpSpace(2.0, 2)
    A = matrix_operator(np.eye(2), ball(s, [0.0, 0.0], 1.0))
    with pytest.raises(ValueError, match="uncertified zero"):
        check_resolvent_nonexpansive(A, 1.0, SamplePlan(10), [np.array([0.5, 0.0])])


def test_nonexpansive_audit_catches_bad_operator():
    s = LpSpace(2.0, 2)
    A = matrix_operator(-0.5 * np.eye(2), ball(s, [0.0, 0.0], 1.0), "anti")
    rep = check_resolvent_nonexpansive(A, 1.0, SamplePlan(20))
    assert not rep.passed


@pytest.mark.parametrize("p", PS)
def test_domain_closure_on_zoo(p):
    s = LpSpace(p, 2)
    for e in shipped_zoo(s):
        rep = check_domain_closure(e.operator, pairs=SamplePlan(40))
        assert rep.passed, rep.line()


# curves -----------------------------------------------------------------------------


def test_lambda_sequences():
    assert lambda_sequence("lambda", "linear", 4) == [1.0, 2.0, 3.0, 4.0]
    assert lambda_sequence("lambda", "quadratic", 3) == [1.0, 4.0, 9.0]
    t = lambda_sequence("t", "harmonic", 5)
    assert t == pytest.approx([float(lambda_of_t(harmonic_t(n))) for n in range(5)])
    assert t == pytest.approx([1.0, 2.0, 3.0, 4.0, 5.0])
    with pytest.raises(ValueError):
        lambda_sequence("t", "linear", 3)


@pytest.mark.parametrize("p", PS)
def test_curve_certified_and_warm_started(p):
    s = LpSpace(p, 3)
    e = make_entry("proj_contract", s)
    lams = lambda_sequence("lambda", "linear", 300)
    c = compute_curve(e.operator, e.base_point, lams)
    assert len(c) == 300 and c.points.shape == (300, 3)
    assert np.all(c.residuals <= 1e-10)
    for n in (0, 50, 299):
        want = resolve(e.operator, lams[n], e.base_point).point
        assert s.norm(c.points[n] - want) <= 2e-10


def test_identity_matrix_curve_closed_form():
    s = LpSpace(3.0, 2)
    A = matrix_operator(np.eye(2), ball(s, [0.0, 0.0], 2.0))
    x = np.array([1.0, 1.0])
    c = compute_curve(A, x, [1.0, 9.0, 99.0])
    np.testing.assert_allclose(c.points, [x / 2, x / 10, x / 100], rtol=1e-14)


def test_singular_linear_solve_raises_resolvent_error():
    s = LpSpace(2.0, 2)
    A = matrix_operator(-np.eye(2), whole_space(s), "neg")
    with pytest.raises(ResolventError, match="singular"):
        resolve(A, 1.0, [1.0, 0.0], method="linear_solve")
