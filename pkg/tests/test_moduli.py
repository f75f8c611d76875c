import warnings
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import RationalChain, to_fraction
from resolvent_lab.moduli import (
    HARMONIC_T_MODULI,
    LINEAR_LAMBDA_MODULI,
    QUADRATIC_LAMBDA_MODULI,
    Counterfunction,
    DomainClampWarning,
    ModuliChain,
    beta,
    check_lambda_moduli,
    check_t_moduli,
    delta,
    eta1,
    eta2,
    g_majorant,
    harmonic_t,
    lambda_of_t,
    linear_lambda,
    nu1,
    nu1_star,
    omega_tau,
    psi,
    q_mod,
    quadratic_lambda,
    t_of_lambda,
    verify_omega_tau,
    verify_psi_inequality,
    xi_prime,
)
from resolvent_lab.space import (
    LpSpace,
    lp_convexity_modulus,
    lp_smoothness_modulus,
    linear_smoothness_modulus,
    quadratic_convexity_modulus,
)

ETA = quadratic_convexity_modulus()
TAU = linear_smoothness_modulus()


def chain(b=1, **kw):
    return ModuliChain(b, ETA, TAU, **kw)


def gamma_lin(c):
    return c + 1


# printed examples ------------------------------------------------------------------


def test_psi_example():
    assert psi(1, ETA, 2, exact=True) == F(1, 5308416)
    assert psi(1, ETA, 2) == pytest.approx(1 / 5308416, rel=1e-15)


def test_psi_with_lp_modulus_p2():
    with mpmath.workdps(40):
        e = 1 - mpmath.sqrt(mpmath.mpf(3) / 4)
        want = min((min(mpmath.mpf(1), 4 * e ** 2 / 72)) ** 2 / 4, 4 * e ** 2 / 48)
    got = psi(1, lp_convexity_modulus(LpSpace(2.0, 1)), 2.0)
    assert got == pytest.approx(float(want), rel=1e-12)


@pytest.mark.parametrize("b, eps, want", [(1, 1, F(1, 24)), (2, 3, F(1, 12))])
def test_omega_examples(b, eps, want):
    assert omega_tau(TAU, b, eps, exact=True) == want


@given(b=st.integers(1, 5), e1=st.floats(2.0, 50.0), e2=st.floats(2.0, 50.0))
def test_omega_plateau_beyond_two(b, e1, e2):
    assert omega_tau(TAU, b, e1) == omega_tau(TAU, b, e2)


def test_eta1_example():
    assert eta1(chain(), 2, exact=True) == F(1, 10616832)


def test_eta2_example():
    w = omega_tau(TAU, 1, 1, exact=True)
    assert w == F(1, 24)
    assert eta2(chain(), 2, exact=True) == min(F(2), psi(1, ETA, w, exact=True) / 2)


def test_delta_example():
    want = min(eta2(chain(), 4, exact=True), F(1), F(1, 24))
    assert delta(chain(), 4, 1, exact=True) == want


def test_beta_example():
    ch = chain(p_fn=lambda e: e)
    assert beta(ch, gamma_lin, 1, 1, exact=True) == F(1, 8)


def test_q_example():
    ch = chain(p_fn=lambda e: e, s_fn=lambda d: 2 * d)
    want = min(F(1, 8), F(1, 12), omega_tau(TAU, 1, F(1, 4), exact=True))
    assert q_mod(ch, gamma_lin, 1, 1, 1, exact=True) == want == F(1, 1536)


def test_nu1_full_composition():
    ch = chain(p_fn=lambda e: e, s_fn=lambda d: 2 * d)
    assert nu1(ch, gamma_lin, 1, 1, 1, exact=True) == psi(1, ETA, F(1, 1536), exact=True) / 2


def test_nu1_star_singleton_range():
    ch = chain(g=Counterfunction("constant", b0=0))
    e = F(1, 2)
    w = omega_tau(TAU, 1, ch.p_fn(e) / 4, exact=True)
    want = psi(1, ETA, min(beta(ch, gamma_lin, 0, e, exact=True), w), exact=True) / 2
    assert nu1_star(ch, gamma_lin, 0, 0, e, exact=True) == want


@pytest.mark.parametrize("m, n", [(0, 0), (3, 1), (1, 4), (7, 7)])
@pytest.mark.parametrize("g", ["const:0", "const:2", "affine:2:3"])
def test_nu1_star_attained_at_top_when_gamma_monotone(m, n, g):
    G = Counterfunction.parse(g)
    ch = chain(g=G)
    top = max(m, n + g_majorant(G, n))
    e = F(1, 3)
    w = omega_tau(TAU, 1, ch.p_fn(e) / 4, exact=True)
    at_top = psi(1, ETA, min(beta(ch, gamma_lin, top, e, exact=True), w), exact=True) / 2
    assert nu1_star(ch, gamma_lin, m, n, e, exact=True) == at_top


# structure ------------------------------------------------------------------------

eps_st = st.fractions(F(1, 1000), F(2)).filter(lambda v: v > 0)


@given(eps=eps_st, b=st.integers(1, 4))
def test_min_structure(eps, b):
    ch = chain(b)
    assert 0 < eta1(ch, eps, exact=True) <= eps
    assert 0 < eta2(ch, eps, exact=True) <= eps
    for lam in (F(1, 10), F(1), F(100)):
        d = delta(ch, eps, lam, exact=True)
        assert 0 < d and d * b * lam <= eps / 4


@given(eps=eps_st, c=st.integers(0, 20), d=st.integers(0, 20))
def test_beta_q_nu1_structure(eps, c, d):
    ch = chain(2)
    bc = beta(ch, gamma_lin, c, eps, exact=True)
    assert ch.b * gamma_lin(c) * bc == ch.p_fn(eps) / 4
    assert beta(ch, gamma_lin, c + 1, eps, exact=True) < bc
    w = omega_tau(TAU, 2, ch.p_fn(eps) / 8, exact=True)
    q = q_mod(ch, gamma_lin, c, d, eps, exact=True)
    assert q <= w
    assert q_mod(ch, gamma_lin, c, c, eps, exact=True) == min(bc, w)
    assert nu1(ch, gamma_lin, c, d, eps, exact=True) > 0


@given(eps=eps_st, m=st.integers(0, 6), n=st.integers(0, 6))
def test_nu1_star_below_every_cell(eps, m, n):
    ch = chain(1, g=Counterfunction("identity"))
    star = nu1_star(ch, gamma_lin, m, n, eps, exact=True)
    assert star > 0
    w = omega_tau(TAU, 1, ch.p_fn(eps) / 4, exact=True)
    for c in range(max(m, 2 * n) + 1):
        assert star <= psi(1, ETA, min(beta(ch, gamma_lin, c, eps, exact=True), w), exact=True) / 2


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@given(eps=st.floats(1e-3, 2.0), b=st.integers(1, 4))
def test_float_path_positive_with_lp_moduli(p, eps, b):
    s = LpSpace(p, 1)
    ch = ModuliChain(b, lp_convexity_modulus(s), lp_smoothness_modulus(s))
    assert psi(b, ch.eta, eps) > 0
    assert omega_tau(ch.tau, b, eps) > 0
    assert eta2(ch, eps) > 0 and delta(ch, eps, 10.0) > 0


def test_float_and_exact_agree():
    ch = chain(3)
    for eps in (0.1, 0.5, 1.0, 2.0):
        assert eta2(ch, eps) == pytest.approx(float(eta2(ch, eps, exact=True)), rel=1e-12)
        assert nu1_star(ch, gamma_lin, 2, 3, eps) == pytest.approx(
            float(nu1_star(ch, gamma_lin, 2, 3, eps, exact=True)), rel=1e-12)


# exact path vs independent evaluator ---------------------------------------------------


@pytest.mark.parametrize("b", [1, 2, 5])
@pytest.mark.parametrize("eps", [F(1, 10), F(1, 2), F(1), F(3, 2), F(2)])
def test_exact_matches_oracle(b, eps):
    ch = chain(b, p_fn=lambda e: e / 3, s_fn=lambda d: 2 * d + 1,
               g=Counterfunction("affine", 1, 2))
    o = RationalChain(b, p_fn=lambda e: e / 3, s_fn=lambda d: 2 * d + 1, g=lambda n: n + 2)
    assert psi(b, ETA, eps, exact=True) == to_fraction(o.psi(eps))
    assert omega_tau(TAU, b, eps, exact=True) == to_fraction(o.omega(b, eps))
    assert eta1(ch, eps, exact=True) == to_fraction(o.eta1(eps))
    assert eta2(ch, eps, exact=True) == to_fraction(o.eta2(eps))
    assert delta(ch, eps, F(7, 2), exact=True) == to_fraction(o.delta(eps, F(7, 2)))
    assert beta(ch, gamma_lin, 4, eps, exact=True) == to_fraction(o.beta(gamma_lin, 4, eps))
    assert q_mod(ch, gamma_lin, 1, 2, eps, exact=True) == to_fraction(o.q(gamma_lin, 1, 2, eps))
    assert nu1(ch, gamma_lin, 1, 2, eps, exact=True) == to_fraction(o.nu1(gamma_lin, 1, 2, eps))
    assert nu1_star(ch, gamma_lin, 2, 1, eps, exact=True) == to_fraction(
        o.nu1_star(gamma_lin, 2, 1, eps))


def test_exact_converts_floats_by_repr():
    assert omega_tau(TAU, 1, 0.1, exact=True) == omega_tau(TAU, 1, F(1, 10), exact=True)


def test_exact_rejects_irrational_modulus():
    ch = ModuliChain(1, lp_convexity_modulus(LpSpace(3.0, 1)), TAU)
    with pytest.raises(TypeError, match="non-rational"):
        eta1(ch, 1, exact=True)


def test_clamp_warns_and_caps_at_two():
    # omega_tau(b, eps/2b) exceeds 2 once tau is large enough
    big = linear_smoothness_modulus(F(10_000))
    ch = ModuliChain(1, ETA, big)
    assert omega_tau(big, 1, 1, exact=True) > 2
    with pytest.warns(DomainClampWarning):
        v = eta2(ch, 2, exact=True)
    assert v == min(F(2), psi(1, ETA, 2, exact=True) / 2)


def test_no_warning_in_normal_range():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        eta2(chain(), 1)


@pytest.mark.parametrize("call", [
    lambda: psi(1, ETA, 0), lambda: psi(1, ETA, 2.5), lambda: psi(0.25, ETA, 1),
    lambda: omega_tau(TAU, 0, 1), lambda: omega_tau(TAU, 1, -1),
    lambda: delta(chain(), 1, 0), lambda: nu1_star(chain(), gamma_lin, -1, 0, 1),
    lambda: beta(chain(), lambda c: 0, 1, 1), lambda: ModuliChain(0, ETA, TAU),
    lambda: ModuliChain(1.5, ETA, TAU),
])
def test_domain_errors(call):
    with pytest.raises(ValueError):
        call()


# counterfunctions and sequences ------------------------------------------------------


@pytest.mark.parametrize("label, values", [
    ("const:5", [5, 5, 5, 5]), ("identity", [0, 1, 2, 3]), ("affine:2:3", [3, 5, 7, 9])])
def test_counterfunction_parse(label, values):
    g = Counterfunction.parse(label)
    assert [g(n) for n in range(4)] == values
    assert g.label == label


@pytest.mark.parametrize("bad", ["", "const", "const:-1", "affine:1", "sqrt", "const:x"])
def test_counterfunction_parse_rejects(bad):
    with pytest.raises(ValueError):
        Counterfunction.parse(bad)


def test_g_majorant_examples():
    g = Counterfunction.parse("affine:2:3")
    assert [g_majorant(g, n) for n in range(5)] == [3, 5, 7, 9, 11]
    assert [g_majorant(lambda n: 5, n) for n in range(3)] == [5, 5, 5]
    seq = [4, 1, 0, 0, 2]
    assert [g_majorant(lambda i: seq[i], n) for n in range(5)] == [4, 4, 4, 4, 4]


@given(vals=st.lists(st.integers(0, 100), min_size=1, max_size=30))
def test_g_majorant_is_running_max(vals):
    gm = [g_majorant(lambda i: vals[i], n) for n in range(len(vals))]
    assert all(a <= b for a, b in zip(gm, gm[1:]))
    assert all(m >= v for m, v in zip(gm, vals))
    assert gm[-1] == max(vals)


def test_xi_prime_shift():
    xp = xi_prime(lambda n: n)
    assert [xp(n) for n in range(4)] == [1, 2, 3, 4]


def test_lambda_t_examples():
    assert lambda_of_t(F(1, 2)) == 1
    for n in range(100):
        assert lambda_of_t(harmonic_t(n)) == n + 1


@given(t=st.floats(1e-6, 1 - 1e-6))
def test_lambda_t_round_trip(t):
    assert abs(t_of_lambda(lambda_of_t(t)) - t) <= 1e-12


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.5, 2.0])
def test_lambda_of_t_domain(bad):
    with pytest.raises(ValueError):
        lambda_of_t(bad)


def test_default_sequence_moduli_values():
    assert [LINEAR_LAMBDA_MODULI.rate(n) for n in range(4)] == [0, 1, 2, 3]
    assert [LINEAR_LAMBDA_MODULI.gamma(n) for n in range(4)] == [1, 2, 3, 4]
    assert [HARMONIC_T_MODULI.rate(n) for n in range(4)] == [0, 1, 2, 3]
    assert [HARMONIC_T_MODULI.gamma(n) for n in range(4)] == [2, 3, 4, 5]


def test_sequence_contracts_hold_to_ten_thousand():
    lam = check_lambda_moduli(linear_lambda, LINEAR_LAMBDA_MODULI.rate,
                              LINEAR_LAMBDA_MODULI.gamma, 10_000)
    assert lam.passed and lam.samples > 0
    quad = check_lambda_moduli(quadratic_lambda, QUADRATIC_LAMBDA_MODULI.rate,
                               QUADRATIC_LAMBDA_MODULI.gamma, 10_000)
    assert quad.passed
    t = check_t_moduli(harmonic_t, HARMONIC_T_MODULI.rate, HARMONIC_T_MODULI.gamma, 10_000)
    assert t.passed


def test_sequence_contract_detects_bad_rate():
    rep = check_lambda_moduli(linear_lambda, lambda n: max(n - 1, 0), LINEAR_LAMBDA_MODULI.gamma, 50)
    assert not rep.passed and rep.witness["condition"] == "rate"
    rep = check_lambda_moduli(linear_lambda, LINEAR_LAMBDA_MODULI.rate, lambda n: n, 50)
    assert not rep.passed and rep.witness["condition"] == "gamma"


def test_xi_prime_transfer_to_lambda():
    xp = xi_prime(HARMONIC_T_MODULI.rate)
    gamma = HARMONIC_T_MODULI.gamma
    for n in range(1001):
        assert all(lambda_of_t(harmonic_t(m)) >= n + 1 for m in range(xp(n), xp(n) + 5))
        assert lambda_of_t(harmonic_t(n)) == gamma(n) - 1


# sampled inequalities ---------------------------------------------------------------------


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("eps", [0.5, 2.0])
def test_psi_inequality_sampled(p, eps):
    s = LpSpace(p, 3)
    rep = verify_psi_inequality(s, lp_convexity_modulus(s), eps, samples=2000)
    assert rep.passed and rep.samples == 2000, rep.line()


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_omega_tau_sampled(p):
    s = LpSpace(p, 3)
    rep = verify_omega_tau(s, lp_smoothness_modulus(s), 1.0, samples=2000)
    assert rep.passed and rep.samples == 2000, rep.line()


def test_psi_inequality_detects_inflated_psi():
    # psi is capped at (eps/2)^2/4; l_8 is flat enough near (1, +-t) to break that cap
    s = LpSpace(8.0, 2)
    fat = quadratic_convexity_modulus(F(10**6))
    rep = verify_psi_inequality(s, fat, 0.5, samples=10_000)
    assert not rep.passed and rep.witness is not None
