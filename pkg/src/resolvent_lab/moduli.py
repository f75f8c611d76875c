"""Quantitative moduli of the approximating-curve convergence proof.

Every function evaluates in floating point by default.  With ``exact=True``
numeric inputs are converted to :class:`fractions.Fraction` and the whole
computation stays rational; the configured moduli must then be
rational-valued (e.g. ``eta(e) = e^2/8``, ``tau(e) = e``), otherwise
``TypeError`` is raised.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .audit import AuditReport, Sweep
from .space import SAMPLE_SLACK, ConvexityModulus, LpSpace, SmoothnessModulus, separated_pairs


class DomainClampWarning(UserWarning):
    """A psi argument above 2 was clamped to 2."""


def _num(x, exact: bool):
    if exact:
        if isinstance(x, float):
            return Fraction(repr(x))
        return Fraction(x)
    return float(x)


def _out(v, exact: bool):
    if exact and not isinstance(v, Fraction):
        raise TypeError(f"exact evaluation produced non-rational {type(v).__name__}; "
                        "configure rational-valued moduli")
    return v


def _clamp2(v, what: str):
    if v > 2:
        warnings.warn(f"{what} = {float(v):.6g} exceeds 2; clamped to 2 before psi",
                      DomainClampWarning, stacklevel=3)
        return type(v)(2)
    return v


# counterfunctions and sequence moduli ---------------------------------------


@dataclass(frozen=True)
class Counterfunction:
    """g: N -> N of kind ``constant`` (b0), ``identity`` or ``affine`` (a n + b0)."""

    kind: str
    a: int = 0
    b0: int = 0

    def __post_init__(self):
        if self.kind not in ("constant", "identity", "affine"):
            raise ValueError(f"unknown counterfunction kind {self.kind!r}")
        if self.a < 0 or self.b0 < 0:
            raise ValueError("counterfunction parameters must be nonnegative")

    def __call__(self, n: int) -> int:
        if self.kind == "constant":
            return self.b0
        if self.kind == "identity":
            return n
        return self.a * n + self.b0

    @property
    def label(self) -> str:
        if self.kind == "constant":
            return f"const:{self.b0}"
        if self.kind == "identity":
            return "identity"
        return f"affine:{self.a}:{self.b0}"

    @classmethod
    def parse(cls, label: str) -> "Counterfunction":
        parts = label.strip().split(":")
        try:
            if parts[0] == "const" and len(parts) == 2:
                return cls("constant", b0=int(parts[1]))
            if parts[0] == "identity" and len(parts) == 1:
                return cls("identity")
            if parts[0] == "affine" and len(parts) == 3:
                return cls("affine", a=int(parts[1]), b0=int(parts[2]))
        except ValueError:
            pass
        raise ValueError(f"bad counterfunction label {label!r} "
                         "(expected const:C, identity or affine:A:B)")


def g_majorant(g: Callable[[int], int], n: int) -> int:
    """Running maximum ``max_{i <= n} g(i)``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return max(g(i) for i in range(n + 1))


def xi_prime(xi: Callable[[int], int]) -> Callable[[int], int]:
    return lambda n: xi(n + 1)


def lambda_of_t(t):
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    return t / (1 - t)


def t_of_lambda(lam):
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return lam / (1 + lam)


def linear_lambda(n: int) -> Fraction:
    """lambda_n = n + 1."""
    return Fraction(n + 1)


def quadratic_lambda(n: int) -> Fraction:
    """lambda_n = (n + 1)^2."""
    return Fraction((n + 1) ** 2)


def harmonic_t(n: int) -> Fraction:
    """t_n = 1 - 1/(n + 2)."""
    return 1 - Fraction(1, n + 2)


@dataclass(frozen=True)
class SequenceModuli:
    """Rate ``alpha`` (or ``xi`` for t-sequences) and bound ``gamma``."""

    kind: str
    rate: Callable[[int], int]
    gamma: Callable[[int], int]


LINEAR_LAMBDA_MODULI = SequenceModuli("lambda", lambda n: n, lambda n: n + 1)
QUADRATIC_LAMBDA_MODULI = SequenceModuli(
    "lambda", lambda n: max(0, _isqrt_ceil(n + 1) - 1), lambda n: (n + 1) ** 2)
HARMONIC_T_MODULI = SequenceModuli("t", lambda n: n, lambda n: n + 2)


def _isqrt_ceil(k: int) -> int:
    r = int(np.sqrt(k))
    while r * r < k:
        r += 1
    while r > 0 and (r - 1) * (r - 1) >= k:
        r -= 1
    return r


def check_lambda_moduli(lam: Callable[[int], object], alpha: Callable[[int], int],
                        gamma: Callable[[int], int], n_max: int,
                        horizon: int | None = None) -> AuditReport:
    """Enumerate ``lam_m >= n+1`` for ``alpha(n) <= m <= horizon`` and ``lam_n <= gamma(n)``.

    Pass exact sequences (Fractions) to avoid spurious ties from rounding.
    """
    alphas = [alpha(n) for n in range(n_max + 1)]
    horizon = max(max(alphas), n_max) + n_max + 1 if horizon is None else horizon
    values = [lam(m) for m in range(horizon + 1)]
    suffix_min = list(values)
    for m in range(horizon - 1, -1, -1):
        suffix_min[m] = min(suffix_min[m], suffix_min[m + 1])
    sweep = Sweep("sequence_moduli", 0.0)
    rate_margins = [float(n + 1 - suffix_min[a]) if a <= horizon else float("nan")
                    for n, a in enumerate(alphas)]
    sweep.add(rate_margins, lambda n: {"condition": "rate", "n": n, "alpha": alphas[n]})
    bound_margins = [float(values[n] - gamma(n)) for n in range(n_max + 1)]
    sweep.add(bound_margins, lambda n: {"condition": "gamma", "n": n})
    return sweep.report(n_max=n_max, horizon=horizon)


def check_t_moduli(t: Callable[[int], object], xi: Callable[[int], int],
                   gamma: Callable[[int], int], n_max: int,
                   horizon: int | None = None) -> AuditReport:
    """Enumerate ``t_m >= 1 - 1/(n+1)`` for ``m >= xi(n)`` and ``t_n <= 1 - 1/gamma(n)``."""
    xis = [xi(n) for n in range(n_max + 1)]
    horizon = max(max(xis), n_max) + n_max + 1 if horizon is None else horizon
    values = [t(m) for m in range(horizon + 1)]
    suffix_min = list(values)
    for m in range(horizon - 1, -1, -1):
        suffix_min[m] = min(suffix_min[m], suffix_min[m + 1])
    sweep = Sweep("t_sequence_moduli", 0.0)
    sweep.add([float(1 - Fraction(1, n + 1) - suffix_min[a]) for n, a in enumerate(xis)],
              lambda n: {"condition": "rate", "n": n})
    sweep.add([float(values[n] - (1 - Fraction(1, gamma(n)))) for n in range(n_max + 1)],
              lambda n: {"condition": "gamma", "n": n})
    return sweep.report(n_max=n_max, horizon=horizon)


# the moduli chain -------------------------------------------------------------


def placeholder_p_fn(eps):
    """Stand-in for the externally supplied p(eps); configurable, not derived here."""
    return eps * eps / 96


def identity_s_fn(d: int) -> int:
    return d


@dataclass(frozen=True)
class ModuliChain:
    b: int
    eta: ConvexityModulus
    tau: SmoothnessModulus
    p_fn: Callable = placeholder_p_fn
    s_fn: Callable[[int], int] = identity_s_fn
    g: Counterfunction = field(default_factory=lambda: Counterfunction("constant", b0=1))

    def __post_init__(self):
        if int(self.b) != self.b or self.b < 1:
            raise ValueError("b must be a positive integer")


def psi(b, eta: ConvexityModulus, eps, exact: bool = False):
    b, eps = _num(b, exact), _num(eps, exact)
    if b < Fraction(1, 2):
        raise ValueError("psi needs b >= 1/2")
    if not 0 < eps <= 2:
        raise ValueError("psi needs eps in (0, 2]")
    e = eta(eps / (2 * b))
    e2 = e * e
    inner = min(eps / 2, eps * eps / (72 * b) * e2)
    return _out(min(inner * inner / 4, eps * eps / 48 * e2), exact)


def omega_tau(tau: SmoothnessModulus, b, eps, exact: bool = False):
    b, eps = _num(b, exact), _num(eps, exact)
    if not (b > 0 and eps > 0):
        raise ValueError("omega_tau needs b > 0 and eps > 0")
    r1 = min(eps, _num(2, exact))
    r2 = max(b, _num(1, exact))
    return _out(r1 * r1 / (12 * r2) * tau(r1 / (2 * r2)), exact)


def eta1(chain: ModuliChain, eps, exact: bool = False):
    eps = _num(eps, exact)
    return _out(min(eps, psi(chain.b, chain.eta, eps, exact) / 2), exact)


def eta2(chain: ModuliChain, eps, exact: bool = False):
    eps = _num(eps, exact)
    if not eps > 0:
        raise ValueError("eps must be positive")
    w = _clamp2(omega_tau(chain.tau, chain.b, eps / (2 * chain.b), exact), "omega_tau(b, eps/2b)")
    return _out(min(eps, psi(chain.b, chain.eta, w, exact) / 2), exact)


def delta(chain: ModuliChain, eps, lam, exact: bool = False):
    eps, lam = _num(eps, exact), _num(lam, exact)
    if not (eps > 0 and lam > 0):
        raise ValueError("delta needs eps > 0 and lambda > 0")
    b = chain.b
    return _out(min(eta2(chain, eps, exact), eps / (4 * b * lam),
                    omega_tau(chain.tau, b, eps / (4 * b), exact)), exact)


def beta(chain: ModuliChain, gamma: Callable[[int], int], c: int, eps, exact: bool = False):
    eps = _num(eps, exact)
    gc = gamma(c)
    if gc < 1:
        raise ValueError("gamma must take values >= 1")
    pe = chain.p_fn(eps)
    if not pe > 0:
        raise ValueError("p_fn must be positive")
    return _out(pe / (4 * chain.b * _num(gc, exact)), exact)


def _omega_p(chain: ModuliChain, eps, exact: bool):
    return omega_tau(chain.tau, chain.b, chain.p_fn(eps) / (4 * chain.b), exact)


def q_mod(chain: ModuliChain, gamma, c: int, d: int, eps, exact: bool = False):
    eps = _num(eps, exact)
    return _out(min(beta(chain, gamma, c, eps, exact),
                    beta(chain, gamma, chain.s_fn(d), eps, exact),
                    _omega_p(chain, eps, exact)), exact)


def nu1(chain: ModuliChain, gamma, c: int, d: int, eps, exact: bool = False):
    q = _clamp2(q_mod(chain, gamma, c, d, eps, exact), "q")
    return _out(psi(chain.b, chain.eta, q, exact) / 2, exact)


def nu1_star(chain: ModuliChain, gamma, m: int, n: int, eps, exact: bool = False):
    """Half the minimum of psi(min(beta(c), omega)) over ``c <= max(m, n + g^M(n))``."""
    if m < 0 or n < 0:
        raise ValueError("m and n must be nonnegative")
    eps = _num(eps, exact)
    top = max(m, n + g_majorant(chain.g, n))
    w = _omega_p(chain, eps, exact)
    vals = (psi(chain.b, chain.eta,
                _clamp2(min(beta(chain, gamma, c, eps, exact), w), "nu1* argument"), exact)
            for c in range(top + 1))
    return _out(min(vals) / 2, exact)


# sampled checks of the psi and omega_tau inequalities ---------------------------


def verify_psi_inequality(s: LpSpace, eta: ConvexityModulus, eps: float, b: float = 1.0,
                          samples: int = 10_000, seed: int = 0,
                          tol: float = SAMPLE_SLACK) -> AuditReport:
    """``||(x+y)/2||^2 + psi(eps) <= (||x||^2 + ||y||^2)/2`` for ``||x||,||y|| <= b``, ``||x-y|| >= eps``."""
    rng = np.random.default_rng(seed)
    X, Y, attempts = separated_pairs(s, rng, samples, eps, radius=b)
    ps = float(psi(b, eta, eps))
    lhs = s.norm(0.5 * (X + Y)) ** 2 + ps
    rhs = 0.5 * s.norm(X) ** 2 + 0.5 * s.norm(Y) ** 2
    sweep = Sweep(f"psi_inequality[p={s.p},eps={eps}]", tol)
    sweep.add(lhs - rhs, lambda k: {"x": X[k], "y": Y[k], "psi": ps})
    return sweep.report(psi=ps, attempts=attempts, exhausted=len(X) < samples)


def _close_pairs(s: LpSpace, rng: np.random.Generator, n: int, w: float, b: float):
    """Pairs in the b-ball with ``||x - y|| <= w``, resampled until ``n`` are kept."""
    xs, ys, got, attempts = [], [], 0, 0
    while got < n and attempts < 100 * n:
        batch = max(2 * (n - got), 64)
        attempts += batch
        X = s.random_ball(rng, batch, b)
        # part of the plan starts at the origin, where j is least regular
        X[rng.random(batch) < 0.1] = 0.0
        # half the steps sit on the edge of the admissible distance
        length = np.where(rng.random(batch) < 0.5, 1.0 - 1e-12, rng.random(batch))
        Y = X + s.random_directions(rng, batch) * (w * length)[:, None]
        nrm = s.norm(Y)
        over = nrm > b
        Y[over] *= (b / nrm[over])[:, None]
        ok = s.norm(X - Y) <= w
        xs.append(X[ok])
        ys.append(Y[ok])
        got += int(ok.sum())
    return np.concatenate(xs)[:n], np.concatenate(ys)[:n], attempts


def verify_omega_tau(s: LpSpace, tau: SmoothnessModulus, eps: float, b: float = 1.0,
                     samples: int = 10_000, seed: int = 0,
                     tol: float = SAMPLE_SLACK) -> AuditReport:
    """``||x - y|| <= omega_tau(b, eps)`` implies ``||j(x) - j(y)||_q <= eps`` on the b-ball."""
    rng = np.random.default_rng(seed)
    w = float(omega_tau(tau, b, eps))
    X, Y, attempts = _close_pairs(s, rng, samples, w, b)
    gap = s.dual_norm(s.duality_map(X) - s.duality_map(Y))
    sweep = Sweep(f"omega_tau[p={s.p},eps={eps}]", tol)
    sweep.add(gap - eps, lambda k: {"x": X[k], "y": Y[k], "omega": w})
    return sweep.report(omega=w, attempts=attempts, exhausted=len(X) < samples)
