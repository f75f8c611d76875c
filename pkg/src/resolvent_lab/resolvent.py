"""Resolvents ``J_{lam A} x``: the unique y with ``y + lam A y = x``.

Closed forms and direct linear solves are used where available.  Operators of
the form Id - T (T nonexpansive) are solved by Banach iteration of
``u -> t T u + (1 - t) x`` with ``t = lam / (1 + lam)``, or by a damped Newton
root finder on ``y + lam A y - x`` for large lam.

For accretive A the resolvent residual bounds the error:
``||y - J x|| <= ||y + lam A y - x||``, so every returned point is within
its certified residual of the true resolvent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .audit import AuditReport, Sweep
from .moduli import harmonic_t, lambda_of_t, linear_lambda, quadratic_lambda
from .operators import Mapping, Operator, SamplePlan, graph_pairs, zero_residual

DEFAULT_TOL = 1e-10
MAX_ITER = 10**6
AUDIT_LAMBDAS = (0.1, 1.0, 10.0, 100.0, 1000.0)
# above this lam the Banach contraction factor t is too close to 1
BANACH_LAMBDA_LIMIT = 10.0


class ResolventError(RuntimeError):
    def __init__(self, message: str, result: "ResolventResult | None" = None):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True, eq=False)
class ResolventResult:
    point: np.ndarray
    residual: float
    iterations: int
    method: str


def resolvent_residual(A: Operator, lam: float, x, y) -> float:
    s = A.space
    return float(s.norm(y + lam * A(y) - x))


def _banach(T, t: float, x: np.ndarray, target: float, u0, max_iter: int, norm):
    """Iterate ``u -> t T u + (1 - t) x`` until ``||u - Phi(u)|| <= target``."""
    u = x.copy() if u0 is None else np.array(u0, dtype=float)
    for k in range(max_iter):
        v = t * T(u) + (1 - t) * x
        if norm(u - v) <= target:
            return u, k
        u = v
    return u, max_iter


def _fd_jacobian(F, y: np.ndarray, fy: np.ndarray) -> np.ndarray:
    n = y.size
    J = np.empty((n, n))
    for i in range(n):
        h = 1e-7 * max(1.0, abs(y[i]))
        e = y.copy()
        e[i] += h
        J[:, i] = (F(e) - fy) / h
    return J


def _damped_newton(F, y0: np.ndarray, tol: float, norm, max_iter: int = 200):
    """Newton with a finite-difference Jacobian and backtracking on ``||F||``."""
    y = np.array(y0, dtype=float)
    fy = F(y)
    r = norm(fy)
    for k in range(max_iter):
        if r <= tol:
            return y, r, k
        J = _fd_jacobian(F, y, fy)
        try:
            step = np.linalg.solve(J, -fy)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -fy, rcond=None)[0]
        a = 1.0
        while True:
            cand = y + a * step
            fc = F(cand)
            rc = norm(fc)
            if rc < (1 - 1e-4 * a) * r or a < 1e-12:
                break
            a *= 0.5
        if not rc < r:
            return y, r, k
        y, fy, r = cand, fc, rc
    return y, r, max_iter


def resolve(A: Operator, lam: float, x, tol: float = DEFAULT_TOL, method: str = "auto",
            max_iter: int = MAX_ITER, x0=None) -> ResolventResult:
    """Compute ``J_{lam A} x`` with certified residual ``<= tol``.

    ``method`` is ``auto`` or one of ``closed_form``, ``linear_solve``,
    ``banach_iteration``, ``root_find``.  ``x0`` warm-starts the iterative
    methods.  Raises :class:`ResolventError` when the residual cannot be
    certified.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    s = A.space
    x = s.check(x).astype(float)
    if method == "auto":
        method = _auto_method(A, lam)
    iters = 0
    if method == "closed_form":
        y = _closed_form(A, lam, x)
    elif method == "linear_solve":
        if A.kind != "matrix":
            raise ValueError("linear_solve needs a matrix operator")
        try:
            y = np.linalg.solve(np.eye(s.dim) + lam * A.matrix, x)
        except np.linalg.LinAlgError as exc:
            # only possible when A is not accretive
            raise ResolventError(f"{A.label}: I + {lam!r} A is singular") from exc
    elif method == "banach_iteration":
        T = _as_mapping(A)
        t = lam / (1 + lam)
        y, iters = _banach(T, t, x, 0.5 * tol / (1 + lam), x0, max_iter, s.norm)
    elif method == "root_find":
        start = x if x0 is None else s.check(x0)
        y, _, iters = _damped_newton(lambda v: v + lam * A(v) - x, start, 0.5 * tol, s.norm)
        if resolvent_residual(A, lam, x, y) > tol and A.kind in ("id_minus_T", "constant_target"):
            # Newton stalled on a nonsmooth T: finish with the contraction
            y, more = _banach(_as_mapping(A), lam / (1 + lam), x, 0.5 * tol / (1 + lam),
                              y, max_iter, s.norm)
            iters += more
    else:
        raise ValueError(f"unknown resolvent method {method!r}")
    res = resolvent_residual(A, lam, x, y)
    result = ResolventResult(y, res, iters, method)
    if not res <= tol:
        raise ResolventError(f"{A.label}: residual {res:.3e} > tol {tol:.1e} "
                             f"after {iters} iterations ({method})", result)
    return result


def _auto_method(A: Operator, lam: float) -> str:
    if A.kind in ("zero", "constant_target"):
        return "closed_form"
    if A.kind == "matrix":
        return "linear_solve"
    if A.kind == "diagonal":
        return "closed_form" if A.phi_resolvent is not None else "root_find"
    return "banach_iteration" if lam <= BANACH_LAMBDA_LIMIT else "root_find"


def _closed_form(A: Operator, lam: float, x: np.ndarray) -> np.ndarray:
    if A.kind == "zero":
        return x.copy()
    if A.kind == "constant_target":
        return (x + lam * A.target) / (1 + lam)
    if A.kind == "diagonal" and A.phi_resolvent is not None:
        return A.phi_resolvent(x, lam)
    raise ValueError(f"no closed-form resolvent for {A.kind}")


def _as_mapping(A: Operator):
    if A.kind == "id_minus_T":
        return A.mapping
    if A.kind == "constant_target":
        c = A.target
        return lambda u: np.broadcast_to(c, np.shape(u)).copy()
    if A.kind == "zero":
        return lambda u: u
    raise ValueError("banach_iteration needs an operator of the form Id - T")


def psc_bridge(T: Mapping, t: float, x, tol: float = DEFAULT_TOL,
               max_iter: int = MAX_ITER, space=None) -> np.ndarray:
    """The point ``x_t = t T x_t + (1 - t) x`` by Banach iteration.

    Stops once ``||x_t - (t T x_t + (1-t) x)|| <= tol (1 - t) / 2``, which puts
    ``x_t`` within ``tol / 2`` of ``J_{lam(Id - T)} x`` for ``lam = t/(1-t)``.
    """
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    if space is None:
        if T.domain is None:
            raise ValueError("pass the space for a mapping without domain")
        space = T.domain.space
    x = space.check(x).astype(float)
    target = 0.5 * tol * (1 - t)
    u, iters = _banach(T, t, x, target, None, max_iter, space.norm)
    if iters >= max_iter:
        raise ResolventError(f"psc_bridge did not converge in {max_iter} iterations")
    return u


def fixed_point(U: Mapping, x0, contraction: float, tol: float = 1e-12,
                max_iter: int = MAX_ITER, space=None) -> np.ndarray:
    """Fixed point of a ``contraction``-Lipschitz self-map by Picard iteration."""
    space = space or U.domain.space
    u = space.check(x0).astype(float)
    for _ in range(max_iter):
        v = U(u)
        if space.norm(u - v) <= tol * (1 - contraction):
            return v
        u = v
    raise ResolventError("fixed-point iteration did not converge")


# audits --------------------------------------------------------------------------


def check_resolvent_nonexpansive(A: Operator, lam: float, pairs: SamplePlan = SamplePlan(200),
                                 zeros: Sequence = (), tol: float = 1e-8,
                                 solver_tol: float = DEFAULT_TOL) -> AuditReport:
    """``||J u - J v|| <= ||u - v||`` on samples and ``J z = z`` on certified zeros."""
    s = A.space
    U, _, V, _ = graph_pairs(A, pairs)
    JU = np.array([resolve(A, lam, u, solver_tol).point for u in U])
    JV = np.array([resolve(A, lam, v, solver_tol).point for v in V])
    sweep = Sweep(f"resolvent_nonexpansive[{A.label},lam={lam}]", tol)
    sweep.add(s.norm(JU - JV) - s.norm(U - V), lambda k: {"u": U[k], "v": V[k]})
    fixed = []
    for z in zeros:
        if zero_residual(A, z) > solver_tol:
            raise ValueError("uncertified zero passed to the resolvent audit")
        fixed.append(float(s.norm(resolve(A, lam, z, solver_tol).point - np.asarray(z))))
    if fixed:
        sweep.add(fixed, lambda k: {"zero": zeros[k]})
    return sweep.report(lam=lam, zero_fixed_gaps=fixed)


def check_domain_closure(A: Operator, lambdas: Sequence[float] = AUDIT_LAMBDAS,
                         pairs: SamplePlan = SamplePlan(200), tol: float = 1e-8,
                         solver_tol: float = DEFAULT_TOL) -> AuditReport:
    """``J_{lam A} y`` stays in the domain for sampled domain points y."""
    rng = np.random.default_rng(pairs.seed)
    Y = A.domain.sample(rng, pairs.count, pairs.spread)
    sweep = Sweep(f"domain_closure[{A.label}]", tol)
    for lam in lambdas:
        J = np.array([resolve(A, lam, y, solver_tol).point for y in Y])
        if not sweep.add(np.atleast_1d(A.domain.excess(J)),
                         lambda k, lam=lam: {"y": Y[k], "lambda": lam}):
            break
    return sweep.report(lambdas=list(lambdas))


# curves ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Curve:
    """``points[n] = J_{lambdas[n] A} base_point`` with certified residuals."""

    points: np.ndarray
    lambdas: np.ndarray
    base_point: np.ndarray
    residuals: np.ndarray

    def __len__(self) -> int:
        return len(self.points)


def compute_curve(A: Operator, x, lambdas: Sequence[float], tol: float = DEFAULT_TOL,
                  method: str = "auto") -> Curve:
    s = A.space
    x = s.check(x).astype(float)
    pts, res = [], []
    prev = None
    for lam in lambdas:
        r = resolve(A, float(lam), x, tol, method, x0=prev)
        pts.append(r.point)
        res.append(r.residual)
        prev = r.point
    return Curve(np.array(pts).reshape(-1, s.dim), np.array(lambdas, dtype=float), x,
                 np.array(res))


def lambda_sequence(kind: str, formula: str, length: int) -> list[float]:
    """Float parameters lam_0..lam_{length-1} for the shipped sequences."""
    if kind == "lambda" and formula == "linear":
        return [float(linear_lambda(n)) for n in range(length)]
    if kind == "lambda" and formula == "quadratic":
        return [float(quadratic_lambda(n)) for n in range(length)]
    if kind == "t" and formula == "harmonic":
        return [lambda_of_t(float(harmonic_t(n))) for n in range(length)]
    raise ValueError(f"unknown sequence {kind}/{formula}")

