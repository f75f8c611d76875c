"""Metastable-index search on approximating curves, and the inequality audits
that drive their convergence: asymptotic regularity, the projection
inequality, the (e1j)/(e2j) split, Sub-claim 1, and the sunny-retraction
characterization of the limit map."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .audit import AuditReport, Sweep, inapplicable
from .moduli import Counterfunction, ModuliChain, delta
from .operators import Operator, zero_residual
from .resolvent import DEFAULT_TOL, Curve, compute_curve, resolve
from .space import LpSpace

__all__ = [
    "Counterfunction", "Curve", "compute_curve", "MetastableIndex", "QEstimate",
    "find_metastable_N", "window_diameter", "audit_asymptotic_regularity",
    "audit_projection_inequality", "audit_e1j_e2j", "audit_subclaim1",
    "estimate_Q", "audit_sunny",
]


@dataclass(frozen=True)
class MetastableIndex:
    """Result of the least-N search; ``N`` is None when not found."""

    N: int | None
    window_max_gap: float | None
    curve_length: int
    required_length: int | None = None


def window_diameter(points: np.ndarray, p: float) -> float:
    """Largest pairwise l_p distance among ``points``."""
    if len(points) < 2:
        return 0.0
    return float(pdist(points, "minkowski", p=p).max())


def find_metastable_N(curve: Curve, s: LpSpace, eps: float, g: Counterfunction,
                      n_max: int | None = None) -> MetastableIndex:
    """Least ``N <= n_max`` with ``||x_m - x_n|| <= eps`` for all m, n in [N, N + g(N)].

    The search is exhaustive in N.  If the window of some candidate N runs
    past the end of the curve before a metastable N is found, leastness can
    no longer be certified and the result is not-found with the length that
    window would need.
    """
    pts = curve.points
    L = len(pts)
    n_max = L - 1 if n_max is None else n_max
    for N in range(n_max + 1):
        end = N + g(N)
        if end >= L:
            return MetastableIndex(None, None, L, end + 1)
        W = pts[N:end + 1]
        # cheap bracket of the window diameter around the anchor x_N
        radial = s.norm(W - W[0]).max() if len(W) > 1 else 0.0
        if radial > eps:
            continue
        if 2 * radial <= eps:
            return MetastableIndex(N, window_diameter(W, s.p), L)
        gap = window_diameter(W, s.p)
        if gap <= eps:
            return MetastableIndex(N, gap, L)
    return MetastableIndex(None, None, L)


def audit_asymptotic_regularity(curve: Curve, A: Operator, b: float, tol: float = 1e-8,
                                solver_tol: float = DEFAULT_TOL) -> AuditReport:
    """``||x_n - J_A x_n|| <= b / lam_n`` along the curve."""
    s = A.space
    sweep = Sweep(f"asymptotic_regularity[{A.label}]", tol)
    for n, (xn, lam) in enumerate(zip(curve.points, curve.lambdas)):
        jx = resolve(A, 1.0, xn, solver_tol).point
        if not sweep.add(float(s.norm(xn - jx)) - b / lam,
                         {"n": n, "lambda": lam, "x_n": xn}):
            break
    return sweep.report(b=b, length=len(curve))


def _require_zero(A: Operator, p, tol: float, what: str = "p"):
    res = zero_residual(A, p)
    if res > tol:
        raise ValueError(f"{what} is not a certified zero of A (residual {res:.3e})")


def audit_projection_inequality(curve: Curve, A: Operator, p, s: LpSpace,
                                tol: float = 1e-8, zero_tol: float = 1e-9) -> AuditReport:
    """``<x_n - x, j(x_n - p)> <= 0`` for a zero p of A."""
    p = s.check(p)
    _require_zero(A, p, zero_tol)
    x = curve.base_point
    vals = s.pairing(curve.points - x, s.duality_map(curve.points - p))
    sweep = Sweep(f"projection_inequality[{A.label}]", tol)
    sweep.add(vals, lambda n: {"n": n, "lambda": curve.lambdas[n], "zero": p})
    return sweep.report()


def audit_e1j_e2j(A: Operator, x, lam: float, vprime, chain: ModuliChain, eps: float,
                  tol: float = 1e-8, solver_tol: float = DEFAULT_TOL) -> AuditReport:
    """The two-part estimate of ``<J_{lam A} x - x, j(J_{lam A} x - v')>``.

    Requires ``||v' - J_A v'|| <= delta(eps, lam)``; otherwise the audit is
    inapplicable.  Checks, with ``y = J_{lam A} x`` and ``w = J_A v'``:
    ``<y - x, j(y - w)> <= delta b lam <= eps/4``,
    ``<y - x, j(y - v') - j(y - w)> <= eps/4`` and
    ``<y - x, j(y - v')> <= eps/2``.
    """
    s = A.space
    name = f"e1j_e2j[{A.label},eps={eps},lam={lam}]"
    x, vprime = s.check(x), s.check(vprime)
    d = float(delta(chain, eps, lam))
    w = resolve(A, 1.0, vprime, solver_tol).point
    gap = float(s.norm(vprime - w))
    if gap > d:
        return inapplicable(name, tol, "hypothesis ||v'-J_A v'|| <= delta fails",
                            gap=gap, delta=d)
    if not (A.domain.contains(x) and A.domain.contains(vprime)):
        return inapplicable(name, tol, "x and v' must lie in the domain")
    y = resolve(A, lam, x, solver_tol).point
    step = y - x
    jw = s.duality_map(y - w)
    jv = s.duality_map(y - vprime)
    e1j = float(s.pairing(step, jw))
    e2j = float(s.pairing(step, jv - jw))
    total = float(s.pairing(step, jv))
    dbl = d * chain.b * lam
    checks = {
        "e1j<=delta*b*lam": e1j - dbl,
        "delta*b*lam<=eps/4": dbl - eps / 4,
        "e2j<=eps/4": e2j - eps / 4,
        "sum<=eps/2": total - eps / 2,
    }
    sweep = Sweep(name, tol)
    keys = list(checks)
    sweep.add([checks[k] for k in keys], lambda i: {"inequality": keys[i]})
    return sweep.report(delta=d, e1j=e1j, e2j=e2j, total=total, hypothesis_gap=gap)


def audit_subclaim1(A: Operator, curve: Curve, v, h: int, chain: ModuliChain, nu: float,
                    tol: float = 1e-8, solver_tol: float = DEFAULT_TOL) -> AuditReport:
    """``||x_h - J_A v||^2 <= ||x_h - (v + J_A v)/2||^2 + nu``.

    Gated on ``lam_h^2 >= 4 b^2 / nu``, ``lam_h >= 8 b^2 / nu`` and on the
    companion estimate ``||x_h - v||^2 <= ||x_h - (v + J_A v)/2||^2 + nu/2``
    that the chain starts from; the intermediate bound
    ``||x_h - J_A v|| <= ||x_h - v|| + b / lam_h`` is checked as well.
    """
    s = A.space
    name = f"subclaim1[{A.label},h={h}]"
    b = chain.b
    lam = float(curve.lambdas[h])
    if not (nu > 0 and lam * lam >= 4 * b * b / nu and lam >= 8 * b * b / nu):
        return inapplicable(name, tol, "lambda_h too small for nu", lam_h=lam, nu=nu,
                            needed=max(math.sqrt(4 * b * b / nu), 8 * b * b / nu) if nu > 0 else None)
    v = s.check(v)
    xh = curve.points[h]
    jv = resolve(A, 1.0, v, solver_tol).point
    mid = 0.5 * (v + jv)
    to_mid = float(s.norm(xh - mid)) ** 2
    to_v = float(s.norm(xh - v))
    if to_v ** 2 > to_mid + nu / 2 + tol:
        return inapplicable(name, tol, "starting estimate ||x_h-v||^2 <= ||x_h-mid||^2 + nu/2 fails",
                            lhs=to_v ** 2, rhs=to_mid + nu / 2)
    to_jv = float(s.norm(xh - jv))
    checks = [to_jv - (to_v + b / lam), to_jv ** 2 - (to_mid + nu)]
    labels = ["triangle", "squared"]
    sweep = Sweep(name, tol)
    sweep.add(checks, lambda i: {"inequality": labels[i], "h": h})
    return sweep.report(lam_h=lam, nu=nu, lhs=to_jv ** 2, rhs=to_mid + nu)


@dataclass(frozen=True, eq=False)
class QEstimate:
    """``J_{lam_tail A} x`` with its approximate-zero certificate."""

    point: np.ndarray
    zero_gap: float
    bound: float

    @property
    def certified(self) -> bool:
        return self.zero_gap <= self.bound


def estimate_Q(A: Operator, x, lam_tail: float = 1e4, tol: float = DEFAULT_TOL) -> QEstimate:
    """Tail point of the curve as a stand-in for its limit Qx.

    Certificate: ``||Qx - J_A Qx|| <= b / lam_tail + tol`` with b the domain
    diameter bound (or ``||x - Qx||`` on unbounded domains).
    """
    s = A.space
    x = s.check(x)
    q = resolve(A, lam_tail, x, tol).point
    gap = float(s.norm(q - resolve(A, 1.0, q, tol).point))
    b = A.domain.diameter_bound
    b = float(s.norm(x - q)) if b is None else float(b)
    est = QEstimate(q, gap, b / lam_tail + tol)
    if not est.certified:
        raise ValueError(f"approximate-zero certificate fails: {gap:.3e} > {est.bound:.3e}")
    return est


def audit_sunny(A: Operator, x, Qx, zeros, s: LpSpace, tol: float = 1e-6,
                lam_tail: float = 1e4, zero_tol: float = 1e-9) -> AuditReport:
    """``<x - Qx, j(p - Qx)> <= 0`` for listed zeros p, and ``Q p = p``."""
    x, Qx = s.check(x), s.check(Qx)
    zs = [s.check(p) for p in zeros]
    for k, p in enumerate(zs):
        _require_zero(A, p, zero_tol, f"zeros[{k}]")
    sweep = Sweep(f"sunny[{A.label}]", tol)
    if zs:
        Z = np.array(zs)
        sweep.add(s.pairing(x - Qx, s.duality_map(Z - Qx)),
                  lambda k: {"check": "sunny", "zero": Z[k]})
        fixed = [float(s.norm(estimate_Q(A, p, lam_tail).point - p)) for p in zs]
        sweep.add(fixed, lambda k: {"check": "retraction", "zero": Z[k]})
    return sweep.report(lam_tail=lam_tail)
