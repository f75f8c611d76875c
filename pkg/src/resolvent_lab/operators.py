"""Accretive operators, their domains, and sampling checks of accretivity.

Operators are single-valued and evaluable; multivalued data can still be
audited by handing the checkers an explicit :class:`Graph` of pairs.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .audit import AuditReport, Sweep
from .space import SAMPLE_SLACK, LpSpace

KATO_LAMBDAS = (0.1, 1.0, 10.0, 100.0)


@dataclass(frozen=True, eq=False)
class ConvexDomain:
    """Closed convex set: ``ball``, ``box``, ``whole_space`` or ``ball_intersect``."""

    kind: str
    space: LpSpace
    center: np.ndarray | None = None
    radius: float | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    inner: "ConvexDomain | None" = None

    @property
    def diameter_bound(self) -> int | None:
        if self.kind == "ball":
            return max(1, math.ceil(2 * self.radius - 1e-12))
        if self.kind == "box":
            return max(1, math.ceil(self.space.norm(self.upper - self.lower) - 1e-12))
        if self.kind == "ball_intersect":
            own = max(1, math.ceil(2 * self.radius - 1e-12))
            other = self.inner.diameter_bound
            return own if other is None else min(own, other)
        return None

    def excess(self, x) -> np.ndarray | float:
        """How far ``x`` sits outside the set (``<= 0`` inside)."""
        x = self.space.check(x)
        if self.kind == "whole_space":
            out = np.full(x.shape[:-1], -np.inf)
            return float(out) if out.ndim == 0 else out
        if self.kind == "ball":
            return self.space.norm(x - self.center) - self.radius
        if self.kind == "box":
            out = np.max(np.maximum(self.lower - x, x - self.upper), axis=-1)
            return float(out) if np.ndim(out) == 0 else out
        ball_part = self.space.norm(x - self.center) - self.radius
        return np.maximum(ball_part, self.inner.excess(x))

    def contains(self, x, tol: float = 1e-9):
        return self.excess(x) <= tol

    def sample(self, rng: np.random.Generator, n: int, spread: float = 3.0) -> np.ndarray:
        s = self.space
        if self.kind == "ball":
            return s.random_ball(rng, n, self.radius, self.center)
        if self.kind == "box":
            u = rng.random((n, s.dim))
            # snap some coordinates onto faces
            u[rng.random((n, s.dim)) < 0.1] = 0.0
            u[rng.random((n, s.dim)) < 0.1] = 1.0
            return self.lower + u * (self.upper - self.lower)
        if self.kind == "whole_space":
            return s.random_ball(rng, n, spread)
        out = np.empty((0, s.dim))
        for _ in range(200):
            cand = s.random_ball(rng, 4 * n, self.radius, self.center)
            out = np.vstack([out, cand[self.inner.contains(cand, 0.0)]])
            if len(out) >= n:
                return out[:n]
        raise RuntimeError("could not sample the intersection domain")


def ball(space: LpSpace, center, radius: float) -> ConvexDomain:
    if not radius > 0:
        raise ValueError("radius must be positive")
    return ConvexDomain("ball", space, center=space.check(center).copy(), radius=float(radius))


def box(space: LpSpace, lower, upper) -> ConvexDomain:
    lo, hi = space.check(lower).copy(), space.check(upper).copy()
    if np.any(lo > hi):
        raise ValueError("box needs lower <= upper")
    return ConvexDomain("box", space, lower=lo, upper=hi)


def whole_space(space: LpSpace) -> ConvexDomain:
    return ConvexDomain("whole_space", space)


@dataclass(frozen=True, eq=False)
class Mapping:
    """A self-map T of ``domain``; ``fn`` acts on arrays of shape (..., dim)."""

    label: str
    fn: Callable[[np.ndarray], np.ndarray]
    domain: ConvexDomain | None = None

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class Operator:
    """Single-valued operator ``A``.

    kinds: ``zero``; ``matrix`` (A x = M x); ``id_minus_T`` (A x = x - T x);
    ``constant_target`` (A = Id - T with T constantly ``target``); ``diagonal``
    (A x = (phi(x_1), ..., phi(x_d)) for a nondecreasing scalar ``phi``).
    """

    kind: str
    domain: ConvexDomain
    label: str = ""
    matrix: np.ndarray | None = None
    mapping: Mapping | None = None
    target: np.ndarray | None = None
    phi: Callable[[np.ndarray], np.ndarray] | None = None
    phi_resolvent: Callable[[np.ndarray, float], np.ndarray] | None = None

    @property
    def space(self) -> LpSpace:
        return self.domain.space

    def __call__(self, x) -> np.ndarray:
        x = self.space.check(x)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "matrix":
            return x @ self.matrix.T
        if self.kind == "id_minus_T":
            return x - self.mapping(x)
        if self.kind == "constant_target":
            return x - self.target
        if self.kind == "diagonal":
            return self.phi(x)
        raise ValueError(f"unknown operator kind {self.kind!r}")


def zero_operator(domain: ConvexDomain) -> Operator:
    return Operator("zero", domain, "zero")


def matrix_operator(matrix, domain: ConvexDomain, label: str = "matrix") -> Operator:
    m = np.asarray(matrix, dtype=float)
    d = domain.space.dim
    if m.shape != (d, d):
        raise ValueError(f"matrix must be {d}x{d}")
    return Operator("matrix", domain, label, matrix=m)


def id_minus(T: Mapping, domain: ConvexDomain | None = None, label: str | None = None) -> Operator:
    domain = domain or T.domain
    if domain is None:
        raise ValueError("Id - T needs a domain")
    return Operator("id_minus_T", domain, label or f"Id-{T.label}", mapping=T)


def constant_target(c, domain: ConvexDomain, label: str = "constant") -> Operator:
    c = domain.space.check(c).copy()
    if not domain.contains(c):
        raise ValueError("constant target must lie in the domain")
    return Operator("constant_target", domain, label, target=c)


def diagonal_operator(phi, domain: ConvexDomain, label: str = "diagonal",
                      resolvent=None) -> Operator:
    return Operator("diagonal", domain, label, phi=phi, phi_resolvent=resolvent)


def zero_residual(A: Operator, p) -> float:
    return float(A.space.norm(A(p)))


def restrict_domain(A: Operator, p, radius: float, tol: float = 1e-9) -> Operator:
    """Intersect the domain with the closed ball ``B(p, radius)`` around a zero p."""
    p = A.space.check(p)
    if not A.domain.contains(p, tol):
        raise ValueError("restriction center lies outside the domain")
    res = zero_residual(A, p)
    if res > tol:
        raise ValueError(f"restriction center is not a zero of A (residual {res:.3e})")
    if A.domain.kind == "whole_space":
        dom = ball(A.space, p, radius)
    else:
        dom = dataclasses.replace(ball(A.space, p, radius), kind="ball_intersect", inner=A.domain)
    return dataclasses.replace(A, domain=dom)


# sample plans and graphs -------------------------------------------------------


@dataclass(frozen=True)
class SamplePlan:
    count: int = 1000
    seed: int = 0
    spread: float = 3.0


@dataclass(frozen=True, eq=False)
class Graph:
    """Explicit graph points ``(X[i], Y[i])`` with ``Y[i]`` in ``A X[i]``."""

    X: np.ndarray
    Y: np.ndarray

    def pairs(self):
        i, j = np.triu_indices(len(self.X), k=1)
        return self.X[i], self.Y[i], self.X[j], self.Y[j]


def load_graph_csv(path, dim: int) -> Graph:
    """Rows of ``x_1..x_dim, y_1..y_dim``; a non-numeric header row is skipped."""
    rows = []
    with open(path, newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            try:
                vals = [float(v) for v in row]
            except ValueError:
                if k == 0:
                    continue
                raise
            if len(vals) != 2 * dim:
                raise ValueError(f"row {k + 1}: expected {2 * dim} columns, got {len(vals)}")
            rows.append(vals)
    arr = np.array(rows, dtype=float).reshape(-1, 2 * dim)
    return Graph(arr[:, :dim], arr[:, dim:])


def graph_pairs(A: Operator, pairs: SamplePlan | Graph):
    if isinstance(pairs, Graph):
        return pairs.pairs()
    rng = np.random.default_rng(pairs.seed)
    pts = A.domain.sample(rng, 2 * pairs.count, pairs.spread)
    vals = A(pts)
    return pts[0::2], vals[0::2], pts[1::2], vals[1::2]


def _domain_pairs(T: Mapping, s: LpSpace, pairs: SamplePlan | Graph):
    if isinstance(pairs, Graph):
        i, j = np.triu_indices(len(pairs.X), k=1)
        return pairs.X[i], pairs.X[j]
    rng = np.random.default_rng(pairs.seed)
    dom = T.domain or whole_space(s)
    pts = dom.sample(rng, 2 * pairs.count, pairs.spread)
    return pts[0::2], pts[1::2]


# accretivity ---------------------------------------------------------------------


def check_accretive_metric(A: Operator, lambdas: Sequence[float] = KATO_LAMBDAS,
                           pairs: SamplePlan | Graph = SamplePlan(),
                           tol: float = SAMPLE_SLACK) -> AuditReport:
    """``||x1 - x2|| <= ||x1 - x2 + lam (y1 - y2)||`` over sampled graph pairs and ``lambdas``."""
    s = A.space
    X1, Y1, X2, Y2 = graph_pairs(A, pairs)
    d, e = X1 - X2, Y1 - Y2
    sweep = Sweep(f"accretive_metric[{A.label}]", tol)
    for lam in lambdas:
        if not lam > 0:
            raise ValueError("lambda must be positive")
        margins = s.norm(d) - s.norm(d + lam * e)
        if not sweep.add(margins, lambda k, lam=lam: {"x1": X1[k], "y1": Y1[k], "x2": X2[k],
                                                      "y2": Y2[k], "lambda": lam}):
            break
    return sweep.report(lambdas=list(lambdas))


def check_accretive_dual(A: Operator, pairs: SamplePlan | Graph = SamplePlan(),
                         tol: float = SAMPLE_SLACK) -> AuditReport:
    """``<y1 - y2, j(x1 - x2)> >= 0`` over sampled graph pairs."""
    s = A.space
    X1, Y1, X2, Y2 = graph_pairs(A, pairs)
    margins = -s.pairing(Y1 - Y2, s.duality_map(X1 - X2))
    sweep = Sweep(f"accretive_dual[{A.label}]", tol)
    sweep.add(margins, lambda k: {"x1": X1[k], "y1": Y1[k], "x2": X2[k], "y2": Y2[k]})
    return sweep.report()


def check_kato_agreement(A: Operator, pairs: SamplePlan | Graph = SamplePlan(),
                         lambdas: Sequence[float] = KATO_LAMBDAS,
                         tol: float = SAMPLE_SLACK) -> AuditReport:
    """Both accretivity characterizations must return the same verdict."""
    metric = check_accretive_metric(A, lambdas, pairs, tol)
    dual = check_accretive_dual(A, pairs, tol)
    agree = metric.passed == dual.passed
    return AuditReport(f"kato_agreement[{A.label}]", "pass" if agree else "fail",
                       0.0 if agree else math.inf, 0.0, metric.samples + dual.samples,
                       None if agree else {"metric": metric.status, "dual": dual.status},
                       {"metric": metric.status, "dual": dual.status})


# pseudocontractions -------------------------------------------------------------


def check_pseudocontraction(T: Mapping, s: LpSpace, pairs: SamplePlan | Graph = SamplePlan(),
                            t_grid: Sequence[float] = (0.1, 0.5, 1.0, 2.0, 10.0),
                            tol: float = SAMPLE_SLACK) -> AuditReport:
    """Metric form ``t||x-y|| <= ||(t+1)(x-y) - (Tx-Ty)||`` and dual form
    ``<Tx-Ty, j(x-y)> <= ||x-y||^2``; passes only if both hold."""
    X, Y = _domain_pairs(T, s, pairs)
    d, e = X - Y, T(X) - T(Y)
    metric = Sweep(f"pseudocontraction_metric[{T.label}]", tol)
    for t in t_grid:
        if not t > 0:
            raise ValueError("t must be positive")
        if not metric.add(t * s.norm(d) - s.norm((t + 1) * d - e),
                          lambda k, t=t: {"x": X[k], "y": Y[k], "t": t}):
            break
    dual = Sweep(f"pseudocontraction_dual[{T.label}]", tol)
    dual.add(s.pairing(e, s.duality_map(d)) - s.norm(d) ** 2, lambda k: {"x": X[k], "y": Y[k]})
    m, du = metric.report(), dual.report()
    status = "pass" if m.passed and du.passed else "fail"
    return AuditReport(f"pseudocontraction[{T.label}]", status,
                       max(m.worst_margin, du.worst_margin), tol, du.samples,
                       du.witness if not du.passed else m.witness,
                       {"metric": m.status, "dual": du.status,
                        "agree": m.passed == du.passed})


def strong_pseudocontraction(T: Mapping, k: float, u) -> Mapping:
    """``U x = k T x + (1 - k) u``."""
    if not 0 < k < 1:
        raise ValueError("k must lie in (0, 1)")
    u = np.asarray(u, dtype=float)
    if T.domain is not None and not T.domain.contains(u):
        raise ValueError("u must lie in the domain of T")
    return Mapping(f"{k}*{T.label}+(1-{k})u", lambda x: k * T(x) + (1 - k) * u, T.domain)


def check_strong_pseudocontraction(U: Mapping, k: float, s: LpSpace,
                                   pairs: SamplePlan | Graph = SamplePlan(),
                                   tol: float = SAMPLE_SLACK) -> AuditReport:
    """``<Ux - Uy, j(x - y)> <= k ||x - y||^2``."""
    X, Y = _domain_pairs(U, s, pairs)
    d = X - Y
    margins = s.pairing(U(X) - U(Y), s.duality_map(d)) - k * s.norm(d) ** 2
    sweep = Sweep(f"strong_pseudocontraction[{U.label}]", tol)
    sweep.add(margins, lambda i: {"x": X[i], "y": Y[i]})
    return sweep.report(k=k)
