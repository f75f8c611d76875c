"""Finite-dimensional l_p spaces.

Norms, the normalized duality map, the dual pairing, and explicit moduli of
uniform convexity and smoothness together with sampling verifiers for them.
All vector routines accept arrays of shape ``(..., dim)`` and act on the last
axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .audit import AuditReport, Sweep

#: absolute slack granted to every sampled inequality
SAMPLE_SLACK = 1e-9


@dataclass(frozen=True)
class LpSpace:
    p: float
    dim: int

    def __post_init__(self):
        if not (isinstance(self.p, (int, float)) and math.isfinite(self.p) and self.p > 1):
            raise ValueError("p must exceed 1")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError("dim must be a positive integer")

    @property
    def q(self) -> float:
        """Conjugate exponent."""
        return self.p / (self.p - 1)

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise ValueError(f"dimension mismatch: expected last axis {self.dim}, got shape {x.shape}")
        return x

    def norm(self, x):
        return _lp_norm(self.check(x), self.p)

    def dual_norm(self, xstar):
        return _lp_norm(self.check(xstar), self.q)

    def duality_map(self, x) -> np.ndarray:
        """Normalized duality map ``||x||^(2-p) sign(x_i) |x_i|^(p-1)``; j(0) = 0."""
        x = self.check(x)
        if self.p == 2:
            return x.copy()
        n = _lp_norm(x, self.p)
        n_col = np.asarray(n)[..., None]
        safe = np.where(n_col > 0, n_col, 1.0)
        u = x / safe
        j = n_col * np.sign(u) * np.abs(u) ** (self.p - 1)
        return np.where(n_col > 0, j, 0.0)

    def pairing(self, y, xstar):
        """``<y, x*>``, the coordinate dot product."""
        y, xstar = self.check(y), self.check(xstar)
        return np.sum(y * xstar, axis=-1)

    # samplers -------------------------------------------------------------

    def random_directions(self, rng: np.random.Generator, n: int, sparse: float = 0.25) -> np.ndarray:
        """Unit vectors; a ``sparse`` fraction has random coordinates zeroed."""
        g = rng.standard_normal((n, self.dim))
        if self.dim > 1 and sparse > 0:
            mask = rng.random((n, self.dim)) < 0.5
            pick = rng.random(n) < sparse
            mask[~pick] = False
            # keep at least one coordinate alive
            mask[np.arange(n), rng.integers(0, self.dim, n)] = False
            g[mask] = 0.0
        nrm = _lp_norm(g, self.p)
        g[nrm == 0] = 1.0
        return g / _lp_norm(g, self.p)[:, None]

    def random_ball(self, rng: np.random.Generator, n: int, radius: float = 1.0,
                    center=None, boundary: float = 0.2) -> np.ndarray:
        """Points of the closed ball; a ``boundary`` fraction lies on the sphere."""
        u = self.random_directions(rng, n)
        r = radius * rng.random(n) ** (1.0 / self.dim)
        r[rng.random(n) < boundary] = radius
        pts = u * r[:, None]
        if center is not None:
            pts = pts + self.check(center)
        return pts


def _lp_norm(x: np.ndarray, p: float):
    a = np.abs(x)
    m = np.max(a, axis=-1)
    safe = np.where(m > 0, m, 1.0)
    s = np.sum((a / safe[..., None]) ** p, axis=-1)
    out = np.where(m > 0, safe * s ** (1.0 / p), 0.0)
    return float(out) if out.ndim == 0 else out


# moduli ---------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexityModulus:
    """eta: (0, 2] -> (0, 1]."""

    label: str
    fn: Callable

    def __call__(self, eps):
        if not 0 < eps <= 2:
            raise ValueError(f"convexity modulus evaluated outside (0, 2]: {eps}")
        return self.fn(eps)


@dataclass(frozen=True)
class SmoothnessModulus:
    """tau: (0, inf) -> (0, inf)."""

    label: str
    fn: Callable

    def __call__(self, eps):
        if not eps > 0:
            raise ValueError(f"smoothness modulus evaluated at non-positive {eps}")
        return self.fn(eps)


def _rational(p: float) -> Fraction:
    return Fraction(repr(float(p)))


def quadratic_convexity_modulus(coef=Fraction(1, 8)) -> ConvexityModulus:
    """eta(eps) = coef * eps^2; rational-valued on rational input."""
    coef = Fraction(coef)
    return ConvexityModulus(f"quadratic({coef})", lambda e: coef * e * e)


def linear_smoothness_modulus(coef=Fraction(1)) -> SmoothnessModulus:
    """tau(eps) = coef * eps; rational-valued on rational input."""
    coef = Fraction(coef)
    return SmoothnessModulus(f"linear({coef})", lambda e: coef * e)


def _clarkson_eta(e: float, p: float) -> float:
    """``1 - (1 - (e/2)^p)^(1/p)`` without cancellation at small e."""
    a = (e / 2) ** p
    if a >= 1:
        return 1.0
    return -math.expm1(math.log1p(-a) / p)


def lp_convexity_modulus(s: LpSpace) -> ConvexityModulus:
    """Clarkson-type bound for p >= 2, ``(p-1) eps^2 / 8`` below 2."""
    p = s.p
    if p >= 2:
        return ConvexityModulus(f"lp({p})", lambda e: _clarkson_eta(float(e), p))
    coef = (_rational(p) - 1) / 8
    return ConvexityModulus(f"lp({p})", lambda e: coef * e * e)


def lp_smoothness_modulus(s: LpSpace) -> SmoothnessModulus:
    """``eps/(p-1)`` for p >= 2 and ``(p eps / 2)^(1/(p-1))`` for 1 < p <= 2."""
    p = s.p
    if p >= 2:
        inv = 1 / (_rational(p) - 1)
        return SmoothnessModulus(f"lp({p})", lambda e: inv * e)
    return SmoothnessModulus(f"lp({p})", lambda e: (p * float(e) / 2) ** (1 / (p - 1)))


# sampling verifiers ---------------------------------------------------------


def separated_pairs(s: LpSpace, rng: np.random.Generator, n: int, eps: float,
                    radius: float = 1.0, max_attempts: int | None = None):
    """Rejection-sample pairs with ``||x||, ||y|| <= radius`` and ``||x - y|| >= eps``.

    Proposals mix sphere chords (both endpoints on the sphere), interior pairs
    and antipodal pairs, the only admissible pairs at ``eps = 2 radius`` in a
    strictly convex ball.  Returns ``(X, Y, attempts)``; fewer than ``n`` rows
    means the attempt budget (default ``100 n``) was exhausted.
    """
    max_attempts = 100 * n if max_attempts is None else max_attempts
    xs, ys, got, attempts = [], [], 0, 0
    while got < n and attempts < max_attempts:
        batch = min(max(2 * (n - got), 64), max_attempts - attempts)
        attempts += batch
        x, y = _pair_proposals(s, rng, batch, radius)
        ok = (s.norm(x - y) >= eps) & (s.norm(x) <= radius) & (s.norm(y) <= radius)
        xs.append(x[ok])
        ys.append(y[ok])
        got += int(ok.sum())
    X = np.concatenate(xs)[:n] if xs else np.empty((0, s.dim))
    Y = np.concatenate(ys)[:n] if ys else np.empty((0, s.dim))
    return X, Y, attempts


def _pair_proposals(s: LpSpace, rng, batch: int, radius: float):
    kind = rng.integers(0, 3, batch)
    x = s.random_directions(rng, batch) * radius
    d = s.random_directions(rng, batch, sparse=0.0)
    # chord: y = x - h d with h the far end of the segment inside the ball
    lo, hi = np.zeros(batch), np.full(batch, 2.0 * radius)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        inside = s.norm(x - mid[:, None] * d) <= radius
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    chord_y = x - lo[:, None] * d
    interior_x = s.random_ball(rng, batch, radius)
    interior_y = s.random_ball(rng, batch, radius)
    X = np.where((kind == 1)[:, None], interior_x, x)
    Y = np.select([(kind == 0)[:, None], (kind == 1)[:, None]], [chord_y, interior_y], -x)
    # clip round-off so every proposal sits in the closed ball
    for A in (X, Y):
        nrm = s.norm(A)
        over = nrm > radius
        A[over] *= (radius / nrm[over])[:, None]
    return X, Y


def verify_convexity_modulus(s: LpSpace, eta: ConvexityModulus, eps: float,
                             samples: int = 10_000, seed: int = 0,
                             tol: float = SAMPLE_SLACK) -> AuditReport:
    """Check ``||(x+y)/2|| <= 1 - eta(eps)`` on unit-ball pairs at distance >= eps."""
    if not 0 < eps <= 2:
        raise ValueError("eps must lie in (0, 2]")
    rng = np.random.default_rng(seed)
    X, Y, attempts = separated_pairs(s, rng, samples, eps)
    bound = 1 - float(eta(eps))
    margins = s.norm(0.5 * (X + Y)) - bound if len(X) else np.empty(0)
    sweep = Sweep(f"convexity_modulus[p={s.p},eps={eps}]", tol)
    sweep.add(margins, lambda k: {"x": X[k], "y": Y[k], "bound": bound})
    return sweep.report(eta=eta.label, requested=samples, attempts=attempts,
                        exhausted=len(X) < samples)


def verify_smoothness_modulus(s: LpSpace, tau: SmoothnessModulus, eps: float,
                              samples: int = 10_000, seed: int = 0,
                              tol: float = SAMPLE_SLACK) -> AuditReport:
    """Check ``||x+y|| + ||x-y|| <= 2 + eps ||y||`` for unit x and ``||y|| <= tau(eps)``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    rng = np.random.default_rng(seed)
    t = float(tau(eps))
    X = s.random_directions(rng, samples)
    U = s.random_directions(rng, samples)
    r = rng.random(samples)
    r[rng.random(samples) < 0.5] = 1.0
    Y = U * (t * r)[:, None]
    # deterministic head of the plan: y = 0 and y collinear with x at full size
    k = min(samples, 3)
    Y[:k] = (t * np.array([0.0, 1.0, -1.0])[:k])[:, None] * X[:k]
    lhs = s.norm(X + Y) + s.norm(X - Y)
    margins = lhs - (2 + eps * s.norm(Y))
    sweep = Sweep(f"smoothness_modulus[p={s.p},eps={eps}]", tol)
    sweep.add(margins, lambda i: {"x": X[i], "y": Y[i], "tau": t})
    return sweep.report(tau=tau.label, tau_value=t)
