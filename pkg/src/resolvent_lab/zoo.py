"""Shipped operator families with known zero sets.

Every entry is accretive on its domain in the l_p spaces it lists and comes
with certified zeros and a default base point.  Whole-space operators are
restricted to the closed ball around their primary zero that contains the
base point, so that every curve lives in a set of bounded diameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .operators import (
    Mapping,
    Operator,
    ball,
    box,
    constant_target,
    diagonal_operator,
    id_minus,
    matrix_operator,
    restrict_domain,
    whole_space,
    zero_operator,
)
from .space import LpSpace


@dataclass(frozen=True, eq=False)
class ZooEntry:
    name: str
    operator: Operator
    zeros: list[np.ndarray]
    base_point: np.ndarray

    @property
    def primary_zero(self) -> np.ndarray:
        return self.zeros[0]


def _vec(space: LpSpace, value, default) -> np.ndarray:
    if value is None:
        value = default
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(space.dim, float(arr))
    return space.check(arr).copy()


def _default_x(space: LpSpace) -> np.ndarray:
    base = np.array([0.6, -0.4, 0.3, -0.2, 0.5, -0.1, 0.2, -0.3])
    return np.resize(base, space.dim)


def _restricted(A: Operator, p, x) -> Operator:
    s = A.space
    radius = max(float(s.norm(x - p)), 0.5)
    return restrict_domain(A, p, radius)


def _need_dim2(space: LpSpace, name: str):
    if space.dim < 2:
        raise ValueError(f"{name} needs dim >= 2")


def _zero(space, x=None):
    x = _vec(space, x, _default_x(space))
    A = _restricted(zero_operator(whole_space(space)), np.zeros(space.dim), x)
    e1 = np.zeros(space.dim)
    e1[0] = 0.25
    return ZooEntry("zero", A, [np.zeros(space.dim), e1, x.copy()], x)


def _identity_matrix(space, x=None):
    x = _vec(space, x, _default_x(space))
    A = matrix_operator(np.eye(space.dim), whole_space(space), "identity_matrix")
    return ZooEntry("identity_matrix", _restricted(A, np.zeros(space.dim), x),
                    [np.zeros(space.dim)], x)


def _diag_kernel(space, x=None):
    _need_dim2(space, "diag_kernel")
    x = _vec(space, x, np.resize([1.0, 1.0], space.dim) * 0.5 + np.eye(space.dim)[0] * 0.5)
    m = np.zeros((space.dim, space.dim))
    m[0, 0] = 1.0
    A = matrix_operator(m, whole_space(space), "diag_kernel")
    # the projection of x onto ker A is its own zero; use it as the ball center
    p = x.copy()
    p[0] = 0.0
    e2 = np.zeros(space.dim)
    e2[1] = 0.5
    return ZooEntry("diag_kernel", _restricted(A, p, x), [p, p + 0.5 * e2, p - e2], x)


def _path_laplacian(n: int) -> np.ndarray:
    L = np.zeros((n, n))
    for i in range(n - 1):
        L[i, i] += 1
        L[i + 1, i + 1] += 1
        L[i, i + 1] -= 1
        L[i + 1, i] -= 1
    return L


def _laplacian(space, x=None):
    x = _vec(space, x, _default_x(space))
    A = matrix_operator(_path_laplacian(space.dim), whole_space(space), "laplacian")
    mean = np.full(space.dim, x.mean())
    return ZooEntry("laplacian", _restricted(A, mean, x),
                    [mean, mean + 0.1, mean - 0.05], x)


def _skew(space, x=None):
    if space.p != 2:
        raise ValueError("skew is accretive only for p = 2")
    _need_dim2(space, "skew")
    x = _vec(space, x, _default_x(space))
    m = np.zeros((space.dim, space.dim))
    m[0, 1], m[1, 0] = -1.0, 1.0
    A = matrix_operator(m, whole_space(space), "skew")
    p = x.copy()
    p[:2] = 0.0
    return ZooEntry("skew", _restricted(A, p, x), [p], x)


def _cubic_phi(v):
    return v + v ** 3


def _diag_cubic(space, x=None):
    x = _vec(space, x, _default_x(space))
    A = diagonal_operator(_cubic_phi, whole_space(space), "diag_cubic")
    return ZooEntry("diag_cubic", _restricted(A, np.zeros(space.dim), x),
                    [np.zeros(space.dim)], x)


def _dead_zone_phi(v):
    return np.sign(v) * np.maximum(np.abs(v) - 1.0, 0.0)


def _dead_zone_resolvent(x, lam):
    return np.where(np.abs(x) <= 1.0, x, np.sign(x) * (np.abs(x) + lam) / (1 + lam))


def _dead_zone(space, x=None):
    x = _vec(space, x, np.resize([2.0, -1.5, 0.5], space.dim))
    A = diagonal_operator(_dead_zone_phi, whole_space(space), "dead_zone", _dead_zone_resolvent)
    p = np.clip(x, -1.0, 1.0)
    return ZooEntry("dead_zone", _restricted(A, p, x),
                    [p, 0.5 * p, np.clip(p - 0.2, -1.0, 1.0)], x)


def _identity_map(space, x=None, radius=2.0):
    x = _vec(space, x, _default_x(space))
    dom = ball(space, np.zeros(space.dim), radius)
    T = Mapping("identity", lambda u: u.copy(), dom)
    return ZooEntry("identity_map", id_minus(T, label="identity_map"),
                    [np.zeros(space.dim), x.copy()], x)


def _constant(space, x=None, target=None, radius=2.0):
    c = _vec(space, target, np.resize([0.25, 0.1], space.dim))
    x = _vec(space, x, _default_x(space))
    dom = ball(space, np.zeros(space.dim), radius)
    return ZooEntry("constant", constant_target(c, dom, "constant"), [c], x)


def rotation_matrix(angle: float) -> np.ndarray:
    quarter = angle / (math.pi / 2)
    if abs(quarter - round(quarter)) < 1e-12:
        c, s = [(1, 0), (0, 1), (-1, 0), (0, -1)][round(quarter) % 4]
    else:
        c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=float)


def rotation_mapping(space: LpSpace, angle: float, center, domain=None) -> Mapping:
    """Rotation of the first two coordinates about ``center``."""
    R = rotation_matrix(angle)
    z = space.check(center).copy()

    def fn(u):
        out = np.array(u, dtype=float, copy=True)
        rel = out[..., :2] - z[:2]
        out[..., :2] = z[:2] + rel @ R.T
        return out

    return Mapping(f"rotation({angle:.6g})", fn, domain)


def _rotation(space, x=None, angle=math.pi / 2, center=None, radius=1.0):
    _need_dim2(space, "rotation")
    quarter = angle / (math.pi / 2)
    if space.p != 2 and abs(quarter - round(quarter)) > 1e-12:
        raise ValueError("rotation is nonexpansive for p != 2 only at multiples of pi/2")
    z = _vec(space, center, np.zeros(space.dim))
    dom = ball(space, z, radius)
    T = rotation_mapping(space, angle, z, dom)
    offset = np.zeros(space.dim)
    offset[:2] = (0.6, 0.8)
    x = _vec(space, x, z + 0.8 * radius * offset)
    return ZooEntry("rotation", id_minus(T, label="rotation"), [z], x)


def _proj_contract(space, x=None, kappa=0.5, center=None, lower=-1.0, upper=1.0):
    if not 0 <= kappa <= 1:
        raise ValueError("kappa must lie in [0, 1]")
    lo = _vec(space, lower, -np.ones(space.dim))
    hi = _vec(space, upper, np.ones(space.dim))
    z = _vec(space, center, np.resize([0.3, -0.2], space.dim))
    dom = box(space, lo, hi)
    if not dom.contains(z):
        raise ValueError("center must lie in the box")
    T = Mapping(f"clip({kappa}*contraction)", lambda u: np.clip(z + kappa * (u - z), lo, hi), dom)
    x = _vec(space, x, np.resize([0.9, 0.8, -0.7], space.dim))
    return ZooEntry("proj_contract", id_minus(T, label="proj_contract"), [z], x)


ZOO: dict[str, Callable[..., ZooEntry]] = {
    "zero": _zero,
    "identity_matrix": _identity_matrix,
    "diag_kernel": _diag_kernel,
    "laplacian": _laplacian,
    "skew": _skew,
    "diag_cubic": _diag_cubic,
    "dead_zone": _dead_zone,
    "identity_map": _identity_map,
    "constant": _constant,
    "rotation": _rotation,
    "proj_contract": _proj_contract,
}

ZOO_NAMES = tuple(ZOO)


def make_entry(name: str, space: LpSpace, **params) -> ZooEntry:
    if name not in ZOO:
        raise ValueError(f"unknown operator {name!r}; the zoo has: {', '.join(ZOO_NAMES)}")
    entry = ZOO[name](space, **params)
    if not entry.operator.domain.contains(entry.base_point):
        raise ValueError(f"base point lies outside the domain of {name}")
    return entry


def shipped_zoo(space: LpSpace) -> list[ZooEntry]:
    """All default entries available in ``space``."""
    out = []
    for name in ZOO_NAMES:
        try:
            out.append(make_entry(name, space))
        except ValueError:
            continue
    if space.p == 2 and space.dim >= 2:
        e = make_entry("rotation", space, angle=math.pi / 3)
        out.append(ZooEntry("rotation_pi3", e.operator, e.zeros, e.base_point))
    return out
