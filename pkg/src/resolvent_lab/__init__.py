"""Numerical laboratory for resolvents of accretive operators on l_p spaces.

Approximating curves ``x_n = J_{lam_n A} x``, their metastable indices, the
quantitative moduli that control convergence, and sampled audits of every
inequality those moduli rest on.
"""

from .audit import AuditReport
from .config import ExperimentConfig, serialize, validate
from .metastability import (
    audit_asymptotic_regularity,
    audit_e1j_e2j,
    audit_projection_inequality,
    audit_subclaim1,
    audit_sunny,
    estimate_Q,
    find_metastable_N,
)
from .moduli import (
    Counterfunction,
    ModuliChain,
    beta,
    delta,
    eta1,
    eta2,
    nu1,
    nu1_star,
    omega_tau,
    psi,
    q_mod,
)
from .operators import Operator, check_accretive_dual, check_accretive_metric
from .resolvent import Curve, ResolventError, compute_curve, psc_bridge, resolve
from .space import LpSpace
from .zoo import ZOO_NAMES, make_entry, shipped_zoo

__version__ = "0.1.0"

__all__ = [
    "AuditReport", "Counterfunction", "Curve", "ExperimentConfig", "LpSpace", "ModuliChain",
    "Operator", "ResolventError", "ZOO_NAMES", "audit_asymptotic_regularity", "audit_e1j_e2j",
    "audit_projection_inequality", "audit_subclaim1", "audit_sunny", "beta",
    "check_accretive_dual", "check_accretive_metric", "compute_curve", "delta", "estimate_Q",
    "eta1", "eta2", "find_metastable_N", "make_entry", "nu1", "nu1_star", "omega_tau",
    "psc_bridge", "psi", "q_mod", "resolve", "serialize", "shipped_zoo", "validate",
]
