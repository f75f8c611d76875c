"""``resolvent-lab``: moduli tables, approximating curves, metastable indices
and inequality audits driven by one config file.

Exit codes: 0 when every executed audit passed, 1 when any failed (solver
non-convergence included), 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from . import moduli as M
from .audit import FAIL, AuditReport
from .config import ConfigError, ExperimentConfig, load, serialize
from .metastability import (
    audit_asymptotic_regularity,
    audit_e1j_e2j,
    audit_projection_inequality,
    audit_subclaim1,
    audit_sunny,
    estimate_Q,
    find_metastable_N,
)
from .operators import SamplePlan, check_accretive_dual, check_accretive_metric, check_kato_agreement
from .resolvent import (
    Curve,
    ResolventError,
    check_domain_closure,
    check_resolvent_nonexpansive,
    compute_curve,
)
from .space import (
    LpSpace,
    lp_convexity_modulus,
    lp_smoothness_modulus,
    linear_smoothness_modulus,
    quadratic_convexity_modulus,
    verify_convexity_modulus,
    verify_smoothness_modulus,
)
from .zoo import ZooEntry

COMMANDS = ("moduli", "curve", "metastab", "audit", "all")
OUT_ENV = "RESOLVENT_LAB_OUT"
DEFAULT_OUT = "resolvent_lab_out"

MODULI_COLUMNS = ["quantity", "b", "eps", "lam", "c", "d", "m", "n", "g",
                  "float_value", "exact_value"]
METASTAB_COLUMNS = ["operator", "p", "eps", "g", "N_found", "window_max_gap", "curve_length"]
AUDIT_COLUMNS = ["name", "passed", "worst_margin", "tolerance", "witness"]

CONVEXITY_EPS = (0.1, 0.5, 1.0, 2.0)
SMOOTHNESS_EPS = (0.1, 1.0, 3.0)
PSI_EPS = (0.5, 1.0, 2.0)
OMEGA_EPS = (0.1, 1.0)
E1J_LAMBDAS = (1.0, 10.0)
REGULARITY_HORIZON = 200


def fmt(v) -> str:
    """Deterministic cell text."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


# building blocks from labels ------------------------------------------------------


def sequence_moduli(cfg: ExperimentConfig) -> M.SequenceModuli:
    return {"linear": M.LINEAR_LAMBDA_MODULI, "quadratic": M.QUADRATIC_LAMBDA_MODULI,
            "harmonic": M.HARMONIC_T_MODULI}[cfg.seq_formula]


def exact_lambdas(cfg: ExperimentConfig, length: int) -> list[Fraction]:
    if cfg.seq_kind == "t":
        return [M.lambda_of_t(M.harmonic_t(n)) for n in range(length)]
    f = M.linear_lambda if cfg.seq_formula == "linear" else M.quadratic_lambda
    return [f(n) for n in range(length)]


def moduli_pair(cfg: ExperimentConfig, s: LpSpace):
    eta = lp_convexity_modulus(s) if cfg.eta == "lp" else quadratic_convexity_modulus()
    tau = lp_smoothness_modulus(s) if cfg.tau == "lp" else linear_smoothness_modulus()
    return eta, tau


def _identity_p(eps):
    return eps


def _double_s(d: int) -> int:
    return 2 * d


def make_chain(cfg: ExperimentConfig, b: int, g: M.Counterfunction | None = None) -> M.ModuliChain:
    eta, tau = moduli_pair(cfg, cfg.space)
    return M.ModuliChain(
        b=b, eta=eta, tau=tau,
        p_fn=M.placeholder_p_fn if cfg.p_fn == "placeholder" else _identity_p,
        s_fn=M.identity_s_fn if cfg.s_fn == "identity" else _double_s,
        g=g or M.Counterfunction.parse(cfg.counterfunctions[0]),
    )


def entry_b(cfg: ExperimentConfig, entry: ZooEntry) -> int:
    d = entry.operator.domain.diameter_bound
    return cfg.b if cfg.b is not None else max(int(d or 1), 1)


def _failure(name: str, tol: float, exc: Exception) -> AuditReport:
    return AuditReport(name, FAIL, float("inf"), tol, 0,
                       {"error": type(exc).__name__, "message": str(exc)})


def _guard(name: str, tol: float, fn, /, *args, **kw) -> AuditReport:
    try:
        return replace(fn(*args, **kw), name=name)
    except (ResolventError, ValueError, ArithmeticError) as exc:
        return _failure(name, tol, exc)


# subcommands ----------------------------------------------------------------------


def moduli_rows(cfg: ExperimentConfig, entries: list[ZooEntry]) -> list[list]:
    b = max(entry_b(cfg, e) for e in entries)
    chain = make_chain(cfg, b)
    gamma = sequence_moduli(cfg).gamma
    lams = exact_lambdas(cfg, 3)
    cells = []
    for eps in cfg.epsilons:
        if eps <= 2:
            cells.append(("psi", dict(eps=eps), lambda ex, e=eps: M.psi(b, chain.eta, e, ex)))
            cells.append(("eta1", dict(eps=eps), lambda ex, e=eps: M.eta1(chain, e, ex)))
        cells.append(("omega_tau", dict(eps=eps), lambda ex, e=eps: M.omega_tau(chain.tau, b, e, ex)))
        cells.append(("eta2", dict(eps=eps), lambda ex, e=eps: M.eta2(chain, e, ex)))
        for lam in lams:
            cells.append(("delta", dict(eps=eps, lam=lam),
                          lambda ex, e=eps, l=lam: M.delta(chain, e, l if ex else float(l), ex)))
        for c in range(3):
            cells.append(("beta", dict(eps=eps, c=c),
                          lambda ex, e=eps, c=c: M.beta(chain, gamma, c, e, ex)))
        for c in range(2):
            for d in range(2):
                cells.append(("q", dict(eps=eps, c=c, d=d),
                              lambda ex, e=eps, c=c, d=d: M.q_mod(chain, gamma, c, d, e, ex)))
                cells.append(("nu1", dict(eps=eps, c=c, d=d),
                              lambda ex, e=eps, c=c, d=d: M.nu1(chain, gamma, c, d, e, ex)))
        for label in cfg.counterfunctions:
            ch = make_chain(cfg, b, M.Counterfunction.parse(label))
            for m, n in ((0, 0), (1, 2), (3, 1)):
                cells.append(("nu1_star", dict(eps=eps, m=m, n=n, g=label),
                              lambda ex, e=eps, m=m, n=n, ch=ch:
                              M.nu1_star(ch, gamma, m, n, e, ex)))
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", M.DomainClampWarning)
        for qty, inp, fn in cells:
            value = float(fn(False))
            try:
                exact = fn(True)
            except TypeError:
                exact = None
            rows.append([qty, b, inp.get("eps"), inp.get("lam"), inp.get("c"), inp.get("d"),
                         inp.get("m"), inp.get("n"), inp.get("g"), value, exact])
    return rows


def curve_rows(curve: Curve) -> tuple[list[str], list[list]]:
    dim = curve.points.shape[1]
    header = ["n", "lambda_n"] + [f"x_{i}" for i in range(dim)] + ["residual"]
    rows = [[n, float(lam), *map(float, pt), float(r)]
            for n, (lam, pt, r) in enumerate(zip(curve.lambdas, curve.points, curve.residuals))]
    return header, rows


def metastab_rows(cfg: ExperimentConfig, curves: dict[str, Curve]) -> list[list]:
    s = cfg.space
    rows = []
    for name in sorted(curves):
        for eps in sorted(cfg.epsilons):
            for label in sorted(cfg.counterfunctions):
                r = find_metastable_N(curves[name], s, eps, M.Counterfunction.parse(label))
                rows.append([name, cfg.p, eps, label,
                             "not-found" if r.N is None else r.N,
                             r.window_max_gap, r.curve_length])
    return rows


def global_audits(cfg: ExperimentConfig, entries: list[ZooEntry]) -> list[AuditReport]:
    s = cfg.space
    eta, tau = moduli_pair(cfg, s)
    kw = dict(samples=cfg.samples, seed=cfg.seed)
    out = [_guard(f"convexity[{eta.label},eps={e}]", 1e-9, verify_convexity_modulus, s, eta, e, **kw)
           for e in CONVEXITY_EPS]
    out += [_guard(f"smoothness[{tau.label},eps={e}]", 1e-9, verify_smoothness_modulus, s, tau, e, **kw)
            for e in SMOOTHNESS_EPS]
    out += [_guard(f"psi[{eta.label},eps={e}]", 1e-9, M.verify_psi_inequality, s, eta, e, **kw)
            for e in PSI_EPS]
    out += [_guard(f"omega_tau[{tau.label},eps={e}]", 1e-9, M.verify_omega_tau, s, tau, e, **kw)
            for e in OMEGA_EPS]
    mod = sequence_moduli(cfg)
    n = min(cfg.n_max, 10_000)
    if cfg.seq_kind == "t":
        check, seq = M.check_t_moduli, M.harmonic_t
    else:
        check = M.check_lambda_moduli
        seq = M.linear_lambda if cfg.seq_formula == "linear" else M.quadratic_lambda
    out.append(_guard(f"sequence_moduli[{cfg.seq_kind}/{cfg.seq_formula}]", 0.0, check,
                      seq, mod.rate, mod.gamma, n))
    return out


def entry_audits(cfg: ExperimentConfig, entry: ZooEntry, curve: Curve | None) -> list[AuditReport]:
    """Per-operator audits; the curve-based ones are skipped when ``curve`` is None."""
    A, s, tol = entry.operator, cfg.space, cfg.tol_audit
    name = entry.name
    b = entry_b(cfg, entry)
    chain = make_chain(cfg, b)
    plan = SamplePlan(cfg.samples, cfg.seed)
    small = SamplePlan(min(cfg.samples, 200), cfg.seed)
    rt = cfg.tol_resolvent
    out = [
        _guard(f"accretive_metric[{name}]", 1e-9, check_accretive_metric, A, pairs=plan),
        _guard(f"accretive_dual[{name}]", 1e-9, check_accretive_dual, A, plan),
        _guard(f"kato[{name}]", 1e-9, check_kato_agreement, A, plan),
        _guard(f"resolvent_nonexpansive[{name}]", tol, check_resolvent_nonexpansive, A, 1.0,
               small, entry.zeros, tol, rt),
        _guard(f"domain_closure[{name}]", tol, check_domain_closure, A, pairs=small, tol=tol,
               solver_tol=rt),
    ]
    if curve is None:
        return out
    head = min(len(curve), REGULARITY_HORIZON + 1)
    short = Curve(curve.points[:head], curve.lambdas[:head], curve.base_point,
                  curve.residuals[:head])
    out.append(_guard(f"asymptotic_regularity[{name}]", tol, audit_asymptotic_regularity,
                      short, A, b, tol, rt))
    for k, z in enumerate(entry.zeros):
        out.append(_guard(f"projection_inequality[{name},zero={k}]", tol,
                          audit_projection_inequality, short, A, z, s, tol))
    for eps in cfg.epsilons:
        for lam in E1J_LAMBDAS:
            out.append(_guard(f"e1j_e2j[{name},eps={eps},lam={lam}]", tol, audit_e1j_e2j,
                              A, entry.base_point, lam, entry.primary_zero, chain, eps, tol, rt))
    h = len(curve) - 1
    nu = 16 * b * b / float(curve.lambdas[h])  # twice the gate, clear of rounding
    out.append(_guard(f"subclaim1[{name},h={h}]", tol, audit_subclaim1, A, curve,
                      entry.primary_zero, h, chain, nu, tol, rt))
    try:
        q = estimate_Q(A, entry.base_point, cfg.lambda_tail, rt)
    except (ResolventError, ValueError) as exc:
        out.append(_failure(f"sunny[{name}]", 1e-6, exc))
    else:
        out.append(_guard(f"sunny[{name}]", 1e-6, audit_sunny, A, entry.base_point, q.point,
                          entry.zeros, s, 1e-6, cfg.lambda_tail))
    return out


# orchestration ------------------------------------------------------------------


@dataclass
class RunResult:
    exit_code: int
    files: dict[str, Path] = field(default_factory=dict)
    reports: list[AuditReport] = field(default_factory=list)
    metastab: list[list] = field(default_factory=list)


def _curves(cfg: ExperimentConfig, entries: list[ZooEntry]):
    from .resolvent import lambda_sequence

    lams = lambda_sequence(cfg.seq_kind, cfg.seq_formula, cfg.n_max)
    curves, failures = {}, []
    for e in entries:
        try:
            curves[e.name] = compute_curve(e.operator, e.base_point, lams, cfg.tol_resolvent)
        except ResolventError as exc:
            failures.append(_failure(f"curve[{e.name}]", cfg.tol_resolvent, exc))
    return curves, failures


def run(cfg: ExperimentConfig, command: str = "all", out_dir=None, seed: int | None = None) -> RunResult:
    """Execute ``command`` and write its CSV files plus ``summary.txt`` to ``out_dir``."""
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    if seed is not None:
        cfg = cfg.with_seed(seed)
    out = Path(out_dir or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    todo = COMMANDS[:-1] if command == "all" else (command,)
    entries = cfg.entries()
    result = RunResult(0)
    texts: dict[str, str] = {}
    summary = [f"resolvent-lab {command}", f"operators: {', '.join(e.name for e in entries)}",
               "", "config:", serialize(cfg)]

    curves: dict[str, Curve] = {}
    if {"curve", "metastab", "audit"} & set(todo):
        curves, fails = _curves(cfg, entries)
        result.reports += fails

    if "moduli" in todo:
        rows = moduli_rows(cfg, entries)
        texts["moduli.csv"] = _csv(MODULI_COLUMNS, rows)
        summary.append(f"moduli: {len(rows)} rows")
    if "curve" in todo:
        for name in sorted(curves):
            header, rows = curve_rows(curves[name])
            fname = f"curve_{name}.csv" if cfg.zoo_mode else "curve.csv"
            texts[fname] = _csv(header, rows)
            summary.append(f"curve {name}: {len(rows)} points, max residual "
                           f"{max(r[-1] for r in rows):.3e}")
    if "metastab" in todo:
        rows = metastab_rows(cfg, curves)
        result.metastab = rows
        texts["metastab.csv"] = _csv(METASTAB_COLUMNS, rows)
        summary.append("metastable indices (operator, eps, g -> N):")
        summary += [f"  {r[0]}, {fmt(r[2])}, {r[3]} -> {r[4]}" for r in rows]
    if "audit" in todo:
        reports = global_audits(cfg, entries)
        for e in entries:
            reports += entry_audits(cfg, e, curves.get(e.name))
        result.reports += reports
    if result.reports:
        reports = sorted(result.reports, key=lambda r: r.name)
        result.reports = reports
        texts["audit.csv"] = _csv(AUDIT_COLUMNS, [
            [r.name, r.passed, float(r.worst_margin), float(r.tolerance), r.witness_json()]
            for r in reports])
        failed = [r for r in reports if not r.passed]
        summary.append(f"audits: {len(reports)} run, {len(failed)} failed")
        summary += ["  " + r.line() for r in reports]
        if failed:
            result.exit_code = 1
    summary.append(f"exit code: {result.exit_code}")
    texts["summary.txt"] = "\n".join(summary) + "\n"
    for fname in sorted(texts):
        path = out / fname
        path.write_text(texts[fname], encoding="utf-8")
        result.files[fname] = path
    return result


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="resolvent-lab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="experiment config (INI)")
    ap.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    ap.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        cfg = load(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    res = run(cfg, args.command, args.out, args.seed)
    print((res.files["summary.txt"]).read_text(encoding="utf-8"), end="")
    return res.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
