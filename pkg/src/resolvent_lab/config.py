"""Experiment configuration: INI sections of ``key = value`` lines.

Example::

    [space]
    p = 2
    dim = 3

    [operator]
    name = rotation        ; a zoo entry, or "zoo" for every shipped entry
    angle = 1.5707963267948966

    [base_point]
    x = 0.5, 0.1, 0.0      ; optional, defaults to the entry's base point

    [sequence]
    kind = lambda          ; lambda | t
    formula = linear       ; linear | quadratic (lambda), harmonic (t)
    n_max = 2000

    [moduli]
    b = 2                  ; optional, must bound the domain diameter
    eta = lp               ; lp | quadratic
    tau = lp               ; lp | linear
    p_fn = placeholder     ; placeholder | identity
    s_fn = identity        ; identity | double

    [experiment]
    epsilons = 0.1, 0.01
    counterfunctions = const:1, identity, affine:2:3
    seed = 0
    samples = 1000

    [tolerances]
    resolvent = 1e-10
    audit = 1e-8
    lambda_tail = 1e4

Only ``[space]`` is required.  :func:`validate` never raises; it collects
every problem with its line number.
"""

from __future__ import annotations

import configparser
import inspect
import math
import re
from dataclasses import dataclass, replace

from .moduli import Counterfunction
from .space import LpSpace
from .zoo import ZOO, ZOO_NAMES, ZooEntry, make_entry, shipped_zoo

SEQUENCES = {"lambda": ("linear", "quadratic"), "t": ("harmonic",)}
ETA_LABELS = ("lp", "quadratic")
TAU_LABELS = ("lp", "linear")
P_FN_LABELS = ("placeholder", "identity")
S_FN_LABELS = ("identity", "double")
SECTIONS = ("space", "operator", "base_point", "sequence", "moduli", "experiment", "tolerances")
ZOO_ALL = "zoo"


@dataclass(frozen=True)
class ExperimentConfig:
    p: float
    dim: int
    operator: str = ZOO_ALL
    params: tuple[tuple[str, float | tuple[float, ...]], ...] = ()
    x: tuple[float, ...] | None = None
    seq_kind: str = "lambda"
    seq_formula: str = "linear"
    n_max: int = 2000
    b: int | None = None
    eta: str = "lp"
    tau: str = "lp"
    p_fn: str = "placeholder"
    s_fn: str = "identity"
    epsilons: tuple[float, ...] = (0.1, 0.01)
    counterfunctions: tuple[str, ...] = ("const:1", "identity", "affine:2:3")
    seed: int = 0
    samples: int = 1000
    tol_resolvent: float = 1e-10
    tol_audit: float = 1e-8
    lambda_tail: float = 1e4

    @property
    def space(self) -> LpSpace:
        return LpSpace(self.p, self.dim)

    @property
    def zoo_mode(self) -> bool:
        return self.operator == ZOO_ALL

    def entries(self) -> list[ZooEntry]:
        """Operators selected by the config, in a fixed order."""
        if self.zoo_mode:
            return shipped_zoo(self.space)
        kw = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params}
        if self.x is not None:
            kw["x"] = list(self.x)
        return [make_entry(self.operator, self.space, **kw)]

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("\n".join(errors))
        self.errors = errors


def _line_index(text: str) -> dict[tuple[str, str], int]:
    """(section, key) -> 1-based line number; sections map under key ''."""
    where: dict[tuple[str, str], int] = {}
    section = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            where.setdefault((section, ""), i)
            continue
        m = re.match(r"([^=:;#\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            where.setdefault((section, m.group(1).strip().lower()), i)
    return where


def _floats(value: str) -> tuple[float, ...]:
    return tuple(float(v) for v in value.replace(",", " ").split())


def _entry_params(name: str) -> set[str]:
    sig = inspect.signature(ZOO[name])
    return {k for k in sig.parameters if k not in ("space", "x")}


def validate(text: str) -> tuple[ExperimentConfig | None, list[str]]:
    """Parse config text; returns ``(config, [])`` or ``(None, errors)``."""
    errors: list[str] = []
    where = _line_index(text)
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        msg = str(exc).splitlines()[0]
        return None, [f"line {line}: {msg}" if line else msg]

    def err(section: str, key: str, msg: str):
        line = where.get((section, key)) or where.get((section, ""))
        loc = f"line {line}: " if line else ""
        errors.append(f"{loc}[{section}] {key}: {msg}" if key else f"{loc}[{section}] {msg}")

    for sec in cp.sections():
        if sec not in SECTIONS:
            err(sec, "", f"unknown section; expected one of {', '.join(SECTIONS)}")
    if not cp.has_section("space"):
        return None, ["space section required"] + errors

    fields: dict = {}

    def get(section, key, conv, default=None, check=None, msg=None):
        if not cp.has_option(section, key):
            return default
        raw = cp.get(section, key)
        try:
            val = conv(raw)
        except (ValueError, TypeError):
            err(section, key, f"cannot parse {raw!r}")
            return default
        if check is not None and not check(val):
            err(section, key, msg or f"invalid value {raw!r}")
            return default
        return val

    def known(section, keys):
        if cp.has_section(section):
            for k in cp.options(section):
                if k not in keys:
                    err(section, k, "unknown key")

    # space
    known("space", {"p", "dim"})
    if not cp.has_option("space", "p"):
        err("space", "p", "missing")
    if not cp.has_option("space", "dim"):
        err("space", "dim", "missing")
    p = get("space", "p", float, check=lambda v: v > 1 and math.isfinite(v), msg="p must exceed 1")
    dim = get("space", "dim", int, check=lambda v: v >= 1, msg="dim must be at least 1")

    # operator
    name = ZOO_ALL
    params: dict = {}
    if cp.has_section("operator"):
        name = cp.get("operator", "name", fallback=ZOO_ALL).strip()
        if name != ZOO_ALL and name not in ZOO:
            err("operator", "name", f"unknown operator {name!r}; the zoo has: "
                f"{', '.join(ZOO_NAMES)} (or '{ZOO_ALL}' for all)")
        else:
            allowed = set() if name == ZOO_ALL else _entry_params(name)
            for k in cp.options("operator"):
                if k == "name":
                    continue
                if k not in allowed:
                    err("operator", k, f"not a parameter of {name}"
                        + (f" (parameters: {', '.join(sorted(allowed))})" if allowed else ""))
                    continue
                v = get("operator", k, _floats)
                if v is not None:
                    params[k] = v[0] if len(v) == 1 else v
    fields["operator"] = name
    fields["params"] = tuple(sorted(params.items()))

    # base point
    known("base_point", {"x"})
    x = get("base_point", "x", _floats)
    if x is not None:
        if name == ZOO_ALL:
            err("base_point", "x", "not allowed with the whole zoo")
        elif dim is not None and len(x) != dim:
            err("base_point", "x", f"has {len(x)} coordinates, dim is {dim}")
        else:
            fields["x"] = x

    # sequence
    known("sequence", {"kind", "formula", "n_max"})
    kind = get("sequence", "kind", str.strip, "lambda", lambda v: v in SEQUENCES,
               f"kind must be one of {', '.join(SEQUENCES)}")
    formula = get("sequence", "formula", str.strip, SEQUENCES[kind][0])
    if formula not in SEQUENCES[kind]:
        err("sequence", "formula", f"{kind} sequences are {', '.join(SEQUENCES[kind])}")
        formula = SEQUENCES[kind][0]
    fields["seq_kind"], fields["seq_formula"] = kind, formula
    n_max = get("sequence", "n_max", int, check=lambda v: v >= 1, msg="n_max must be at least 1")
    if n_max is not None:
        fields["n_max"] = n_max

    # moduli
    known("moduli", {"b", "eta", "tau", "p_fn", "s_fn"})
    b = get("moduli", "b", int, check=lambda v: v >= 1, msg="b must be an integer >= 1")
    for key, labels in (("eta", ETA_LABELS), ("tau", TAU_LABELS),
                        ("p_fn", P_FN_LABELS), ("s_fn", S_FN_LABELS)):
        v = get("moduli", key, str.strip, check=lambda v, labels=labels: v in labels,
                msg=f"must be one of {', '.join(labels)}")
        if v is not None:
            fields[key] = v

    # experiment
    known("experiment", {"epsilons", "counterfunctions", "seed", "samples"})
    eps = get("experiment", "epsilons", _floats,
              check=lambda v: len(v) > 0 and all(e > 0 and math.isfinite(e) for e in v),
              msg="epsilons must be positive numbers")
    if eps is not None:
        fields["epsilons"] = eps
    if cp.has_option("experiment", "counterfunctions"):
        labels = tuple(g.strip() for g in cp.get("experiment", "counterfunctions").split(",")
                       if g.strip())
        bad = []
        for g in labels:
            try:
                Counterfunction.parse(g)
            except ValueError as exc:
                bad.append(f"{g!r} ({exc})")
        if bad or not labels:
            err("experiment", "counterfunctions",
                "invalid " + ", ".join(bad) if bad else "empty list")
        else:
            fields["counterfunctions"] = tuple(Counterfunction.parse(g).label for g in labels)
    seed = get("experiment", "seed", int, check=lambda v: 0 <= v < 2**64,
               msg="seed must be an unsigned 64-bit integer")
    if seed is not None:
        fields["seed"] = seed
    samples = get("experiment", "samples", int, check=lambda v: v >= 2, msg="samples must be >= 2")
    if samples is not None:
        fields["samples"] = samples

    # tolerances
    known("tolerances", {"resolvent", "audit", "lambda_tail"})
    for key, fld in (("resolvent", "tol_resolvent"), ("audit", "tol_audit"),
                     ("lambda_tail", "lambda_tail")):
        v = get("tolerances", key, float, check=lambda v: v > 0 and math.isfinite(v),
                msg="must be a positive number")
        if v is not None:
            fields[fld] = v

    if errors or p is None or dim is None:
        return None, errors

    cfg = ExperimentConfig(p=p, dim=dim, b=b, **fields)
    try:
        entries = cfg.entries()
    except ValueError as exc:
        err("operator", "name" if cp.has_section("operator") else "", str(exc))
        return None, errors
    diam = [e.operator.domain.diameter_bound for e in entries]
    if b is not None:
        worst = max((d for d in diam if d is not None), default=0)
        if b < worst:
            err("moduli", "b", f"b = {b} is below the domain diameter bound {worst}")
            return None, errors
    return cfg, []


def load(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        cfg, errors = validate(fh.read())
    if cfg is None:
        raise ConfigError(errors)
    return cfg


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(_fmt(u) for u in v)
    return repr(v)


def serialize(cfg: ExperimentConfig) -> str:
    """Config text that :func:`validate` maps back to ``cfg``."""
    out = ["[space]", f"p = {cfg.p!r}", f"dim = {cfg.dim}", "", "[operator]",
           f"name = {cfg.operator}"]
    out += [f"{k} = {_fmt(v)}" for k, v in cfg.params]
    if cfg.x is not None:
        out += ["", "[base_point]", f"x = {_fmt(cfg.x)}"]
    out += ["", "[sequence]", f"kind = {cfg.seq_kind}", f"formula = {cfg.seq_formula}",
            f"n_max = {cfg.n_max}", "", "[moduli]"]
    if cfg.b is not None:
        out.append(f"b = {cfg.b}")
    out += [f"eta = {cfg.eta}", f"tau = {cfg.tau}", f"p_fn = {cfg.p_fn}", f"s_fn = {cfg.s_fn}",
            "", "[experiment]", f"epsilons = {_fmt(cfg.epsilons)}",
            f"counterfunctions = {', '.join(cfg.counterfunctions)}", f"seed = {cfg.seed}",
            f"samples = {cfg.samples}", "", "[tolerances]",
            f"resolvent = {cfg.tol_resolvent!r}", f"audit = {cfg.tol_audit!r}",
            f"lambda_tail = {cfg.lambda_tail!r}", ""]
    return "\n".join(out)
