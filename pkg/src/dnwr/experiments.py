"""Config-driven convergence studies and their CSV output.

A config is flat ``key = value`` text, one pair per line, lists
comma-separated, ``#`` starts a comment. ``num_subdomains`` and ``a1`` may
be lists; every combination becomes a separate case in the output.
"""
from __future__ import annotations

import csv
import io
import itertools
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError, NonCommensurateError
from .model import (
    INITIALIZERS,
    ConvergenceRecord,
    ProblemSpec,
    build_grid,
    equal_partition,
    initialize_interfaces,
    partition,
)
from .oracle import manufactured_problem
from .orchestrator import ArrangementKind, RunParams, run_dnwr

log = logging.getLogger(__name__)

DATA_HEADER = ["theta", "iteration", "interface_index", "interface_norm", "aggregate_norm"]
SUMMARY_HEADER = ["theta", "iterations_to_tolerance", "stop_reason"]


@dataclass
class ExperimentConfig:
    arrangement: str = "central"
    mode: str = "error"
    domain: tuple = (0.0, 5.0)
    sizes: tuple = ()
    num_subdomains: tuple = (5,)
    cells_per_subdomain: int = 0
    nu: float = 1.0
    a1: tuple = (0.0,)
    a2: float = 0.028
    tau: float = 3.0
    T: float = 10.0
    dx: float = 0.1
    dt: float = 0.2
    theta: tuple = (0.5,)
    init: tuple = ("t2",)
    tolerance: float = 1e-6
    max_iterations: int = 100
    workers: int = 1
    output: str = ""
    name: str = field(default="", compare=False)

    def cases(self):
        """Yield ``(label, config)`` with scalar subdomain count and a1."""
        counts = (len(self.sizes),) if self.sizes else self.num_subdomains
        multi = len(counts) > 1 or len(self.a1) > 1
        for S, a1 in itertools.product(counts, self.a1):
            label = f"num_subdomains={S} a1={_fmt_plain(a1)}" if multi else ""
            yield label, replace(self, num_subdomains=(S,), a1=(a1,))


def _fmt_plain(x):
    return f"{x:g}"


def _floats(key, raw):
    try:
        return tuple(float(v) for v in raw.split(","))
    except ValueError:
        raise ConfigError(key, f"expected number(s), got {raw!r}") from None


def _float(key, raw):
    vals = _floats(key, raw)
    if len(vals) != 1:
        raise ConfigError(key, f"expected a single number, got {raw!r}")
    return vals[0]


def _ints(key, raw):
    try:
        return tuple(int(v) for v in raw.split(","))
    except ValueError:
        raise ConfigError(key, f"expected integer(s), got {raw!r}") from None


def _int(key, raw):
    vals = _ints(key, raw)
    if len(vals) != 1:
        raise ConfigError(key, f"expected a single integer, got {raw!r}")
    return vals[0]


def _names(key, raw):
    return tuple(v.strip() for v in raw.split(",") if v.strip())


_PARSERS = {
    "arrangement": lambda k, v: v.strip(),
    "mode": lambda k, v: v.strip(),
    "domain": _floats,
    "sizes": _floats,
    "num_subdomains": _ints,
    "cells_per_subdomain": _int,
    "nu": _float,
    "a1": _floats,
    "a2": _float,
    "tau": _float,
    "T": _float,
    "dx": _float,
    "dt": _float,
    "theta": _floats,
    "init": _names,
    "tolerance": _float,
    "max_iterations": _int,
    "workers": _int,
    "output": lambda k, v: v.strip(),
}


def parse_config(text, name=""):
    """Parse ``key = value`` text into a validated ExperimentConfig."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(key, f"unknown key; valid keys are {', '.join(_PARSERS)}")
        values[key] = _PARSERS[key](key, raw)
    cfg = ExperimentConfig(name=name, **values)
    validate(cfg)
    return cfg


def validate(cfg):
    try:
        arrangement = ArrangementKind.parse(cfg.arrangement)
    except ValueError as exc:
        raise ConfigError("arrangement", str(exc)) from None
    if cfg.mode not in ("error", "full"):
        raise ConfigError("mode", f"must be 'error' or 'full', got {cfg.mode!r}")
    if len(cfg.domain) != 2 or not cfg.domain[0] < cfg.domain[1]:
        raise ConfigError("domain", f"expected 'x_left, x_right' with x_left < x_right, got {cfg.domain}")
    for key in ("nu", "tau", "T", "dx", "dt", "tolerance"):
        if not getattr(cfg, key) > 0:
            raise ConfigError(key, f"must be positive, got {getattr(cfg, key)}")
    if cfg.max_iterations < 1:
        raise ConfigError("max_iterations", "must be at least 1")
    if cfg.workers < 1:
        raise ConfigError("workers", "must be at least 1")
    if any(not 0 < th <= 1 for th in cfg.theta) or not cfg.theta:
        raise ConfigError("theta", f"every value must lie in (0, 1], got {cfg.theta}")
    if any(s <= 0 for s in cfg.sizes):
        raise ConfigError("sizes", "widths must be positive")
    if cfg.sizes and cfg.cells_per_subdomain:
        raise ConfigError("cells_per_subdomain", "only applies to equal splits, not explicit sizes")
    for name in cfg.init:
        if name not in INITIALIZERS:
            raise ConfigError("init", f"unknown initializer {name!r}; choose from {', '.join(INITIALIZERS)}")
    counts = (len(cfg.sizes),) if cfg.sizes else cfg.num_subdomains
    for S in counts:
        try:
            arrangement.check(S)
        except ValueError as exc:
            raise ConfigError("num_subdomains" if not cfg.sizes else "sizes", str(exc)) from None
        if len(cfg.init) not in (1, S - 1):
            raise ConfigError("init", f"need 1 or {S - 1} initializers for {S} subdomains, got {len(cfg.init)}")
    # commensurability is a config error too: check it up front
    for label, case in cfg.cases():
        try:
            _setup(case)
        except NonCommensurateError as exc:
            raise ConfigError("dt" if "/dt" in str(exc) else "dx", str(exc)) from None
        except ValueError as exc:
            raise ConfigError("sizes" if cfg.sizes else "num_subdomains", str(exc)) from None


def _setup(case):
    """Problem, grid, decomposition and initial traces for a single case."""
    S = len(case.sizes) if case.sizes else case.num_subdomains[0]
    a1 = case.a1[0]
    x_left, x_right = case.domain
    if case.mode == "error":
        spec = ProblemSpec.error_equation(
            nu=case.nu, a1=a1, a2=case.a2, tau=case.tau, T=case.T,
            x_left=x_left, x_right=x_right,
        )
    else:
        spec = manufactured_problem(
            nu=case.nu, a1=a1, a2=case.a2, tau=case.tau, domain=case.domain, T=case.T,
        )
    dx = case.dx
    if case.cells_per_subdomain:
        dx = (x_right - x_left) / (S * case.cells_per_subdomain)
    grid = build_grid(spec, dx, case.dt)
    decomp = partition(grid, case.sizes) if case.sizes else equal_partition(grid, S)
    traces = initialize_interfaces(grid, decomp, list(case.init))
    return spec, grid, decomp, traces


@dataclass
class CaseResult:
    label: str
    records: dict  # theta -> ConvergenceRecord


def run_case(case):
    spec, grid, decomp, traces = _setup(case)
    records = {}
    for theta in case.theta:
        params = RunParams(
            theta=theta, tolerance=case.tolerance, max_iterations=case.max_iterations,
            mode=case.mode, workers=case.workers,
        )
        result = run_dnwr(spec, grid, decomp, case.arrangement, params, traces)
        log.info("theta=%g: %s after %d iterations", theta,
                 result.record.stop_reason, result.record.iteration_count)
        records[theta] = result.record
    return records


def run_experiment(config, output=None):
    """Run every case and theta of ``config``; write the CSV if a path is known.

    Returns the list of CaseResult.
    """
    results = [CaseResult(label, run_case(case)) for label, case in config.cases()]
    path = output or config.output
    if path:
        Path(path).write_text(format_csv(results, config.tolerance), encoding="utf-8", newline="")
    return results


# -- CSV ---------------------------------------------------------------------

def _g17(x):
    return format(float(x), ".17g")


def format_csv(results, tolerance):
    buf = io.StringIO()
    buf.write(f"# tolerance = {_g17(tolerance)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    for n, case in enumerate(results):
        if n:
            buf.write("\n")
        if case.label:
            buf.write(f"# case: {case.label}\n")
        writer.writerow(DATA_HEADER)
        for theta, rec in case.records.items():
            for k, norms, agg in zip(rec.iterations, rec.interface_norms, rec.aggregate):
                for i, v in enumerate(norms):
                    writer.writerow([_g17(theta), k, i + 1, _g17(v), _g17(agg)])
        buf.write("\n")
        writer.writerow(SUMMARY_HEADER)
        for theta, rec in case.records.items():
            hit = rec.iterations_to_tolerance()
            writer.writerow([_g17(theta), hit if hit is not None else rec.iteration_count,
                             rec.stop_reason])
    return buf.getvalue()


def read_csv(text):
    """Parse output of :func:`format_csv` back into CaseResult objects."""
    tolerance = float("nan")
    results = []
    label = None
    section = None
    rows = {}
    for line in text.splitlines():
        if line.startswith("# tolerance = "):
            tolerance = float(line.split("=", 1)[1])
        elif line.startswith("# case: "):
            label = line[len("# case: "):]
        elif not line.strip():
            continue
        elif line.split(",") == DATA_HEADER:
            results.append(CaseResult(label or "", {}))
            label, section, rows = None, "data", {}
        elif line.split(",") == SUMMARY_HEADER:
            section = "summary"
            for theta, by_k in rows.items():
                rec = ConvergenceRecord(tolerance=tolerance)
                for k in sorted(by_k):
                    rec.append(k, [v for _, v in sorted(by_k[k])])
                results[-1].records[theta] = rec
        elif section == "data":
            theta, k, i, v = line.split(",")[:4]
            rows.setdefault(float(theta), {}).setdefault(int(k), []).append((int(i), float(v)))
        elif section == "summary":
            theta, _, reason = line.split(",")
            rec = results[-1].records.setdefault(float(theta), ConvergenceRecord(tolerance))
            rec.stop_reason = reason
    return results


# -- presets -------------------------------------------------------------------

_LONG = "tau = 3\nT = 10\ndx = 0.1\ndt = 0.2\n"
_SHORT = "tau = 0.03\nT = 0.1\ndx = 0.1\ndt = 0.001\n"
_BASE = "mode = error\ndomain = 0, 5\nnum_subdomains = 5\nnu = 1\na1 = 0\na2 = 0.028\ninit = t2\n"
_UNIT = "tau = 0.3\nT = 1\ndx = 0.1\ndt = 0.01\n"

PRESETS = {}


def _preset(name, description, text):
    PRESETS[name] = (description, text)


for _n, _arr in ((1, "sweep"), (2, "redblack"), (3, "central")):
    _preset(f"arr{_n}-short", f"arrangement {_n} ({_arr}), 5 equal strips of (0,5), "
            "T=0.1, tau=0.03, dt=0.001, h0=t^2, theta=0.5",
            f"arrangement = {_arr}\n{_BASE}theta = 0.5\n{_SHORT}")
    _preset(f"arr{_n}-long", f"arrangement {_n} ({_arr}), 5 equal strips of (0,5), "
            "T=10, tau=3, dt=0.2, h0=t^2, theta=0.5",
            f"arrangement = {_arr}\n{_BASE}theta = 0.5\n{_LONG}")

_preset("subdomain-sweep",
        "central-outward, S in {3,5,7} equal strips of (0,5) with 10 cells each, "
        "T=0.1, tau=0.03, dt=0.001, a1 in {0,1}, theta=0.5",
        "arrangement = central\nmode = error\ndomain = 0, 5\nnum_subdomains = 3, 5, 7\n"
        "cells_per_subdomain = 10\nnu = 1\na1 = 0, 1\na2 = 0.028\ninit = t2\ntheta = 0.5\n"
        "tau = 0.03\nT = 0.1\ndt = 0.001\n")
_preset("unequal-sizes",
        "central-outward, sizes 1.5, 0.5, 1, 0.5, 1.5, T=1, tau=0.3, "
        "dt=0.01 (reconstructed), a1 in {0,1}, theta in {0.3,0.5,0.7}",
        "arrangement = central\nmode = error\ndomain = 0, 5\nsizes = 1.5, 0.5, 1, 0.5, 1.5\n"
        f"nu = 1\na1 = 0, 1\na2 = 0.028\ninit = t2\ntheta = 0.3, 0.5, 0.7\n{_UNIT}")
_preset("distinct-inits",
        "central-outward, 5 equal strips, h1=t^2, h2=t, h3=sin(t), h4=piecewise, "
        "T=1, tau=0.3, dt=0.01 (reconstructed), a1 in {0,1}, theta in {0.3,0.5,0.7}",
        "arrangement = central\nmode = error\ndomain = 0, 5\nnum_subdomains = 5\n"
        "nu = 1\na1 = 0, 1\na2 = 0.028\ninit = t2, t, sin, piecewise\n"
        f"theta = 0.3, 0.5, 0.7\n{_UNIT}")
_preset("unequal-plus-distinct",
        "central-outward, sizes 1.5, 0.5, 1, 0.5, 1.5 and h1=t^2, h2=t, h3=sin(t), "
        "h4=piecewise, T=1, tau=0.3, dt=0.01 (reconstructed), a1 in {0,1}, theta in {0.3,0.5,0.7}",
        "arrangement = central\nmode = error\ndomain = 0, 5\nsizes = 1.5, 0.5, 1, 0.5, 1.5\n"
        "nu = 1\na1 = 0, 1\na2 = 0.028\ninit = t2, t, sin, piecewise\n"
        f"theta = 0.3, 0.5, 0.7\n{_UNIT}")
_preset("theta-sweep",
        "central-outward, 5 equal strips, T=10, tau=3, dt=0.2, theta in {0.1,...,0.9}",
        f"arrangement = central\n{_BASE}theta = 0.1, 0.3, 0.5, 0.7, 0.9\n{_LONG}")
_preset("two-subdomain-twostep",
        "two equal strips of (0,5), Dirichlet-Neumann, T=10, tau=3, dt=0.2, theta=0.5",
        "arrangement = sweep\nmode = error\ndomain = 0, 5\nnum_subdomains = 2\nnu = 1\n"
        f"a1 = 0\na2 = 0.028\ninit = t2\ntheta = 0.5\n{_LONG}")


def list_presets():
    """``(name, description)`` for every registered preset."""
    return [(name, desc) for name, (desc, _) in PRESETS.items()]


def preset_text(name):
    try:
        return PRESETS[name][1]
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; run list-presets") from None


def load_config(source):
    """Config from a preset name or a path to a ``key = value`` file."""
    if source in PRESETS:
        return parse_config(preset_text(source), name=source)
    path = Path(source)
    if not path.is_file():
        raise ConfigError("config", f"{source!r} is neither a preset nor a readable file")
    return parse_config(path.read_text(encoding="utf-8"), name=path.stem)


def iterations_summary(results):
    """``{(label, theta): iterations_to_tolerance or None}``."""
    return {
        (case.label, theta): rec.iterations_to_tolerance()
        for case in results for theta, rec in case.records.items()
    }


__all__ = [
    "ExperimentConfig", "PRESETS", "format_csv", "iterations_summary", "list_presets",
    "load_config", "parse_config", "preset_text", "read_csv", "run_experiment",
]
