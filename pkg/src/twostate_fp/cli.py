"""Command-line entry point.

Subcommands::

    run      single solve, final-state nodal values as CSV (x[,y],G1,G2)
    study    spatial | temporal | decay convergence table as CSV
    weights  backward-Euler CQ weights as CSV (j,g_j,d_j)
    oracle   sine-series reference solution of a 1D homogeneous problem

Settings come from a flat ``key=value`` file (``--config``) whose keys are
the :class:`RunConfig` field names; command-line flags override the file.
Exit status is 0 on success, 2 for configuration errors and 3 when a
solver fails.
"""

from __future__ import annotations

import argparse
import io
import logging
import math
import sys
from dataclasses import dataclass, fields

import numpy as np

from .cq import cq_weights
from .errors import DivergenceError, SolverError
from .harness import _fmt, decay_study, spatial_study, step_count, temporal_study
from .mesh import build_interval_mesh, build_square_mesh
from .problems import INIT_PROJECTIONS, PROBLEM_NAMES, get_problem

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

STUDY_KINDS = ("spatial", "temporal", "decay")
DECAY_REFERENCES = ("doubling", "fine")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    problem: str = "example1"
    alpha1: float | None = None
    alpha2: float | None = None
    a: float | None = None
    n_cells: int = 16
    tau: float | None = None
    T: float | None = None
    t_eval: float | None = None
    study: str | None = None
    # spatial: cell counts; temporal: step counts; decay: final times
    levels: tuple[float, ...] = ()
    output: str = "-"
    init_projection: str | None = None
    tol: float = 1e-12
    decay_steps: int = 10
    reference: str | None = None
    # temporal Richardson rows: "coarse" pairs L with 2L, "fine" pairs L/2 with L
    label: str = "coarse"
    modes: int = 200

    def validate(self) -> RunConfig:
        if self.problem not in PROBLEM_NAMES:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {', '.join(PROBLEM_NAMES)}")
        if self.n_cells < 2:
            raise ConfigError("n_cells must be at least 2")
        if self.tau is not None and not self.tau > 0:
            raise ConfigError("tau must be positive")
        if self.T is not None and not self.T > 0:
            raise ConfigError("T must be positive")
        if self.t_eval is not None and not self.t_eval > 0:
            raise ConfigError("t_eval must be positive")
        if self.T is not None and self.t_eval is not None and self.t_eval > self.T * (1 + 1e-12):
            raise ConfigError(f"t_eval={self.t_eval} exceeds T={self.T}")
        if self.T is not None and self.tau is not None:
            steps = round(self.T / self.tau)
            if steps < 1 or abs(steps * self.tau - self.T) > 1e-9 * self.T:
                raise ConfigError(f"T={self.T} is not an integral multiple of tau={self.tau}")
        if self.study is not None:
            if self.study not in STUDY_KINDS:
                raise ConfigError(f"unknown study {self.study!r}; choose from {', '.join(STUDY_KINDS)}")
            if not self.levels:
                raise ConfigError("levels must be non-empty for a study")
        if self.init_projection is not None and self.init_projection not in INIT_PROJECTIONS:
            raise ConfigError(f"unknown init_projection {self.init_projection!r}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.decay_steps < 1:
            raise ConfigError("decay_steps must be positive")
        if self.modes < 1:
            raise ConfigError("modes must be positive")
        if self.label not in ("coarse", "fine"):
            raise ConfigError(f"label must be coarse or fine, got {self.label!r}")
        return self

    @property
    def final_time(self) -> float | None:
        return self.t_eval if self.t_eval is not None else self.T

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ",".join(_fmt(x) for x in v)
            else:
                v = _fmt(v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"


def _parse_float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {s!r}")
    return v


def _parse_int(s: str) -> int:
    v = float(s)
    if not v.is_integer():
        raise ValueError(f"expected an integer, got {s!r}")
    return int(v)


def _parse_levels(s: str) -> tuple[float, ...]:
    parts = [p.strip() for p in s.split(",") if p.strip()]
    vals = []
    for p in parts:
        if "/" in p:  # allow "0.1/1600"
            num, den = p.split("/", 1)
            vals.append(_parse_float(num) / _parse_float(den))
        else:
            vals.append(_parse_float(p))
    return tuple(vals)


def _parse_ratio(s: str) -> float:
    if "/" in s:
        num, den = s.split("/", 1)
        return _parse_float(num) / _parse_float(den)
    return _parse_float(s)


_PARSERS = {
    "problem": str,
    "alpha1": _parse_ratio,
    "alpha2": _parse_ratio,
    "a": _parse_ratio,
    "n_cells": _parse_int,
    "tau": _parse_ratio,
    "T": _parse_ratio,
    "t_eval": _parse_ratio,
    "study": str,
    "levels": _parse_levels,
    "output": str,
    "init_projection": str,
    "tol": _parse_ratio,
    "decay_steps": _parse_int,
    "reference": str,
    "label": str,
    "modes": _parse_int,
}


def parse_config_text(text: str) -> dict[str, object]:
    """``key=value`` lines; ``#`` starts a comment."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return values


def load_config(text: str | None = None, overrides: dict[str, object] | None = None) -> RunConfig:
    values = parse_config_text(text) if text else {}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**values).validate()


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--print-config", action="store_true", help="echo the merged configuration and exit")
    for name in _PARSERS:
        flag = "--" + name.replace("_", "-")
        p.add_argument(flag, dest=name, default=None, help=f"override {name}")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twostate-fp", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _add_config_flags(sub.add_parser("run", help="single solve; nodal CSV of the final state"))
    study = sub.add_parser("study", help="convergence study CSV")
    _add_config_flags(study)
    study.add_argument("kind", nargs="?", choices=STUDY_KINDS, help="overrides the config's study key")
    _add_config_flags(sub.add_parser("oracle", help="1D homogeneous reference solution"))
    w = sub.add_parser("weights", help="CQ weights CSV")
    w.add_argument("--beta", required=True)
    w.add_argument("--tau", required=True)
    w.add_argument("--count", required=True)
    w.add_argument("--output", default="-")
    return parser


def _config_from_args(args) -> RunConfig:
    text = None
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    overrides: dict[str, object] = {}
    for name, parse in _PARSERS.items():
        raw = getattr(args, name, None)
        if raw is None:
            continue
        try:
            overrides[name] = parse(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for --{name.replace('_', '-')}: {exc}") from None
    if getattr(args, "kind", None):
        overrides["study"] = args.kind
    return load_config(text, overrides)


def _emit(text: str, output: str, stdout) -> None:
    if output == "-":
        stdout.write(text)
        return
    with open(output, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _problem(cfg: RunConfig):
    try:
        return get_problem(cfg.problem, alpha1=cfg.alpha1, alpha2=cfg.alpha2, a=cfg.a)
    except TypeError:
        raise ConfigError(f"{cfg.problem} does not accept the given overrides") from None


def _mesh(dimension: int, n: int):
    return build_interval_mesh(n) if dimension == 1 else build_square_mesh(n)


def _nodal_csv(mesh, g1: np.ndarray, g2: np.ndarray) -> str:
    full1 = np.zeros(mesh.n_nodes)
    full2 = np.zeros(mesh.n_nodes)
    full1[mesh.interior_nodes] = g1
    full2[mesh.interior_nodes] = g2
    buf = io.StringIO()
    buf.write(("x," if mesh.dimension == 1 else "x,y,") + "G1,G2\n")
    for k in range(mesh.n_nodes):
        coords = np.atleast_1d(mesh.nodes[k])
        buf.write(",".join(_fmt(float(v)) for v in (*coords, full1[k], full2[k])) + "\n")
    return buf.getvalue()


def cmd_run(cfg: RunConfig, stdout) -> int:
    from .stepper import run

    if cfg.tau is None or cfg.final_time is None:
        raise ConfigError("run needs tau and T (or t_eval)")
    problem = _problem(cfg)
    steps = step_count(cfg.final_time, cfg.tau)
    mesh = _mesh(problem.dimension, cfg.n_cells)
    state = run(problem, mesh, cfg.tau, steps, cfg.init_projection, keep_states=False, tol=cfg.tol)
    _emit(_nodal_csv(mesh, state.g1, state.g2), cfg.output, stdout)
    return EXIT_OK


def cmd_study(cfg: RunConfig, stdout) -> int:
    if cfg.study is None:
        raise ConfigError("study kind missing (spatial, temporal or decay)")
    if not cfg.levels:
        raise ConfigError("levels must be non-empty for a study")
    problem = _problem(cfg)
    if cfg.study == "decay":
        ref = cfg.reference or "doubling"
        if ref not in DECAY_REFERENCES:
            raise ConfigError(f"decay reference must be one of {', '.join(DECAY_REFERENCES)}")
        table = decay_study(problem, cfg.decay_steps, cfg.levels, cfg.n_cells, cfg.init_projection, ref)
    else:
        t_eval = cfg.final_time
        if t_eval is None:
            raise ConfigError("study needs t_eval (or T)")
        levels = [_parse_int(_fmt(v)) for v in cfg.levels]
        ref = cfg.reference or "auto"
        if cfg.study == "spatial":
            if cfg.tau is None:
                raise ConfigError("spatial study needs tau")
            table = spatial_study(problem, levels, cfg.tau, t_eval, cfg.init_projection, ref)
        else:
            table = temporal_study(problem, cfg.n_cells, levels, t_eval, cfg.init_projection, ref, cfg.label)
    _emit(table.to_csv(), cfg.output, stdout)
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, stdout) -> int:
    from .oracle import oracle_solution

    t = cfg.final_time
    if t is None:
        raise ConfigError("oracle needs t_eval (or T)")
    problem = _problem(cfg)
    if problem.dimension != 1 or not problem.homogeneous:
        raise ConfigError(f"{problem.name} is not a 1D homogeneous problem")
    sol = oracle_solution(problem, cfg.modes, t)
    x = np.linspace(0.0, 1.0, cfg.n_cells + 1)
    g1, g2 = sol.g1(x), sol.g2(x)
    g1[[0, -1]] = 0.0
    g2[[0, -1]] = 0.0
    buf = io.StringIO()
    buf.write(f"# problem={problem.name},alpha1={_fmt(problem.alpha1)},alpha2={_fmt(problem.alpha2)},")
    buf.write(f"a={_fmt(float(problem.a))},t={_fmt(t)},modes={cfg.modes}\n")
    buf.write("x,G1,G2\n")
    for row in zip(x, g1, g2):
        buf.write(",".join(_fmt(float(v)) for v in row) + "\n")
    _emit(buf.getvalue(), cfg.output, stdout)
    return EXIT_OK


def cmd_weights(args, stdout) -> int:
    try:
        beta = _parse_ratio(args.beta)
        tau = _parse_ratio(args.tau)
        count = _parse_int(args.count)
        w = cq_weights(beta, tau, count)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    buf = io.StringIO()
    buf.write("j,g_j,d_j\n")
    for j in range(count):
        buf.write(f"{j},{_fmt(float(w.g[j]))},{_fmt(float(w.d[j]))}\n")
    _emit(buf.getvalue(), args.output, stdout)
    return EXIT_OK


_COMMANDS = {"run": cmd_run, "study": cmd_study, "oracle": cmd_oracle}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed its message
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if getattr(args, "verbose", False):
        logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=stderr)
    try:
        if args.command == "weights":
            return cmd_weights(args, stdout)
        cfg = _config_from_args(args)
        if args.print_config:
            stdout.write(cfg.to_text())
            return EXIT_OK
        return _COMMANDS[args.command](cfg, stdout)
    except (SolverError, DivergenceError, ArithmeticError) as exc:
        stderr.write(f"error: solver failed: {exc}\n")
        return EXIT_SOLVER
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        stderr.write(f"error: {msg}\n")
        return EXIT_CONFIG
    except OSError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
