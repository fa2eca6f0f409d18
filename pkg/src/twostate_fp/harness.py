"""Spatial, temporal and small-time convergence studies.

Errors are measured against the exact solution when the problem has one and
otherwise as differences of successive refinements.  Rates are
``ln(E_prev / E) / |ln(p / p_prev)|`` for the study parameter ``p`` (1/h,
number of steps, or final time), so halving ``h`` or ``tau`` and shrinking
``t`` by a decade all give positive rates for decreasing errors.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field

from .fem import FemFunction, assemble_mass, l2_error, mass_norm
from .mesh import build_interval_mesh, build_square_mesh
from .problems import ProblemSpec
from .stepper import run

log = logging.getLogger(__name__)

CSV_HEADER = "param,err_G1,rate_G1,err_G2,rate_G2"


@dataclass
class ConvergenceTable:
    kind: str  # spatial | temporal | decay
    params: list[float]
    err_g1: list[float]
    err_g2: list[float]
    metadata: dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not len(self.params) == len(self.err_g1) == len(self.err_g2):
            raise ValueError("params and errors must have equal length")

    @property
    def rate_g1(self) -> list[float | None]:
        return observed_rates(self.params, self.err_g1)

    @property
    def rate_g2(self) -> list[float | None]:
        return observed_rates(self.params, self.err_g2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# " + ",".join(f"{k}={_fmt(v)}" for k, v in self.metadata.items()) + "\n")
        buf.write(CSV_HEADER + "\n")
        for p, e1, r1, e2, r2 in zip(self.params, self.err_g1, self.rate_g1, self.err_g2, self.rate_g2):
            buf.write(",".join(_fmt(v) for v in (p, e1, r1, e2, r2)) + "\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        # shortest round-trip form; whole numbers print without ".0"
        return str(int(v)) if v.is_integer() and abs(v) < 2**53 else repr(v)
    return str(v)


def observed_rates(params, errors) -> list[float | None]:
    """Rates between consecutive levels; ``None`` on the first row."""
    rates: list[float | None] = [None]
    for k in range(1, len(errors)):
        e0, e1 = errors[k - 1], errors[k]
        p0, p1 = params[k - 1], params[k]
        if e0 <= 0 or e1 <= 0:
            raise ValueError(f"non-positive error at level {k}; degenerate configuration")
        rates.append(math.log(e0 / e1) / abs(math.log(p1 / p0)))
    return rates


def _mesh(dimension: int, n: int):
    return build_interval_mesh(n) if dimension == 1 else build_square_mesh(n)


def step_count(t_end: float, tau: float) -> int:
    steps = round(t_end / tau)
    if steps < 1 or abs(steps * tau - t_end) > 1e-9 * t_end:
        raise ValueError(f"t={t_end} is not an integral number of steps of size {tau}")
    return int(steps)


def _check_doubling(levels, what: str) -> None:
    if len(levels) < 1:
        raise ValueError(f"{what} must be non-empty")
    for a, b in zip(levels, levels[1:]):
        if b != 2 * a:
            raise ValueError(f"{what} must be successive doublings, got {list(levels)}")


def _check_alignment(problem: ProblemSpec, n: int) -> None:
    fields = [problem.g1_0, problem.g2_0] + [f for src in (problem.f1, problem.f2) for _, f in src.terms]
    for b in {b for f in fields for b in f.breaks}:
        if abs(b * n - round(b * n)) > 1e-12:
            raise ValueError(f"n={n} does not align the mesh with the discontinuity at {b}")


def _metadata(problem: ProblemSpec, kind: str, t_eval: float, **extra) -> dict[str, object]:
    meta: dict[str, object] = {
        "problem": problem.name,
        "alpha1": problem.alpha1,
        "alpha2": problem.alpha2,
        "a": problem.a,
        "t": t_eval,
        "kind": kind,
    }
    meta.update(extra)
    return meta


def _use_exact(problem: ProblemSpec, reference: str) -> bool:
    if reference == "auto":
        return problem.exact is not None
    if reference == "exact":
        if problem.exact is None:
            raise ValueError(f"{problem.name} has no exact solution")
        return True
    if reference == "richardson":
        return False
    raise ValueError(f"unknown reference {reference!r}")


def spatial_study(
    problem: ProblemSpec,
    n_levels,
    tau_fixed: float,
    t_eval: float,
    init_projection: str | None = None,
    reference: str = "auto",
) -> ConvergenceTable:
    """Errors at ``t_eval`` for each cell count in ``n_levels``.

    Without an exact solution the error at ``n`` is the L2 difference to
    the solution at ``2n`` (one extra, finer level is computed).
    """
    n_levels = [int(n) for n in n_levels]
    _check_doubling(n_levels, "n_levels")
    steps = step_count(t_eval, tau_fixed)
    exact = _use_exact(problem, reference)
    runs = n_levels if exact else n_levels + [2 * n_levels[-1]]
    for n in runs:
        _check_alignment(problem, n)

    sols = {}
    for n in runs:
        mesh = _mesh(problem.dimension, n)
        st = run(problem, mesh, tau_fixed, steps, init_projection, keep_states=False)
        sols[n] = (FemFunction(mesh, st.g1), FemFunction(mesh, st.g2))
        log.info("spatial %s n=%d done", problem.name, n)

    err1, err2 = [], []
    for n in n_levels:
        u1, u2 = sols[n]
        if exact:
            err1.append(l2_error(u1.mesh, u1, problem.exact[0](t_eval)))
            err2.append(l2_error(u2.mesh, u2, problem.exact[1](t_eval)))
        else:
            f1, f2 = sols[2 * n]
            err1.append(l2_error(f1.mesh, f1, u1))
            err2.append(l2_error(f2.mesh, f2, u2))
    meta = _metadata(problem, "spatial", t_eval, tau=tau_fixed, reference="exact" if exact else "richardson")
    return ConvergenceTable("spatial", [float(n) for n in n_levels], err1, err2, meta)


def temporal_study(
    problem: ProblemSpec,
    h_fixed: int,
    step_levels,
    t_eval: float,
    init_projection: str | None = None,
    reference: str = "auto",
    label: str = "coarse",
) -> ConvergenceTable:
    """Errors at ``t_eval`` on a fixed mesh with ``h = 1/h_fixed`` for each
    step count in ``step_levels`` (``tau = t_eval / steps``).

    Without an exact solution the row for ``L`` holds the difference of the
    ``L`` and ``2L`` step runs (``label="coarse"``) or of the ``L/2`` and
    ``L`` step runs (``label="fine"``).
    """
    step_levels = [int(s) for s in step_levels]
    _check_doubling(step_levels, "step_levels")
    if label not in ("coarse", "fine"):
        raise ValueError(f"unknown label {label!r}")
    exact = _use_exact(problem, reference)
    mesh = _mesh(problem.dimension, int(h_fixed))
    _check_alignment(problem, mesh.n)
    mass = assemble_mass(mesh)
    if exact:
        pairs = {L: L for L in step_levels}
    elif label == "coarse":
        pairs = {L: 2 * L for L in step_levels}
    else:
        if step_levels[0] % 2:
            raise ValueError("label='fine' needs even step counts")
        pairs = {L: L // 2 for L in step_levels}
    runs = sorted(set(step_levels) | set(pairs.values()))

    sols = {}
    for L in runs:
        st = run(problem, mesh, t_eval / L, L, init_projection, keep_states=False)
        sols[L] = st
        log.info("temporal %s L=%d done", problem.name, L)

    err1, err2 = [], []
    for L in step_levels:
        st = sols[L]
        if exact:
            err1.append(l2_error(mesh, FemFunction(mesh, st.g1), problem.exact[0](t_eval)))
            err2.append(l2_error(mesh, FemFunction(mesh, st.g2), problem.exact[1](t_eval)))
        else:
            other = sols[pairs[L]]
            err1.append(mass_norm(mass, st.g1 - other.g1))
            err2.append(mass_norm(mass, st.g2 - other.g2))
    meta = _metadata(problem, "temporal", t_eval, h=f"1/{mesh.n}", reference="exact" if exact else "richardson")
    if not exact:
        meta["label"] = label
    return ConvergenceTable("temporal", [float(L) for L in step_levels], err1, err2, meta)


def decay_study(
    problem: ProblemSpec,
    N_fixed: int,
    t_list,
    h_fixed: int,
    init_projection: str | None = None,
    reference: str = "doubling",
) -> ConvergenceTable:
    """Temporal error of an ``N_fixed``-step run as the final time shrinks.

    The reference is the same-mesh run with ``2 N`` steps (``"doubling"``)
    or ``64 N`` steps (``"fine"``).  The rate between consecutive times is
    ``ln(E(t_prev) / E(t)) / ln(t_prev / t)``.
    """
    t_list = [float(t) for t in t_list]
    if any(b >= a for a, b in zip(t_list, t_list[1:])):
        raise ValueError("t_list must be strictly decreasing")
    factor = {"doubling": 2, "fine": 64}.get(reference)
    if factor is None:
        raise ValueError(f"unknown reference {reference!r}")
    N = int(N_fixed)
    mesh = _mesh(problem.dimension, int(h_fixed))
    _check_alignment(problem, mesh.n)
    mass = assemble_mass(mesh)
    err1, err2 = [], []
    for t in t_list:
        coarse = run(problem, mesh, t / N, N, init_projection, keep_states=False)
        fine = run(problem, mesh, t / (factor * N), factor * N, init_projection, keep_states=False)
        err1.append(mass_norm(mass, coarse.g1 - fine.g1))
        err2.append(mass_norm(mass, coarse.g2 - fine.g2))
    meta = _metadata(
        problem,
        "decay",
        t_list[-1],
        N=N,
        h=f"1/{mesh.n}",
        reference=reference,
        rate="ln(E(t_prev)/E(t))/ln(t_prev/t)",
    )
    return ConvergenceTable("decay", t_list, err1, err2, meta)


def read_csv(text: str) -> ConvergenceTable:
    """Parse the CSV written by :meth:`ConvergenceTable.to_csv`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    meta: dict[str, object] = {}
    if lines and lines[0].startswith("#"):
        for item in lines[0][1:].strip().split(","):
            if "=" in item:
                k, v = item.split("=", 1)
                meta[k.strip()] = v
        lines = lines[1:]
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ValueError("missing CSV header")
    params, e1, e2 = [], [], []
    for ln in lines[1:]:
        cols = ln.split(",")
        params.append(float(cols[0]))
        e1.append(float(cols[1]))
        e2.append(float(cols[3]))
    return ConvergenceTable(str(meta.get("kind", "")), params, e1, e2, meta)


def summarize(table: ConvergenceTable) -> str:
    """Human-readable rendering of a table."""
    rows = [f"{'param':>12} {'err_G1':>12} {'rate':>8} {'err_G2':>12} {'rate':>8}"]
    for p, e1, r1, e2, r2 in zip(table.params, table.err_g1, table.rate_g1, table.err_g2, table.rate_g2):
        rows.append(
            f"{p:>12.6g} {e1:>12.4e} {'' if r1 is None else f'{r1:.4f}':>8} "
            f"{e2:>12.4e} {'' if r2 is None else f'{r2:.4f}':>8}"
        )
    return "\n".join(rows)


__all__ = [
    "ConvergenceTable",
    "decay_study",
    "observed_rates",
    "read_csv",
    "spatial_study",
    "step_count",
    "summarize",
    "temporal_study",
]
