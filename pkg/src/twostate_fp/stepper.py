"""Fully discrete scheme: P1 in space, backward-Euler CQ in time.

Each step solves the coupled block system

    [ M/tau + d1_0 W      -a d2_0 M     ] [g1^n]   [r1]
    [ -a d1_0 M           M/tau + d2_0 W] [g2^n] = [r2]

with ``W = a M + S`` and

    r1 = M g1^{n-1}/tau - W h1 + a M h2 + b1^n
    r2 = M g2^{n-1}/tau - W h2 + a M h1 + b2^n

where ``hk = sum_{i=1}^{n-1} dk_i gk^{n-i}``.  The history sums are formed on
the raw states and the operators applied afterwards, which is the same
linear combination as summing cached operator products.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cq import CqWeights, cq_weights
from .errors import DivergenceError, SolverError
from .fem import FemFunction, solve_residual_ok, assemble_load, assemble_mass, assemble_stiffness, l2_project, ritz_project
from .mesh import Mesh
from .problems import ProblemSpec

log = logging.getLogger(__name__)

STEP_RTOL = 1e-12
GMRES_MAXITER = 5000
GMRES_RESTART = 50


@dataclass(eq=False)
class SchemeMatrices:
    mass: sp.csr_array
    stiffness: sp.csr_array
    a: float
    tau: float
    weights1: CqWeights
    weights2: CqWeights
    W: sp.csr_array = field(init=False)
    _block: sp.csr_array | None = field(default=None, init=False, repr=False)
    _lu: object | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.W = (self.a * self.mass + self.stiffness).tocsr()

    @classmethod
    def build(cls, mesh: Mesh, alpha1: float, alpha2: float, a: float, tau: float, n_steps: int) -> SchemeMatrices:
        return cls.from_matrices(assemble_mass(mesh), assemble_stiffness(mesh), alpha1, alpha2, a, tau, n_steps)

    @classmethod
    def from_matrices(cls, mass, stiffness, alpha1, alpha2, a, tau, n_steps) -> SchemeMatrices:
        count = max(int(n_steps), 1) + 1
        return cls(
            sp.csr_array(mass),
            sp.csr_array(stiffness),
            float(a),
            float(tau),
            cq_weights(1.0 - alpha1, tau, count),
            cq_weights(1.0 - alpha2, tau, count),
        )

    @property
    def n_dofs(self) -> int:
        return self.mass.shape[0]

    def block_matrix(self, d0_1: float | None = None, d0_2: float | None = None) -> sp.csr_array:
        default = d0_1 is None and d0_2 is None
        if default and self._block is not None:
            return self._block
        d0_1 = self.weights1.d[0] if d0_1 is None else d0_1
        d0_2 = self.weights2.d[0] if d0_2 is None else d0_2
        M, W, a, tau = self.mass, self.W, self.a, self.tau
        K = sp.block_array(
            [[M / tau + d0_1 * W, -a * d0_2 * M], [-a * d0_1 * M, M / tau + d0_2 * W]], format="csr"
        )
        if default:
            self._block = K
        return K

    def factorized(self):
        if self._lu is None:
            self._lu = spla.splu(self.block_matrix().tocsc())
        return self._lu


def solve_block(
    mats: SchemeMatrices,
    d0_1: float,
    d0_2: float,
    rhs1: np.ndarray,
    rhs2: np.ndarray,
    tol: float = STEP_RTOL,
    method: str = "direct",
) -> tuple[np.ndarray, np.ndarray]:
    """Solve the coupled step system to relative residual ``tol``.

    ``method="direct"`` uses a sparse LU factorisation (cached on ``mats``
    when the ``d0`` values are the scheme's own), refined iteratively if
    needed; ``method="gmres"`` runs restarted GMRES with a Jacobi
    preconditioner.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    N = mats.n_dofs
    b = np.concatenate([rhs1, rhs2])
    if not np.any(b):
        return np.zeros(N), np.zeros(N)
    own = d0_1 == mats.weights1.d[0] and d0_2 == mats.weights2.d[0]
    K = mats.block_matrix() if own else mats.block_matrix(d0_1, d0_2)

    if method == "direct":
        lu = mats.factorized() if own else spla.splu(K.tocsc())
        x = lu.solve(b)
        ok, res = solve_residual_ok(K, x, b, tol)
        for _ in range(3):
            if ok:
                break
            x = x + lu.solve(b - K @ x)
            ok, res = solve_residual_ok(K, x, b, tol)
    elif method == "gmres":
        diag = K.diagonal()
        precond = spla.LinearOperator(K.shape, matvec=lambda v: v / diag)
        x, info = spla.gmres(
            K, b, rtol=tol, atol=0.0, restart=GMRES_RESTART, maxiter=GMRES_MAXITER, M=precond
        )
        ok, res = solve_residual_ok(K, x, b, tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not ok:
        raise SolverError(f"block solve stalled at relative residual {res:.3e} (target {tol:.1e})", res)
    return x[:N], x[N:]


@dataclass
class StatePair:
    g1: np.ndarray
    g2: np.ndarray
    n: int
    t: float


class HistoryCache:
    """All past states, plus blocked partial history sums.

    ``tail_sums(n)`` returns ``sum_{i=1}^{n-1} dk_i gk^{n-i}`` for both
    states.  Contributions of states older than the current block are
    computed for the whole block at once as a matrix-matrix product;
    states inside the block are added directly.
    """

    def __init__(self, g1_0, g2_0, capacity: int, weights1: CqWeights, weights2: CqWeights, block: int = 64):
        g1_0 = np.asarray(g1_0, dtype=float)
        N = g1_0.size
        if len(weights1) < capacity + 1 or len(weights2) < capacity + 1:
            raise ValueError("weights too short for the requested capacity")
        self.capacity = int(capacity)
        self.g1 = np.zeros((self.capacity + 1, N))
        self.g2 = np.zeros((self.capacity + 1, N))
        self.g1[0] = g1_0
        self.g2[0] = np.asarray(g2_0, dtype=float)
        self.d1 = weights1.d
        self.d2 = weights2.d
        self.steps = 0  # index of the newest stored state
        self.block = max(int(block), 1)
        self._block_start = None
        self._tail1 = self._tail2 = None

    @property
    def latest(self) -> tuple[np.ndarray, np.ndarray]:
        return self.g1[self.steps], self.g2[self.steps]

    def state(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        if not 0 <= m <= self.steps:
            raise IndexError(m)
        return self.g1[m], self.g2[m]

    def _start_block(self, s: int) -> None:
        size = min(self.block, self.capacity - s + 1)
        self._block_start = s
        if s <= 1:
            self._tail1 = self._tail2 = None
            return
        j = np.arange(size)[:, None]
        m = np.arange(1, s)[None, :]
        idx = s + j - m
        self._tail1 = self.d1[idx] @ self.g1[1:s]
        self._tail2 = self.d2[idx] @ self.g2[1:s]

    def tail_sums(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        if n != self.steps + 1:
            raise ValueError(f"history holds steps 0..{self.steps}; cannot form sums for step {n}")
        if n > self.capacity:
            raise ValueError("history capacity exhausted")
        s = self._block_start
        if s is None or n >= s + self.block:
            self._start_block(n)
            s = n
        j = n - s
        if self._tail1 is None:
            h1 = np.zeros(self.g1.shape[1])
            h2 = np.zeros(self.g1.shape[1])
            lo = 1
        else:
            h1 = self._tail1[j].copy()
            h2 = self._tail2[j].copy()
            lo = s
        if n - 1 >= lo:
            # states lo..n-1 paired with d_{n-lo}..d_1
            h1 += self.d1[n - lo : 0 : -1] @ self.g1[lo:n]
            h2 += self.d2[n - lo : 0 : -1] @ self.g2[lo:n]
        return h1, h2

    def append(self, g1: np.ndarray, g2: np.ndarray) -> None:
        if self.steps >= self.capacity:
            raise ValueError("history capacity exhausted")
        self.steps += 1
        self.g1[self.steps] = g1
        self.g2[self.steps] = g2


def advance(
    history: HistoryCache,
    mats: SchemeMatrices,
    loads: tuple[np.ndarray, np.ndarray] | None = None,
    tol: float = STEP_RTOL,
    method: str = "direct",
) -> StatePair:
    """Compute step ``n = history.steps + 1`` and append it to ``history``."""
    n = history.steps + 1
    h1, h2 = history.tail_sums(n)
    g1_prev, g2_prev = history.latest
    M, W, a, tau = mats.mass, mats.W, mats.a, mats.tau
    rhs1 = M @ (g1_prev / tau + a * h2) - W @ h1
    rhs2 = M @ (g2_prev / tau + a * h1) - W @ h2
    if loads is not None:
        rhs1 = rhs1 + loads[0]
        rhs2 = rhs2 + loads[1]
    g1, g2 = solve_block(mats, mats.weights1.d[0], mats.weights2.d[0], rhs1, rhs2, tol=tol, method=method)
    if not (np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
        raise DivergenceError(f"non-finite solution at step {n}")
    history.append(g1, g2)
    return StatePair(g1, g2, n, n * tau)


def initial_state(problem: ProblemSpec, mesh: Mesh, init_projection: str | None = None, mass=None, stiffness=None):
    mode = problem.init_projection if init_projection is None else init_projection.lower()
    if mode == "zero":
        return np.zeros(mesh.n_dofs), np.zeros(mesh.n_dofs)
    if mode == "l2":
        return l2_project(mesh, problem.g1_0, mass).coefficients, l2_project(mesh, problem.g2_0, mass).coefficients
    if mode == "ritz":
        return (
            ritz_project(mesh, problem.g1_0, stiffness).coefficients,
            ritz_project(mesh, problem.g2_0, stiffness).coefficients,
        )
    raise ValueError(f"unknown init projection {init_projection!r}")


class _LoadAssembler:
    def __init__(self, problem: ProblemSpec, mesh: Mesh):
        self.sources = (problem.f1, problem.f2)
        self.spatial = [np.array([assemble_load(mesh, f) for _, f in src.terms]) for src in self.sources]

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray] | None:
        if all(src.is_zero for src in self.sources):
            return None
        out = []
        for src, vecs in zip(self.sources, self.spatial):
            out.append(src.coefficients(t) @ vecs if vecs.size else 0.0)
        return out[0], out[1]


def run(
    problem: ProblemSpec,
    mesh: Mesh,
    tau: float,
    n_steps: int,
    init_projection: str | None = None,
    keep_states: bool = True,
    tol: float = STEP_RTOL,
    method: str = "direct",
    mats: SchemeMatrices | None = None,
):
    """March ``n_steps`` steps of size ``tau``.

    Returns the list of states ``0..n_steps`` or only the final
    :class:`StatePair` when ``keep_states`` is false.
    """
    if mesh.dimension != problem.dimension:
        raise ValueError(f"{problem.name} is {problem.dimension}D but the mesh is {mesh.dimension}D")
    if int(n_steps) != n_steps or n_steps < 0:
        raise ValueError("n_steps must be a non-negative integer")
    n_steps = int(n_steps)
    if mats is None:
        mats = SchemeMatrices.build(mesh, problem.alpha1, problem.alpha2, problem.a, tau, n_steps)
    g1, g2 = initial_state(problem, mesh, init_projection, mats.mass, mats.stiffness)
    history = HistoryCache(g1, g2, n_steps, mats.weights1, mats.weights2)
    loads = _LoadAssembler(problem, mesh)
    states = [StatePair(g1.copy(), g2.copy(), 0, 0.0)]
    for n in range(1, n_steps + 1):
        state = advance(history, mats, loads(n * tau), tol=tol, method=method)
        if keep_states:
            states.append(state)
    log.debug("%s: %d steps on n=%d done", problem.name, n_steps, mesh.n)
    if keep_states:
        return states
    g1, g2 = history.latest
    return StatePair(g1.copy(), g2.copy(), n_steps, n_steps * tau)


def final_functions(state: StatePair, mesh: Mesh) -> tuple[FemFunction, FemFunction]:
    return FemFunction(mesh, state.g1), FemFunction(mesh, state.g2)
