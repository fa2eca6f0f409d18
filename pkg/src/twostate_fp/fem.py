"""P1 finite elements on structured meshes with homogeneous Dirichlet data.

Matrices and vectors live on interior degrees of freedom only; boundary
nodes are eliminated.  Matrices are ``scipy.sparse`` CSR arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Mesh, locate

PROJECTION_RTOL = 1e-13

# 4-point Gauss-Legendre on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
GAUSS_1D_POINTS = 0.5 * (_GL_X + 1.0)
GAUSS_1D_WEIGHTS = 0.5 * _GL_W

# Degree-4 symmetric 6-point rule on the reference triangle (weights sum to 1).
_A1, _B1 = 0.445948490915964886318, 0.108103018168070227363
_A2, _B2 = 0.091576213509770743460, 0.816847572980458513080
_W1, _W2 = 0.223381589678011465944, 0.109951743655321867389
TRIANGLE_BARY = np.array(
    [
        [_A1, _A1, _B1],
        [_A1, _B1, _A1],
        [_B1, _A1, _A1],
        [_A2, _A2, _B2],
        [_A2, _B2, _A2],
        [_B2, _A2, _A2],
    ]
)
TRIANGLE_WEIGHTS = np.array([_W1, _W1, _W1, _W2, _W2, _W2])


@dataclass(frozen=True)
class ScalarField:
    """A vectorised function of the coordinates, ``func(x)`` or ``func(x, y)``.

    ``grad`` returns the gradient components (a single array in 1D, a pair in
    2D).  ``breaks`` lists coordinates of axis-aligned discontinuity lines;
    quadrature splits cells along them.
    """

    func: Callable
    grad: Callable | None = None
    breaks: tuple[float, ...] = ()

    def __call__(self, *coords):
        coords = [np.asarray(c, dtype=float) for c in coords]
        out = np.asarray(self.func(*coords), dtype=float)
        return np.broadcast_to(out, np.broadcast(*coords).shape).copy()

    def at(self, points: np.ndarray) -> np.ndarray:
        return self(*np.asarray(points, dtype=float).T)

    def gradient_at(self, points: np.ndarray) -> np.ndarray:
        if self.grad is None:
            raise ValueError("field has no gradient")
        pts = np.asarray(points, dtype=float)
        g = self.grad(*pts.T)
        if pts.shape[1] == 1:
            g = [g]
        return np.column_stack([np.broadcast_to(np.asarray(c, dtype=float), pts.shape[:1]) for c in g])


def _zero_grad(*coords):
    return coords[0] * 0.0 if len(coords) == 1 else tuple(c * 0.0 for c in coords)


ZERO_FIELD = ScalarField(lambda *c: 0.0, grad=_zero_grad)


@dataclass(frozen=True, eq=False)
class FemFunction:
    mesh: Mesh
    coefficients: np.ndarray

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float)
        if coef.shape != (self.mesh.n_dofs,):
            raise ValueError(f"expected {self.mesh.n_dofs} coefficients, got shape {coef.shape}")
        object.__setattr__(self, "coefficients", coef)

    def nodal_values(self) -> np.ndarray:
        full = np.zeros(self.mesh.n_nodes)
        full[self.mesh.interior_nodes] = self.coefficients
        return full

    def __call__(self, points) -> np.ndarray:
        return evaluate(self, points)


# -- quadrature --------------------------------------------------------------


@dataclass(frozen=True)
class Quadrature:
    element: np.ndarray  # parent element of each point
    points: np.ndarray  # (q, d)
    weights: np.ndarray  # physical weights
    bary: np.ndarray = field(repr=False)  # barycentric coordinates in the parent element


def _clip_polygon(poly: list[np.ndarray], axis: int, c: float, keep_below: bool) -> list[np.ndarray]:
    out = []
    sign = 1.0 if keep_below else -1.0
    for k in range(len(poly)):
        p, q = poly[k], poly[(k + 1) % len(poly)]
        dp, dq = sign * (c - p[axis]), sign * (c - q[axis])
        if dp >= 0:
            out.append(p)
        if (dp > 0 > dq) or (dp < 0 < dq):
            s = dp / (dp - dq)
            out.append(p + s * (q - p))
    return out


def _split_simplex(verts: np.ndarray, breaks: Sequence[float]) -> list[np.ndarray]:
    """Cut one interval/triangle along the break lines into sub-simplices."""
    dim = verts.shape[1]
    if dim == 1:
        a, b = sorted((verts[0, 0], verts[1, 0]))
        cuts = [a] + sorted(c for c in breaks if a < c < b) + [b]
        return [np.array([[cuts[k]], [cuts[k + 1]]]) for k in range(len(cuts) - 1)]
    polys = [list(verts)]
    for axis in range(2):
        for c in breaks:
            nxt = []
            for poly in polys:
                coords = [p[axis] for p in poly]
                if min(coords) < c < max(coords):
                    nxt.extend(
                        piece
                        for piece in (_clip_polygon(poly, axis, c, True), _clip_polygon(poly, axis, c, False))
                        if len(piece) >= 3
                    )
                else:
                    nxt.append(poly)
            polys = nxt
    tris = []
    for poly in polys:
        for k in range(1, len(poly) - 1):
            tris.append(np.array([poly[0], poly[k], poly[k + 1]]))
    return tris


def _crossed(vertex_coords: np.ndarray, breaks: Sequence[float]) -> np.ndarray:
    lo = vertex_coords.min(axis=1)
    hi = vertex_coords.max(axis=1)
    hit = np.zeros(vertex_coords.shape[0], dtype=bool)
    for c in breaks:
        hit |= np.any((lo < c) & (c < hi), axis=-1)
    return hit


@lru_cache(maxsize=32)
def quadrature(mesh: Mesh, breaks: tuple[float, ...] = ()) -> Quadrature:
    """Per-cell quadrature (4-point Gauss in 1D, degree-4 rule in 2D),
    refined on cells cut by any of ``breaks``."""
    verts = mesh.nodes[mesh.elements]  # (E, d+1, d)
    measures = mesh.element_measures()
    if mesh.dimension == 1:
        ref_bary = np.column_stack([1.0 - GAUSS_1D_POINTS, GAUSS_1D_POINTS])
        ref_w = GAUSS_1D_WEIGHTS
    else:
        ref_bary, ref_w = TRIANGLE_BARY, TRIANGLE_WEIGHTS

    cut = _crossed(verts, breaks) if breaks else np.zeros(mesh.n_elements, dtype=bool)
    whole = np.flatnonzero(~cut)
    nq = ref_w.size
    elem = np.repeat(whole, nq)
    bary = np.tile(ref_bary, (whole.size, 1))
    weights = (measures[whole][:, None] * ref_w[None, :]).ravel()

    if np.any(cut):
        extra_e, extra_b, extra_w = [], [], []
        for k in np.flatnonzero(cut):
            for sub in _split_simplex(verts[k], breaks):
                pts = ref_bary @ sub
                if mesh.dimension == 1:
                    meas = abs(sub[1, 0] - sub[0, 0])
                else:
                    e1, e2 = sub[1] - sub[0], sub[2] - sub[0]
                    meas = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
                if meas == 0.0:
                    continue
                extra_e.append(np.full(nq, k))
                extra_b.append(_barycentric(verts[k], pts))
                extra_w.append(meas * ref_w)
        elem = np.concatenate([elem] + extra_e)
        bary = np.concatenate([bary] + extra_b)
        weights = np.concatenate([weights] + extra_w)

    points = np.einsum("qa,qad->qd", bary, verts[elem])
    for arr in (elem, points, weights, bary):
        arr.flags.writeable = False
    return Quadrature(elem, points, weights, bary)


def _barycentric(verts: np.ndarray, pts: np.ndarray) -> np.ndarray:
    if verts.shape[1] == 1:
        s = (pts[:, 0] - verts[0, 0]) / (verts[1, 0] - verts[0, 0])
        return np.column_stack([1.0 - s, s])
    T = np.column_stack([verts[1] - verts[0], verts[2] - verts[0]])
    st = np.linalg.solve(T, (pts - verts[0]).T).T
    return np.column_stack([1.0 - st[:, 0] - st[:, 1], st[:, 0], st[:, 1]])


# -- assembly -----------------------------------------------------------------


def _gradients(mesh: Mesh) -> np.ndarray:
    """Constant gradients of the local basis functions, shape (E, d+1, d)."""
    verts = mesh.nodes[mesh.elements]
    if mesh.dimension == 1:
        inv = 1.0 / (verts[:, 1, 0] - verts[:, 0, 0])
        return np.stack([-inv, inv], axis=1)[:, :, None]
    J = np.stack([verts[:, 1] - verts[:, 0], verts[:, 2] - verts[:, 0]], axis=2)  # columns are edges
    ref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    return np.einsum("ad,edk->eak", ref, np.linalg.inv(J))


def _to_interior(mesh: Mesh, local: np.ndarray) -> sp.csr_array:
    rows = np.broadcast_to(mesh.elements[:, :, None], local.shape)
    cols = np.broadcast_to(mesh.elements[:, None, :], local.shape)
    ri = mesh.interior_index[rows.ravel()]
    ci = mesh.interior_index[cols.ravel()]
    keep = (ri >= 0) & (ci >= 0)
    n = mesh.n_dofs
    mat = sp.coo_array((local.ravel()[keep], (ri[keep], ci[keep])), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def assemble_mass(mesh: Mesh) -> sp.csr_array:
    """Exact P1 mass matrix on the interior dofs."""
    d = mesh.dimension
    ref = (np.ones((d + 1, d + 1)) + np.eye(d + 1)) / ((d + 1) * (d + 2))
    local = mesh.element_measures()[:, None, None] * ref[None]
    return _to_interior(mesh, local)


def assemble_stiffness(mesh: Mesh) -> sp.csr_array:
    grads = _gradients(mesh)
    local = mesh.element_measures()[:, None, None] * np.einsum("eak,ebk->eab", grads, grads)
    return _to_interior(mesh, local)


def _scatter(mesh: Mesh, elem: np.ndarray, local: np.ndarray) -> np.ndarray:
    """Accumulate per-point, per-local-node contributions into interior dofs."""
    dof = mesh.interior_index[mesh.elements[elem]]  # (q, d+1)
    keep = dof >= 0
    return np.bincount(dof[keep], weights=local[keep], minlength=mesh.n_dofs)


def assemble_load(mesh: Mesh, f: ScalarField) -> np.ndarray:
    """Load vector ``b_i = int f phi_i`` over the interior dofs."""
    q = quadrature(mesh, tuple(f.breaks))
    vals = f.at(q.points) * q.weights
    return _scatter(mesh, q.element, q.bary * vals[:, None])


def assemble_gradient_load(mesh: Mesh, f: ScalarField) -> np.ndarray:
    """``g_i = int grad f . grad phi_i``."""
    if f.grad is None:
        raise ValueError("Ritz projection needs the field gradient")
    q = quadrature(mesh, tuple(f.breaks))
    gf = f.gradient_at(q.points) * q.weights[:, None]
    gphi = _gradients(mesh)[q.element]  # (q, d+1, d)
    return _scatter(mesh, q.element, np.einsum("qak,qk->qa", gphi, gf))


def solve_residual_ok(A, x: np.ndarray, b: np.ndarray, tol: float) -> tuple[bool, float]:
    """Relative residual test, falling back to the normwise backward error
    ``|Ax - b| / (|A| |x| + |b|)`` when ``b`` is small next to ``|A| |x|``."""
    r = np.linalg.norm(A @ x - b)
    nb = np.linalg.norm(b)
    res = r / nb if nb > 0 else r
    if res <= tol:
        return True, float(res)
    backward = r / (spla.norm(A, 1) * np.linalg.norm(x) + nb)
    return bool(backward <= tol), float(res)


def _spd_solve(A: sp.csr_array, b: np.ndarray) -> np.ndarray:
    if not np.any(b):
        return np.zeros_like(b)
    x = spla.spsolve(A.tocsc(), b)
    ok, res = solve_residual_ok(A, x, b, PROJECTION_RTOL)
    if not ok:
        x = x + spla.spsolve(A.tocsc(), b - A @ x)
        ok, res = solve_residual_ok(A, x, b, PROJECTION_RTOL)
        if not ok:
            raise ArithmeticError(f"projection solve reached relative residual {res:.3e}")
    return x


def l2_project(mesh: Mesh, f: ScalarField, mass: sp.csr_array | None = None) -> FemFunction:
    mass = assemble_mass(mesh) if mass is None else mass
    return FemFunction(mesh, _spd_solve(mass, assemble_load(mesh, f)))


def ritz_project(mesh: Mesh, f: ScalarField, stiffness: sp.csr_array | None = None) -> FemFunction:
    stiffness = assemble_stiffness(mesh) if stiffness is None else stiffness
    return FemFunction(mesh, _spd_solve(stiffness, assemble_gradient_load(mesh, f)))


def interpolate(mesh: Mesh, f: ScalarField) -> FemFunction:
    return FemFunction(mesh, f.at(mesh.nodes[mesh.interior_nodes]))


def evaluate(u: FemFunction, points) -> np.ndarray:
    """Value of the P1 function at ``points`` (see :func:`locate` for shapes)."""
    elem, w = locate(u.mesh, points)
    nodal = u.nodal_values()
    return np.sum(nodal[u.mesh.elements[elem]] * w, axis=-1)


def _values_at(obj, mesh: Mesh, q: Quadrature) -> np.ndarray:
    if isinstance(obj, FemFunction):
        if obj.mesh is mesh:
            return np.sum(obj.nodal_values()[mesh.elements[q.element]] * q.bary, axis=1)
        if mesh.dimension == 1:
            return evaluate(obj, q.points[:, 0])
        return evaluate(obj, q.points)
    return obj.at(q.points)


def l2_error(mesh_eval: Mesh, u, reference) -> float:
    """L2 norm of ``u - reference`` by quadrature on ``mesh_eval``.

    Either argument may be a :class:`FemFunction` (on ``mesh_eval`` or on a
    coarser nested mesh) or a :class:`ScalarField`.
    """
    breaks = tuple(sorted(set(getattr(u, "breaks", ())) | set(getattr(reference, "breaks", ()))))
    q = quadrature(mesh_eval, breaks)
    diff = _values_at(u, mesh_eval, q) - _values_at(reference, mesh_eval, q)
    return float(np.sqrt(np.sum(q.weights * diff * diff)))


def mass_norm(mass: sp.csr_array, v: np.ndarray) -> float:
    """Exact L2 norm of the P1 function with coefficients ``v``."""
    return float(np.sqrt(max(v @ (mass @ v), 0.0)))
