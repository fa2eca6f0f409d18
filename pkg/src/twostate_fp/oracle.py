"""Reference solutions of homogeneous 1D problems by sine modes and
numerical inverse Laplace transform along a sector contour.

With ``phi_j = sqrt(2) sin(j pi x)`` and ``lambda_j = (j pi)^2`` each mode
obeys a 2x2 scalar system whose Laplace transform is explicit; it is
inverted by Gauss-Legendre quadrature on

    {r e^{-i theta}: r >= kappa} + {kappa e^{i psi}: |psi| <= theta} + {r e^{i theta}: r >= kappa}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .fem import ScalarField
from .problems import ProblemSpec

IMAG_TOL = 1e-10
TRUNCATION = 1e-16


@dataclass(frozen=True)
class ContourParams:
    theta: float
    kappa: float
    n_quad: int
    r_max: float

    def check(self, alpha1: float, alpha2: float, a: float, t: float) -> None:
        if not math.pi / 2 < self.theta < math.pi:
            raise ValueError("theta must lie in (pi/2, pi)")
        if a != 0:
            need = max(2 * abs(a) ** (1 / alpha1), 2 * abs(a) ** (1 / alpha2))
            if not self.kappa > need:
                raise ValueError(f"kappa={self.kappa} must exceed {need:.6g} for a={a}")
        if self.kappa < 1.0 / t:
            raise ValueError(f"kappa={self.kappa} must be at least 1/t={1 / t:.6g}")
        if not self.r_max > self.kappa:
            raise ValueError("r_max must exceed kappa")
        if math.exp(self.r_max * t * math.cos(self.theta)) >= TRUNCATION:
            raise ValueError("r_max too small for negligible ray truncation")


def default_contour(
    alpha1: float,
    alpha2: float,
    a: float,
    t: float,
    theta: float = 3 * math.pi / 4,
    kappa_scale: float = 1.0,
    n_quad: int = 300,
) -> ContourParams:
    kappa = 1.0 / t
    if a != 0:
        kappa = max(kappa, 1.05 * max(2 * abs(a) ** (1 / alpha1), 2 * abs(a) ** (1 / alpha2)))
    kappa *= kappa_scale
    r_max = max(1.1 * math.log(1 / TRUNCATION) / (t * abs(math.cos(theta))), 2 * kappa)
    return ContourParams(theta, kappa, n_quad, r_max)


def _gauss_panels(lo: float, hi: float, n_total: int, n_panels: int, grading: float = 1.0):
    """Composite Gauss-Legendre nodes/weights on [lo, hi]."""
    per = max(n_total // n_panels, 2)
    x, w = np.polynomial.legendre.leggauss(per)
    u = np.linspace(0.0, 1.0, n_panels + 1) ** grading
    edges = lo + (hi - lo) * u
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


def contour_nodes(contour: ContourParams) -> tuple[np.ndarray, np.ndarray]:
    """Nodes ``z_q`` and weights ``w_q`` with ``sum w_q F(z_q) ~ (1/2 pi i) int F dz``."""
    th, kappa = contour.theta, contour.kappa
    # rays: r = kappa * exp(s), clustered geometrically near the junction with the arc
    s, ws = _gauss_panels(0.0, math.log(contour.r_max / kappa), contour.n_quad, 20)
    r = kappa * np.exp(s)
    dr = r * ws
    up = np.exp(1j * th)
    z_up, w_up = r * up, dr * up
    z_lo, w_lo = r * np.conj(up), -dr * np.conj(up)
    psi, wpsi = _gauss_panels(-th, th, contour.n_quad, 10)
    z_arc = kappa * np.exp(1j * psi)
    w_arc = 1j * z_arc * wpsi
    z = np.concatenate([z_lo[::-1], z_arc, z_up])
    w = np.concatenate([w_lo[::-1], w_arc, w_up]) / (2j * math.pi)
    return z, w


def modal_operators(z, lam, alpha1: float, alpha2: float, a: float):
    """Scalar ``(h, h_alpha1, h_alpha2)`` for eigenvalue ``lam`` at points ``z``."""
    p1 = z**alpha1 + a + lam
    p2 = z**alpha2 + a + lam
    h_a1 = 1.0 / (p1 - a * a / p2)
    h_a2 = 1.0 / (p2 - a * a / p1)
    h = h_a1 / p2
    return h, h_a1, h_a2


def modal_solution(lam, alpha1, alpha2, a, c1, c2, t: float, contour: ContourParams | None = None):
    """Both components of the modal solution at time ``t``.

    ``lam``, ``c1``, ``c2`` may be arrays of equal length (one entry per
    mode); the result is then a pair of arrays.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    contour = default_contour(alpha1, alpha2, a, t) if contour is None else contour
    contour.check(alpha1, alpha2, a, t)
    z, w = contour_nodes(contour)
    scalar = np.ndim(lam) == 0 and np.ndim(c1) == 0 and np.ndim(c2) == 0
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    c1 = np.broadcast_to(np.asarray(c1, dtype=float), lam.shape)
    c2 = np.broadcast_to(np.asarray(c2, dtype=float), lam.shape)
    h, h_a1, h_a2 = modal_operators(z[None, :], lam[:, None], alpha1, alpha2, a)
    kern = w * np.exp(z * t)
    za1 = z ** (alpha1 - 1.0)
    za2 = z ** (alpha2 - 1.0)
    u1 = c1 * ((h_a1 * za1) @ kern) + a * c2 * ((h * za1) @ kern)
    u2 = a * c1 * ((h * za2) @ kern) + c2 * ((h_a2 * za2) @ kern)
    scale = np.maximum(1.0, np.abs(c1) + np.abs(c2))
    imag = max(np.max(np.abs(u1.imag) / scale), np.max(np.abs(u2.imag) / scale))
    if imag > IMAG_TOL:
        raise ArithmeticError(f"contour quadrature left imaginary residual {imag:.2e}")
    u1, u2 = u1.real, u2.real
    if scalar:
        return float(u1[0]), float(u2[0])
    return u1, u2


def sine_coefficients(f: ScalarField, K: int) -> np.ndarray:
    """``c_j = int_0^1 f(x) sqrt(2) sin(j pi x) dx`` for ``j = 1..K``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    n_panels = max(64, 2 * K)
    edges = np.union1d(np.linspace(0.0, 1.0, n_panels + 1), [b for b in f.breaks if 0 < b < 1])
    x, w = np.polynomial.legendre.leggauss(8)
    a, b = edges[:-1, None], edges[1:, None]
    xq = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    wq = (0.5 * (b - a) * w).ravel()
    fw = f(xq) * wq * math.sqrt(2.0)
    out = np.empty(K)
    chunk = max(1, 4_000_000 // xq.size)
    for start in range(0, K, chunk):
        j = np.arange(start + 1, min(K, start + chunk) + 1)
        out[start : start + j.size] = np.sin(np.pi * np.outer(j, xq)) @ fw
    return out


def _modes_field(coeffs: np.ndarray) -> ScalarField:
    j = np.arange(1, coeffs.size + 1)

    def f(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        out = np.empty(flat.size)
        chunk = max(1, 4_000_000 // max(j.size, 1))
        for s in range(0, flat.size, chunk):
            out[s : s + chunk] = math.sqrt(2.0) * np.sin(np.pi * np.outer(flat[s : s + chunk], j)) @ coeffs
        return out.reshape(x.shape)

    return ScalarField(f)


@dataclass(frozen=True)
class OracleSolution:
    t: float
    c1: np.ndarray  # modal coefficients of G1(t)
    c2: np.ndarray
    g1: ScalarField
    g2: ScalarField


def oracle_solution(problem: ProblemSpec, K: int, t: float, contour: ContourParams | None = None) -> OracleSolution:
    """Sine-series reference solution of a homogeneous 1D problem at time ``t``."""
    if problem.dimension != 1:
        raise ValueError("the spectral oracle is one-dimensional")
    if not problem.homogeneous:
        raise ValueError("the spectral oracle needs zero sources")
    c1 = sine_coefficients(problem.g1_0, K)
    c2 = sine_coefficients(problem.g2_0, K)
    lam = (np.arange(1, K + 1) * np.pi) ** 2
    u1, u2 = modal_solution(lam, problem.alpha1, problem.alpha2, problem.a, c1, c2, t, contour)
    u1, u2 = np.atleast_1d(u1), np.atleast_1d(u2)
    return OracleSolution(t, u1, u2, _modes_field(u1), _modes_field(u2))


def mittag_leffler(alpha: float, x: float, max_digits: int = 2000) -> float:
    """One-parameter Mittag-Leffler function ``E_alpha(x)`` for ``x <= 0``.

    Power series summed in extended precision; the working precision is
    chosen from the size of the largest term so cancellation is harmless.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if x > 0 or abs(x) > 50:
        raise ValueError("x must lie in [-50, 0]")
    if x == 0:
        return 1.0
    # largest term ~ exp(|x|^(1/alpha)) in magnitude
    digits = int(abs(x) ** (1.0 / alpha) / math.log(10)) + 30
    if digits > max_digits:
        raise ValueError(f"E_{alpha}({x}) needs ~{digits} digits; outside the validated range")
    with mpmath.workdps(digits):
        xm = mpmath.mpf(x)
        am = mpmath.mpf(alpha)
        tol = mpmath.mpf(10) ** (-20)
        peak = abs(xm) ** (1 / am)
        total = mpmath.mpf(0)
        k = 0
        while True:
            term = xm**k / mpmath.gamma(am * k + 1)
            total += term
            if k > peak and abs(term) <= tol * abs(total):
                break
            k += 1
        return float(total)
