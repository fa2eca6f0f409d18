"""The experiment catalogue: data, sources and (where known) exact solutions.

Sources are stored as sums of ``c(t) * s(x)`` terms so load vectors of the
spatial factors can be assembled once per mesh.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import gamma
from typing import Callable

import numpy as np

from .fem import ZERO_FIELD, ScalarField

INIT_PROJECTIONS = ("l2", "ritz", "zero")


@dataclass(frozen=True)
class Source:
    """``f(x, t) = sum_k coeff_k(t) * field_k(x)``."""

    terms: tuple[tuple[Callable[[float], float], ScalarField], ...] = ()

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coefficients(self, t: float) -> np.ndarray:
        return np.array([c(t) for c, _ in self.terms], dtype=float)

    def __call__(self, t: float) -> ScalarField:
        if self.is_zero:
            return ZERO_FIELD
        coeffs = self.coefficients(t)
        fields = [f for _, f in self.terms]
        breaks = tuple(sorted({b for f in fields for b in f.breaks}))
        return ScalarField(lambda *x: sum(c * f(*x) for c, f in zip(coeffs, fields)), breaks=breaks)


NO_SOURCE = Source()


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    alpha1: float
    alpha2: float
    a: float
    dimension: int
    g1_0: ScalarField
    g2_0: ScalarField
    f1: Source = NO_SOURCE
    f2: Source = NO_SOURCE
    exact: tuple[Callable[[float], ScalarField], Callable[[float], ScalarField]] | None = None
    init_projection: str = "l2"

    def __post_init__(self):
        for alpha in (self.alpha1, self.alpha2):
            if not 0.0 < alpha <= 1.0:
                raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if self.init_projection not in INIT_PROJECTIONS:
            raise ValueError(f"unknown init projection {self.init_projection!r}")

    @property
    def homogeneous(self) -> bool:
        return self.f1.is_zero and self.f2.is_zero

    def swapped(self) -> ProblemSpec:
        """Relabel the two states (the system is symmetric under this)."""
        exact = None if self.exact is None else (self.exact[1], self.exact[0])
        return replace(
            self,
            name=self.name + "-swapped",
            alpha1=self.alpha2,
            alpha2=self.alpha1,
            g1_0=self.g2_0,
            g2_0=self.g1_0,
            f1=self.f2,
            f2=self.f1,
            exact=exact,
        )


def _indicator_1d(lo: float, hi: float) -> ScalarField:
    return ScalarField(lambda x: ((x > lo) & (x < hi)).astype(float), breaks=(lo, hi))


def _indicator_2d(xlo: float, xhi: float, ylo: float, yhi: float) -> ScalarField:
    def f(x, y):
        return ((x > xlo) & (x < xhi) & (y > ylo) & (y < yhi)).astype(float)

    return ScalarField(f, breaks=tuple(sorted({xlo, xhi, ylo, yhi} - {0.0, 1.0})))


def _time_power(p: float, scale: float = 1.0) -> Callable[[float], float]:
    return lambda t: scale * t**p


def rl_power_factor(nu: float, alpha: float) -> float:
    """``D^{1-alpha} t^nu = factor * t^(nu + alpha - 1)`` (Riemann-Liouville)."""
    return gamma(1.0 + nu) / gamma(nu + alpha)


# 1D building blocks
X1 = ScalarField(lambda x: x * (1.0 - x), grad=lambda x: 1.0 - 2.0 * x)
X2 = ScalarField(lambda x: x * x * (1.0 - x), grad=lambda x: 2.0 * x - 3.0 * x * x)
NEG_LAP_X1 = ScalarField(lambda x: 2.0 + 0.0 * x)
NEG_LAP_X2 = ScalarField(lambda x: 6.0 * x - 2.0)
SIN1 = ScalarField(lambda x: np.sin(np.pi * x), grad=lambda x: np.pi * np.cos(np.pi * x))


def example1(nu: float = 1.01, alpha1: float = 0.1, alpha2: float = 0.2, a: float = 2.0) -> ProblemSpec:
    """Manufactured solution ``(t^nu x(1-x), t^nu x^2(1-x))``.

    Sources come from substituting the exact solution into the strong form,
    using ``D^{1-alpha} t^nu = Gamma(1+nu)/Gamma(nu+alpha) t^(nu+alpha-1)``.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    c1 = rl_power_factor(nu, alpha1)
    c2 = rl_power_factor(nu, alpha2)
    p0 = nu - 1.0
    p1 = nu + alpha1 - 1.0
    p2 = nu + alpha2 - 1.0
    # f1 = dG1/dt + a D1 G1 + D1 (-Lap G1) - a D2 G2
    f1 = Source(
        (
            (_time_power(p0, nu), X1),
            (_time_power(p1, a * c1), X1),
            (_time_power(p1, c1), NEG_LAP_X1),
            (_time_power(p2, -a * c2), X2),
        )
    )
    f2 = Source(
        (
            (_time_power(p0, nu), X2),
            (_time_power(p2, a * c2), X2),
            (_time_power(p2, c2), NEG_LAP_X2),
            (_time_power(p1, -a * c1), X1),
        )
    )
    if a == 0:
        f1 = Source(f1.terms[:3])
        f2 = Source(f2.terms[:3])

    def exact1(t: float) -> ScalarField:
        return ScalarField(lambda x: t**nu * x * (1.0 - x), grad=lambda x: t**nu * (1.0 - 2.0 * x))

    def exact2(t: float) -> ScalarField:
        return ScalarField(lambda x: t**nu * x * x * (1.0 - x), grad=lambda x: t**nu * (2.0 * x - 3.0 * x * x))

    return ProblemSpec(
        name="example1",
        alpha1=alpha1,
        alpha2=alpha2,
        a=a,
        dimension=1,
        g1_0=exact1(0.0),
        g2_0=exact2(0.0),
        f1=f1,
        f2=f2,
        exact=(exact1, exact2),
        init_projection="zero",
    )


def example2(alpha1: float = 0.45, alpha2: float = 0.55, a: float = -10.0) -> ProblemSpec:
    return ProblemSpec("example2", alpha1, alpha2, a, 1, X1, SIN1, init_projection="ritz")


def decay_problem(which: str, alpha1: float = 0.3, alpha2: float = 0.7, a: float = -10.0) -> ProblemSpec:
    """``example2`` data with one state's initial datum switched off.

    ``which="g2"`` keeps ``sin(pi x)`` in the second state only, ``"g1"``
    keeps ``x(1-x)`` in the first state only.
    """
    if which == "g2":
        return ProblemSpec("decay-g2", alpha1, alpha2, a, 1, ZERO_FIELD, SIN1, init_projection="ritz")
    if which == "g1":
        return ProblemSpec("decay-g1", alpha1, alpha2, a, 1, X1, ZERO_FIELD, init_projection="ritz")
    raise ValueError(f"unknown decay variant {which!r}")


def example3(alpha1: float = 0.4, alpha2: float = 0.6, a: float = 10.0) -> ProblemSpec:
    return ProblemSpec(
        "example3", alpha1, alpha2, a, 1, _indicator_1d(0.75, 1.0), _indicator_1d(0.0, 0.25), init_projection="l2"
    )


def example4(alpha1: float = 0.1, alpha2: float = 0.2, a: float = -2.0) -> ProblemSpec:
    g1 = ScalarField(
        lambda x, y: x * (1 - x) * y * (1 - y),
        grad=lambda x, y: ((1 - 2 * x) * y * (1 - y), x * (1 - x) * (1 - 2 * y)),
    )
    g2 = ScalarField(
        lambda x, y: x * x * (1 - x) * y * (1 - y) ** 2,
        grad=lambda x, y: ((2 * x - 3 * x * x) * y * (1 - y) ** 2, x * x * (1 - x) * (1 - y) * (1 - 3 * y)),
    )
    return ProblemSpec("example4", alpha1, alpha2, a, 2, g1, g2, init_projection="ritz")


def example5(alpha1: float = 0.1, alpha2: float = 0.2, a: float = 1.0) -> ProblemSpec:
    return ProblemSpec(
        "example5",
        alpha1,
        alpha2,
        a,
        2,
        _indicator_2d(0.5, 1.0, 0.0, 0.75),
        _indicator_2d(0.0, 0.75, 0.5, 1.0),
        init_projection="l2",
    )


def example6(variant: str = "spatial", alpha1: float = 0.8, alpha2: float = 0.9, a: float = 0.5) -> ProblemSpec:
    if variant == "spatial":
        f1 = Source(((_time_power(0.2), ScalarField(lambda x, y: x * y)),))
        f2 = Source(((_time_power(0.3), ScalarField(lambda x, y: 1.0 + 0.0 * x)),))
    elif variant == "temporal":
        f1 = Source(((_time_power(0.2, 10.0), _indicator_2d(0.0, 0.5, 0.25, 1.0)),))
        f2 = Source(((_time_power(0.3, 10.0), _indicator_2d(0.5, 1.0, 0.0, 0.25)),))
    else:
        raise ValueError(f"unknown example6 variant {variant!r}")
    return ProblemSpec(
        f"example6-{variant}", alpha1, alpha2, a, 2, ZERO_FIELD, ZERO_FIELD, f1=f1, f2=f2, init_projection="zero"
    )


_REGISTRY: dict[str, Callable[..., ProblemSpec]] = {
    "example1": example1,
    "example2": example2,
    "example3": example3,
    "example4": example4,
    "example5": example5,
    "example6-spatial": lambda **kw: example6("spatial", **kw),
    "example6-temporal": lambda **kw: example6("temporal", **kw),
    "decay-g1": lambda **kw: decay_problem("g1", **kw),
    "decay-g2": lambda **kw: decay_problem("g2", **kw),
}

PROBLEM_NAMES = tuple(_REGISTRY)


def get_problem(name: str, **overrides) -> ProblemSpec:
    """Build a named problem; ``None``-valued overrides are ignored."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {', '.join(PROBLEM_NAMES)}") from None
    return factory(**{k: v for k, v in overrides.items() if v is not None})
