"""Problem descriptions, grids, and the catalogue of manufactured solutions.

The solvers march

    du/dt = kappa * d/dx(theta(x) du/dx) + f(t, x),   0 < x < 2*pi,

where kappa is 1 for the diffusion (real) kind and i for the
Schrodinger-type (complex) kind.  theta is strictly positive and does
not depend on time.  Manufactured solutions pair an exact field with the
forcing that makes it solve the equation; each forcing below is written
out by hand and cross-checked in the tests against the chain-rule
composition of the stored derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Union

import numpy as np

from .theta_fit import TWO_PI, CoefficientDomainError


class ScalarKind(Enum):
    REAL = "real"
    COMPLEX = "complex"

    @property
    def dtype(self):
        return np.complex128 if self is ScalarKind.COMPLEX else np.float64

    @property
    def kappa(self) -> complex:
        return 1j if self is ScalarKind.COMPLEX else 1.0


@dataclass(frozen=True)
class Grid1D:
    """Uniform space-time grid on [0, 2*pi] x [0, t_final]."""

    n: int
    h: float
    x: np.ndarray
    tau: float
    n_steps: int
    t_final: float


def make_grid(n: int, courant: complex, t_final: float, theta_max: float) -> Grid1D:
    """Build the grid for a target grid ratio.

    The requested ratio |courant| = theta_max * tau / h^2 fixes a raw
    time step; the actual tau is that raw value shrunk so that an
    integer number of steps lands exactly on t_final.
    """
    if not isinstance(n, (int, np.integer)) or n < 4:
        raise ValueError(f"need at least 4 intervals, got {n!r}")
    if t_final <= 0.0:
        raise ValueError(f"t_final must be positive, got {t_final}")
    if theta_max <= 0.0:
        raise ValueError(f"theta_max must be positive, got {theta_max}")
    mag = abs(courant)
    if mag == 0.0:
        raise ValueError("courant number must be nonzero")
    h = TWO_PI / n
    raw_tau = h * h * mag / theta_max
    n_steps = max(1, math.ceil(t_final / raw_tau - 1e-9))
    tau = t_final / n_steps
    x = np.arange(n + 1) * h
    return Grid1D(n=int(n), h=h, x=x, tau=tau, n_steps=n_steps, t_final=t_final)


def theta_grid_max(theta: Callable, grid_or_x) -> float:
    """Largest coefficient value over the grid nodes, with positivity check."""
    x = grid_or_x.x if isinstance(grid_or_x, Grid1D) else np.asarray(grid_or_x)
    # overflow in the user's coefficient is exactly what the finiteness
    # check below reports, so the sweep itself runs silent
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.asarray([float(theta(float(xi))) for xi in x])
    finite = np.isfinite(vals)
    if not finite.all():
        bad = int(np.argmin(finite))
        raise CoefficientDomainError(
            f"coefficient is not finite on the grid, got {vals[bad]} at x={x[bad]}"
        )
    if np.any(vals <= 0.0):
        bad = int(np.argmin(vals))
        raise CoefficientDomainError(
            f"coefficient must be positive on the grid, got {vals[bad]} at x={x[bad]}"
        )
    return float(vals.max())


@dataclass(frozen=True)
class Dirichlet:
    """Prescribed end values u(t, 0) and u(t, 2*pi)."""

    left: Callable[[float], complex]
    right: Callable[[float], complex]


@dataclass(frozen=True)
class Neumann:
    """Homogeneous derivative conditions u_x = 0 at both walls."""


BoundaryCondition = Union[Dirichlet, Neumann]


@dataclass(frozen=True)
class ProblemSpec:
    theta: Callable[[float], float]
    forcing: Callable[[float, np.ndarray], np.ndarray]
    initial: Callable[[np.ndarray], np.ndarray]
    boundary: BoundaryCondition
    kind: ScalarKind


@dataclass(frozen=True)
class SampleSolution:
    """A manufactured solution: problem plus the exact field and pieces.

    The derivative callables (and theta_dx) exist so tests can verify
    the hand-written forcing against the chain-rule composition
    exact_dt - kappa*(theta_dx*exact_dx + theta*exact_dxx).
    """

    name: str
    params: dict
    problem: ProblemSpec
    exact: Callable[[float, np.ndarray], np.ndarray]
    exact_dt: Callable[[float, np.ndarray], np.ndarray]
    exact_dx: Callable[[float, np.ndarray], np.ndarray]
    exact_dxx: Callable[[float, np.ndarray], np.ndarray]
    theta_dx: Callable[[np.ndarray], np.ndarray]


def _dirichlet_from_exact(exact) -> Dirichlet:
    return Dirichlet(
        left=lambda t: exact(t, 0.0),
        right=lambda t: exact(t, TWO_PI),
    )


def _build_s1(kind: ScalarKind, params: dict) -> SampleSolution:
    kp = kind.kappa

    def theta(x):
        return np.cos(x) ** 2 + 1.0

    def theta_dx(x):
        return -np.sin(2.0 * x)

    def exact(t, x):
        return np.sin(x) ** 3 * np.sin(t) + np.sin(2.0 * x) * np.cos(t)

    def exact_dt(t, x):
        return np.sin(x) ** 3 * np.cos(t) - np.sin(2.0 * x) * np.sin(t)

    def exact_dx(t, x):
        return 3.0 * np.sin(x) ** 2 * np.cos(x) * np.sin(t) + 2.0 * np.cos(
            2.0 * x
        ) * np.cos(t)

    def exact_dxx(t, x):
        return (6.0 * np.sin(x) * np.cos(x) ** 2 - 3.0 * np.sin(x) ** 3) * np.sin(
            t
        ) - 4.0 * np.sin(2.0 * x) * np.cos(t)

    def forcing(t, x):
        ut = np.sin(x) ** 3 * np.cos(t) - np.sin(2.0 * x) * np.sin(t)
        flux = -np.sin(2.0 * x) * (
            3.0 * np.sin(x) ** 2 * np.cos(x) * np.sin(t)
            + 2.0 * np.cos(2.0 * x) * np.cos(t)
        ) + (np.cos(x) ** 2 + 1.0) * (
            (6.0 * np.sin(x) * np.cos(x) ** 2 - 3.0 * np.sin(x) ** 3) * np.sin(t)
            - 4.0 * np.sin(2.0 * x) * np.cos(t)
        )
        return ut - kp * flux

    problem = ProblemSpec(
        theta=theta,
        forcing=forcing,
        initial=lambda x: exact(0.0, x),
        boundary=_dirichlet_from_exact(exact),
        kind=kind,
    )
    return SampleSolution("s1", params, problem, exact, exact_dt, exact_dx, exact_dxx, theta_dx)


def _build_s2(kind: ScalarKind, params: dict) -> SampleSolution:
    k = int(params.get("k", 2))
    if k < 2:
        raise ValueError(f"power k must be at least 2, got {k}")
    params = {"k": k}
    kp = kind.kappa

    def theta(x):
        return np.cos(x) ** 2 + 1.0

    def theta_dx(x):
        return -np.sin(2.0 * x)

    def exact(t, x):
        return np.sin(t) * np.sin(x) ** k * np.exp(x)

    def exact_dt(t, x):
        return np.cos(t) * np.sin(x) ** k * np.exp(x)

    def exact_dx(t, x):
        return (
            np.sin(t)
            * np.exp(x)
            * (np.sin(x) ** k + k * np.sin(x) ** (k - 1) * np.cos(x))
        )

    def exact_dxx(t, x):
        s, c = np.sin(x), np.cos(x)
        return (
            np.sin(t)
            * np.exp(x)
            * (
                s**k
                + 2.0 * k * s ** (k - 1) * c
                + k * (k - 1) * s ** (k - 2) * c**2
                - k * s**k
            )
        )

    def forcing(t, x):
        s, c = np.sin(x), np.cos(x)
        ut = np.cos(t) * s**k * np.exp(x)
        ux = np.sin(t) * np.exp(x) * (s**k + k * s ** (k - 1) * c)
        uxx = (
            np.sin(t)
            * np.exp(x)
            * (s**k + 2.0 * k * s ** (k - 1) * c + k * (k - 1) * s ** (k - 2) * c**2 - k * s**k)
        )
        return ut - kp * (-np.sin(2.0 * x) * ux + (c**2 + 1.0) * uxx)

    problem = ProblemSpec(
        theta=theta,
        forcing=forcing,
        initial=lambda x: exact(0.0, x),
        boundary=_dirichlet_from_exact(exact),
        kind=kind,
    )
    return SampleSolution("s2", params, problem, exact, exact_dt, exact_dx, exact_dxx, theta_dx)


def _build_s3(kind: ScalarKind, params: dict) -> SampleSolution:
    a = float(params.get("a", 1.0))
    b = float(params.get("b", 1.0))
    omega = float(params.get("omega", 1.0))
    params = {"a": a, "b": b, "omega": omega}
    kp = kind.kappa

    def theta(x):
        return np.exp(a * x)

    def theta_dx(x):
        return a * np.exp(a * x)

    def _ab(t, x):
        return np.exp(b * (TWO_PI - x)) * np.cos(omega * t), np.exp(b * x) * np.sin(
            omega * t
        )

    def exact(t, x):
        pa, pb = _ab(t, x)
        return np.sin(0.5 * x) * (pa + pb)

    def exact_dt(t, x):
        return (
            np.sin(0.5 * x)
            * omega
            * (
                -np.exp(b * (TWO_PI - x)) * np.sin(omega * t)
                + np.exp(b * x) * np.cos(omega * t)
            )
        )

    def exact_dx(t, x):
        pa, pb = _ab(t, x)
        return 0.5 * np.cos(0.5 * x) * (pa + pb) + np.sin(0.5 * x) * b * (pb - pa)

    def exact_dxx(t, x):
        pa, pb = _ab(t, x)
        return (
            -0.25 * np.sin(0.5 * x) * (pa + pb)
            + np.cos(0.5 * x) * b * (pb - pa)
            + np.sin(0.5 * x) * b * b * (pa + pb)
        )

    def forcing(t, x):
        pa = np.exp(b * (TWO_PI - x)) * np.cos(omega * t)
        pb = np.exp(b * x) * np.sin(omega * t)
        ut = np.sin(0.5 * x) * omega * (
            -np.exp(b * (TWO_PI - x)) * np.sin(omega * t)
            + np.exp(b * x) * np.cos(omega * t)
        )
        ux = 0.5 * np.cos(0.5 * x) * (pa + pb) + np.sin(0.5 * x) * b * (pb - pa)
        uxx = (
            -0.25 * np.sin(0.5 * x) * (pa + pb)
            + np.cos(0.5 * x) * b * (pb - pa)
            + np.sin(0.5 * x) * b * b * (pa + pb)
        )
        return ut - kp * (a * np.exp(a * x) * ux + np.exp(a * x) * uxx)

    problem = ProblemSpec(
        theta=theta,
        forcing=forcing,
        initial=lambda x: exact(0.0, x),
        boundary=_dirichlet_from_exact(exact),
        kind=kind,
    )
    return SampleSolution("s3", params, problem, exact, exact_dt, exact_dx, exact_dxx, theta_dx)


def _build_sn(kind: ScalarKind, params: dict) -> SampleSolution:
    kp = kind.kappa

    def theta(x):
        return np.cos(x) ** 2 + 1.0

    def theta_dx(x):
        return -np.sin(2.0 * x)

    def exact(t, x):
        return np.cos(x) ** 2 * np.sin(t)

    def exact_dt(t, x):
        return np.cos(x) ** 2 * np.cos(t)

    def exact_dx(t, x):
        return -np.sin(2.0 * x) * np.sin(t)

    def exact_dxx(t, x):
        return -2.0 * np.cos(2.0 * x) * np.sin(t)

    def forcing(t, x):
        ut = np.cos(x) ** 2 * np.cos(t)
        flux = -np.sin(2.0 * x) * (-np.sin(2.0 * x) * np.sin(t)) + (
            np.cos(x) ** 2 + 1.0
        ) * (-2.0 * np.cos(2.0 * x) * np.sin(t))
        return ut - kp * flux

    problem = ProblemSpec(
        theta=theta,
        forcing=forcing,
        initial=lambda x: exact(0.0, x),
        boundary=Neumann(),
        kind=kind,
    )
    return SampleSolution("sn", params, problem, exact, exact_dt, exact_dx, exact_dxx, theta_dx)


_BUILDERS = {
    "s1": (_build_s1, ScalarKind.REAL),
    "s2": (_build_s2, ScalarKind.REAL),
    "s3": (_build_s3, ScalarKind.REAL),
    "sn": (_build_sn, ScalarKind.REAL),
    "snll": (_build_sn, ScalarKind.COMPLEX),
}


def sample_solution(name: str, kind: ScalarKind | None = None, **params) -> SampleSolution:
    """Look up a manufactured solution by name.

    Passing kind switches the same field to the other equation kind
    (the forcing changes accordingly); by default each sample uses its
    natural kind.  Unknown names raise ValueError listing the choices.
    """
    key = name.lower()
    if key not in _BUILDERS:
        raise ValueError(f"unknown sample {name!r}; choose from {sorted(_BUILDERS)}")
    builder, default_kind = _BUILDERS[key]
    sample = builder(kind or default_kind, dict(params))
    if key == "snll":
        sample = SampleSolution(
            "snll",
            sample.params,
            sample.problem,
            sample.exact,
            sample.exact_dt,
            sample.exact_dx,
            sample.exact_dxx,
            sample.theta_dx,
        )
    return sample


def grid_for(
    sample: SampleSolution, n: int, courant: complex, t_final: float
) -> Grid1D:
    """Grid whose ratio is measured against max theta over the nodes."""
    probe = make_grid(n, 1.0, t_final, 1.0)
    tmax = theta_grid_max(sample.problem.theta, probe)
    return make_grid(n, courant, t_final, tmax)
