"""Local log-quartic fits of the variable coefficient.

Every interior stencil row is built from a local model

    theta(x_j + y) ~ theta(x_j) * exp(c1 y + c2 y^2 + c3 y^3 + c4 y^4)

whose four coefficients are pinned down by matching log-ratios of theta
at a handful of nearby nodes.  The boundary rows use a one-sided variant
sampled at half-step offsets into the domain.  The coefficient must stay
strictly positive at every sampled point or the logs are meaningless;
violations raise CoefficientDomainError with the offending abscissa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

TWO_PI = 2.0 * math.pi


class CoefficientDomainError(ValueError):
    """The coefficient was non-positive (or non-finite) at a sample point."""


@dataclass(frozen=True)
class ExpFit:
    """Fitted local model around a center point.

    r_minus and r_plus are the ratios theta(center)/theta(center -+ h)
    that the stencil tables consume alongside c1..c4.  For interior fits
    they come from direct samples of theta; for boundary fits the outward
    ratio is the model's extrapolation, since there is no node beyond the
    wall to sample.
    """

    c1: float
    c2: float
    c3: float
    c4: float
    theta_center: float
    r_minus: float
    r_plus: float

    def g(self, y: float) -> float:
        """The fitted exponent c1*y + c2*y^2 + c3*y^3 + c4*y^4."""
        return y * (self.c1 + y * (self.c2 + y * (self.c3 + y * self.c4)))


def _sample(theta: Callable[[float], float], x: float) -> float:
    v = float(theta(x))
    if not math.isfinite(v) or v <= 0.0:
        raise CoefficientDomainError(f"coefficient must be positive, got {v} at x={x}")
    return v


def fit_interior(theta: Callable[[float], float], x_j: float, h: float) -> ExpFit:
    """Fit the log-quartic model at an interior node x_j.

    Matches the model to log(theta(x_j + y)/theta(x_j)) at the four
    offsets y = -h, -h/2, h/2, h.  The 4x4 Vandermonde-type system has a
    closed-form solution, used here directly.
    """
    t0 = _sample(theta, x_j)
    lm = math.log(_sample(theta, x_j - 0.5 * h) / t0)
    lp = math.log(_sample(theta, x_j + 0.5 * h) / t0)
    mm = math.log(_sample(theta, x_j - h) / t0)
    mp = math.log(_sample(theta, x_j + h) / t0)
    c1 = -(8.0 * lm - 8.0 * lp - mm + mp) / (6.0 * h)
    c2 = (16.0 * lm + 16.0 * lp - mm - mp) / (6.0 * h * h)
    c3 = 2.0 * (2.0 * lm - 2.0 * lp - mm + mp) / (3.0 * h**3)
    c4 = -2.0 * (4.0 * lm + 4.0 * lp - mm - mp) / (3.0 * h**4)
    return ExpFit(
        c1=c1,
        c2=c2,
        c3=c3,
        c4=c4,
        theta_center=t0,
        r_minus=t0 / _sample(theta, x_j - h),
        r_plus=t0 / _sample(theta, x_j + h),
    )


def _one_sided_coeffs(w0: float, w1: float, w2: float, w3: float, h: float):
    # Exact inverse of the 4x4 system matching the exponent at
    # y = h/2, h, 3h/2, 2h.
    c1 = (8.0 * w0 - 6.0 * w1 + (8.0 / 3.0) * w2 - 0.5 * w3) / h
    c2 = (-(52.0 / 3.0) * w0 + 19.0 * w1 - (28.0 / 3.0) * w2 + (11.0 / 6.0) * w3) / h**2
    c3 = (12.0 * w0 - 16.0 * w1 + (28.0 / 3.0) * w2 - 2.0 * w3) / h**3
    c4 = (-(8.0 / 3.0) * w0 + 4.0 * w1 - (8.0 / 3.0) * w2 + (2.0 / 3.0) * w3) / h**4
    return c1, c2, c3, c4


def fit_boundary_left(theta: Callable[[float], float], h: float) -> ExpFit:
    """One-sided fit at the left wall x=0, sampling x = h/2, h, 3h/2, 2h.

    Both neighbour ratios come from the fitted model: r_plus =
    exp(-g(h)) reproduces theta(0)/theta(h) to fit accuracy, and
    r_minus = exp(-g(-h)) extrapolates across the wall.
    """
    t0 = _sample(theta, 0.0)
    w = [math.log(_sample(theta, (m + 1) * 0.5 * h) / t0) for m in range(4)]
    c1, c2, c3, c4 = _one_sided_coeffs(w[0], w[1], w[2], w[3], h)
    fit = ExpFit(c1, c2, c3, c4, t0, 1.0, 1.0)
    return ExpFit(
        c1=c1,
        c2=c2,
        c3=c3,
        c4=c4,
        theta_center=t0,
        r_minus=math.exp(-fit.g(-h)),
        r_plus=math.exp(-fit.g(h)),
    )


def fit_boundary_right(
    theta: Callable[[float], float], h: float, length: float = TWO_PI
) -> ExpFit:
    """One-sided fit at the right wall x=length, looking inward.

    Implemented by reflecting: fit the left model for
    theta_tilde(s) = theta(length - s) and flip the odd coefficients.
    The inward ratio is then r_minus and the outward extrapolated one is
    r_plus, keeping the orientation of the physical axis.
    """
    mirrored = fit_boundary_left(lambda s: theta(length - s), h)
    return ExpFit(
        c1=-mirrored.c1,
        c2=mirrored.c2,
        c3=-mirrored.c3,
        c4=mirrored.c4,
        theta_center=mirrored.theta_center,
        r_minus=mirrored.r_plus,
        r_plus=mirrored.r_minus,
    )
