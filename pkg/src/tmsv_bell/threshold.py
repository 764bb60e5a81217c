"""Loss thresholds R_max(r), their exponential fits and fibre absorption conversion."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .analytic_core import DEFAULT_TOL, ChannelParams, bmax_analytic
from .errors import BracketingError, DomainError, NeverNonlocalError

BISECTION_TOL = 1e-4
BISECTION_MAX_ITER = 60
SCAN_STEP = 0.01
# B_max(R=0) must beat 2 by this much before a threshold is sought
SOLVER_MARGIN = 1e-9

FIT_COEFFICIENTS = {"symmetric": 1.64, "asymmetric": 1.2}
FIT_MIN_R = 1.5


class Mode(str, enum.Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"


class FitValidityWarning(UserWarning):
    """The exponential fit is used below the squeezing where it was claimed to hold."""


@dataclass(frozen=True)
class Scenario:
    """Loss geometry: both arms at ``R`` (symmetric) or Alice's arm only (asymmetric)."""

    mode: Mode
    r: float

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not (self.r >= 0.0):
            raise DomainError(f"squeezing r must be >= 0, got {self.r}")

    def params(self, R):
        if self.mode is Mode.SYMMETRIC:
            return ChannelParams.from_r(self.r, R, R)
        return ChannelParams.from_r(self.r, R, 0.0)

    def bmax(self, R, tol=DEFAULT_TOL):
        return bmax_analytic(self.params(R), tol).bmax


@dataclass(frozen=True)
class ThresholdPoint:
    r: float
    r_max: float
    bmax_at_threshold: float
    fit_value: float
    gamma_max: float
    iterations: int = field(default=0, compare=False)


def gamma_from_R(R):
    """Dimensionless absorption ``-ln(1 - R^2) / 2`` of a channel with reflectivity ``R``."""
    if not (0.0 <= R <= 1.0):
        raise DomainError(f"R must lie in [0, 1], got {R}")
    if R == 1.0:
        raise DomainError("R = 1 means infinite absorption")
    return -0.5 * math.log1p(-R * R)


def R_from_gamma(gamma):
    """Inverse of :func:`gamma_from_R`: ``sqrt(1 - exp(-2 gamma))``."""
    if not (gamma >= 0.0):
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    return math.sqrt(-math.expm1(-2.0 * gamma))


def _fit_value(mode, r):
    return FIT_COEFFICIENTS[Mode(mode).value] * math.exp(-r)


def fit_rmax(scenario):
    """Exponential rule of thumb ``c exp(-r)``: 1.64 symmetric, 1.2 asymmetric.

    Below ``r = 1.5`` the value is still returned but a
    :class:`FitValidityWarning` is emitted.
    """
    if scenario.r < FIT_MIN_R:
        warnings.warn(
            f"fit claimed only for r >= {FIT_MIN_R}, got r={scenario.r}",
            FitValidityWarning,
            stacklevel=2,
        )
    return _fit_value(scenario.mode, scenario.r)


def fit_coefficient(points):
    """Least-squares ``c`` for ``r_max ~ c exp(-r)`` over threshold points."""
    r = np.array([p.r for p in points])
    rm = np.array([p.r_max for p in points])
    e = np.exp(-r)
    return float(rm @ e / (e @ e))


def coarse_scan(scenario, step=SCAN_STEP, tol=DEFAULT_TOL):
    """``[(R, B_max)]`` on ``R = 0, step, ..., 1``."""
    n = int(round(1.0 / step))
    grid = [min(i * step, 1.0) for i in range(n + 1)]
    return [(R, scenario.bmax(R, tol)) for R in grid]


def _bisect(g, lo, hi, tol, max_iter):
    """Shrink ``[lo, hi]`` with ``g(lo) > 0 >= g(hi)`` below width ``tol``."""
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        it += 1
    return 0.5 * (lo + hi), it


def rmax(scenario, tol=BISECTION_TOL, series_tol=DEFAULT_TOL, max_iter=BISECTION_MAX_ITER):
    """Largest reflectivity at which ``B_max`` still exceeds 2.

    Bisects ``B_max(R) - 2`` on ``[0, 1]``.  If the endpoints do not bracket a
    sign change, a coarse scan locates the first crossing instead.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")

    def g(R):
        return scenario.bmax(R, series_tol) - 2.0

    g0 = g(0.0)
    if g0 <= SOLVER_MARGIN:
        raise NeverNonlocalError(
            f"B_max(R=0) = {g0 + 2.0:.12g} does not exceed 2 at r={scenario.r}"
        )
    lo, hi = 0.0, 1.0
    if g(hi) > 0.0:
        scan = coarse_scan(scenario, tol=series_tol)
        crossing = next(
            (i for i in range(1, len(scan)) if scan[i - 1][1] > 2.0 >= scan[i][1]),
            None,
        )
        if crossing is None:
            raise BracketingError(
                f"no crossing of B_max = 2 found for {scenario}", scan
            )
        lo, hi = scan[crossing - 1][0], scan[crossing][0]
    root, iterations = _bisect(g, lo, hi, tol, max_iter)
    return ThresholdPoint(
        r=scenario.r,
        r_max=root,
        bmax_at_threshold=scenario.bmax(root, series_tol),
        fit_value=_fit_value(scenario.mode, scenario.r),
        gamma_max=gamma_from_R(root),
        iterations=iterations,
    )


def squeezing_for_threshold(mode, target, r_lo, r_hi, tol=1e-3):
    """Squeezing in ``[r_lo, r_hi]`` where ``R_max`` falls to ``target``.

    Assumes ``R_max`` decreases with ``r`` on the interval.
    """
    def h(r):
        return rmax(Scenario(mode, r)).r_max - target

    if not (h(r_lo) > 0.0 >= h(r_hi)):
        raise BracketingError(
            f"R_max = {target} is not crossed on r in [{r_lo}, {r_hi}]"
        )
    root, _ = _bisect(h, r_lo, r_hi, tol, BISECTION_MAX_ITER)
    return root
