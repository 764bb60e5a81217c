"""Closed-form Bell factor of a lossy two-mode squeezed vacuum.

The spin correlation matrix of the transmitted state is diagonal with
``|V11| = |V22| = alpha`` and ``V33 = beta``, so the maximal CHSH value is
``2 sqrt(alpha**2 + max(alpha, beta)**2)``.  ``beta`` is elementary;
``alpha`` is an infinite series evaluated here with adaptive truncation.

Per-mode factors are summed in the regrouped form

    F(m, R) = sum_k C(m, 2k) (2k+1)**-0.5 R**(2(m-2k)) (1-R**2)**((4k+1)/2)

which stays finite at ``R = 1``.  Reading ``C(m, j) (1-R^2)^j R^(2(m-j))`` as a
binomial pmf in ``j`` gives ``F(m, R) = sqrt(1-R^2) E[1{j even} / sqrt(j+1)]``;
the pmf is advanced from ``m`` to ``m+1`` with Pascal's rule, which is a convex
combination and therefore never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, DivergenceError, DomainError

R_CAP = 5.0
TERM_CAP = 100_000
DEFAULT_TOL = 1e-12
_STOP_RUN = 5
# pmf entries below this fraction of the peak are dropped; the discarded mass
# is far below any series tolerance we accept
_PMF_TRIM = 1e-30


def lambda_from_r(r, r_cap=R_CAP):
    """``tanh(r)`` for ``0 <= r <= r_cap``."""
    if not (r >= 0.0):
        raise DomainError(f"squeezing r must be >= 0, got {r}")
    if r > r_cap:
        raise DomainError(f"squeezing r={r} exceeds cap {r_cap}")
    return math.tanh(r)


@dataclass(frozen=True)
class ChannelParams:
    """Squeezing plus the two channel reflectivities.

    Build with :meth:`from_r` or :meth:`from_lambda`; ``r`` is ``None`` when
    only ``lam`` was given.
    """

    lam: float
    rA: float = 0.0
    rB: float = 0.0
    r: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.lam < 1.0):
            raise DomainError(f"lambda must lie in [0, 1), got {self.lam}")
        for name in ("rA", "rB"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1], got {value}")
        if self.r is not None and abs(math.tanh(self.r) - self.lam) > 1e-14:
            raise DomainError(f"lambda={self.lam} is not tanh(r={self.r})")

    @classmethod
    def from_r(cls, r, rA=0.0, rB=0.0):
        return cls(lambda_from_r(r), rA, rB, r)

    @classmethod
    def from_lambda(cls, lam, rA=0.0, rB=0.0):
        return cls(lam, rA, rB)

    def swapped(self):
        return ChannelParams(self.lam, self.rB, self.rA, self.r)


@dataclass(frozen=True)
class BellResult:
    alpha: float
    beta: float
    bmax: float
    violated: bool
    terms_used: int
    tail_estimate: float


def capital_lambda(m, rI):
    """Unregrouped per-mode sum ``sum_k C(m,2k) (2k+1)^-1/2 (R/sqrt(1-R^2))^(2m-4k)``.

    Diverges at ``rI = 1`` for ``m >= 1``; use :func:`mode_factor` there.
    """
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    if not (0.0 <= rI <= 1.0):
        raise DomainError(f"reflectivity must lie in [0, 1], got {rI}")
    if m == 0:
        return 1.0
    if rI == 1.0:
        raise DivergenceError("capital_lambda diverges at R = 1 for m >= 1")
    ratio_sq = rI * rI / (1.0 - rI * rI)
    total = 0.0
    for k in range(m // 2 + 1):
        power = m - 2 * k
        if power == 0:
            base = 1.0
        elif ratio_sq == 0.0:
            continue
        else:
            base = ratio_sq ** power
        total += math.comb(m, 2 * k) / math.sqrt(2 * k + 1) * base
    return total


def mode_factor(m, rI):
    """Regrouped per-mode factor ``F(m, R) = (1-R^2)^((2m+1)/2) * capital_lambda(m, R)``.

    Evaluated from log-binomials, independent of the Pascal recurrence used
    inside :func:`alpha_series`.
    """
    if not (0.0 <= rI <= 1.0):
        raise DomainError(f"reflectivity must lie in [0, 1], got {rI}")
    kept = 1.0 - rI * rI
    if kept == 0.0:
        return 0.0
    j = np.arange(0, m + 1, 2)
    log_pmf = gammaln(m + 1) - gammaln(j + 1) - gammaln(m - j + 1) + j * math.log(kept)
    if rI > 0.0:
        log_pmf = log_pmf + (m - j) * math.log(rI * rI)
    else:
        log_pmf = np.where(j == m, log_pmf, -np.inf)
    return math.sqrt(kept) * float(np.sum(np.exp(log_pmf) / np.sqrt(j + 1.0)))


class _ModeFactorStream:
    """Yields ``F(0, R), F(1, R), ...`` by advancing a binomial pmf."""

    def __init__(self, rI):
        self.kept = 1.0 - rI * rI
        self.lost = rI * rI
        self.root_kept = math.sqrt(self.kept)
        self.pmf = np.array([1.0])
        self.offset = 0  # pmf[i] is P(j = offset + i)
        self._weights = np.empty(0)

    def _weights_for(self, stop):
        if stop > self._weights.size:
            j = np.arange(max(stop, 2 * self._weights.size, 64))
            self._weights = np.where(j % 2 == 0, 1.0 / np.sqrt(j + 1.0), 0.0)
        return self._weights[self.offset:stop]

    def value(self):
        w = self._weights_for(self.offset + self.pmf.size)
        return self.root_kept * float(self.pmf @ w)

    def advance(self):
        p = self.pmf
        nxt = np.empty(p.size + 1)
        nxt[:-1] = p * self.lost
        nxt[-1] = 0.0
        nxt[1:] += p * self.kept
        floor = _PMF_TRIM * nxt.max()
        lo, hi = 0, nxt.size
        while nxt[lo] <= floor:
            lo += 1
        while nxt[hi - 1] <= floor:
            hi -= 1
        self.offset += lo
        self.pmf = nxt[lo:hi]


def alpha_series(params, tol=DEFAULT_TOL, term_cap=TERM_CAP):
    """Sum ``alpha = 2(1-lam^2) sum_m (m+1) lam^(2m+1) F(m, rA) F(m, rB)``.

    Stops once ``_STOP_RUN`` consecutive terms are each below ``tol`` relative
    to the running sum, then keeps summing to twice that many terms and
    requires the two partial sums to agree within ``10 tol``.  Near
    ``lam -> 1`` the per-term rule is loose, so a failed check doubles again
    until it passes or ``term_cap`` is hit.  Returns
    ``(alpha, terms_used, tail_estimate)`` with the last doubled sum and its
    change from the previous checkpoint.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    lam = params.lam
    if lam == 0.0 or params.rA == 1.0 or params.rB == 1.0:
        return 0.0, 0, 0.0

    stream_a = _ModeFactorStream(params.rA)
    stream_b = stream_a if params.rB == params.rA else _ModeFactorStream(params.rB)
    prefactor = 2.0 * (1.0 - lam * lam)
    log_lam = math.log(lam)

    total = 0.0
    run = 0
    checkpoint = None
    checkpoint_sum = 0.0
    tail = math.inf
    m = 0
    while True:
        if m >= term_cap:
            raise ConvergenceError(
                f"alpha series not converged after {term_cap} terms "
                f"(lambda={lam}, rA={params.rA}, rB={params.rB})",
                partial_sum=total,
                terms_used=m,
            )
        fa = stream_a.value()
        fb = fa if stream_b is stream_a else stream_b.value()
        term = prefactor * (m + 1) * math.exp((2 * m + 1) * log_lam) * fa * fb
        total += term
        m += 1
        if checkpoint is None:
            run = run + 1 if term <= tol * abs(total) else 0
            if run >= _STOP_RUN:
                checkpoint, checkpoint_sum = m, total
        elif m == 2 * checkpoint:
            tail = abs(total - checkpoint_sum)
            if tail <= 10.0 * tol * abs(total) or total == 0.0:
                break
            checkpoint, checkpoint_sum = m, total
        stream_a.advance()
        if stream_b is not stream_a:
            stream_b.advance()

    return min(max(total, 0.0), 1.0), m, tail


def beta(params):
    """Parity-parity correlation ``(1-lam^2) / (1 - lam^2 (1-2 rA^2)(1-2 rB^2))``."""
    lam2 = params.lam * params.lam
    return (1.0 - lam2) / (
        1.0 - lam2 * (1.0 - 2.0 * params.rA ** 2) * (1.0 - 2.0 * params.rB ** 2)
    )


def bmax_from_alpha_beta(alpha, beta_value):
    return 2.0 * math.sqrt(alpha * alpha + max(alpha, beta_value) ** 2)


def bmax_analytic(params, tol=DEFAULT_TOL):
    """Maximal CHSH value ``2 sqrt(alpha^2 + max(alpha^2, beta^2))``."""
    alpha, terms, tail = alpha_series(params, tol)
    b = beta(params)
    bmax = bmax_from_alpha_beta(alpha, b)
    return BellResult(alpha, b, bmax, bmax > 2.0, terms, tail)


def bmax_lossless(lam):
    """``B_max`` without loss: ``alpha = 2 lam / (1 + lam^2)``, ``beta = 1``."""
    a = 2.0 * lam / (1.0 + lam * lam)
    return 2.0 * math.sqrt(1.0 + a * a)


def eve_params(params):
    """Channel parameters whose Bell factor equals that of the (Alice, Eve) state.

    Eve's share is Bob's lossy state with kept and lost amplitudes exchanged,
    i.e. reflectivity ``sqrt(1 - rB^2)``; the exchange sign only flips the sign
    of ``alpha``.  Requires ``rA = 0``.
    """
    if params.rA != 0.0:
        raise DomainError("the Alice-Eve state is defined for rA = 0 only")
    return ChannelParams(params.lam, 0.0, math.sqrt(1.0 - params.rB ** 2), params.r)
