"""Brute-force truncated Fock-space states and pseudo-spin operators.

Everything here is built by explicit matrix arithmetic on a finite grid of
Fock levels ``0..dim-1`` per mode. These routines are the ground truth that
the closed-form Bell factor in :mod:`tmsv_bell.analytic_core` is checked
against, so they deliberately avoid sharing algebra with it.

Conventions
-----------
* Two-mode matrices are indexed ``row = n_first * dim + n_second``.
* A lossy channel is a beamsplitter mixing the signal with a vacuum ancilla:
  transmission amplitude ``sqrt(1 - R**2)``, reflection amplitude ``R``.
  With ``reflection_sign=+1`` (default) the ancilla receives ``+R`` per
  photon; ``-1`` gives the rotation beamsplitter ``exp(theta (a^+ b - a b^+))``
  whose ancilla port carries ``-R``. The two differ by a parity phase on the
  ancilla only, which is invisible after tracing it out.
* Truncation loss is tracked in ``trace_deficit`` and never renormalised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .errors import ConfigurationError, DomainError

#: Largest single-mode cutoff accepted for two-mode states (dim**2 square matrix).
MAX_TWO_MODE_DIM = 80
#: Largest cutoff for the four-mode purification intermediate (dim**4 amplitudes).
MAX_PURIFIED_DIM = 64


@dataclass(frozen=True)
class FockCutoff:
    """Single-mode truncation: Fock levels ``0..dim-1``."""

    dim: int

    def __post_init__(self):
        if isinstance(self.dim, bool) or not isinstance(self.dim, (int, np.integer)):
            raise ConfigurationError(f"cutoff must be an integer, got {self.dim!r}")
        if self.dim < 2:
            raise ConfigurationError(f"cutoff must be >= 2, got {self.dim}")
        if self.dim % 2:
            raise ConfigurationError(
                f"cutoff must be even so every (2m, 2m+1) pair fits, got {self.dim}"
            )


def default_cutoff(r):
    """Default cutoff ``max(40, ceil(10 (1 + sinh(r)**2)))`` rounded up to even."""
    dim = max(40, math.ceil(10.0 * (1.0 + math.sinh(r) ** 2)))
    return FockCutoff(dim + dim % 2)


def _as_cutoff(cutoff):
    return cutoff if isinstance(cutoff, FockCutoff) else FockCutoff(int(cutoff))


def _check_lambda(lam):
    if not (0.0 <= lam < 1.0):
        raise DomainError(f"lambda must lie in [0, 1), got {lam}")


def _check_reflectivity(name, R):
    if not (0.0 <= R <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {R}")


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TruncatedState:
    """Density operator on a finite Fock grid plus the probability lost to truncation."""

    dims: tuple
    matrix: np.ndarray = field(repr=False)
    trace_deficit: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "matrix", _frozen(self.matrix))
        size = math.prod(self.dims)
        if self.matrix.shape != (size, size):
            raise ConfigurationError(
                f"matrix shape {self.matrix.shape} does not match dims {self.dims}"
            )

    @property
    def trace(self):
        return float(np.trace(self.matrix).real)

    def hermiticity_error(self):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def check_invariants(self, herm_tol=1e-12, psd_tol=-1e-10, trace_tol=1e-12):
        """Raise :class:`DomainError` if Hermiticity, positivity or trace bookkeeping fails."""
        if self.hermiticity_error() > herm_tol:
            raise DomainError(f"state not Hermitian: {self.hermiticity_error():.3e}")
        if self.min_eigenvalue() < psd_tol:
            raise DomainError(f"state not PSD: min eigenvalue {self.min_eigenvalue():.3e}")
        if abs(self.trace + self.trace_deficit - 1.0) > trace_tol:
            raise DomainError(
                f"trace {self.trace} + deficit {self.trace_deficit} != 1"
            )

    def mean_photon_number(self, mode):
        """Expectation of the number operator on ``mode`` (0-based)."""
        n = np.arange(self.dims[mode], dtype=float)
        shape = [1] * len(self.dims)
        shape[mode] = -1
        occupation = np.broadcast_to(n.reshape(shape), self.dims).ravel()
        return float(np.real(np.diagonal(self.matrix)) @ occupation)


def trace_distance(a, b):
    """Half the trace norm of ``a - b``; accepts states or raw Hermitian matrices."""
    ma = a.matrix if isinstance(a, TruncatedState) else np.asarray(a)
    mb = b.matrix if isinstance(b, TruncatedState) else np.asarray(b)
    if ma.shape != mb.shape:
        raise ConfigurationError(f"shape mismatch {ma.shape} vs {mb.shape}")
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(ma - mb))))


def _guard_two_mode(dim):
    if dim > MAX_TWO_MODE_DIM:
        raise ConfigurationError(
            f"cutoff {dim} exceeds MAX_TWO_MODE_DIM={MAX_TWO_MODE_DIM}"
        )


def _tmsv_amplitudes(lam, dim):
    return math.sqrt(1.0 - lam * lam) * lam ** np.arange(dim, dtype=float)


def tmsv_state(lam, cutoff):
    """Two-mode squeezed vacuum ``(1 - lam**2) sum lam**(m+n) |m,m><n,n|`` on the grid."""
    _check_lambda(lam)
    dim = _as_cutoff(cutoff).dim
    _guard_two_mode(dim)
    c = _tmsv_amplitudes(lam, dim)
    idx = np.arange(dim) * (dim + 1)
    rho = np.zeros((dim * dim, dim * dim))
    rho[np.ix_(idx, idx)] = np.outer(c, c)
    return TruncatedState((dim, dim), rho, lam ** (2 * dim))


# ---------------------------------------------------------------------------
# Closed-form lossy state (sum over k, l of the solved master equation)
# ---------------------------------------------------------------------------

def _channel_amplitudes(kept, lost, dim):
    """``a[m, k] = sqrt(C(m, k)) kept**(m-k) lost**k`` for ``k <= m``, else 0.

    Binomials go through log-factorials; ``0**0 == 1`` so fully transmitting
    or fully reflecting channels need no special case.
    """
    m = np.arange(dim)[:, None]
    k = np.arange(dim)[None, :]
    valid = k <= m
    mk = np.where(valid, m - k, 0)
    log_binom = gammaln(m + 1) - gammaln(k + 1) - gammaln(mk + 1)
    amp = np.exp(0.5 * log_binom) * np.power(float(kept), mk) * np.power(float(lost), k)
    return np.where(valid, amp, 0.0)


def _closed_form_state(lam, kept_a, lost_a, kept_b, lost_b, dim):
    """Evaluate the lossy-NOPA density matrix term by term.

    ``rho = sum_{m,n} sum_{k,l <= min(m,n)} (1 - lam^2) lam^(m+n)
    a_A[m,k] a_A[n,k] a_B[m,l] a_B[n,l] |m-k, m-l><n-k, n-l|``,
    grouped as one rank-one block per ``(k, l)``.
    """
    _guard_two_mode(dim)
    c = _tmsv_amplitudes(lam, dim)
    amp_a = _channel_amplitudes(kept_a, lost_a, dim)
    amp_b = _channel_amplitudes(kept_b, lost_b, dim)
    rho = np.zeros((dim * dim, dim * dim))
    for k in range(dim):
        for l in range(dim):
            m = np.arange(max(k, l), dim)
            v = c[m] * amp_a[m, k] * amp_b[m, l]
            if not v.any():
                continue
            idx = (m - k) * dim + (m - l)
            rho[np.ix_(idx, idx)] += np.outer(v, v)
    return TruncatedState((dim, dim), rho, lam ** (2 * dim))


def lossy_state_direct(lam, rA, rB, cutoff):
    """NOPA state after loss ``rA`` on mode A and ``rB`` on mode B, from the closed-form sum."""
    _check_lambda(lam)
    _check_reflectivity("rA", rA)
    _check_reflectivity("rB", rB)
    dim = _as_cutoff(cutoff).dim
    return _closed_form_state(
        lam, math.sqrt(1.0 - rA * rA), rA, math.sqrt(1.0 - rB * rB), rB, dim
    )


def eve_state(lam, rB, cutoff, reflection_sign=1):
    """Joint (Alice, Eve) state when only Bob's arm is lossy.

    Obtained from the closed-form lossy state by letting the lost amplitude
    become ``sqrt(1 - rB**2)`` and the kept one become ``reflection_sign * rB``;
    ``reflection_sign=-1`` is the literal exchange with the minus sign.
    """
    _check_lambda(lam)
    _check_reflectivity("rB", rB)
    if reflection_sign not in (1, -1):
        raise DomainError("reflection_sign must be +1 or -1")
    dim = _as_cutoff(cutoff).dim
    return _closed_form_state(
        lam, 1.0, 0.0, reflection_sign * rB, math.sqrt(1.0 - rB * rB), dim
    )


# ---------------------------------------------------------------------------
# Purification oracle: explicit beamsplitter unitaries, partial traces
# ---------------------------------------------------------------------------

def beamsplitter_amplitudes(R, dim, reflection_sign=1):
    """``out[m, i, e] = <i, e| U |m, 0>`` for a signal/ancilla beamsplitter.

    Each fixed-photon-number block of ``U = exp(theta (a^+ b - a b^+))`` with
    ``sin(theta) = R`` is exponentiated numerically; the block generator is
    exact on the truncated grid because ``a^+ b`` conserves photon number.
    """
    _check_reflectivity("R", R)
    theta = math.asin(R)
    out = np.zeros((dim, dim, dim))
    for n in range(dim):
        j = np.arange(n)
        # basis |n-j, j>, j = 0..n; a^+ b maps j -> j-1
        hop = np.sqrt((n - j) * (j + 1.0))
        gen = np.zeros((n + 1, n + 1))
        gen[j, j + 1] = hop
        gen -= gen.T
        column = expm(theta * gen)[:, 0]
        e = np.arange(n + 1)
        if reflection_sign == 1:
            column = column * (-1.0) ** e
        out[n, n - e, e] = column
    return out


def _guard_purified(dim):
    if dim > MAX_PURIFIED_DIM:
        raise ConfigurationError(
            f"cutoff {dim} exceeds MAX_PURIFIED_DIM={MAX_PURIFIED_DIM} "
            f"({dim ** 4} four-mode amplitudes)"
        )


def lossy_state_purified(lam, rA, rB, cutoff):
    """Same lossy state, built as NOPA x vacuum x vacuum -> two beamsplitters -> trace ancillas."""
    _check_lambda(lam)
    _check_reflectivity("rA", rA)
    _check_reflectivity("rB", rB)
    dim = _as_cutoff(cutoff).dim
    _guard_purified(dim)
    c = _tmsv_amplitudes(lam, dim)
    bs_a = beamsplitter_amplitudes(rA, dim)
    bs_b = beamsplitter_amplitudes(rB, dim)
    # psi[i, j, e, f]: i, j signal modes A, B; e, f their ancillas
    psi = np.einsum("m,mie,mjf->ijef", c, bs_a, bs_b, optimize=True)
    x = psi.reshape(dim * dim, dim * dim)
    return TruncatedState((dim, dim), x @ x.T, lam ** (2 * dim))


def eve_state_purified(lam, rB, cutoff, reflection_sign=1):
    """(Alice, Eve) state from the three-mode pure state with Bob's mode traced out."""
    _check_lambda(lam)
    _check_reflectivity("rB", rB)
    dim = _as_cutoff(cutoff).dim
    _guard_two_mode(dim)
    c = _tmsv_amplitudes(lam, dim)
    bs_b = beamsplitter_amplitudes(rB, dim, reflection_sign)
    # psi[a, e, j]: Alice a, Eve e, Bob j
    psi = np.einsum("m,mje->mej", c, bs_b)
    y = psi.reshape(dim * dim, dim)
    return TruncatedState((dim, dim), y @ y.T, lam ** (2 * dim))


# ---------------------------------------------------------------------------
# Pseudo-spin operators and correlation matrix
# ---------------------------------------------------------------------------

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class PseudoSpinSet:
    """Pauli-like operators acting on the Fock pairs ``(|2m>, |2m+1>)``."""

    s1: np.ndarray = field(repr=False)
    s2: np.ndarray = field(repr=False)
    s3: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("s1", "s2", "s3"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def dim(self):
        return self.s1.shape[0]

    def __iter__(self):
        return iter((self.s1, self.s2, self.s3))


def pseudo_spin_ops(cutoff):
    """S1, S2, S3 on ``dim`` levels: one Pauli block per parity pair."""
    dim = _as_cutoff(cutoff).dim
    eye = np.eye(dim // 2)
    return PseudoSpinSet(*(np.kron(eye, p) for p in _PAULI))


@dataclass(frozen=True)
class CorrelationMatrix:
    """``v[i, j] = Tr(rho S_i^A S_j^B)``; ``imag_residue`` is the largest discarded imaginary part."""

    v: np.ndarray
    imag_residue: float = 0.0

    def __post_init__(self):
        v = np.array(self.v, dtype=float)
        if v.shape != (3, 3):
            raise ConfigurationError(f"correlation matrix must be 3x3, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("correlation matrix has non-finite entries")
        object.__setattr__(self, "v", _frozen(v))


def correlation_matrix(state, spins):
    """Spin correlation matrix of a two-mode truncated state."""
    d = spins.dim
    if tuple(state.dims) != (d, d):
        raise ConfigurationError(
            f"state dims {state.dims} do not match spin dimension {d}"
        )
    rho = state.matrix.reshape(d, d, d, d)
    v = np.empty((3, 3), dtype=complex)
    for i, s_a in enumerate(spins):
        # Tr(rho (S_a x S_b)) = sum rho[a, b, c, e] S_a[c, a] S_b[e, b]
        half = np.einsum("abce,ca->be", rho, s_a)
        for j, s_b in enumerate(spins):
            v[i, j] = np.einsum("be,eb->", half, s_b)
    residue = float(np.max(np.abs(v.imag)))
    if residue > 1e-10:
        raise DomainError(f"correlation matrix has imaginary residue {residue:.3e}")
    return CorrelationMatrix(v.real, residue)
