"""Horodecki criterion and the CHSH functional for a spin correlation matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fock_oracle import CorrelationMatrix

JACOBI_SWEEPS = 50
UNIT_TOL = 1e-12


def _as_matrix(v):
    if isinstance(v, CorrelationMatrix):
        return np.array(v.v, dtype=float)
    v = np.array(v, dtype=float)
    if v.shape != (3, 3) or not np.all(np.isfinite(v)):
        raise DomainError("correlation matrix must be a finite 3x3 array")
    return v


def jacobi_eigh(a, sweeps=JACOBI_SWEEPS):
    """Eigen-decomposition of a real symmetric 3x3 matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, vectors)`` sorted by descending eigenvalue;
    ``vectors[:, k]`` is normalised with its first non-negligible entry positive.
    """
    a = np.array(a, dtype=float)
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    vecs = np.eye(n)
    scale = max(float(np.max(np.abs(a))), 1e-300)
    for _ in range(sweeps):
        off = math.sqrt(sum(a[p, q] ** 2 for p in range(n) for q in range(n) if p != q))
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                vecs = vecs @ rot
    vals = np.diag(a).copy()
    # stable sort keeps the input axis order among equal eigenvalues
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    for k in range(n):
        lead = np.nonzero(np.abs(vecs[:, k]) > 1e-12)[0]
        if lead.size and vecs[lead[0], k] < 0:
            vecs[:, k] = -vecs[:, k]
    return vals, vecs


@dataclass(frozen=True)
class MeasurementSettings:
    """Alice's ``a, a'`` and Bob's ``b, b'`` measurement directions."""

    a: np.ndarray
    a_prime: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray

    def __post_init__(self):
        for name in ("a", "a_prime", "b", "b_prime"):
            vec = np.array(getattr(self, name), dtype=float)
            if vec.shape != (3,):
                raise DomainError(f"{name} must be a 3-vector")
            if abs(np.linalg.norm(vec) - 1.0) > UNIT_TOL:
                raise DomainError(f"{name} is not a unit vector (norm {np.linalg.norm(vec)})")
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)


@dataclass(frozen=True)
class HorodeckiResult:
    bmax: float
    u: float
    u_prime: float
    settings: MeasurementSettings


def _unit(x):
    return x / np.linalg.norm(x)


def _orthogonal_unit(x):
    """Deterministic unit vector orthogonal to ``x`` (first basis axis least aligned with it)."""
    axis = np.eye(3)[int(np.argmin(np.abs(x)))]
    return _unit(axis - (axis @ x) * x)


def horodecki_bmax(v):
    """Maximal CHSH value ``2 sqrt(u + u')`` and settings that attain it.

    ``u >= u'`` are the two largest eigenvalues of ``V^T V`` with eigenvectors
    ``e1, e2`` (Bob's side).  Bob measures ``b, b' = cos(t) e1 +- sin(t) e2``
    with ``tan(t) = sqrt(u'/u)``; Alice measures along ``V e1`` and ``V e2``.
    """
    v = _as_matrix(v)
    vals, vecs = jacobi_eigh(v.T @ v)
    u, u_prime = max(vals[0], 0.0), max(vals[1], 0.0)
    bmax = 2.0 * math.sqrt(u + u_prime)

    e1, e2 = vecs[:, 0], vecs[:, 1]
    if u > 0.0:
        a = _unit(v @ e1)
    else:
        a = np.array([0.0, 0.0, 1.0])
    a_prime = _unit(v @ e2) if u_prime > 0.0 else _orthogonal_unit(a)
    t = math.atan2(math.sqrt(u_prime), math.sqrt(u)) if u > 0.0 else 0.0
    b = _unit(math.cos(t) * e1 + math.sin(t) * e2)
    b_prime = _unit(math.cos(t) * e1 - math.sin(t) * e2)
    return HorodeckiResult(bmax, u, u_prime, MeasurementSettings(a, a_prime, b, b_prime))


def chsh_value(v, settings):
    """``|a.Vb + a'.Vb + a.Vb' - a'.Vb'|``."""
    v = _as_matrix(v)
    if not isinstance(settings, MeasurementSettings):
        settings = MeasurementSettings(*settings)
    a, ap, b, bp = settings.a, settings.a_prime, settings.b, settings.b_prime
    return abs(a @ v @ b + ap @ v @ b + a @ v @ bp - ap @ v @ bp)


@dataclass(frozen=True)
class OptimalityReport:
    trials: int
    max_found: float
    bound: float
    gap: float
    ok: bool


def verify_settings_optimal(v, trials, seed=0, slack=1e-9):
    """Random-search check that no setting quadruple beats the Horodecki bound.

    ``gap = bound - max_found``; ``ok`` is False if some sample exceeded the
    bound by more than ``slack``.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    v = _as_matrix(v)
    bound = horodecki_bmax(v).bmax
    rng = np.random.default_rng(seed)
    vecs = rng.normal(size=(trials, 4, 3))
    vecs /= np.linalg.norm(vecs, axis=2, keepdims=True)
    a, ap, b, bp = (vecs[:, i] for i in range(4))
    vb, vbp = b @ v.T, bp @ v.T
    values = np.abs(
        np.einsum("ti,ti->t", a, vb + vbp) + np.einsum("ti,ti->t", ap, vb - vbp)
    )
    best = float(values.max())
    return OptimalityReport(trials, best, bound, bound - best, best <= bound + slack)
