"""Dense complex linear algebra and residual comparison helpers."""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DomainError

__all__ = [
    "ResidualReport",
    "det_complex",
    "logdet_complex",
    "rel_compare",
    "rel_diff",
    "TINY",
]

#: Absolute floor used in relative comparisons.
TINY = 1e-30


@dataclass(frozen=True)
class ResidualReport:
    """Worst-case entrywise discrepancy between two arrays."""

    max_relative: float
    max_absolute: float
    location: tuple

    def __str__(self):
        return (f"max_rel={self.max_relative:.3e} max_abs={self.max_absolute:.3e} "
                f"at {self.location}")


def _as_square(m):
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    return a


def _lu_parts(a):
    # LAPACK getrf: partial pivoting by largest modulus.  An exactly
    # singular matrix is a legitimate input (determinant 0), not a warning.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    diag = np.diag(lu)
    swaps = np.count_nonzero(piv != np.arange(len(piv)))
    sign = -1.0 if swaps % 2 else 1.0
    return diag, sign


def det_complex(m):
    """Determinant of a square complex matrix.

    Uses an LU factorisation with partial pivoting; the sign of the row
    permutation is tracked exactly from the pivot vector.

    Parameters
    ----------
    m : array_like, shape (n, n)

    Returns
    -------
    complex
        ``det(m)``; an exactly singular matrix gives ``0j``.
    """
    a = _as_square(m)
    if a.shape[0] == 0:
        return 1 + 0j
    diag, sign = _lu_parts(a)
    if np.any(diag == 0):
        return 0j
    return complex(sign * np.prod(diag))


def logdet_complex(m):
    """Complex logarithm of ``det(m)``, safe against overflow.

    Returns ``log|det| + i*arg(det)`` with the argument reduced to
    ``(-pi, pi]``; an exactly singular matrix gives ``-inf``.
    """
    a = _as_square(m)
    if a.shape[0] == 0:
        return 0j
    diag, sign = _lu_parts(a)
    if np.any(diag == 0):
        return complex(-np.inf, 0.0)
    logs = np.log(diag)
    total = complex(np.sum(logs))
    if sign < 0:
        total += 1j * np.pi
    return complex(total.real, np.angle(np.exp(1j * total.imag)))


def rel_compare(a, b, scale=None):
    """Entrywise comparison of two scalars or arrays of equal shape.

    The relative error at each entry is
    ``|a - b| / max(scale, |a|, |b|, TINY)``.

    Parameters
    ----------
    a, b : complex or array_like
    scale : float, optional
        Extra floor for the denominator, e.g. a matrix norm when small
        entries should be judged against the whole operator.

    Returns
    -------
    ResidualReport
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = np.abs(a - b)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), TINY)
    if scale is not None:
        denom = np.maximum(denom, scale)
    rel = diff / denom
    if a.ndim == 0:
        return ResidualReport(float(rel), float(diff), ())
    loc = np.unravel_index(int(np.argmax(rel)), rel.shape)
    return ResidualReport(float(rel.max()), float(diff.max()),
                          tuple(int(i) for i in loc))


def rel_diff(a, b):
    """Scalar relative difference, normed over whole arrays.

    ``max|a - b| / max(max|a|, max|b|, TINY)``; the usual residual for
    operator identities where tiny entries should not dominate.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch: {a.shape} vs {b.shape}")
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), TINY)
    return float(np.abs(a - b).max(initial=0.0) / scale)
