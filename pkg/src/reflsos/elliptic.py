"""The odd theta function ``h`` and its quasi-periodicity utilities.

``h`` is defined by the product

    h(x) = e^x * prod_{i>=0} (1 - p^i e^{-2x}) (1 - p^{i+1} e^{2x}),

which is entire in ``x``, odd, satisfies the four-term addition rule, and
degenerates to ``2 sinh(x)`` as the nome ``p`` tends to zero.  Under the
shifts ``x -> x + i*pi`` and ``x -> x + log(p)/2`` it picks up the factors
``-1`` and ``-p^{-1/2} e^{-2x}``.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, InconclusiveError, InvalidNomeError, NearPoleError

__all__ = [
    "Nome",
    "eval_h",
    "log_h",
    "near_zero_mask",
    "require_nonzero",
    "tau_shift",
    "quasi_periodicity_factors",
    "analytic_quasi_factors",
    "is_theta_of_order_norm",
    "theta_residual",
    "POLE_RTOL",
]

#: Relative threshold below which a denominator counts as a pole.
POLE_RTOL = 1e-12

_TRUNCATION_TARGET = 1e-20
_MAX_FACTORS = 10**6


def _default_order(p):
    ap = abs(p)
    if ap == 0.0:
        return 1
    k = math.ceil(math.log(_TRUNCATION_TARGET) / math.log(ap))
    return int(min(max(k, 1), _MAX_FACTORS))


@dataclass(frozen=True)
class Nome:
    """Elliptic nome ``p = exp(2 i pi tau)`` with a product truncation.

    Parameters
    ----------
    p : complex
        The nome, ``|p| < 1``.
    truncation_order : int, optional
        Number of product factors kept.  Defaults to the smallest ``K`` with
        ``|p|^K < 1e-20`` (capped at ``1e6``).
    """

    p: complex
    truncation_order: int = field(default=None)

    def __post_init__(self):
        p = complex(self.p)
        if not (math.isfinite(p.real) and math.isfinite(p.imag)):
            raise InvalidNomeError(f"non-finite nome {p!r}")
        if abs(p) >= 1.0:
            raise InvalidNomeError(f"nome must satisfy |p| < 1, got |p| = {abs(p)}")
        object.__setattr__(self, "p", p)
        k = self.truncation_order
        if k is None:
            k = _default_order(p)
        if int(k) < 1:
            raise InvalidNomeError(f"truncation_order must be >= 1, got {k}")
        object.__setattr__(self, "truncation_order", int(k))

    @property
    def is_trigonometric(self):
        return self.p == 0

    def with_order(self, truncation_order):
        return Nome(self.p, truncation_order)


def _coerce_nome(nome):
    if isinstance(nome, Nome):
        return nome
    return Nome(nome)


def _reduce(x, nome):
    """Split ``x = x0 + k*s`` with ``s = log(p)/2`` and ``x0`` near the origin."""
    s = 0.5 * np.log(nome.p)
    k = np.rint(x.real / s.real)
    return x - k * s, k, s


def _log_shift(x0, k, s):
    # log of h(x0 + k s) / h(x0), from h(y + s) = -exp(-s - 2y) h(y).
    return k * (1j * np.pi - s - 2.0 * x0) - s * k * (k - 1.0)


def _h_product(x, nome):
    # The truncation keeps |p|^K e^{2|Re x|} below the target, so the
    # factor count grows with the largest argument.
    extra = 0
    if x.size:
        extra = math.ceil(2.0 * float(np.max(np.abs(x.real))) / -math.log(abs(nome.p)))
    powers = nome.p ** np.arange(1, min(nome.truncation_order + extra, _MAX_FACTORS))
    e2 = np.exp(-2.0 * x)
    with np.errstate(over="ignore", invalid="ignore"):
        # The i = 0 factor 1 - e^{-2x} via expm1 keeps relative accuracy near x = 0.
        first = -np.expm1(-2.0 * x) * (1.0 - nome.p / e2)
        factors = (1.0 - powers * e2[..., None]) * (1.0 - powers * nome.p / e2[..., None])
        return np.exp(x) * first * np.prod(factors, axis=-1)


def _as_args(lam):
    x = np.asarray(lam, dtype=complex)
    if not np.all(np.isfinite(x)):
        raise DomainError("h evaluated at a non-finite argument")
    return x


def eval_h(lam, nome):
    """Evaluate ``h`` at a complex scalar or array of arguments.

    The product is evaluated directly; ``|h|`` grows like a Gaussian in
    ``Re lam``, so very large arguments overflow (use :func:`log_h`).

    Parameters
    ----------
    lam : complex or array_like of complex
    nome : Nome or complex

    Returns
    -------
    complex or numpy.ndarray
        Same shape as ``lam``.

    Raises
    ------
    DomainError
        If any argument is not finite.
    InvalidNomeError
        If ``|p| >= 1``.
    """
    nome = _coerce_nome(nome)
    scalar = np.ndim(lam) == 0
    x = _as_args(lam)
    out = 2.0 * np.sinh(x) if nome.p == 0 else _h_product(x, nome)
    return complex(out) if scalar else out


def log_h(lam, nome):
    """Complex logarithm of ``h`` (branch unspecified), safe for large arguments.

    Exact zeros give ``-inf``.
    """
    nome = _coerce_nome(nome)
    scalar = np.ndim(lam) == 0
    x = _as_args(lam)
    with np.errstate(divide="ignore"):
        if nome.p == 0:
            sgn = np.where(x.real >= 0, 1.0, -1.0)
            y = sgn * x
            out = y + np.log(-np.expm1(-2.0 * y)) + np.where(sgn < 0, 1j * np.pi, 0.0)
        else:
            x0, k, s = _reduce(x, nome)
            out = np.log(_h_product(x0, nome)) + _log_shift(x0, k, s)
    return complex(out) if scalar else out


def near_zero_mask(lam, nome, rtol=POLE_RTOL):
    """Where ``h`` vanishes to relative precision ``rtol``.

    The test is made on the reduced argument ``x0`` (zeros of ``h`` are
    invariant under the quasi-periods), against the scale ``exp(|Re x0|)``.
    """
    nome = _coerce_nome(nome)
    x = _as_args(lam)
    if nome.p == 0:
        x0, val = x, 2.0 * np.sinh(x)
    else:
        x0 = _reduce(x, nome)[0]
        val = _h_product(x0, nome)
    return np.abs(val) < rtol * np.exp(np.abs(x0.real))


def require_nonzero(lam, nome, name=None, rtol=POLE_RTOL):
    """Return ``h(lam)``, raising :class:`NearPoleError` if it vanishes.

    ``name`` labels the factor in the error message (defaults to
    ``"h(<lam>)"``).
    """
    val = eval_h(lam, nome)
    if bool(near_zero_mask(lam, nome, rtol)):
        raise NearPoleError(name or f"h({complex(lam):.6g})", val)
    return val


def tau_shift(nome):
    """The quasi-period ``i*pi*tau = log(p)/2`` (principal branch)."""
    nome = _coerce_nome(nome)
    if nome.p == 0:
        raise InvalidNomeError("the tau quasi-period is undefined at p = 0")
    return 0.5 * np.log(nome.p)


def analytic_quasi_factors(lam, nome):
    """Closed-form factors ``(-1, -exp(-2 lam) p^{-1/2})``."""
    s = tau_shift(nome)
    return -1.0 + 0j, complex(-np.exp(-2.0 * lam - s))


def quasi_periodicity_factors(lam, nome):
    """Ratios ``h(lam + i pi)/h(lam)`` and ``h(lam + i pi tau)/h(lam)``.

    Both are computed by direct evaluation of ``h``.  At ``p = 0`` the
    second ratio is undefined and returned as ``nan``.

    Raises
    ------
    NearPoleError
        If ``h(lam)`` is numerically zero.
    """
    nome = _coerce_nome(nome)
    base = require_nonzero(lam, nome)
    first = eval_h(lam + 1j * np.pi, nome) / base
    if nome.p == 0:
        return complex(first), complex(np.nan, np.nan)
    second = eval_h(lam + tau_shift(nome), nome) / base
    return complex(first), complex(second)


def theta_residual(f, order, norm, nome, sample_points):
    """Worst relative violation of the theta quasi-periodicity relations.

    Sample points where ``|f|`` is below ``1e-10`` of the largest sampled
    value are skipped with a :class:`RuntimeWarning`.

    Raises
    ------
    InconclusiveError
        If every sample point is skipped.
    """
    nome = _coerce_nome(nome)
    s = tau_shift(nome)
    points = list(sample_points)
    values = [complex(f(x)) for x in points]
    scale = max((abs(v) for v in values), default=0.0)
    sign = -1.0 if order % 2 else 1.0
    worst = 0.0
    checked = 0
    for x, fx in zip(points, values):
        if fx == 0 or abs(fx) <= 1e-10 * scale:
            warnings.warn(f"skipping sample point {x!r}: too close to a zero of f",
                          RuntimeWarning, stacklevel=2)
            continue
        checked += 1
        r1 = complex(f(x + 1j * np.pi)) / fx
        r2 = complex(f(x + s)) / fx
        want2 = sign * np.exp(-order * s - 2.0 * order * x - 2.0 * norm)
        worst = max(worst, abs(r1 - sign), abs(r2 - want2) / abs(want2))
    if checked == 0:
        raise InconclusiveError("all sample points were skipped")
    return worst


def is_theta_of_order_norm(f, order, norm, nome, sample_points, tol=1e-8):
    """Test the quasi-periodicity of a theta function of given order/norm.

    A theta function of order ``n`` and norm ``t`` obeys

    * ``f(x + i pi) = (-1)^n f(x)``
    * ``f(x + i pi tau) = (-1)^n p^{-n/2} e^{-2 n x - 2 t} f(x)``

    and this routine checks both relations at every sample point.

    Parameters
    ----------
    f : callable
        Complex function of one complex variable.
    order : int
    norm : complex
    nome : Nome or complex
        Must be nonzero (the second period is undefined at ``p = 0``).
    sample_points : iterable of complex
    tol : float
        Relative tolerance per relation.

    Returns
    -------
    bool

    Raises
    ------
    InconclusiveError
        If every sample point sits too close to a zero of ``f``.
    """
    return theta_residual(f, order, norm, nome, sample_points) <= tol
