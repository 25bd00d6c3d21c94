"""Closed determinant formula for the partition function and its checks.

The partition function is

    Z = s_N det M  prod_i h(θ+η(N-2i)) / h(θ+η(N-i))
        × prod_{i,j} h(λ_i±ξ_j) h(λ_i±ξ_j+η)
        / prod_{i<j} h(ξ_j+ξ_i) h(ξ_j-ξ_i) h(λ_j-λ_i) h(λ_j+λ_i+η)

with ``M_ij = h(θ+ζ+ξ_j)/h(θ+ζ+λ_i) · h(ζ-ξ_j)/h(ζ+λ_i) · h(2λ_i) h(η)
/ [h(λ_i-ξ_j+η) h(λ_i+ξ_j+η) h(λ_i-ξ_j) h(λ_i+ξ_j)]`` and the sign
``s_N = (-1)^{N(N-1)/2}``.  The θ-prefactor and the sign were pinned against
the operator-product oracle; :func:`theorem_as_printed` keeps the
alternative ``h(θ+η(N-2i+1))`` denominators with sign ``(-1)^N`` for
comparison.

Evaluation works with complex logarithms and row-regularised entries, so
large ``N`` does not overflow and the recursion points ``λ_i = ±ξ_j`` are
handled exactly.
"""

import functools
import time

import numpy as np

from .elliptic import POLE_RTOL, eval_h, log_h, near_zero_mask, theta_residual
from .exceptions import DomainError, NearPoleError
from .model import PartitionResult, random_params
from .numerics import det_complex, logdet_complex

__all__ = [
    "build_m_matrix",
    "partition_determinant",
    "theorem_as_printed",
    "normalized_partition",
    "normalized_theta_check",
    "normalized_theta_residual",
    "at_lower_recursion_point",
    "at_upper_recursion_point",
    "check_recursion_lower",
    "check_recursion_upper",
    "partition_trigonometric",
    "trigonometric_constant",
    "determinant_sign",
    "PRINTED_SIGN",
]

_OVERFLOW_LOG = 700.0


def determinant_sign(n):
    """Overall sign ``(-1)^{N(N-1)/2}`` of the determinant formula."""
    return -1 if (n * (n - 1) // 2) % 2 else 1


def PRINTED_SIGN(n):
    """The sign ``gamma = (-1)^N`` written in front of the printed formula."""
    return -1 if n % 2 else 1


def _guard(args, nome, label):
    args = np.asarray(args, dtype=complex)
    bad = near_zero_mask(args, nome)
    if np.any(bad):
        raise NearPoleError(label, complex(eval_h(args[bad].flat[0], nome)))
    return args


def _checked(args, nome, label):
    return eval_h(_guard(args, nome, label), nome)


def _checked_log(args, nome, label):
    return log_h(_guard(args, nome, label), nome)


def _grids(params):
    lam = np.asarray(params.lambdas)[:, None]
    xi = np.asarray(params.xis)[None, :]
    return lam, xi


def build_m_matrix(params):
    """The ``N x N`` matrix ``M_ij`` as written in the closed formula.

    Raises
    ------
    NearPoleError
        If ``h(λ_i ± ξ_j)`` or ``h(λ_i ± ξ_j + η)`` vanishes (recursion
        points), or any other denominator does.
    """
    nome, eta, zeta, th = params.nome, params.eta, params.zeta, params.theta
    h = lambda x: eval_h(x, nome)
    lam, xi = _grids(params)
    den = (_checked(lam - xi + eta, nome, "h(lambda_i-xi_j+eta)")
           * _checked(lam + xi + eta, nome, "h(lambda_i+xi_j+eta)")
           * _checked(lam - xi, nome, "h(lambda_i-xi_j)")
           * _checked(lam + xi, nome, "h(lambda_i+xi_j)"))
    row = (h(2 * lam) * h(eta)
           / _checked(th + zeta + lam, nome, "h(theta+zeta+lambda_i)")
           / _checked(zeta + lam, nome, "h(zeta+lambda_i)"))
    col = h(th + zeta + xi) * h(zeta - xi)
    return row * col / den


def _exclusive_row_sums(logs):
    """``out[i, j] = sum_{k != j} logs[i, k]``, safe for ``-inf`` entries."""
    n = logs.shape[1]
    zero = np.zeros((logs.shape[0], 1), dtype=complex)
    left = np.concatenate([zero, np.cumsum(logs, axis=1)[:, :-1]], axis=1)
    right = np.concatenate([np.cumsum(logs[:, ::-1], axis=1)[:, ::-1][:, 1:], zero], axis=1)
    return left + right if n else logs


def _log_pair_denominators(params):
    n = params.n_sites
    iu, ju = np.triu_indices(n, k=1)
    lams, xis = np.asarray(params.lambdas), np.asarray(params.xis)
    args = np.concatenate([xis[ju] + xis[iu], xis[ju] - xis[iu],
                           lams[ju] - lams[iu], lams[ju] + lams[iu] + params.eta])
    return _checked_log(args, params.nome, "pair denominator h(...) (i<j)")


def _log_z(params, theta_prefactor):
    nome, eta, zeta, th = params.nome, params.eta, params.zeta, params.theta
    n = params.n_sites
    lh = lambda x: log_h(x, nome)
    lam, xi = _grids(params)
    # Row i of M times prod_k q(i, k) absorbs the double product and has no
    # poles at lambda_i = ±xi_j.
    log_q = lh(lam + xi) + lh(lam - xi) + lh(lam + xi + eta) + lh(lam - xi + eta)
    log_row = (lh(2 * lam) + lh(eta)
               - _checked_log(th + zeta + lam, nome, "h(theta+zeta+lambda_i)")
               - _checked_log(zeta + lam, nome, "h(zeta+lambda_i)"))
    log_col = lh(th + zeta + xi) + lh(zeta - xi)
    log_entries = log_row + log_col + _exclusive_row_sums(log_q)
    finite = np.isfinite(log_entries.real)
    shift = np.max(np.where(finite, log_entries.real, -np.inf), axis=1, keepdims=True)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    with np.errstate(under="ignore"):
        scaled = np.where(finite, np.exp(np.where(finite, log_entries, 0) - shift), 0)
    log_det = logdet_complex(scaled) + np.sum(shift)

    i = np.arange(1, n + 1)
    num_args, den_args = theta_prefactor(th, eta, n, i)
    log_pref = np.sum(lh(num_args)) - np.sum(_checked_log(den_args, nome, "h(theta+k*eta)"))
    return log_det + log_pref - np.sum(_log_pair_denominators(params))


def _pref_pinned(th, eta, n, i):
    return th + eta * (n - 2 * i), th + eta * (n - i)


def _pref_printed(th, eta, n, i):
    return th + eta * (n - 2 * i), th + eta * (n - 2 * i + 1)


def _finish(log_z, sign):
    if not np.isfinite(log_z.real) and log_z.real < 0:
        return 0j, complex(log_z)
    if sign < 0:
        log_z = log_z + 1j * np.pi
    log_z = complex(log_z.real, np.angle(np.exp(1j * log_z.imag)))
    if log_z.real > _OVERFLOW_LOG:
        return None, log_z
    return complex(np.exp(log_z)), log_z


def partition_determinant(params):
    """Partition function from the closed determinant formula.

    Returns
    -------
    PartitionResult
        ``method='determinant'``; ``log_value`` always holds the complex
        logarithm, and ``value`` is ``None`` if ``|Z|`` overflows a double.
        ``residual_info`` records the pinned sign.
    """
    start = time.perf_counter()
    n = params.n_sites
    sign = determinant_sign(n)
    value, log_z = _finish(_log_z(params, _pref_pinned), sign)
    info = {"sign": sign, "sign_vs_printed": sign * PRINTED_SIGN(n)}
    return PartitionResult(value, "determinant", time.perf_counter() - start, info, log_z)


def theorem_as_printed(params):
    """The formula with ``gamma = (-1)^N`` and ``h(θ+η(N-2i+1))`` denominators.

    Kept for comparison only: for ``N >= 2`` its ratio to the oracle depends
    on ``θ`` and ``η``.
    """
    start = time.perf_counter()
    value, log_z = _finish(_log_z(params, _pref_printed), PRINTED_SIGN(params.n_sites))
    return PartitionResult(value, "determinant-printed", time.perf_counter() - start, {}, log_z)


def normalized_partition(params, z):
    """``prod_i h(θ+ζ+λ_i) h(ζ+λ_i) / h(2λ_i) · z``."""
    nome = params.nome
    lams = np.asarray(params.lambdas)
    factor = (eval_h(params.theta + params.zeta + lams, nome) * eval_h(params.zeta + lams, nome)
              / _checked(2 * lams, nome, "h(2lambda_i)"))
    return complex(np.prod(factor) * z)


def _z_function(method):
    if method == "determinant":
        return lambda p: partition_determinant(p).value
    if method == "oracle":
        from .algebra import partition_oracle
        return lambda p: partition_oracle(p).value
    if method == "fbasis":
        from .fbasis import partition_fbasis
        return lambda p: partition_fbasis(p).value
    raise DomainError(f"unknown method {method!r}")


def normalized_theta_residual(params, index=0, method="determinant", sample_points=None):
    """Worst quasi-periodicity residual of the normalised ``Z`` in ``λ_index``.

    The expected order is ``2N-2`` and the norm ``(N-1)η``.  Sample points
    default to the current value of ``λ_index`` and two nearby points.
    """
    n = params.n_sites
    zf = _z_function(method)
    base = list(params.lambdas)

    def f(x):
        lams = list(base)
        lams[index] = x
        p = params.with_sites(lams, params.xis)
        return normalized_partition(p, zf(p))

    if sample_points is None:
        x0 = base[index]
        sample_points = [x0, x0 + 0.13 + 0.05j, x0 - 0.11 + 0.02j]
    return theta_residual(f, 2 * n - 2, (n - 1) * params.eta, params.nome, sample_points)


def normalized_theta_check(params, index=0, method="determinant", tol=1e-7,
                           sample_points=None):
    """Whether the normalised ``Z`` is a theta function of ``λ_index``."""
    return normalized_theta_residual(params, index, method, sample_points) <= tol


def at_lower_recursion_point(params):
    """Copy of ``params`` with ``λ_1`` set to ``ξ_1`` exactly."""
    lams = list(params.lambdas)
    lams[0] = params.xis[0]
    return params.with_sites(lams, params.xis)


def at_upper_recursion_point(params):
    """Copy of ``params`` with ``λ_N`` set to ``-ξ_1`` exactly."""
    lams = list(params.lambdas)
    lams[-1] = -params.xis[0]
    return params.with_sites(lams, params.xis)


def _theta_ratio_product(params):
    n, th, eta = params.n_sites, params.theta, params.eta
    i = np.arange(1, n + 1)
    return np.prod(eval_h(th + (n - 2 * i) * eta, params.nome)
                   / _checked(th + (n - 2 * i + 1) * eta, params.nome, "h(theta+k*eta)"))


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def check_recursion_lower(params, method="oracle"):
    """Relative residual of the reduction at ``λ_1 = ξ_1``.

    ``Z_N = h(η) h(ζ-λ_1)/h(ζ+λ_1) prod_i h(λ_i+ξ_1) h(θ+(N-2i)η)/h(θ+(N-2i+1)η)
    prod_{i>=2} h(λ_1-ξ_i+η) h(λ_1+ξ_i+η) h(λ_i-ξ_1+η) · Z_{N-1}`` with
    ``Z_{N-1}`` over ``λ_2..λ_N``, ``ξ_2..ξ_N``.
    """
    n = params.n_sites
    if n < 2:
        raise DomainError("recursion needs N >= 2")
    if params.lambdas[0] != params.xis[0]:
        raise DomainError("lambda_1 must equal xi_1 exactly")
    zf = _z_function(method)
    h = lambda x: eval_h(x, params.nome)
    lam, xi, eta, zeta = np.asarray(params.lambdas), np.asarray(params.xis), params.eta, params.zeta
    l1, x1 = lam[0], xi[0]
    factor = (h(eta) * h(zeta - l1) / _checked(zeta + l1, params.nome, "h(zeta+lambda_1)")
              * np.prod(h(lam + x1)) * _theta_ratio_product(params)
              * np.prod(h(l1 - xi[1:] + eta) * h(l1 + xi[1:] + eta) * h(lam[1:] - x1 + eta)))
    reduced = params.with_sites(lam[1:], xi[1:])
    return _rel(zf(params), factor * zf(reduced))


def check_recursion_upper(params, method="oracle"):
    """Relative residual of the reduction at ``λ_N = -ξ_1``.

    ``Z_N = h(η) h(θ+ζ-λ_N)/h(θ+ζ+λ_N) prod_i h(λ_i-ξ_1) h(θ+(N-2i)η)/h(θ+(N-2i+1)η)
    prod_{i>=2} h(λ_N+ξ_i+η) h(λ_N-ξ_i+η) h(λ_{i-1}+ξ_1+η) · Z_{N-1}`` with
    ``Z_{N-1}`` over ``λ_1..λ_{N-1}``, ``ξ_2..ξ_N``.
    """
    n = params.n_sites
    if n < 2:
        raise DomainError("recursion needs N >= 2")
    if params.lambdas[-1] != -params.xis[0]:
        raise DomainError("lambda_N must equal -xi_1 exactly")
    zf = _z_function(method)
    h = lambda x: eval_h(x, params.nome)
    lam, xi = np.asarray(params.lambdas), np.asarray(params.xis)
    eta, zeta, th = params.eta, params.zeta, params.theta
    ln, x1 = lam[-1], xi[0]
    factor = (h(eta) * h(th + zeta - ln)
              / _checked(th + zeta + ln, params.nome, "h(theta+zeta+lambda_N)")
              * np.prod(h(lam - x1)) * _theta_ratio_product(params)
              * np.prod(h(ln + xi[1:] + eta) * h(ln - xi[1:] + eta) * h(lam[:-1] + x1 + eta)))
    reduced = params.with_sites(lam[:-1], xi[1:])
    return _rel(zf(params), factor * zf(reduced))


def _trig_value(params, prefactor_denominator):
    n = params.n_sites
    eta, zeta, th = params.eta, params.zeta, params.theta
    lam = np.asarray(params.lambdas)[:, None]
    xi = np.asarray(params.xis)[None, :]
    s = np.sinh

    def nz(x, label):
        x = np.asarray(x, dtype=complex)
        v = s(x)
        if np.any(np.abs(v) < POLE_RTOL * np.exp(np.abs(x.real))):
            raise NearPoleError(label)
        return v

    m = (s(th + zeta + xi) / nz(th + zeta + lam, "sinh(theta+zeta+lambda_i)")
         * s(zeta - xi) / nz(zeta + lam, "sinh(zeta+lambda_i)")
         * s(2 * lam) * s(eta)
         / (nz(lam - xi + eta, "sinh(lambda_i-xi_j+eta)") * nz(lam + xi + eta, "sinh(lambda_i+xi_j+eta)")
            * nz(lam - xi, "sinh(lambda_i-xi_j)") * nz(lam + xi, "sinh(lambda_i+xi_j)")))
    i = np.arange(1, n + 1)
    if prefactor_denominator == "printed":
        den = th + eta * (n - i)
    elif prefactor_denominator == "elliptic":
        den = th + eta * (n - 2 * i + 1)
    else:
        raise DomainError(f"unknown prefactor_denominator {prefactor_denominator!r}")
    pref = np.prod(s(th + eta * (n - 2 * i)) / nz(den, "sinh(theta+k*eta)"))
    num = np.prod(s(lam + xi) * s(lam - xi) * s(lam + xi + eta) * s(lam - xi + eta))
    iu, ju = np.triu_indices(n, k=1)
    ls, xs = np.asarray(params.lambdas), np.asarray(params.xis)
    den_pairs = np.prod(nz(np.concatenate([xs[ju] + xs[iu], xs[ju] - xs[iu],
                                            ls[ju] - ls[iu], ls[ju] + ls[iu] + eta]),
                           "sinh pair denominator"))
    return PRINTED_SIGN(n) * det_complex(m) * pref * num / den_pairs


@functools.lru_cache(maxsize=None)
def trigonometric_constant(n_sites, prefactor_denominator="printed", seed=0):
    """Empirical ratio ``Z(p=0) / Z_trig`` pinned at one random parameter set.

    The reference ``Z(p=0)`` is the operator-product oracle for
    ``N <= 6`` and the determinant route beyond.
    """
    params = random_params(n_sites, seed, 0.0)
    if n_sites <= 6:
        from .algebra import partition_oracle
        ref = partition_oracle(params).value
    else:
        ref = partition_determinant(params).value
    return complex(ref / _trig_value(params, prefactor_denominator))


def partition_trigonometric(params, prefactor_denominator="printed", pin=True):
    """Trigonometric (``p = 0``) determinant formula with ``sinh`` functions.

    Parameters
    ----------
    prefactor_denominator : {'printed', 'elliptic'}
        ``'printed'`` uses ``sinh(θ+η(N-i))``; ``'elliptic'`` uses
        ``sinh(θ+η(N-2i+1))``.  Only the former is a constant multiple of
        the partition function.
    pin : bool
        Multiply by :func:`trigonometric_constant` so that ``value`` is the
        partition function itself; the raw expression is always kept in
        ``residual_info['raw']``.
    """
    if params.p != 0:
        raise DomainError("the trigonometric formula requires p = 0 exactly")
    start = time.perf_counter()
    raw = complex(_trig_value(params, prefactor_denominator))
    info = {"raw": raw, "prefactor_denominator": prefactor_denominator}
    value = raw
    if pin:
        const = trigonometric_constant(params.n_sites, prefactor_denominator)
        info["pinned_constant"] = const
        value = raw * const
    return PartitionResult(value, "trigonometric", time.perf_counter() - start, info)
