"""Dynamical R-matrix, boundary K-matrix and monodromy operators.

Conventions
-----------
Operators act on ``(C^2)^{⊗m}`` and are dense ``2^m x 2^m`` arrays.  Bit
``k`` of a basis index (most significant bit first) is the spin of space
``k``; bit 0 is spin up (``sigma^z = +1``), bit 1 is spin down.  Space 0 is
the auxiliary space when present and quantum sites follow in order.  A
4x4 two-site matrix is indexed ``[out, in]`` over ``++, +-, -+, --``.

Dynamical shifts such as ``theta - eta * sum_k sigma_k^z`` are realised
sector by sector: the shifted spaces are never touched by the R-matrix
carrying the shift, so on each of their basis states the shift is a
number.
"""

import time

import numpy as np

from .elliptic import eval_h, near_zero_mask
from .exceptions import DomainError, NearPoleError
from .model import PartitionResult
from .numerics import rel_diff

__all__ = [
    "eval_r",
    "eval_k",
    "check_dybe",
    "check_reflection_equation",
    "check_unitarity",
    "check_crossing",
    "check_ice_rule",
    "check_transposed_ice_rule",
    "build_bulk_monodromy",
    "build_crossed_inverse",
    "build_boundary_monodromy",
    "extract_b_operator",
    "extract_blocks",
    "gamma_hat",
    "check_crossed_inverse",
    "check_b_decomposition",
    "check_b_commutativity",
    "check_reflection_algebra",
    "weight_zero_residual",
    "partition_oracle",
    "build_b_operator",
    "apply_pair",
    "spin_values",
    "total_sz",
    "SWAP",
]

#: Permutation of the two factors of ``C^2 ⊗ C^2``.
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)

#: Largest ``Re log Z`` returned as a plain complex value.
_MAX_LOG = 700.0

_SIGMA_Y = np.array([[0, -1j], [1j, 0]])


def _checked_h(args, nome, label):
    args = np.asarray(args, dtype=complex)
    vals = np.asarray(eval_h(args, nome))
    bad = np.asarray(near_zero_mask(args, nome))
    if np.any(bad):
        x = args[bad].flat[0]
        raise NearPoleError(f"{label} at argument {complex(x):.6g}", complex(vals[bad].flat[0]))
    return vals if vals.ndim else complex(vals)


def r_matrices(lam, thetas, params):
    """R-matrices at one spectral parameter and an array of heights.

    Returns an array of shape ``thetas.shape + (4, 4)``.
    """
    thetas = np.asarray(thetas, dtype=complex)
    nome, eta = params.nome, params.eta
    ht = _checked_h(thetas, nome, "h(theta)")
    # One vectorised evaluation for all remaining factors.
    flat = thetas.ravel()
    args = np.concatenate([[lam + eta, lam, eta], flat - eta, flat + eta, flat - lam, flat + lam])
    vals = eval_h(args, nome)
    diag, hl, he = vals[:3]
    t_minus_eta, t_plus_eta, t_minus_lam, t_plus_lam = (
        v.reshape(thetas.shape) for v in np.split(vals[3:], 4))
    out = np.zeros(thetas.shape + (4, 4), dtype=complex)
    out[..., 0, 0] = diag
    out[..., 3, 3] = diag
    out[..., 1, 1] = hl * t_minus_eta / ht
    out[..., 2, 2] = hl * t_plus_eta / ht
    out[..., 1, 2] = he * t_minus_lam / ht
    out[..., 2, 1] = he * t_plus_lam / ht
    return out


def eval_r(lam, theta, params):
    """The dynamical R-matrix ``R(lam; theta)`` as a 4x4 array.

    Nonzero entries: ``R^{±±}_{±±} = h(lam+eta)``,
    ``R^{+-}_{+-} = h(lam) h(theta-eta)/h(theta)``,
    ``R^{+-}_{-+} = h(eta) h(theta-lam)/h(theta)`` and their partners with
    ``theta -> -theta``.

    Raises
    ------
    NearPoleError
        If ``h(theta)`` vanishes.
    """
    return r_matrices(lam, theta, params)


def eval_k(lam, params, theta=None):
    """Diagonal boundary matrix ``diag(h(θ+ζ-λ)/h(θ+ζ+λ), h(ζ-λ)/h(ζ+λ))``."""
    theta = params.theta if theta is None else theta
    nome, zeta = params.nome, params.zeta
    d1 = _checked_h(theta + zeta + lam, nome, "h(theta+zeta+lambda)")
    d2 = _checked_h(zeta + lam, nome, "h(zeta+lambda)")
    return np.diag([eval_h(theta + zeta - lam, nome) / d1, eval_h(zeta - lam, nome) / d2])


# ---------------------------------------------------------------------------
# tensor-space plumbing

def spin_values(m):
    """Array of shape ``(2**m, m)`` with the ``sigma^z`` eigenvalues per space."""
    idx = np.arange(2**m)[:, None]
    bits = (idx >> (m - 1 - np.arange(m))[None, :]) & 1
    return 1 - 2 * bits


def total_sz(m, spaces=None):
    """Diagonal of ``sum sigma^z`` over ``spaces`` (default: all) on ``m`` spaces."""
    s = spin_values(m)
    if spaces is not None:
        s = s[:, list(spaces)]
    return s.sum(axis=1)


def apply_pair(state, m, a, b, mats, shift_spaces=(), shift_sign=1):
    """Left-multiply ``state`` by a two-site operator on spaces ``(a, b)``.

    Parameters
    ----------
    state : ndarray, shape (2**m, k)
        Columns are vectors of the tensor space.
    mats : callable or ndarray
        A 4x4 matrix, or ``mats(s)`` returning a 4x4 matrix for every value
        ``s`` of ``shift_sign * sum(sigma^z over shift_spaces)``; ``s`` is
        passed as an integer array and ``mats`` must return shape
        ``s.shape + (4, 4)``.
    shift_spaces : sequence of int
        Spaces (disjoint from ``a``, ``b``) whose spins select the matrix.

    Returns
    -------
    ndarray, shape (2**m, k)
    """
    if a == b or not (0 <= a < m and 0 <= b < m):
        raise DomainError(f"bad space pair ({a}, {b}) for {m} spaces")
    k = state.shape[1]
    t = state.reshape((2,) * m + (k,))
    rest = [q for q in range(m) if q not in (a, b)]
    t = np.transpose(t, [a, b] + rest + [m]).reshape(4, 2 ** (m - 2), k)
    if callable(mats):
        if any(q in (a, b) for q in shift_spaces):
            raise DomainError("shift spaces must differ from the acted-on spaces")
        pos = [rest.index(q) for q in shift_spaces]
        svals = spin_values(m - 2)[:, pos].sum(axis=1) * shift_sign
        uniq, inv = np.unique(svals, return_inverse=True)
        stack = np.asarray(mats(uniq), dtype=t.dtype)[inv]
        t = np.matmul(stack, t.transpose(1, 0, 2)).transpose(1, 0, 2)
    else:
        t = np.einsum("ij,jrk->irk", np.asarray(mats, dtype=t.dtype), t)
    t = t.reshape([2, 2] + [2] * (m - 2) + [k])
    inverse = np.argsort([a, b] + rest + [m])
    return np.transpose(t, inverse).reshape(2**m, k)


def apply_single(state, m, a, mat):
    """Left-multiply ``state`` by a 2x2 matrix acting on space ``a``."""
    k = state.shape[1]
    t = np.moveaxis(state.reshape((2,) * m + (k,)), a, 0)
    t = np.tensordot(np.asarray(mat), t, axes=(1, 0))
    return np.moveaxis(t, 0, a).reshape(2**m, k)


def _identity(m):
    return np.eye(2**m, dtype=complex)


# ---------------------------------------------------------------------------
# monodromy construction

def _apply_bulk(state, m, aux, sites, lam, theta, params, sign=-1.0):
    """Apply ``T_aux(lam; theta)`` on the given quantum ``sites``.

    ``T = R_{a,1}(lam - xi_1; theta - eta S_{>1}) ... R_{a,N}(lam - xi_N; theta)``;
    the factor for site ``N`` acts first.
    """
    eta = params.eta
    n = len(sites)
    for j in range(n - 1, -1, -1):
        shift = sites[j + 1:]
        arg = lam + sign * params.xis[j]
        mats = lambda s, arg=arg: r_matrices(arg, theta - eta * s, params)
        state = apply_pair(state, m, aux, sites[j], mats, shift)
    return state


def _apply_crossed(state, m, aux, sites, lam, theta, params):
    """Apply ``R_{N,a}(lam+xi_N; theta) ... R_{1,a}(lam+xi_1; theta - eta S_{>1})``."""
    eta = params.eta
    n = len(sites)
    for j in range(n):
        shift = sites[j + 1:]
        arg = lam + params.xis[j]
        mats = lambda s, arg=arg: r_matrices(arg, theta - eta * s, params)
        state = apply_pair(state, m, sites[j], aux, mats, shift)
    return state


def _apply_boundary(state, m, aux, sites, lam, theta, params):
    state = _apply_crossed(state, m, aux, sites, lam, theta, params)
    state = apply_single(state, m, aux, eval_k(lam, params, theta))
    return _apply_bulk(state, m, aux, sites, lam, theta, params)


def build_bulk_monodromy(lam, params, theta=None):
    """Bulk monodromy ``T_0(lam; theta)`` on auxiliary ⊗ N sites.

    ``theta`` defaults to ``params.theta``; other values are used for the
    shifted blocks ``A(-lam-eta; theta ± eta)``.
    """
    theta = params.theta if theta is None else theta
    n = params.n_sites
    return _apply_bulk(_identity(n + 1), n + 1, 0, list(range(1, n + 1)), lam, theta, params)


def build_crossed_inverse(lam, params, theta=None):
    """``gamma_hat(lam) * T^{-1}(-lam; theta)`` as an ordered product of R-matrices.

    No matrix is inverted: the product of reversed factors
    ``R_{N0}(lam + xi_N; theta) ... R_{10}(lam + xi_1; theta - eta S_{>1})``
    equals the scaled inverse by unitarity.
    """
    theta = params.theta if theta is None else theta
    n = params.n_sites
    return _apply_crossed(_identity(n + 1), n + 1, 0, list(range(1, n + 1)), lam, theta, params)


def gamma_hat(lam, params):
    """Normalisation ``(-1)^N prod_i h(lam + xi_i - eta) h(lam + xi_i + eta)``."""
    xis = np.asarray(params.xis)
    h = eval_h(np.concatenate([lam + xis - params.eta, lam + xis + params.eta]), params.nome)
    return complex((-1) ** params.n_sites * np.prod(h))


def build_boundary_monodromy(lam, params, theta=None):
    """Double-row monodromy ``T(lam) K(lam) [gamma_hat(lam) T^{-1}(-lam)]``."""
    theta = params.theta if theta is None else theta
    n = params.n_sites
    return _apply_boundary(_identity(n + 1), n + 1, 0, list(range(1, n + 1)), lam, theta, params)


def extract_blocks(op):
    """Split an operator on auxiliary ⊗ quantum space into ``(A, B, C, D)``."""
    op = np.asarray(op)
    dim = op.shape[0]
    if op.ndim != 2 or op.shape[1] != dim or dim < 2 or dim & (dim - 1):
        raise DomainError(f"expected a 2^(N+1) square operator, got shape {op.shape}")
    half = dim // 2
    return op[:half, :half], op[:half, half:], op[half:, :half], op[half:, half:]


def extract_b_operator(boundary_monodromy):
    """The block ``<+|_0 T |->_0`` (auxiliary up row, down column)."""
    return extract_blocks(boundary_monodromy)[1]


def _reference_states(n):
    dim = 2**n
    up = np.zeros(dim, dtype=complex)
    up[0] = 1.0
    return up, dim - 1


def build_b_operator(lam, params, dtype=np.clongdouble):
    """Dense ``B(lam)`` without the three unused blocks of the monodromy.

    The R- and K-factors act on the auxiliary-down columns of the identity
    only; the auxiliary-up rows of the result are ``B``.  The product is
    accumulated in ``dtype``: its large intermediate entries cancel, and
    extended precision (where the platform provides it) keeps about three
    more digits than double.
    """
    n = params.n_sites
    dim = 2**n
    state = np.zeros((2 * dim, dim), dtype=dtype)
    state[dim:] = np.eye(dim)
    state = _apply_boundary(state, n + 1, 0, list(range(1, n + 1)), lam, params.theta, params)
    return state[:dim]


def partition_oracle(params):
    """Partition function as ``<0bar| prod_i B(lambda_i) |0>``.

    Every boundary operator is built as a dense matrix from the R- and
    K-matrices; this is the reference route against which the closed
    formulas are checked.  ``value`` is ``None`` (and ``log_value`` set) if
    ``|Z|`` overflows a double.
    """
    start = time.perf_counter()
    vec, last = _reference_states(params.n_sites)
    vec = vec.astype(np.clongdouble)
    log_scale = 0.0
    for lam in reversed(params.lambdas):
        vec = build_b_operator(lam, params) @ vec
        # Rescale each row so products of many large rows cannot overflow.
        norm = np.max(np.abs(vec))
        if norm > 0 and np.isfinite(norm):
            vec = vec / norm
            log_scale += float(np.log(norm))
    end = complex(vec[last])
    log_value = None if end == 0 else complex(np.log(end) + log_scale)
    if log_value is not None and log_value.real > _MAX_LOG:
        value = None
    else:
        value = end * np.exp(log_scale)
    elapsed = time.perf_counter() - start
    return PartitionResult(value, "oracle", elapsed, log_value=log_value)


# ---------------------------------------------------------------------------
# identity checks

def _embed3(mat, a, b, shift=(), fn=None):
    if fn is not None:
        return apply_pair(_identity(3), 3, a, b, fn, shift)
    return apply_pair(_identity(3), 3, a, b, mat)


def check_dybe(lam1, lam2, lam3, theta, params, r_func=None):
    """Max relative residual of the dynamical Yang-Baxter equation.

    ``R12(l1-l2; θ-ησ3) R13(l1-l3; θ) R23(l2-l3; θ-ησ1)
    = R23(l2-l3; θ) R13(l1-l3; θ-ησ2) R12(l1-l2; θ)``.

    ``r_func(lam, thetas)`` replaces the R-matrix (fault injection).
    """
    eta = params.eta
    rf = r_func or (lambda lam, th: r_matrices(lam, th, params))

    def op(lam, a, b, shift=()):
        return _embed3(None, a, b, shift, lambda s: rf(lam, theta - eta * s))

    lhs = op(lam1 - lam2, 0, 1, (2,)) @ op(lam1 - lam3, 0, 2) @ op(lam2 - lam3, 1, 2, (0,))
    rhs = op(lam2 - lam3, 1, 2) @ op(lam1 - lam3, 0, 2, (1,)) @ op(lam1 - lam2, 0, 1)
    return rel_diff(lhs, rhs)


def check_reflection_equation(lam1, lam2, params, k_func=None, theta=None):
    """Max relative residual of the scalar reflection equation.

    ``R12(l1-l2) K1(l1) R21(l1+l2) K2(l2) = K2(l2) R12(l1+l2) K1(l1) R21(l1-l2)``
    with every R-matrix at the same height ``theta``.
    """
    theta = params.theta if theta is None else theta
    kf = k_func or (lambda lam: eval_k(lam, params, theta))
    r12 = lambda lam: eval_r(lam, theta, params)
    r21 = lambda lam: SWAP @ eval_r(lam, theta, params) @ SWAP
    k1 = np.kron(kf(lam1), np.eye(2))
    k2 = np.kron(np.eye(2), kf(lam2))
    lhs = r12(lam1 - lam2) @ k1 @ r21(lam1 + lam2) @ k2
    rhs = k2 @ r12(lam1 + lam2) @ k1 @ r21(lam1 - lam2)
    return rel_diff(lhs, rhs)


def check_unitarity(lam, theta, params):
    """Residual of ``R12(λ) R21(-λ) = -h(λ-η) h(λ+η) Id``."""
    r = eval_r(lam, theta, params) @ SWAP @ eval_r(-lam, theta, params) @ SWAP
    h = lambda x: eval_h(x, params.nome)
    return rel_diff(r, -h(lam - params.eta) * h(lam + params.eta) * np.eye(4))


def _partial_transpose_first(r):
    t = r.reshape(2, 2, 2, 2)  # out1, out2, in1, in2
    return t.transpose(2, 1, 0, 3).reshape(4, 4)


def check_crossing(lam, theta, params):
    """Residual of the crossing relation.

    ``-σ1^y :R12^{t1}(-λ-η; θ+ησ1^z): σ1^y h(θ-ησ2^z)/h(θ) = R21(λ; θ)``, the
    ``σ1^z`` inside the normal-ordered product standing to the right of the
    untransposed R; after transposition in space 1 it therefore reads the
    outgoing spin of space 1.
    """
    eta = params.eta
    lhs = np.zeros((4, 4), dtype=complex)
    for s1, col_bit in ((1, 0), (-1, 1)):
        rt = _partial_transpose_first(eval_r(-lam - eta, theta + eta * s1, params))
        proj = np.kron(np.diag([1.0 - col_bit, float(col_bit)]), np.eye(2))
        lhs += proj @ rt
    sy1 = np.kron(_SIGMA_Y, np.eye(2))
    h = lambda x: eval_h(x, params.nome)
    diag2 = np.kron(np.eye(2), np.diag([h(theta - eta), h(theta + eta)]) / h(theta))
    lhs = -sy1 @ lhs @ sy1 @ diag2
    return rel_diff(lhs, SWAP @ eval_r(lam, theta, params) @ SWAP)


def check_ice_rule(r):
    """Max ``|[σ1^z + σ2^z, R]|`` relative to ``max|R|``."""
    s = np.diag(total_sz(2)).astype(complex)
    return _comm_res(s, r)


def check_transposed_ice_rule(r):
    """Max ``|[σ1^z - σ2^z, R^{t1}]|`` relative to ``max|R|``."""
    sv = spin_values(2)
    s = np.diag(sv[:, 0] - sv[:, 1]).astype(complex)
    return _comm_res(s, _partial_transpose_first(r))


def _comm_res(s, op):
    scale = max(np.abs(op).max(), 1e-300)
    return float(np.abs(s @ op - op @ s).max() / scale)


def weight_zero_residual(op):
    """``|[σ_0^z + S^z, op]|`` relative to ``max|op|`` for an operator on all spaces."""
    m = int(np.log2(op.shape[0]))
    return _comm_res(np.diag(total_sz(m)).astype(complex), op)


def check_crossed_inverse(lam, params):
    """Residual of ``crossed_inverse(λ) T(-λ) = gamma_hat(λ) Id``.

    The error is measured against ``max(|gamma_hat|, ||C|| ||T||)`` (spectral
    norms of the two factors): near the zeros of ``gamma_hat`` the monodromy
    is almost singular and rounding in the product scales with the factors,
    not with the result.
    """
    c = build_crossed_inverse(lam, params)
    t = build_bulk_monodromy(-lam, params)
    g = gamma_hat(lam, params)
    err = np.abs(c @ t - g * np.eye(c.shape[0])).max()
    scale = max(abs(g), np.linalg.norm(c, 2) * np.linalg.norm(t, 2), 1e-300)
    return float(err / scale)


def check_b_decomposition(lam, params):
    """Residual of the boundary ``B`` against its bulk decomposition.

    ``B(λ;θ) = (-1)^N [K^-_- B(λ;θ) A(-λ-η;θ+η) - K^+_+ A(λ;θ) B(-λ-η;θ-η)]
    h(θ - η S^z)/h(θ)``.
    """
    th, eta = params.theta, params.eta
    n = params.n_sites
    a1, b1, _, _ = extract_blocks(build_bulk_monodromy(lam, params))
    a2 = extract_blocks(build_bulk_monodromy(-lam - eta, params, th + eta))[0]
    b3 = extract_blocks(build_bulk_monodromy(-lam - eta, params, th - eta))[1]
    k = eval_k(lam, params)
    h = lambda x: eval_h(x, params.nome)
    diag = h(th - eta * total_sz(n)) / h(th)
    rhs = (-1) ** n * (k[1, 1] * b1 @ a2 - k[0, 0] * a1 @ b3) * diag[None, :]
    lhs = extract_b_operator(build_boundary_monodromy(lam, params))
    return rel_diff(lhs, rhs)


def check_b_commutativity(lam1, lam2, params):
    b1 = extract_b_operator(build_boundary_monodromy(lam1, params))
    b2 = extract_b_operator(build_boundary_monodromy(lam2, params))
    return rel_diff(b1 @ b2, b2 @ b1)


def check_reflection_algebra(lam1, lam2, params):
    """Residual of the dynamical reflection algebra relation.

    Works on ``C^2 ⊗ C^2 ⊗ V`` with double-row monodromies on auxiliary
    spaces 0 and 1; every R-matrix carries the height
    ``θ - η S^z`` with ``S^z`` the total quantum spin at its position::

        R12(l1-l2) T1(l1) R21(l1+l2) T2(l2) = T2(l2) R12(l1+l2) T1(l1) R21(l1-l2)
    """
    n = params.n_sites
    m = n + 2
    sites = list(range(2, m))
    th, eta = params.theta, params.eta

    def r12(state, lam):
        fn = lambda s: r_matrices(lam, th - eta * s, params)
        return apply_pair(state, m, 0, 1, fn, sites)

    def r21(state, lam):
        fn = lambda s: r_matrices(lam, th - eta * s, params)
        return apply_pair(state, m, 1, 0, fn, sites)

    def t(state, aux, lam):
        return _apply_boundary(state, m, aux, sites, lam, th, params)

    eye = _identity(m)
    # Products are applied right to left.
    lhs = r12(t(r21(t(eye, 1, lam2), lam1 + lam2), 0, lam1), lam1 - lam2)
    rhs = t(r12(t(r21(eye, lam1 - lam2), 0, lam1), lam1 + lam2), 1, lam2)
    return rel_diff(lhs, rhs)
