import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reflsos import determinant as det
from reflsos.algebra import partition_oracle
from reflsos.elliptic import eval_h
from reflsos.exceptions import DomainError, NearPoleError
from reflsos.fbasis import partition_fbasis
from reflsos.model import random_params
from reflsos.numerics import det_complex


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b))


def direct_formula(params):
    """The determinant formula evaluated literally with plain products."""
    n = params.n_sites
    h = lambda x: eval_h(x, params.nome)
    lam = np.asarray(params.lambdas)[:, None]
    xi = np.asarray(params.xis)[None, :]
    th, eta, zeta = params.theta, params.eta, params.zeta
    m = (h(th + zeta + xi) / h(th + zeta + lam) * h(zeta - xi) / h(zeta + lam) * h(2 * lam) * h(eta)
         / (h(lam - xi + eta) * h(lam + xi + eta) * h(lam - xi) * h(lam + xi)))
    i = np.arange(1, n + 1)
    pref = np.prod(h(th + eta * (n - 2 * i)) / h(th + eta * (n - i)))
    num = np.prod(h(lam + xi) * h(lam - xi) * h(lam + xi + eta) * h(lam - xi + eta))
    den = 1.0
    ls, xs = params.lambdas, params.xis
    for a, b in itertools.combinations(range(n), 2):
        den *= h(xs[b] + xs[a]) * h(xs[b] - xs[a]) * h(ls[b] - ls[a]) * h(ls[b] + ls[a] + eta)
    return (-1) ** (n * (n - 1) // 2) * det_complex(m) * pref * num / den


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_log_form_matches_direct(n):
    for seed in range(5):
        p = random_params(n, seed)
        assert rel(det.partition_determinant(p).value, direct_formula(p)) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_matches_oracle(n):
    for seed in range(20):
        p = random_params(n, seed)
        assert rel(det.partition_determinant(p).value, partition_oracle(p).value) < 1e-8


def test_single_site_closed_form():
    p = random_params(1, 4)
    h = p.h
    lam, xi, eta, zeta, th = p.lambdas[0], p.xis[0], p.eta, p.zeta, p.theta
    z = h(eta) * h(th - eta) / h(th) ** 2 * (
        h(th + zeta - lam) / h(th + zeta + lam) * h(lam - xi) * h(th + lam + xi)
        + h(zeta - lam) / h(zeta + lam) * h(lam + xi) * h(th - lam + xi))
    assert det.partition_determinant(p).value == pytest.approx(z, rel=1e-12)


def test_printed_theorem_ratio_depends_on_theta():
    p = random_params(3, 1)
    r1 = det.theorem_as_printed(p).value / partition_oracle(p).value
    q = p.replace(theta=p.theta + 0.1)
    r2 = det.theorem_as_printed(q).value / partition_oracle(q).value
    assert rel(r1, r2) > 1e-3


def test_offset_constant_over_50_draws():
    ratios = [det.partition_determinant(p).value / partition_oracle(p).value
              for p in (random_params(1 + s % 4, 100 + s) for s in range(50))]
    assert max(rel(r, 1.0) for r in ratios) < 1e-8


def test_sign_info():
    res = det.partition_determinant(random_params(3, 0))
    assert res.residual_info["sign"] == -1
    assert det.determinant_sign(4) == 1 and det.determinant_sign(2) == -1


@pytest.mark.parametrize("which", ["lambda", "xi"])
def test_permutation_symmetry_n3(which):
    p = random_params(3, 2)
    ref = det.partition_determinant(p).value
    for perm in itertools.permutations(range(3)):
        lams = [p.lambdas[i] for i in perm] if which == "lambda" else p.lambdas
        xis = [p.xis[i] for i in perm] if which == "xi" else p.xis
        assert rel(det.partition_determinant(p.with_sites(lams, xis)).value, ref) < 1e-9


@pytest.mark.parametrize("which", ["lambda", "xi"])
@pytest.mark.parametrize("n", [2, 3])
def test_oracle_permutation_symmetry(which, n):
    p = random_params(n, 6)
    ref = partition_oracle(p).value
    for perm in itertools.permutations(range(n)):
        lams = [p.lambdas[i] for i in perm] if which == "lambda" else p.lambdas
        xis = [p.xis[i] for i in perm] if which == "xi" else p.xis
        assert rel(partition_oracle(p.with_sites(lams, xis)).value, ref) < 1e-9


@pytest.mark.parametrize("n", [2, 3])
def test_normalized_is_theta_function(n):
    p = random_params(n, 8)
    for index in range(n):
        assert det.normalized_theta_check(p, index, "determinant", tol=1e-7)
    assert det.normalized_theta_check(p, 0, "oracle", tol=1e-7)


def test_normalized_single_site_is_periodic():
    p = random_params(1, 8)
    assert det.normalized_theta_residual(p, 0, "determinant") < 1e-9


def test_normalized_is_linear():
    p = random_params(2, 1)
    assert det.normalized_partition(p, 2.0) == pytest.approx(2 * det.normalized_partition(p, 1.0))


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("method", ["oracle", "determinant", "fbasis"])
def test_recursions(n, method):
    base = random_params(n, 3 * n)
    assert det.check_recursion_lower(det.at_lower_recursion_point(base), method) < 1e-8
    assert det.check_recursion_upper(det.at_upper_recursion_point(base), method) < 1e-8


def test_recursion_preconditions():
    p = random_params(3, 1)
    with pytest.raises(DomainError):
        det.check_recursion_lower(p)
    with pytest.raises(DomainError):
        det.check_recursion_upper(p)
    with pytest.raises(DomainError):
        det.check_recursion_lower(det.at_lower_recursion_point(random_params(1, 1)))


def test_m_matrix_pole_at_recursion_point():
    p = det.at_lower_recursion_point(random_params(2, 1))
    with pytest.raises(NearPoleError):
        det.build_m_matrix(p)
    assert det.partition_determinant(p).value is not None


def test_large_n_log_form():
    res = det.partition_determinant(random_params(50, 1))
    assert res.value is None
    assert np.isfinite(res.log_value.real) and res.log_value.real > 700


def test_large_n_matches_fbasis():
    p = random_params(9, 1)
    assert rel(det.partition_determinant(p).value, partition_fbasis(p).value) < 1e-9


@pytest.mark.parametrize("n", [1, 2, 3])
def test_trigonometric_pinned_constant(n):
    const = det.trigonometric_constant(n)
    for seed in range(5):
        p0 = random_params(n, seed, 0.0)
        raw = det.partition_trigonometric(p0, pin=False).value
        assert rel(partition_oracle(p0).value / raw, const) < 1e-9
        p_small = random_params(n, seed, 1e-12)
        assert rel(det.partition_determinant(p_small).value / raw, const) < 1e-6


def test_trigonometric_constant_values():
    assert det.trigonometric_constant(1) == pytest.approx(-4)
    assert det.trigonometric_constant(2) == pytest.approx(-256)
    assert det.trigonometric_constant(3) == pytest.approx(262144)


def test_trigonometric_single_site_limit():
    p = random_params(1, 2, 0.0)
    s = lambda x: 2 * np.sinh(x)
    lam, xi, eta, zeta, th = p.lambdas[0], p.xis[0], p.eta, p.zeta, p.theta
    z = s(eta) * s(th - eta) / s(th) ** 2 * (
        s(th + zeta - lam) / s(th + zeta + lam) * s(lam - xi) * s(th + lam + xi)
        + s(zeta - lam) / s(zeta + lam) * s(lam + xi) * s(th - lam + xi))
    assert det.partition_trigonometric(p).value == pytest.approx(z, rel=1e-12)


def test_elliptic_prefactor_variant_is_not_constant():
    ratios = []
    for seed in range(3):
        p = random_params(3, seed, 0.0)
        raw = det.partition_trigonometric(p, "elliptic", pin=False).value
        ratios.append(partition_oracle(p).value / raw)
    assert max(rel(r, ratios[0]) for r in ratios) > 1e-3


def test_trigonometric_requires_zero_nome():
    with pytest.raises(DomainError):
        det.partition_trigonometric(random_params(2, 0, 0.1))


@given(st.integers(0, 10**6), st.integers(1, 4))
def test_three_routes_agree(seed, n):
    p = random_params(n, seed)
    z_o = partition_oracle(p).value
    assert rel(det.partition_determinant(p).value, z_o) < 1e-8
    assert rel(partition_fbasis(p).value, z_o) < 1e-9
