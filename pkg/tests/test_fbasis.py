import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reflsos.algebra import (build_boundary_monodromy, build_bulk_monodromy, extract_b_operator,
                             extract_blocks, partition_oracle, total_sz)
from reflsos.elliptic import eval_h
from reflsos.fbasis import (build_symmetric_a, build_symmetric_b, check_abar_eigenvalue,
                            partition_fbasis)
from reflsos.model import random_params
from reflsos.numerics import rel_diff


def test_single_site_equals_b():
    for seed in range(5):
        p = random_params(1, seed)
        want = extract_b_operator(build_boundary_monodromy(0.6 + 0.1j, p))
        assert rel_diff(build_symmetric_b(0.6 + 0.1j, p), want) < 1e-9


def test_single_site_a_equals_a():
    p = random_params(1, 3)
    a = extract_blocks(build_bulk_monodromy(0.6, p))[0]
    assert rel_diff(np.diag(build_symmetric_a(0.6, p)), a) < 1e-12


def test_one_lowering_per_entry_n3():
    p = random_params(3, 2)
    b = build_symmetric_b(0.7, p)
    rows, cols = np.nonzero(b)
    flipped = rows ^ cols
    assert np.all([bin(f).count("1") == 1 for f in flipped])
    assert np.all(rows > cols)  # the flipped bit goes from up (0) to down (1)
    counts = np.count_nonzero(b, axis=0)
    up_count = 3 - np.array([bin(c).count("1") for c in range(8)])
    np.testing.assert_array_equal(counts, up_count)


def test_lowers_spin_by_two():
    p = random_params(3, 2)
    rows, cols = np.nonzero(build_symmetric_b(0.7, p))
    sz = total_sz(3)
    assert np.all(sz[rows] == sz[cols] - 2)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_matches_oracle(n):
    for seed in range(5):
        p = random_params(n, seed)
        z_o = partition_oracle(p).value
        assert abs(partition_fbasis(p).value - z_o) / abs(z_o) < 1e-9


@given(st.integers(0, 10**6), st.integers(2, 4))
def test_symmetric_b_commute(seed, n):
    p = random_params(n, seed)
    b1, b2 = build_symmetric_b(0.4 + 0.1j, p), build_symmetric_b(1.2 - 0.1j, p)
    assert rel_diff(b1 @ b2, b2 @ b1) < 1e-9


def test_abar_eigenvalue_n2():
    assert check_abar_eigenvalue(0.9 + 0.1j, random_params(2, 1)) < 1e-9


def test_abar_prefactor_is_one_on_all_up():
    p = random_params(3, 1)
    lam = 0.9
    want = np.prod(eval_h(lam - np.asarray(p.xis) + p.eta, p.nome))
    assert build_symmetric_a(lam, p)[0] == pytest.approx(want, rel=1e-14)


def test_abar_is_diagonal_vector():
    p = random_params(3, 1)
    assert build_symmetric_a(0.5, p).shape == (8,)
