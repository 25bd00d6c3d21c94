import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reflsos.exceptions import GenericityError, InvalidNomeError, ValidationError
from reflsos.model import (ModelParams, PartitionResult, genericity_report, load_params,
                           params_from_json, params_to_json, random_params, validate)


def example_params(**kw):
    base = dict(nome=0.1, eta=0.7, zeta=0.3, theta=1.1, lambdas=[0.25], xis=[0.4])
    base.update(kw)
    return ModelParams(**base)


def test_example_validates():
    p = example_params()
    assert validate(p) is p
    assert p.n_sites == 1 and p.p == 0.1


def test_theta_zero_names_h_theta():
    with pytest.raises(GenericityError) as info:
        validate(example_params(theta=0.0))
    names = [name for name, _ in info.value.violations]
    assert "h(theta)" in names


def test_recursion_point_is_valid():
    p = example_params(lambdas=[0.4, 0.9], xis=[0.4, 0.15])
    validate(p)


def test_coinciding_xis_rejected():
    with pytest.raises(GenericityError) as info:
        validate(example_params(lambdas=[0.2, 0.9], xis=[0.4, 0.4]))
    assert any("xi2-xi1" in name for name, _ in info.value.violations)


def test_length_mismatch():
    with pytest.raises(ValidationError):
        validate(ModelParams(0.1, 0.7, 0.3, 1.1, [0.2, 0.5], [0.4], 2))


def test_non_finite_rejected():
    with pytest.raises(ValidationError):
        validate(example_params(eta=complex("nan")))


def test_random_params_deterministic():
    assert random_params(3, 42) == random_params(3, 42)
    assert random_params(3, 42) != random_params(3, 43)


def test_random_params_validates():
    validate(random_params(3, 42, 0.1))


def test_random_params_bad_nome():
    with pytest.raises(InvalidNomeError):
        random_params(2, 0, 1.0)


def test_random_params_ranges():
    p = random_params(5, 3, 0.2)
    values = np.array([p.eta, p.zeta, p.theta, *p.lambdas, *p.xis])
    assert np.all((values.real >= 0.1) & (values.real <= 1.5))
    assert np.all(np.abs(values.imag) <= 0.2)
    assert abs(p.p) == pytest.approx(0.2)


@given(st.integers(1, 6), st.integers(0, 10**6), st.sampled_from([0.0, 1e-6, 0.1, 0.5]))
def test_random_params_always_validate_and_idempotent(n, seed, pmag):
    p = random_params(n, seed, pmag)
    assert validate(validate(p)) == p
    assert genericity_report(p) == []


def test_json_round_trip(tmp_path):
    p = random_params(3, 5)
    path = tmp_path / "params.json"
    path.write_text(json.dumps(params_to_json(p)))
    assert load_params(path) == p
    assert params_from_json(params_to_json(p)) == p


@pytest.mark.parametrize("obj", [
    [],
    {"p": [0.1, 0]},
    {"p": 0.1, "eta": [0.3, 0], "zeta": [0.2, 0], "theta": [1, 0], "lambda": [[1, 0]], "xi": [[1, 0]]},
    {"p": [0.1, 0], "eta": [0.3, 0], "zeta": [0.2, 0], "theta": [1, 0], "lambda": [1], "xi": [[1, 0]]},
    {"p": [0.1, 0], "eta": [0.3, 0], "zeta": [0.2, 0], "theta": [1, 0], "lambda": "x", "xi": []},
])
def test_bad_json_shapes(obj):
    with pytest.raises(ValidationError):
        params_from_json(obj)


def test_malformed_json_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ValidationError):
        load_params(path)


def test_partition_result_dict():
    r = PartitionResult(1 + 2j, "oracle", 0.5, {"extra": 1})
    assert r.to_dict() == {"method": "oracle", "z": [1.0, 2.0], "elapsed_s": 0.5, "extra": 1}
    assert PartitionResult(None, "determinant", log_value=800 + 0j).to_dict()["z"] is None
