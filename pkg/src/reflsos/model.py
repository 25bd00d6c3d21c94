"""Model parameters, validation, random generation and result records."""

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .elliptic import Nome, eval_h, near_zero_mask
from .exceptions import GenerationError, GenericityError, InvalidNomeError, ValidationError

__all__ = [
    "ModelParams",
    "PartitionResult",
    "validate",
    "genericity_report",
    "random_params",
    "params_from_json",
    "params_to_json",
    "load_params",
    "GENERICITY_RTOL",
]

#: Relative threshold of the genericity guard.
GENERICITY_RTOL = 1e-10

_RETRY_BUDGET = 1000
_RE_RANGE = (0.1, 1.5)
_IM_RANGE = (-0.2, 0.2)


def _complex_tuple(values):
    return tuple(complex(v) for v in values)


@dataclass(frozen=True)
class ModelParams:
    """Full parameter set of the elliptic SOS model with a reflecting end.

    Parameters
    ----------
    nome : Nome or complex
    eta : complex
        Crossing parameter; heights of adjacent corners differ by ``eta``.
    zeta : complex
        Free parameter of the diagonal boundary matrix.
    theta : complex
        Dynamical parameter (external height on the reflecting side).
    lambdas : sequence of complex
        Spectral parameters of the ``N`` double rows.
    xis : sequence of complex
        Inhomogeneities of the ``N`` columns.
    n_sites : int, optional
        Defaults to ``len(lambdas)``.
    """

    nome: Nome
    eta: complex
    zeta: complex
    theta: complex
    lambdas: tuple
    xis: tuple
    n_sites: int = field(default=None)

    def __post_init__(self):
        if not isinstance(self.nome, Nome):
            object.__setattr__(self, "nome", Nome(self.nome))
        for name in ("eta", "zeta", "theta"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        object.__setattr__(self, "lambdas", _complex_tuple(self.lambdas))
        object.__setattr__(self, "xis", _complex_tuple(self.xis))
        if self.n_sites is None:
            object.__setattr__(self, "n_sites", len(self.lambdas))

    @property
    def p(self):
        return self.nome.p

    def h(self, x):
        """``h`` at this parameter set's nome."""
        return eval_h(x, self.nome)

    def with_sites(self, lambdas, xis):
        """Copy with new spectral parameters / inhomogeneities (and ``N``)."""
        return replace(self, lambdas=_complex_tuple(lambdas), xis=_complex_tuple(xis),
                       n_sites=len(lambdas))

    def with_nome(self, p):
        return replace(self, nome=Nome(p))

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass
class PartitionResult:
    """Value of the partition function together with its provenance.

    ``log_value`` is set by routes that work in logarithmic form; when the
    magnitude overflows a double, ``value`` is ``None`` and only
    ``log_value`` is meaningful.
    """

    value: Optional[complex]
    method: str
    elapsed: float = 0.0
    residual_info: dict = field(default_factory=dict)
    log_value: Optional[complex] = None

    def to_dict(self):
        out = {"method": self.method,
               "z": None if self.value is None else [self.value.real, self.value.imag],
               "elapsed_s": self.elapsed}
        if self.log_value is not None:
            out["log_z"] = [self.log_value.real, self.log_value.imag]
        out.update(self.residual_info)
        return out


def _denominators(params):
    """Yield ``(name, argument)`` for every denominator used downstream."""
    n = params.n_sites
    th, eta, zeta = params.theta, params.eta, params.zeta
    yield "h(theta)", th
    for k in range(1, 2 * n + 1):
        yield f"h(theta+{k}eta)", th + k * eta
        yield f"h(theta-{k}eta)", th - k * eta
    for i, lam in enumerate(params.lambdas, 1):
        yield f"h(zeta+lambda{i})", zeta + lam
        yield f"h(theta+zeta+lambda{i})", th + zeta + lam
        yield f"h(2lambda{i})", 2 * lam
    lams, xis = params.lambdas, params.xis
    for i in range(n):
        for j in range(i + 1, n):
            yield f"h(lambda{j+1}-lambda{i+1})", lams[j] - lams[i]
            yield f"h(lambda{j+1}+lambda{i+1}+eta)", lams[j] + lams[i] + eta
            yield f"h(xi{j+1}-xi{i+1})", xis[j] - xis[i]
            yield f"h(xi{j+1}+xi{i+1})", xis[j] + xis[i]


def genericity_report(params):
    """List ``(name, value)`` for every vanishing denominator (empty if generic)."""
    names, args = zip(*_denominators(params))
    args = np.array(args)
    bad = near_zero_mask(args, params.nome, GENERICITY_RTOL)
    return [(name, complex(eval_h(x, params.nome)))
            for name, x, flag in zip(names, args, bad) if flag]


def validate(params):
    """Return ``params`` unchanged if the parameter set is admissible.

    Raises
    ------
    ValidationError
        If the ``lambdas`` / ``xis`` lengths disagree with ``n_sites``.
    GenericityError
        If any denominator used by the library vanishes; the exception's
        ``violations`` names every offending factor.
    """
    n = params.n_sites
    if n < 1:
        raise ValidationError(f"n_sites must be >= 1, got {n}")
    if len(params.lambdas) != n or len(params.xis) != n:
        raise ValidationError(
            f"expected {n} lambdas and xis, got {len(params.lambdas)} and {len(params.xis)}")
    values = [params.eta, params.zeta, params.theta, *params.lambdas, *params.xis]
    if not all(math.isfinite(v.real) and math.isfinite(v.imag) for v in values):
        raise ValidationError("parameters must be finite")
    bad = genericity_report(params)
    if bad:
        raise GenericityError(bad)
    return params


def random_params(n_sites, seed, p_magnitude=0.1):
    """Reproducible generic parameters.

    Every complex parameter has real part uniform in ``[0.1, 1.5]`` and
    imaginary part uniform in ``[-0.2, 0.2]``.  The nome is
    ``p_magnitude * exp(i phi)`` with ``phi`` uniform in ``[-0.2, 0.2]``.
    Draws are repeated until :func:`validate` passes.
    """
    if n_sites < 1:
        raise ValidationError(f"n_sites must be >= 1, got {n_sites}")
    if not 0.0 <= p_magnitude < 1.0:
        raise InvalidNomeError(f"p_magnitude must lie in [0, 1), got {p_magnitude}")
    rng = np.random.default_rng(seed)

    def draw(size=None):
        re = rng.uniform(*_RE_RANGE, size=size)
        im = rng.uniform(*_IM_RANGE, size=size)
        return re + 1j * im

    for _ in range(_RETRY_BUDGET):
        p = p_magnitude * np.exp(1j * rng.uniform(*_IM_RANGE))
        eta, zeta, theta = draw(3)
        params = ModelParams(Nome(p), eta, zeta, theta,
                             draw(n_sites), draw(n_sites), n_sites)
        try:
            return validate(params)
        except GenericityError:
            continue
    raise GenerationError(f"no generic parameters after {_RETRY_BUDGET} draws")


def _pair(z):
    return [float(z.real), float(z.imag)]


def _unpair(v, key):
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        raise ValidationError(f"{key!r}: complex numbers are [re, im] pairs, got {v!r}")
    return complex(v[0], v[1])


def params_from_json(obj):
    """Build :class:`ModelParams` from the JSON schema used by the CLI.

    The object holds ``"p"``, ``"eta"``, ``"zeta"``, ``"theta"`` as
    ``[re, im]`` pairs and ``"lambda"``, ``"xi"`` as lists of pairs.
    """
    if not isinstance(obj, dict):
        raise ValidationError("parameter file must hold a JSON object")
    missing = [k for k in ("p", "eta", "zeta", "theta", "lambda", "xi") if k not in obj]
    if missing:
        raise ValidationError(f"missing keys: {', '.join(missing)}")
    for key in ("lambda", "xi"):
        if not isinstance(obj[key], list):
            raise ValidationError(f"{key!r} must be a list of [re, im] pairs")
    lambdas = [_unpair(v, "lambda") for v in obj["lambda"]]
    xis = [_unpair(v, "xi") for v in obj["xi"]]
    return ModelParams(Nome(_unpair(obj["p"], "p")), _unpair(obj["eta"], "eta"),
                       _unpair(obj["zeta"], "zeta"), _unpair(obj["theta"], "theta"),
                       lambdas, xis, len(lambdas))


def params_to_json(params):
    return {"p": _pair(params.p), "eta": _pair(params.eta), "zeta": _pair(params.zeta),
            "theta": _pair(params.theta),
            "lambda": [_pair(z) for z in params.lambdas],
            "xi": [_pair(z) for z in params.xis]}


def load_params(path):
    """Read and parse a JSON parameter file (not validated)."""
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON in {path}: {exc}") from exc
    return params_from_json(obj)
