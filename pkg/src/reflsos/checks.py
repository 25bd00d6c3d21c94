"""Named verification checks over every identity of the model.

Each check draws its own reproducible inputs, evaluates one identity and
reports the worst residual against a threshold.  The registry
:data:`CHECKS` drives the ``verify`` subcommand.
"""

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from . import algebra, determinant, fbasis
from .elliptic import Nome, analytic_quasi_factors, eval_h, quasi_periodicity_factors
from .exceptions import DomainError
from .model import random_params
from .numerics import rel_diff

__all__ = ["CheckResult", "VerifyConfig", "CHECKS", "run_checks", "faulty_r_matrices"]

ELLIPTIC_NOMES = (0.0, 1e-3, 0.1, 0.5 * np.exp(0.2j))
FAULT_SCALE = 1.0 + 1e-3


@dataclass
class VerifyConfig:
    """Sizes, seeds and tolerance overrides of a verification run.

    Parameters
    ----------
    n_max : int
        Largest number of sites used by the size-dependent checks.
    seeds : sequence of int
        Random parameter sets per size.
    p_magnitude : float
        Modulus of the nome of the random parameter sets.
    tolerances : dict
        ``{check_name: threshold}`` overrides.
    inject_fault : bool
        Scale one R-matrix entry by ``1 + 1e-3`` in the DYBE check
        (self-test of the suite's sensitivity).
    """

    n_max: int = 4
    seeds: tuple = tuple(range(20))
    p_magnitude: float = 0.1
    tolerances: dict = field(default_factory=dict)
    inject_fault: bool = False

    def sizes(self, allowed):
        return [n for n in allowed if n <= self.n_max]


@dataclass
class CheckResult:
    name: str
    worst: float
    threshold: float
    passed: bool
    cases: int
    elapsed: float
    note: str = ""

    def to_dict(self):
        return {"check": self.name, "worst": self.worst, "threshold": self.threshold,
                "passed": self.passed, "cases": self.cases, "elapsed_s": self.elapsed,
                "note": self.note}


def _points(rng, size, re=(-2.0, 2.0), im=(-2.0, 2.0)):
    return rng.uniform(*re, size) + 1j * rng.uniform(*im, size)


def faulty_r_matrices(params):
    """R-matrix factory with the ``(+-, -+)`` entry scaled by ``1 + 1e-3``."""
    def rf(lam, thetas):
        r = algebra.r_matrices(lam, thetas, params)
        r[..., 1, 2] *= FAULT_SCALE
        return r
    return rf


# ---------------------------------------------------------------------------
# elliptic

def _h_oddness(cfg):
    rng = np.random.default_rng(1)
    worst = 0.0
    for p in ELLIPTIC_NOMES:
        x = _points(rng, 100)
        worst = max(worst, rel_diff(eval_h(-x, p), -eval_h(x, p)))
    return worst, 100 * len(ELLIPTIC_NOMES), ""


def _h_addition(cfg):
    rng = np.random.default_rng(2)
    worst = 0.0
    for p in ELLIPTIC_NOMES:
        h = lambda z: eval_h(z, p)
        x, y, u, v = (_points(rng, 100, (-1, 1), (-1, 1)) for _ in range(4))
        a = h(x + y) * h(x - y) * h(u + v) * h(u - v)
        b = h(x + u) * h(x - u) * h(y + v) * h(y - v)
        c = h(x + v) * h(x - v) * h(u + y) * h(u - y)
        scale = np.maximum.reduce([np.abs(a), np.abs(b), np.abs(c)])
        worst = max(worst, float(np.max(np.abs(a - b - c) / scale)))
    return worst, 100 * len(ELLIPTIC_NOMES), ""


def _h_truncation(cfg):
    rng = np.random.default_rng(3)
    worst = 0.0
    for p in ELLIPTIC_NOMES[1:]:
        nome = Nome(p)
        x = _points(rng, 100)
        worst = max(worst, rel_diff(eval_h(x, nome), eval_h(x, nome.with_order(2 * nome.truncation_order))))
    return worst, 100 * (len(ELLIPTIC_NOMES) - 1), ""


def _h_quasi(cfg):
    rng = np.random.default_rng(4)
    worst = 0.0
    count = 0
    for p in ELLIPTIC_NOMES[1:]:
        for x in _points(rng, 100, (-1, 1), (-1, 1)):
            got = quasi_periodicity_factors(x, p)
            want = analytic_quasi_factors(x, p)
            worst = max(worst, *(abs(g - w) / abs(w) for g, w in zip(got, want)))
            count += 1
    return worst, count, ""


# ---------------------------------------------------------------------------
# R- and K-matrix identities

def _rk_cases(n_points=50):
    for k in range(n_points):
        params = random_params(1, 1000 + k)
        rng = np.random.default_rng(2000 + k)
        yield params, _points(rng, 3, (-1.5, 1.5), (-0.5, 0.5))


def _dybe(cfg):
    worst = 0.0
    for params, (l1, l2, l3) in _rk_cases():
        rf = faulty_r_matrices(params) if cfg.inject_fault else None
        worst = max(worst, algebra.check_dybe(l1, l2, l3, params.theta, params, rf))
    note = "fault injected" if cfg.inject_fault else ""
    return worst, 50, note


def _unitarity(cfg):
    return max(algebra.check_unitarity(l[0], p.theta, p) for p, l in _rk_cases()), 50, ""


def _crossing(cfg):
    return max(algebra.check_crossing(l[0], p.theta, p) for p, l in _rk_cases()), 50, ""


def _ice(cfg):
    return max(algebra.check_ice_rule(algebra.eval_r(l[0], p.theta, p)) for p, l in _rk_cases()), 50, ""


def _ice_t(cfg):
    worst = max(algebra.check_transposed_ice_rule(algebra.eval_r(l[0], p.theta, p))
                for p, l in _rk_cases())
    return worst, 50, ""


def _reflection_equation(cfg):
    worst = max(algebra.check_reflection_equation(l[0], l[1], p) for p, l in _rk_cases())
    return worst, 50, ""


# ---------------------------------------------------------------------------
# monodromy identities

def _seeded(cfg, sizes, seeds=None):
    seeds = cfg.seeds if seeds is None else seeds
    for n in cfg.sizes(sizes):
        for seed in seeds:
            params = random_params(n, seed, cfg.p_magnitude)
            rng = np.random.default_rng(10_000 * n + seed)
            yield params, _points(rng, 2, (0.1, 1.5), (-0.2, 0.2))


def _max_over(cases, fn):
    worst, count = 0.0, 0
    for params, pts in cases:
        worst = max(worst, fn(params, pts))
        count += 1
    return worst, count, ""


def _crossed_inverse(cfg):
    return _max_over(_seeded(cfg, (1, 2, 3), cfg.seeds[:5]),
                     lambda p, l: algebra.check_crossed_inverse(l[0], p))


def _b_decomposition(cfg):
    return _max_over(_seeded(cfg, (1, 2, 3), cfg.seeds[:5]),
                     lambda p, l: algebra.check_b_decomposition(l[0], p))


def _b_commutativity(cfg):
    return _max_over(_seeded(cfg, (1, 2, 3), cfg.seeds[:5]),
                     lambda p, l: algebra.check_b_commutativity(l[0], l[1], p))


def _reflection_algebra(cfg):
    return _max_over(_seeded(cfg, (1, 2), cfg.seeds[:3]),
                     lambda p, l: algebra.check_reflection_algebra(l[0], l[1], p))


def _weight_zero(cfg):
    def fn(p, l):
        return max(algebra.weight_zero_residual(algebra.build_bulk_monodromy(l[0], p)),
                   algebra.weight_zero_residual(algebra.build_boundary_monodromy(l[0], p)))
    return _max_over(_seeded(cfg, (1, 2, 3), cfg.seeds[:5]), fn)


def _abar_eigenvalue(cfg):
    return _max_over(_seeded(cfg, (1, 2, 3, 4), cfg.seeds[:5]),
                     lambda p, l: fbasis.check_abar_eigenvalue(l[0], p))


def _fbasis_commutativity(cfg):
    def fn(p, l):
        b1 = fbasis.build_symmetric_b(l[0], p)
        b2 = fbasis.build_symmetric_b(l[1], p)
        return rel_diff(b1 @ b2, b2 @ b1)
    return _max_over(_seeded(cfg, (1, 2, 3, 4), cfg.seeds[:5]), fn)


# ---------------------------------------------------------------------------
# partition function

def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _three_way_values(cfg):
    for n in cfg.sizes((1, 2, 3, 4)):
        for seed in cfg.seeds:
            params = random_params(n, seed, cfg.p_magnitude)
            yield (n, seed, algebra.partition_oracle(params).value,
                   fbasis.partition_fbasis(params).value,
                   determinant.partition_determinant(params).value)


def _det_vs_oracle(cfg):
    worst, count = 0.0, 0
    for _, _, zo, _, zd in _three_way_values(cfg):
        worst = max(worst, _rel(zd, zo))
        count += 1
    return worst, count, ""


def _fbasis_vs_oracle(cfg):
    worst, count = 0.0, 0
    for _, _, zo, zf, _ in _three_way_values(cfg):
        worst = max(worst, _rel(zf, zo))
        count += 1
    return worst, count, ""


def _normalisation_offset(cfg):
    ratios = [zd / zo for _, _, zo, _, zd in _three_way_values(cfg)]
    offset = ratios[0]
    worst = max(_rel(r, offset) for r in ratios)
    return worst, len(ratios), f"offset {offset.real:.12g}{offset.imag:+.12g}j"


def _n1_closed_form(cfg):
    def closed(p):
        h = lambda x: eval_h(x, p.nome)
        lam, xi, eta, zeta, th = p.lambdas[0], p.xis[0], p.eta, p.zeta, p.theta
        # Two configurations, one per diagonal entry of K.
        up = h(th + zeta - lam) / h(th + zeta + lam) * h(lam - xi) * h(th + lam + xi)
        down = h(zeta - lam) / h(zeta + lam) * h(lam + xi) * h(th - lam + xi)
        return h(eta) * h(th - eta) / h(th) ** 2 * (up + down)

    worst, count = 0.0, 0
    for seed in cfg.seeds:
        p = random_params(1, seed, cfg.p_magnitude)
        worst = max(worst, _rel(algebra.partition_oracle(p).value, closed(p)))
        count += 1
    return worst, count, ""


def _symmetry(which, method, sizes, seeds):
    def run(cfg):
        worst, count = 0.0, 0
        zf = determinant._z_function(method)
        for n in cfg.sizes(sizes):
            for seed in cfg.seeds[:seeds]:
                p = random_params(n, seed, cfg.p_magnitude)
                ref = zf(p)
                for perm in itertools.permutations(range(n)):
                    lams = [p.lambdas[i] for i in perm] if which == "lambda" else p.lambdas
                    xis = [p.xis[i] for i in perm] if which == "xi" else p.xis
                    worst = max(worst, _rel(zf(p.with_sites(lams, xis)), ref))
                    count += 1
        return worst, count, method
    return run


def _theta_property(cfg):
    worst, count = 0.0, 0
    for n in cfg.sizes((2, 3)):
        for seed in cfg.seeds[:5]:
            p = random_params(n, seed, cfg.p_magnitude)
            for index in range(n):
                worst = max(worst, determinant.normalized_theta_residual(p, index, "determinant"))
                count += 1
    return worst, count, ""


def _recursion(kind):
    def run(cfg):
        worst, count = 0.0, 0
        for n in cfg.sizes((2, 3, 4)):
            for seed in cfg.seeds[:5]:
                base = random_params(n, seed, cfg.p_magnitude)
                if kind == "lower":
                    p = determinant.at_lower_recursion_point(base)
                    fn = determinant.check_recursion_lower
                else:
                    p = determinant.at_upper_recursion_point(base)
                    fn = determinant.check_recursion_upper
                for method in ("oracle", "determinant"):
                    worst = max(worst, fn(p, method))
                    count += 1
        return worst, count, ""
    return run


def _trig_limit(cfg):
    """Ratio of the p=1e-12 determinant to the raw sinh formula."""
    worst, count = 0.0, 0
    notes = []
    for n in cfg.sizes((1, 2, 3)):
        const = determinant.trigonometric_constant(n)
        for seed in cfg.seeds:
            p_small = random_params(n, seed, 1e-12)
            p_zero = p_small.with_nome(0.0)
            raw = determinant.partition_trigonometric(p_zero, pin=False).value
            ratio = determinant.partition_determinant(p_small).value / raw
            worst = max(worst, _rel(ratio, const))
            count += 1
        notes.append(f"N={n}: {const.real:.10g}{const.imag:+.10g}j")
    return worst, count, "; ".join(notes)


def _timed(fn, limit):
    def run(cfg):
        start = time.perf_counter()
        fn()
        elapsed = time.perf_counter() - start
        return elapsed, 1, f"seconds (limit {limit})"
    return run


def _det_n50():
    determinant.partition_determinant(random_params(50, 1))


def _oracle_n8():
    algebra.partition_oracle(random_params(8, 1))


#: name -> (default threshold, function(config) -> (worst, cases, note))
CHECKS = {
    "h-oddness": (1e-12, _h_oddness),
    "h-addition": (1e-10, _h_addition),
    "h-truncation": (1e-14, _h_truncation),
    "h-quasi-periodicity": (1e-10, _h_quasi),
    "dybe": (1e-10, _dybe),
    "unitarity": (1e-10, _unitarity),
    "crossing": (1e-10, _crossing),
    "ice-rule": (1e-14, _ice),
    "transposed-ice-rule": (1e-14, _ice_t),
    "reflection-equation": (1e-10, _reflection_equation),
    "crossed-inverse": (1e-9, _crossed_inverse),
    "b-decomposition": (1e-9, _b_decomposition),
    "b-commutativity": (1e-9, _b_commutativity),
    "reflection-algebra": (1e-9, _reflection_algebra),
    "weight-zero": (1e-12, _weight_zero),
    "abar-eigenvalue": (1e-9, _abar_eigenvalue),
    "fbasis-commutativity": (1e-9, _fbasis_commutativity),
    "fbasis-vs-oracle": (1e-9, _fbasis_vs_oracle),
    "determinant-vs-oracle": (1e-8, _det_vs_oracle),
    "normalisation-offset": (1e-8, _normalisation_offset),
    "n1-closed-form": (1e-9, _n1_closed_form),
    "lambda-symmetry-oracle": (1e-9, _symmetry("lambda", "oracle", (2, 3), 5)),
    "xi-symmetry-oracle": (1e-9, _symmetry("xi", "oracle", (2, 3), 5)),
    "lambda-symmetry-determinant": (1e-9, _symmetry("lambda", "determinant", (3,), 5)),
    "xi-symmetry-determinant": (1e-9, _symmetry("xi", "determinant", (3,), 5)),
    "theta-order-norm": (1e-7, _theta_property),
    "recursion-lower": (1e-8, _recursion("lower")),
    "recursion-upper": (1e-8, _recursion("upper")),
    "trigonometric-limit": (1e-6, _trig_limit),
    "time-determinant-n50": (0.1, _timed(_det_n50, 0.1)),
    "time-oracle-n8": (30.0, _timed(_oracle_n8, 30.0)),
}


def run_checks(config=None, names=None):
    """Run the named checks (all by default) and return their results.

    Raises
    ------
    DomainError
        If a requested name or tolerance override is unknown.
    """
    config = config or VerifyConfig()
    names = list(CHECKS) if not names else list(names)
    unknown = [n for n in list(names) + list(config.tolerances) if n not in CHECKS]
    if unknown:
        raise DomainError(f"unknown check(s): {', '.join(unknown)}")
    results = []
    for name in names:
        default, fn = CHECKS[name]
        threshold = float(config.tolerances.get(name, default))
        start = time.perf_counter()
        worst, cases, note = fn(config)
        elapsed = time.perf_counter() - start
        worst = float(worst)
        results.append(CheckResult(name, worst, threshold, bool(worst < threshold),
                                   cases, elapsed, note))
    return results
