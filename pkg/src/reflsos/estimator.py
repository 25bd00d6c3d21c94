"""Estimator-style wrapper: fixed model parameters, rows of spectral parameters.

Nothing is learned.  ``fit`` validates the hyper-parameters and freezes
them; ``predict`` evaluates the partition function for every row of
``lambda`` values.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .algebra import partition_oracle
from .cli import ORACLE_CAP
from .determinant import partition_determinant
from .exceptions import ValidationError
from .fbasis import partition_fbasis
from .model import ModelParams, validate

__all__ = ["PartitionFunction", "check_spectral_array"]

_ROUTES = {"oracle": partition_oracle, "fbasis": partition_fbasis,
           "determinant": partition_determinant}


def check_spectral_array(X, n_sites=None):
    """Coerce ``X`` to a finite complex array of shape ``(n_samples, n_sites)``.

    A 1-d input is read as a single row.  scikit-learn's own ``check_array``
    rejects complex data, hence this helper.
    """
    try:
        arr = np.asarray(X, dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"spectral parameters must be complex numbers: {exc}") from exc
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValidationError(f"expected a non-empty 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("spectral parameters must be finite")
    if n_sites is not None and arr.shape[1] != n_sites:
        raise ValidationError(f"expected {n_sites} columns, got {arr.shape[1]}")
    return arr


class PartitionFunction(BaseEstimator):
    """Partition function as a function of the row spectral parameters.

    Parameters
    ----------
    p : complex
        Elliptic nome.
    eta, zeta, theta : complex
        Crossing, boundary and dynamical parameters.
    xis : sequence of complex
        Column inhomogeneities; their number fixes ``N``.
    method : {'determinant', 'oracle', 'fbasis'}

    Examples
    --------
    >>> est = PartitionFunction(p=0.1, eta=0.3, zeta=0.7, theta=1.1,
    ...                         xis=[0.4, 0.9]).fit()
    >>> est.predict([[0.5, 0.8]]).shape
    (1,)
    """

    def __init__(self, p=0.1, eta=0.3, zeta=0.7, theta=1.1, xis=(0.4,), method="determinant"):
        self.p = p
        self.eta = eta
        self.zeta = zeta
        self.theta = theta
        self.xis = xis
        self.method = method

    def _params(self, lambdas):
        return ModelParams(self.nome_, self.eta, self.zeta, self.theta, lambdas, self.xis_)

    def fit(self, X=None, y=None):
        """Validate the hyper-parameters; ``X`` (if given) is checked for shape."""
        if self.method not in _ROUTES:
            raise ValidationError(f"unknown method {self.method!r}")
        xis = tuple(complex(x) for x in np.atleast_1d(np.asarray(self.xis, dtype=complex)))
        n = len(xis)
        if n == 0:
            raise ValidationError("xis must not be empty")
        if self.method != "determinant" and n > ORACLE_CAP:
            raise ValidationError(f"{self.method} is capped at N <= {ORACLE_CAP}")
        self.xis_ = xis
        self.n_sites_ = n
        self.nome_ = ModelParams(self.p, 0, 0, 0, (), ()).nome
        if X is not None:
            check_spectral_array(X, n)
        return self

    def _results(self, X):
        check_is_fitted(self, "n_sites_")
        rows = check_spectral_array(X, self.n_sites_)
        route = _ROUTES[self.method]
        return [route(validate(self._params(row))) for row in rows]

    def predict(self, X):
        """Partition function for each row; ``nan`` where ``|Z|`` overflows."""
        out = [complex("nan+nanj") if r.value is None else r.value for r in self._results(X)]
        return np.array(out, dtype=complex)

    def predict_log(self, X):
        """Complex logarithm of the partition function for each row."""
        out = []
        for r in self._results(X):
            if r.log_value is not None:
                out.append(r.log_value)
            else:
                out.append(np.log(r.value) if r.value else complex(-np.inf))
        return np.array(out, dtype=complex)
