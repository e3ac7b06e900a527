"""scikit-learn style wrappers.

Each row of ``X`` is one radial profile sampled on the periodic grid.
Nothing is learned from data; ``fit`` only validates and records the grid
size, so the wrappers compose with pipelines and ``get_params``/``clone``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_n_features, check_profiles
from .elasticity import DEFAULT_N_RHO, BoundaryData, LameParams, elastic_energy, solve_equilibrium
from .evolve import DescentConfig, descend
from .geometry import RadialProfile, cavity_area, perimeter
from .variation import assemble, criticality, stability_spectrum


class _ProfileEstimator(BaseEstimator):
    def _params(self):
        return LameParams(self.mu, self.lam)

    def fit(self, X, y=None):
        X = check_profiles(X, self.R0)
        self._params()
        self.n_features_in_ = X.shape[1]
        return self

    def _profiles(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_profiles(X, self.R0)
        check_n_features(self, X)
        return [RadialProfile(row, self.R0) for row in X]


class EquilibriumEnergy(TransformerMixin, _ProfileEstimator):
    """Map profiles to ``[elastic energy, perimeter, cavity area]``."""

    def __init__(self, mu=1.0, lam=0.0, alpha=1.0, R0=1.0, n_rho=DEFAULT_N_RHO):
        self.mu = mu
        self.lam = lam
        self.alpha = alpha
        self.R0 = R0
        self.n_rho = n_rho

    def transform(self, X):
        p, bc = self._params(), BoundaryData(self.alpha, self.R0)
        out = []
        for h in self._profiles(X):
            e = elastic_energy(solve_equilibrium(h, bc, p, self.n_rho)) if self.alpha else 0.0
            out.append([e, perimeter(h), cavity_area(h)])
        return np.array(out)


class SecondVariationStability(_ProfileEstimator):
    """Stability verdict of each profile from the constrained spectrum.

    ``predict`` returns 1 for ``stable`` and 0 otherwise;
    ``decision_function`` returns the coercivity constant ``c0``.
    """

    def __init__(self, mu=1.0, lam=0.0, alpha=1.0, R0=1.0, n_modes=8, n_rho=DEFAULT_N_RHO, force=False):
        self.mu = mu
        self.lam = lam
        self.alpha = alpha
        self.R0 = R0
        self.n_modes = n_modes
        self.n_rho = n_rho
        self.force = force

    def _spectra(self, X):
        p, bc = self._params(), BoundaryData(self.alpha, self.R0)
        for h in self._profiles(X):
            u = solve_equilibrium(h, bc, p, self.n_rho)
            yield stability_spectrum(assemble(h, u, self.n_modes, force=self.force))

    def decision_function(self, X):
        return np.array([s.c0 for s in self._spectra(X)])

    def predict(self, X):
        return np.array([int(s.verdict == "stable") for s in self._spectra(X)])

    def criticality_deviation(self, X):
        p, bc = self._params(), BoundaryData(self.alpha, self.R0)
        return np.array(
            [criticality(h, solve_equilibrium(h, bc, p, self.n_rho)).deviation for h in self._profiles(X)]
        )


class PenalizedDescent(TransformerMixin, _ProfileEstimator):
    """Replace each profile by the end point of the area-constrained descent
    started from it; the target area is the profile's own."""

    def __init__(self, mu=1.0, lam=0.0, alpha=1.0, R0=1.0, Lambda=None, max_iter=200, tol=1e-7,
                 n_rho=DEFAULT_N_RHO):
        self.mu = mu
        self.lam = lam
        self.alpha = alpha
        self.R0 = R0
        self.Lambda = Lambda
        self.max_iter = max_iter
        self.tol = tol
        self.n_rho = n_rho

    def transform(self, X):
        p = self._params()
        self.traces_ = []
        out = []
        for h in self._profiles(X):
            cfg = DescentConfig.around(h, p, self.alpha, Lambda=self.Lambda, n_rho=self.n_rho)
            trace = descend(h, cfg, self.max_iter, self.tol)
            self.traces_.append(trace)
            out.append(trace.final.profile.values)
        return np.array(out)
