"""Single-machine kernel ridge regression.

Two solve paths produce the same estimate (on the truncated kernel):

* ``exact_gram`` — representer form: solve the ``n x n`` system
  ``(R_n + n*lam*I) alpha = y`` (augmented with an unpenalized intercept for
  spectra that carry a constant eigenfunction).
* ``truncated_feature`` — ridge in the scaled eigenfunction basis
  ``psi_nu = sqrt(mu_nu) phi_nu``; an ``M x M`` solve, much cheaper when
  ``n >> M``. Available only for spectra with eigenfunctions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from dckrr.spectra import Spectrum, feature_matrix, gram_R

__all__ = ["Subsample", "MachineFit", "krr_fit", "predict", "smoother_trace"]


@dataclass(frozen=True)
class Subsample:
    """The data handed to one machine: design ``xs`` and responses ``ys``."""

    xs: NDArray[np.float64]
    ys: NDArray[np.float64]
    machine_id: int = 0

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=np.float64)
        ys = np.asarray(self.ys, dtype=np.float64)
        n = xs.shape[0]
        if n == 0:
            raise ValueError("empty subsample")
        if ys.shape != (n,):
            raise ValueError(f"ys must have shape ({n},), got {ys.shape}")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("subsample contains non-finite values")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return self.xs.shape[0]


@dataclass(frozen=True)
class MachineFit:
    """One machine's fitted function ``f(x) = intercept + <weights, basis(x)>``.

    For the ``exact_gram`` path, ``anchors`` are the training points and
    ``alpha`` the representer coefficients; ``f = intercept +
    sum_i alpha_i R(x_i, .)``. For the ``truncated_feature`` path, ``theta``
    holds coefficients in the scaled basis ``sqrt(mu_nu) phi_nu``.
    """

    lam: float
    solve_path: str
    intercept: float
    anchors: NDArray[np.float64] | None = None
    alpha: NDArray[np.float64] | None = None
    theta: NDArray[np.float64] | None = field(default=None, repr=False)

    def mercer_coeffs(self, spec: Spectrum) -> NDArray[np.float64]:
        """Coefficients ``c_nu = V(f, phi_nu)`` for the finite eigenpairs."""
        if self.solve_path == "truncated_feature":
            return self.theta * np.sqrt(spec.eigenvalues)
        phi = feature_matrix(spec, self.anchors)
        return spec.eigenvalues * (phi.T @ self.alpha)


def _solve_spd(A: NDArray[np.float64], b: NDArray[np.float64]) -> NDArray[np.float64]:
    c, low = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    return scipy.linalg.cho_solve((c, low), b, check_finite=False)


def krr_fit(spec: Spectrum, sub: Subsample, lam: float, solve_path: str = "exact_gram") -> MachineFit:
    """Fit kernel ridge regression on one subsample.

    Minimizes ``(1/n) sum (y_i - f(x_i))^2 + lam * |f|_H^2`` over
    ``f = beta0 + g`` with ``g`` in the (truncated) RKHS; the intercept term
    ``beta0`` participates only for spectra with a constant eigenfunction and
    is unpenalized (the exact limit of penalty ``lam/mu`` as ``mu -> inf``).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    n = sub.n
    y = sub.ys
    if solve_path == "exact_gram":
        Rn = gram_R(spec, sub.xs, sub.xs)
        A = Rn + n * lam * np.eye(n)
        if spec.has_constant:
            # KKT system for the unpenalized intercept: 1'alpha = 0
            sys = np.zeros((n + 1, n + 1))
            sys[:n, :n] = A
            sys[:n, n] = 1.0
            sys[n, :n] = 1.0
            rhs = np.concatenate([y, [0.0]])
            sol = scipy.linalg.solve(sys, rhs, assume_a="sym", check_finite=False)
            alpha, beta0 = sol[:n], float(sol[n])
        else:
            alpha, beta0 = _solve_spd(A, y), 0.0
        return MachineFit(
            lam=lam, solve_path=solve_path, intercept=beta0,
            anchors=sub.xs, alpha=alpha,
        )
    if solve_path == "truncated_feature":
        if not spec.has_eigenfunctions or spec.family == "gaussian_rkhs":
            raise ValueError(
                f"truncated_feature path unavailable for {spec.family}; use exact_gram"
            )
        psi = feature_matrix(spec, sub.xs) * np.sqrt(spec.eigenvalues)
        if spec.has_constant:
            X = np.column_stack([np.ones(n), psi])
            A = X.T @ X + n * lam * np.diag(np.r_[0.0, np.ones(spec.M)])
            sol = _solve_spd(A, X.T @ y)
            beta0, theta = float(sol[0]), sol[1:]
        else:
            A = psi.T @ psi + n * lam * np.eye(spec.M)
            beta0, theta = 0.0, _solve_spd(A, psi.T @ y)
        return MachineFit(lam=lam, solve_path=solve_path, intercept=beta0, theta=theta)
    raise ValueError(f"unknown solve_path {solve_path!r}")


def predict(spec: Spectrum, fit: MachineFit, X: NDArray[np.float64]) -> NDArray[np.float64]:
    """Evaluate a fitted machine at new points."""
    if fit.solve_path == "exact_gram":
        return fit.intercept + gram_R(spec, X, fit.anchors) @ fit.alpha
    psi = feature_matrix(spec, np.asarray(X, dtype=np.float64)) * np.sqrt(spec.eigenvalues)
    return fit.intercept + psi @ fit.theta


def smoother_trace(spec: Spectrum, sub: Subsample, lam: float) -> float:
    """Trace of the ridge smoother, ``trace(R_n (R_n + n*lam*I)^{-1})``.

    Lies in ``[0, n]``; tends to ``n`` as ``lam -> 0`` and to 0 as
    ``lam -> inf``. (The unpenalized intercept, when present, contributes an
    extra degree of freedom accounted for by the caller.)
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    n = sub.n
    Rn = gram_R(spec, sub.xs, sub.xs)
    eig = np.linalg.eigvalsh(Rn)
    eig = np.clip(eig, 0.0, None)  # guard tiny negative roundoff
    return float(np.sum(eig / (eig + n * lam)))
