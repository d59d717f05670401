"""Divide-and-conquer pipeline: partition, per-machine fits, averaging.

``partition`` shuffles the sample and deals it into ``s`` machines of equal
size ``n = floor(N/s)`` (the remainder is dropped and recorded). ``fit_all``
fits each machine independently — optionally on a thread pool; results are
folded in machine order so the estimate is bitwise independent of the
worker count — and averages them into a :class:`DncEstimate`.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from dckrr.solver import MachineFit, Subsample, krr_fit, predict
from dckrr.spectra import Spectrum, feature_matrix

__all__ = [
    "Dataset",
    "Partition",
    "DncEstimate",
    "partition",
    "subsample_for",
    "fit_all",
    "predict_bar",
    "xi_diagnostic",
]


@dataclass(frozen=True)
class Dataset:
    """A full sample of size N: design ``xs`` (N or N x d) and responses ``ys``."""

    xs: NDArray[np.float64]
    ys: NDArray[np.float64]

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=np.float64)
        ys = np.asarray(self.ys, dtype=np.float64)
        if xs.shape[0] != ys.shape[0] or ys.ndim != 1:
            raise ValueError("xs and ys must share their first dimension")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def N(self) -> int:
        return self.xs.shape[0]


@dataclass(frozen=True)
class Partition:
    """Assignment of sample indices to machines: an ``(s, n)`` index array."""

    assignment: NDArray[np.int64]
    dropped: NDArray[np.int64]

    @property
    def s(self) -> int:
        return self.assignment.shape[0]

    @property
    def n(self) -> int:
        return self.assignment.shape[1]

    @property
    def N_effective(self) -> int:
        return self.assignment.size


@dataclass(frozen=True)
class DncEstimate:
    """The averaged estimate ``f_bar = (1/s) sum_j f_hat_j``.

    ``coeffs`` holds the Mercer coefficients ``c_nu = V(f_bar, phi_nu)`` of
    the finite eigenpairs (when eigenfunctions exist) and ``c0`` the
    constant's coefficient (the averaged intercept).
    """

    spec: Spectrum
    lam: float
    fits: tuple[MachineFit, ...]
    c0: float
    coeffs: NDArray[np.float64] | None

    @property
    def s(self) -> int:
        return len(self.fits)


def partition(data: Dataset, s: int, seed: int) -> Partition:
    """Randomly deal the sample into ``s`` machines of size ``floor(N/s)``.

    Uses a counter-based generator keyed on ``seed``, so the result is a
    pure function of ``(N, s, seed)``.
    """
    if not 1 <= s <= data.N:
        raise ValueError(f"s must be in 1..{data.N}")
    n = data.N // s
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 1], dtype=np.uint64)))
    perm = rng.permutation(data.N)
    used = s * n
    return Partition(
        assignment=perm[:used].reshape(s, n).astype(np.int64),
        dropped=perm[used:].astype(np.int64),
    )


def subsample_for(data: Dataset, part: Partition, j: int) -> Subsample:
    """Materialize machine ``j``'s subsample."""
    idx = part.assignment[j]
    return Subsample(xs=data.xs[idx], ys=data.ys[idx], machine_id=j)


def fit_all(
    spec: Spectrum,
    data: Dataset,
    part: Partition,
    lam: float,
    solve_path: str = "exact_gram",
    workers: int | None = None,
) -> DncEstimate:
    """Fit every machine and average.

    ``workers`` caps the thread pool (``None`` or 1 runs serially). Fits are
    collected and folded in machine order, so the output is identical for
    any worker count.
    """
    subs = [subsample_for(data, part, j) for j in range(part.s)]
    if workers is None or workers <= 1 or part.s == 1:
        fits = [krr_fit(spec, sub, lam, solve_path) for sub in subs]
    else:
        with ThreadPoolExecutor(max_workers=min(workers, part.s)) as pool:
            fits = list(pool.map(lambda sub: krr_fit(spec, sub, lam, solve_path), subs))
    c0 = float(np.mean([f.intercept for f in fits]))
    coeffs = None
    # Gaussian fits use the closed-form kernel, so the truncated Hermite
    # expansion would misstate the coefficients; leave norms to the gram route.
    if spec.has_eigenfunctions and spec.family != "gaussian_rkhs":
        acc = np.zeros(spec.M)
        for f in fits:  # ordered fold: independent of pool scheduling
            acc += f.mercer_coeffs(spec)
        coeffs = acc / part.s
    return DncEstimate(spec=spec, lam=lam, fits=tuple(fits), c0=c0, coeffs=coeffs)


def predict_bar(est: DncEstimate, X: NDArray[np.float64]) -> NDArray[np.float64]:
    """Evaluate the averaged estimate at new points (ordered fold)."""
    X = np.asarray(X, dtype=np.float64)
    acc = predict(est.spec, est.fits[0], X).astype(np.float64)
    for f in est.fits[1:]:
        acc += predict(est.spec, f, X)
    return acc / est.s


def xi_diagnostic(
    spec: Spectrum, data: Dataset, part: Partition, lam: float
) -> NDArray[np.float64]:
    """Per-machine empirical-orthonormality defects.

    For machine ``j``, forms the matrix
    ``Delta_j[a, b] = ((1/n) sum_i phi_a(x_i) phi_b(x_i) - delta_ab)
    / sqrt((1 + lam/mu_a)(1 + lam/mu_b))`` over the truncated basis (the
    constant eigenfunction included with unit divisor, when present) and
    returns the ``s`` spectral norms ``xi_j``.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if not spec.has_eigenfunctions:
        raise ValueError(f"{spec.family} spectrum does not expose eigenfunctions")
    w = 1.0 / np.sqrt(1.0 + lam / spec.eigenvalues)
    if spec.has_constant:
        w = np.r_[1.0, w]
    out = np.empty(part.s)
    for j in range(part.s):
        xs = data.xs[part.assignment[j]]
        phi = feature_matrix(spec, xs)
        if spec.has_constant:
            phi = np.column_stack([np.ones(phi.shape[0]), phi])
        G = phi.T @ phi / phi.shape[0] - np.eye(phi.shape[1])
        G *= np.outer(w, w)
        out[j] = np.linalg.norm(G, 2)
    return out
