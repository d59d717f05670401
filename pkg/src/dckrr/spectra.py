"""Mercer spectra for the supported kernel families.

A :class:`Spectrum` bundles the eigenvalue sequence (truncated at level M)
of a kernel together with evaluators for the eigenfunctions and the two
kernels built from them:

* ``R`` — the reproducing kernel, ``R(x, y) = sum_nu mu_nu phi_nu(x) phi_nu(y)``;
* ``K`` — the inference kernel, ``K(x, y) = sum_nu phi_nu(x) phi_nu(y) / (1 + lam/mu_nu)``.

Families that contain a constant eigenfunction with infinite eigenvalue
(periodic Sobolev and its additive extension) carry ``has_constant=True``;
the constant is handled symbolically: it never appears in the stored
eigenvalue array, contributes exactly 1 to ``K`` and to each spectral sum,
and is fitted as an unpenalized intercept downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "Spectrum",
    "SpectralSums",
    "TruncationError",
    "periodic_sobolev",
    "additive",
    "gaussian_rkhs",
    "thin_plate",
    "explicit_spectrum",
    "truncation_level",
    "eval_eigenfunction",
    "feature_matrix",
    "eval_kernel_R",
    "eval_kernel_K",
    "gram_R",
    "spectral_sums",
    "check_tail_sum",
    "check_prop31_ratio",
]

M_DEFAULT = 64
M_CAP = 16384
TAIL_RTOL = 1e-4

GOLDEN_DECAY = (math.sqrt(5.0) - 1.0) / 2.0


class TruncationError(ValueError):
    """Raised when a truncation level cannot represent the kernel accurately."""


@dataclass(frozen=True)
class Spectrum:
    """A truncated Mercer spectrum.

    Attributes
    ----------
    family:
        One of ``periodic_sobolev``, ``additive``, ``gaussian_rkhs``,
        ``thin_plate``.
    m:
        Smoothness order (unused for ``gaussian_rkhs``).
    d:
        Input dimension.
    scale:
        Bandwidth parameter of the Gaussian kernel (ignored elsewhere).
    eigenvalues:
        Finite eigenvalues ``mu_1 >= mu_2 >= ... > 0`` (the symbolic
        constant, when present, is *not* stored here).
    has_constant:
        Whether the family contains the constant eigenfunction.
    has_eigenfunctions:
        Whether eigenfunction evaluation is available.
    """

    family: str
    m: int
    d: int
    scale: float
    eigenvalues: NDArray[np.float64]
    has_constant: bool
    has_eigenfunctions: bool

    @property
    def M(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def mu1(self) -> float:
        """Leading finite eigenvalue; the natural scale for lambda."""
        return float(self.eigenvalues[0])

    def __eq__(self, other: object) -> bool:  # dataclass default chokes on arrays
        if not isinstance(other, Spectrum):
            return NotImplemented
        return (
            (self.family, self.m, self.d, self.scale, self.has_constant)
            == (other.family, other.m, other.d, other.scale, other.has_constant)
            and self.eigenvalues.shape == other.eigenvalues.shape
            and bool(np.all(self.eigenvalues == other.eigenvalues))
        )


@dataclass(frozen=True)
class SpectralSums:
    """Effective-dimension sums at a given regularization level.

    ``h_inv = sum_nu 1/(1 + lam/mu_nu)`` and
    ``h_inv2 = sum_nu 1/(1 + lam/mu_nu)^2``, each including a ``+1`` for the
    constant eigenfunction when the family has one.
    """

    lam: float
    h_inv: float
    h_inv2: float


def _pair_eigenvalues(m: int, n_pairs: int) -> NDArray[np.float64]:
    """Eigenvalues (2*pi*k)^(-2m), each repeated for the sin/cos pair."""
    k = np.arange(1, n_pairs + 1, dtype=np.float64)
    return np.repeat((2.0 * np.pi * k) ** (-2 * m), 2)


def truncation_level(m: int, lam: float, mu1: float, d: int = 1) -> int:
    """Truncation level for a spline-family fit at regularization ``lam``.

    Starts from ``M = max(64, ceil(10 * (lam/mu1)^(-1/(2m))))`` — stated on
    the dimensionless ratio ``lam/mu1`` so the rule is invariant to the
    eigenvalue normalization — rounded up to complete sin/cos pairs per
    component, then grows M until the tail of ``h_inv`` beyond M is below a
    1e-4 relative tolerance (the convergence requirement enforced by
    :func:`spectral_sums`).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    t = lam / mu1
    pairs = max(M_DEFAULT // (2 * d), math.ceil(10.0 * t ** (-1.0 / (2 * m))))
    while True:
        M = 2 * pairs * d
        if M > M_CAP:
            raise TruncationError(
                f"required truncation level exceeds cap {M_CAP} at lam={lam:g}"
            )
        # same bounds spectral_sums uses: integral tail vs the retained sum
        k = np.arange(1, pairs + 1, dtype=np.float64)
        h_inv = 1.0 + 2.0 * d * float(np.sum(1.0 / (1.0 + t * k ** (2 * m))))
        tail = 2.0 * d * mu1 * pairs ** (1 - 2 * m) / (2 * m - 1)
        if tail / lam <= TAIL_RTOL * h_inv:
            return M
        pairs *= 2


def periodic_sobolev(m: int, M: int = M_DEFAULT) -> Spectrum:
    """Periodic Sobolev spectrum of order ``m`` on [0, 1].

    Finite eigenpairs: ``mu_{2k-1} = mu_{2k} = (2*pi*k)^(-2m)`` with
    eigenfunctions ``sqrt(2) sin(2*pi*k*x)`` and ``sqrt(2) cos(2*pi*k*x)``;
    the constant eigenfunction (index 0) is symbolic.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    if M < 2 or M % 2:
        raise ValueError("M must be a positive even number of eigenfunctions")
    if M > M_CAP:
        raise TruncationError(f"M={M} exceeds cap {M_CAP}")
    return Spectrum(
        family="periodic_sobolev",
        m=m,
        d=1,
        scale=0.0,
        eigenvalues=_pair_eigenvalues(m, M // 2),
        has_constant=True,
        has_eigenfunctions=True,
    )


def additive(m: int, d: int, M: int | None = None) -> Spectrum:
    """Additive periodic Sobolev spectrum on [0, 1]^d.

    Finite indices interleave components fastest: index ``nu = p*d + k``
    refers to the ``p``-th nonconstant eigenfunction of component
    ``k in {1..d}``. A single global constant is symbolic. ``M`` counts the
    finite eigenfunctions and must be a multiple of ``2*d`` so every
    component gets complete sin/cos pairs.
    """
    if d < 1:
        raise ValueError("d must be a positive integer")
    if M is None:
        M = max(M_DEFAULT, 2 * d) if (max(M_DEFAULT, 2 * d) % (2 * d) == 0) else (
            ((max(M_DEFAULT, 2 * d) // (2 * d)) + 1) * 2 * d
        )
    if M % (2 * d):
        raise ValueError("M must be a multiple of 2*d")
    if M > M_CAP:
        raise TruncationError(f"M={M} exceeds cap {M_CAP}")
    per_comp = M // d
    mu_comp = _pair_eigenvalues(m, per_comp // 2)  # mu(p) for p = 1..per_comp
    # interleave: index j = (p-1)*d + k  ->  mu(p)
    eigenvalues = np.repeat(mu_comp, d)
    return Spectrum(
        family="additive",
        m=m,
        d=d,
        scale=0.0,
        eigenvalues=eigenvalues,
        has_constant=True,
        has_eigenfunctions=True,
    )


def gaussian_rkhs(d: int = 1, scale: float = 1.0, M: int = M_DEFAULT) -> Spectrum:
    """Gaussian RKHS spectrum with kernel ``exp(-scale * |x - y|^2)``.

    Eigenvalues decay geometrically, ``mu_nu = q^(2*nu + 1)`` with
    ``q = (sqrt(5) - 1)/2``. Eigenfunctions (Hermite recurrence) are exposed
    for d=1 diagnostics only; fitting always uses the closed-form kernel.
    """
    if d < 1:
        raise ValueError("d must be a positive integer")
    if scale <= 0:
        raise ValueError("scale must be positive")
    nu = np.arange(1, M + 1, dtype=np.float64)
    return Spectrum(
        family="gaussian_rkhs",
        m=0,
        d=d,
        scale=scale,
        eigenvalues=GOLDEN_DECAY ** (2 * nu + 1),
        has_constant=False,
        has_eigenfunctions=(d == 1),
    )


def thin_plate(m: int, d: int, M: int = M_DEFAULT) -> Spectrum:
    """Thin-plate spectrum, eigenvalues only: ``mu_nu = nu^(-2m/d)``.

    No eigenfunctions and no kernel evaluation are available; the spectrum
    supports spectral sums and rate prescriptions only.
    """
    if 2 * m <= d:
        raise ValueError("thin-plate spectra require 2m > d")
    nu = np.arange(1, M + 1, dtype=np.float64)
    return Spectrum(
        family="thin_plate",
        m=m,
        d=d,
        scale=0.0,
        eigenvalues=nu ** (-2.0 * m / d),
        has_constant=False,
        has_eigenfunctions=False,
    )


def explicit_spectrum(eigenvalues) -> Spectrum:
    """A spectrum given directly by its eigenvalue sequence.

    Supports the spectral sums and regularity checks only (no
    eigenfunctions, no kernels); useful for diagnostics and calibration
    against hand-computable sequences.
    """
    mu = np.asarray(eigenvalues, dtype=np.float64)
    if mu.ndim != 1 or mu.size == 0:
        raise ValueError("eigenvalues must be a nonempty 1-d sequence")
    if np.any(mu <= 0) or np.any(np.diff(mu) > 0):
        raise ValueError("eigenvalues must be positive and nonincreasing")
    return Spectrum(
        family="explicit", m=0, d=1, scale=0.0,
        eigenvalues=mu, has_constant=False, has_eigenfunctions=False,
    )


def _require_eigenfunctions(spec: Spectrum) -> None:
    if not spec.has_eigenfunctions:
        raise ValueError(f"{spec.family} spectrum does not expose eigenfunctions")


def _periodic_phi(p: NDArray[np.int64], x: NDArray[np.float64]) -> NDArray[np.float64]:
    """phi_p(x) for the 1-d periodic family, p >= 1, vectorized over both."""
    k = (p + 1) // 2
    ang = 2.0 * np.pi * np.multiply.outer(x, k)
    out = np.where(p % 2 == 1, np.sin(ang), np.cos(ang))
    return math.sqrt(2.0) * out


def _hermite_phi(nu: int, x: NDArray[np.float64], scale: float) -> NDArray[np.float64]:
    """Gaussian-kernel eigenfunctions on R via the Hermite recurrence (d=1).

    ``phi_nu(x) = (a/pi)^(1/4) / sqrt(2^(nu-1) (nu-1)!) * H_{nu-1}(sqrt(2a) x)
    * exp(-a x^2)`` with the recurrence ``H_j = 2 t H_{j-1} - 2 (j-1) H_{j-2}``,
    folded incrementally to keep the products finite.
    """
    a = scale  # curvature of the Gaussian envelope, tied to the bandwidth
    t = np.sqrt(2.0 * a) * x
    env = (a / np.pi) ** 0.25 * np.exp(-a * x * x)
    # psi_j = H_j(t) / sqrt(2^j j!) * env, via psi_j = t*sqrt(2/j)*psi_{j-1}
    #                                              - sqrt((j-1)/j)*psi_{j-2}
    psi_prev = np.zeros_like(t)
    psi = env.copy()
    for j in range(1, nu):
        psi, psi_prev = t * math.sqrt(2.0 / j) * psi - math.sqrt((j - 1) / j) * psi_prev, psi
    return psi


def eval_eigenfunction(spec: Spectrum, nu: int, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Evaluate eigenfunction ``phi_nu`` at points ``x``.

    Index conventions: ``nu = 0`` is the constant (families with one);
    periodic Sobolev uses ``nu = 2k-1`` (sin) / ``2k`` (cos); the additive
    family uses ``nu = p*d + k`` for the ``p``-th eigenfunction of component
    ``k`` (so valid finite indices are ``d+1 .. d+M``).
    """
    _require_eigenfunctions(spec)
    x = np.asarray(x, dtype=np.float64)
    if nu == 0:
        if not spec.has_constant:
            raise ValueError(f"{spec.family} spectrum has no constant eigenfunction")
        shape = x.shape[:-1] if (spec.d > 1 and x.ndim > 1) else x.shape
        return np.ones(shape, dtype=np.float64)
    if spec.family == "periodic_sobolev":
        if not 1 <= nu <= spec.M:
            raise ValueError(f"nu must be in 0..{spec.M}")
        return _periodic_phi(np.array([nu]), x.reshape(-1))[:, 0].reshape(x.shape)
    if spec.family == "additive":
        lo, hi = spec.d + 1, spec.d + spec.M
        if not lo <= nu <= hi:
            raise ValueError(f"nu must be 0 or in {lo}..{hi}")
        k = nu % spec.d or spec.d
        p = (nu - k) // spec.d
        pts = np.atleast_2d(x)
        vals = _periodic_phi(np.array([p]), pts[:, k - 1])[:, 0]
        return vals.reshape(x.shape[:-1]) if x.ndim > 1 else vals
    if spec.family == "gaussian_rkhs":
        if not 1 <= nu <= spec.M:
            raise ValueError(f"nu must be in 1..{spec.M}")
        return _hermite_phi(nu, x, spec.scale)
    raise AssertionError("unreachable")


def feature_matrix(spec: Spectrum, X: NDArray[np.float64]) -> NDArray[np.float64]:
    """All finite eigenfunctions at once: an ``(n, M)`` matrix.

    Column ``j`` (0-based) holds the eigenfunction with eigenvalue
    ``spec.eigenvalues[j]`` evaluated at the rows of ``X``. The constant is
    not included.
    """
    _require_eigenfunctions(spec)
    X = np.asarray(X, dtype=np.float64)
    if spec.family == "periodic_sobolev":
        x = X.reshape(-1) if X.ndim == 1 else X[:, 0]
        return _periodic_phi(np.arange(1, spec.M + 1), x)
    if spec.family == "additive":
        pts = _as_points(X, spec.d)
        per_comp = spec.M // spec.d
        out = np.empty((pts.shape[0], spec.M))
        for k in range(spec.d):
            out[:, k :: spec.d] = _periodic_phi(np.arange(1, per_comp + 1), pts[:, k])
        return out
    if spec.family == "gaussian_rkhs":
        x = X.reshape(-1)
        return np.column_stack([_hermite_phi(nu, x, spec.scale) for nu in range(1, spec.M + 1)])
    raise AssertionError("unreachable")


def _as_points(X, d: int) -> NDArray[np.float64]:
    """Coerce input to an (n, d) point array; 1-d input means n points when
    d == 1 and a single point otherwise."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        return X.reshape(-1, 1) if d == 1 else X.reshape(1, -1)
    return X


def gram_R(spec: Spectrum, X: NDArray[np.float64], Y: NDArray[np.float64]) -> NDArray[np.float64]:
    """Cross-gram matrix of the reproducing kernel ``R``."""
    if spec.family == "gaussian_rkhs":
        Xa = _as_points(X, spec.d)
        Ya = _as_points(Y, spec.d)
        sq = ((Xa[:, None, :] - Ya[None, :, :]) ** 2).sum(axis=-1)
        return np.exp(-spec.scale * sq)
    if spec.family == "thin_plate":
        raise ValueError("thin_plate spectrum has no kernel evaluator")
    Fx = feature_matrix(spec, np.asarray(X, dtype=np.float64))
    Fy = feature_matrix(spec, np.asarray(Y, dtype=np.float64))
    return (Fx * spec.eigenvalues) @ Fy.T


def eval_kernel_R(spec: Spectrum, x: NDArray[np.float64], y: NDArray[np.float64]) -> float:
    """Reproducing kernel ``R(x, y)`` at a single pair of points."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    y = np.asarray(y, dtype=np.float64).reshape(1, -1)
    return float(gram_R(spec, x, y)[0, 0])


def eval_kernel_K(spec: Spectrum, lam: float, x: NDArray[np.float64], y: NDArray[np.float64]) -> float:
    """Inference kernel ``K(x, y) = sum phi(x) phi(y) / (1 + lam/mu)``.

    The constant eigenfunction contributes exactly 1 when present (its
    ``lam/mu`` term vanishes).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if spec.family == "thin_plate":
        raise ValueError("thin_plate spectrum has no kernel evaluator")
    _require_eigenfunctions(spec)
    fx = feature_matrix(spec, np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
    fy = feature_matrix(spec, np.asarray(y, dtype=np.float64).reshape(1, -1))[0]
    w = 1.0 / (1.0 + lam / spec.eigenvalues)
    val = float(np.sum(fx * fy * w))
    return val + (1.0 if spec.has_constant else 0.0)


def _tail_mass(spec: Spectrum) -> float:
    """Analytic bound on ``sum_{nu > M} mu_nu`` beyond the truncation."""
    if spec.family in ("periodic_sobolev", "additive"):
        m, d = spec.m, spec.d
        k_max = spec.M // (2 * d)  # complete pairs per component
        # 2 functions per frequency, d components, integral tail bound
        return 2.0 * d * (2.0 * np.pi) ** (-2 * m) * k_max ** (1 - 2 * m) / (2 * m - 1)
    if spec.family == "gaussian_rkhs":
        q2 = GOLDEN_DECAY**2
        return float(spec.eigenvalues[-1] * q2 / (1.0 - q2))
    if spec.family == "thin_plate":
        a = 2.0 * spec.m / spec.d
        return spec.M ** (1.0 - a) / (a - 1.0)
    if spec.family == "explicit":
        return 0.0
    raise AssertionError("unreachable")


def spectral_sums(spec: Spectrum, lam: float) -> SpectralSums:
    """Effective-dimension sums ``h_inv`` and ``h_inv2`` at level ``lam``.

    Raises :class:`TruncationError` when the truncated tail could move
    ``h_inv`` by more than a 1e-4 relative amount.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    w = 1.0 / (1.0 + lam / spec.eigenvalues)
    const = 1.0 if spec.has_constant else 0.0
    h_inv = const + float(np.sum(w))
    h_inv2 = const + float(np.sum(w * w))
    # Each dropped term contributes at most mu_nu/lam to h_inv. Thin-plate
    # spectra are exempt: with polynomial nu^(-2m/d) decay the tolerance is
    # unreachable under the M cap, and the family is spectrum-only by
    # construction — its sums are declared M-term partial sums.
    if spec.family != "thin_plate" and _tail_mass(spec) / lam > TAIL_RTOL * h_inv:
        raise TruncationError(
            f"truncation M={spec.M} too coarse for lam={lam:g}: "
            "tail of h_inv exceeds 1e-4 relative mass"
        )
    return SpectralSums(lam=lam, h_inv=h_inv, h_inv2=h_inv2)


def check_tail_sum(spec: Spectrum) -> float:
    """``max_{k < M} sum_{nu=k+1..M} mu_nu / (k * mu_k)`` — the trace-class
    regularity ratio. Returns 0.0 for M = 1."""
    mu = spec.eigenvalues
    if mu.shape[0] <= 1:
        return 0.0
    tails = np.cumsum(mu[::-1])[::-1]  # tails[k] = sum_{nu >= k+1} of mu (0-based)
    k = np.arange(1, mu.shape[0], dtype=np.float64)
    return float(np.max(tails[1:] / (k * mu[:-1])))


def check_prop31_ratio(spec: Spectrum, lam_grid) -> NDArray[np.float64]:
    """``h_inv2 / h_inv`` across a lambda grid (each ratio lies in (0, 1])."""
    return np.array([
        (lambda s: s.h_inv2 / s.h_inv)(spectral_sums(spec, lam)) for lam in lam_grid
    ])
