"""Scalar and matrix primitives: eigendecomposition, Gaussian quantiles, RNG."""

from __future__ import annotations

import math
from typing import Optional, Tuple, Union

import numpy as np

from .errors import DomainError, InvalidMatrix, NumericalFailure

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# floor applied to eigenvalues before taking (inverse) square roots
EIGEN_CLAMP = 1e-30


def _check_symmetric(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise InvalidMatrix(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidMatrix("matrix has non-finite entries")
    return m


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Return (M + M^T) / 2, which is exactly symmetric in floating point."""
    return (m + m.T) / 2.0


def jacobi_eig(
    m: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100
) -> Tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps over all off-diagonal pairs, annihilating each with a plane
    rotation, until the off-diagonal Frobenius mass drops below
    ``tol * ||M||_F``. Returns ascending eigenvalues and the matching
    orthonormal eigenvectors as columns.
    """
    a = symmetrize(_check_symmetric(m)).copy()
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0.0 or n == 1:
        return np.diag(a).copy(), v

    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise NumericalFailure(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    w = np.diag(a)
    order = np.argsort(w, kind="stable")
    return w[order].copy(), v[:, order].copy()


def sym_eig(m: np.ndarray, method: str = "lapack") -> Tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    ``method="lapack"`` uses ``numpy.linalg.eigh``; ``method="jacobi"``
    uses the dependency-free :func:`jacobi_eig`.
    """
    if method == "jacobi":
        return jacobi_eig(m)
    if method != "lapack":
        raise ValueError(f"unknown eigen method {method!r}")
    m = _check_symmetric(m)
    try:
        w, v = np.linalg.eigh(symmetrize(m))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalFailure(str(exc)) from exc
    return w, v


def sqrt_sym(m: np.ndarray, eigen_floor: float = 0.0) -> np.ndarray:
    """Symmetric square root V diag(sqrt(max(lambda, floor))) V^T."""
    w, v = sym_eig(m)
    d = np.sqrt(np.maximum(np.maximum(w, eigen_floor), 0.0))
    return symmetrize((v * d) @ v.T)


def normal_cdf(x: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-x / _SQRT2)


# rational approximation of the normal quantile (P. J. Acklam)
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(q: float) -> float:
    if q < _P_LOW:
        r = math.sqrt(-2.0 * math.log(q))
        return (((((_C[0] * r + _C[1]) * r + _C[2]) * r + _C[3]) * r + _C[4]) * r + _C[5]) / (
            (((_D[0] * r + _D[1]) * r + _D[2]) * r + _D[3]) * r + 1.0
        )
    r = q - 0.5
    s = r * r
    return (((((_A[0] * s + _A[1]) * s + _A[2]) * s + _A[3]) * s + _A[4]) * s + _A[5]) * r / (
        ((((_B[0] * s + _B[1]) * s + _B[2]) * s + _B[3]) * s + _B[4]) * s + 1.0
    )


def normal_ppf(q: float) -> float:
    """Inverse of :func:`normal_cdf` on the open interval (0, 1)."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"normal_ppf needs 0 < q < 1, got {q}")
    if q > 0.5:
        # 1 - q is exact here, and the lower tail is where the refinement is accurate
        return -normal_ppf(1.0 - q)
    x = _acklam(q)
    # one Halley step on the CDF
    e = normal_cdf(x) - q
    u = e * _SQRT2PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def chi2_ppf_1dof(q: float) -> float:
    """Quantile of the chi-squared distribution with one degree of freedom."""
    if not 0.0 <= q < 1.0:
        raise DomainError(f"chi2_ppf_1dof needs 0 <= q < 1, got {q}")
    if q == 0.0:
        return 0.0
    t = normal_ppf(0.5 * (1.0 - q))
    return t * t


def expected_norm(n: int) -> float:
    """Approximation of E||N(0, I_n)||."""
    if n < 1:
        raise DomainError(f"dimension must be positive, got {n}")
    return math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))


class Rng:
    """Seeded random source backed by numpy's PCG64 bit generator.

    A given seed replays the exact same sequence of draws. Instances are
    not meant to be shared between threads.
    """

    def __init__(self, seed: int = 0):
        if seed < 0 or seed >= 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def standard_normal(self, shape: Union[int, Tuple[int, ...]]) -> np.ndarray:
        return self._gen.standard_normal(shape)

    def uniform(self, low: float, high: float, size: Optional[int] = None) -> np.ndarray:
        return self._gen.uniform(low, high, size)

    def geometric(self, p: float, size: Optional[int] = None):
        """Failures before the first success, support {0, 1, 2, ...}."""
        if not 0.0 < p <= 1.0:
            raise DomainError(f"geometric parameter must lie in (0, 1], got {p}")
        return self._gen.geometric(p, size) - 1

    def signs(self, size: int) -> np.ndarray:
        """Independent +1/-1 values, each with probability 1/2."""
        return np.where(self._gen.random(size) < 0.5, -1.0, 1.0)

    def permutation(self, items: np.ndarray) -> np.ndarray:
        return self._gen.permutation(items)


def draw_standard_normal(rng: Rng, n: int) -> np.ndarray:
    if n < 1:
        raise DomainError("n must be positive")
    return rng.standard_normal(n)


def draw_geometric(rng: Rng, p: float) -> int:
    return int(rng.geometric(p))
