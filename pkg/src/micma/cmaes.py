"""Vanilla CMA-ES with weighted recombination, CSA, rank-one and rank-mu updates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DomainError, EvaluationError, NumericalFailure
from .numerics import EIGEN_CLAMP, Rng, expected_norm, sym_eig, symmetrize

_NORM_EPS = 1e-300


@dataclass(frozen=True)
class CmaParams:
    n: int
    lam: int
    mu: int
    weights: np.ndarray
    mu_w: float
    mu_w_neg: float
    c_m: float
    c_sigma: float
    c_c: float
    c1: float
    c_mu: float
    d_sigma: float

    @property
    def chi_n(self) -> float:
        return expected_norm(self.n)


def default_params(n: int, lam: Optional[int] = None) -> CmaParams:
    """Default hyperparameters for dimension ``n`` (population size may be overridden)."""
    if n < 2:
        raise DomainError(f"default parameters need N >= 2, got {n}")
    if lam is None:
        lam = 4 + int(math.floor(3 * math.log(n)))
    if lam < 4:
        raise DomainError(f"population size must be at least 4, got {lam}")
    mu = lam // 2

    w_prime = np.array([math.log((lam + 1) / 2) - math.log(i) for i in range(1, lam + 1)])
    pos, neg = w_prime[:mu], w_prime[mu:]
    mu_w = float(pos.sum() ** 2 / np.sum(pos**2))
    mu_w_neg = float(neg.sum() ** 2 / np.sum(neg**2)) if np.any(neg != 0) else 0.0

    c_sigma = (mu_w + 2) / (n + mu_w + 5)
    c_c = (4 + mu_w / n) / (n + 4 + 2 * mu_w / n)
    c1 = 2 / ((n + 1.3) ** 2 + mu_w)
    c_mu = min(1 - c1, 2 * (mu_w - 2 + 1 / mu_w) / ((n + 2) ** 2 + mu_w))
    d_sigma = 1 + c_sigma + 2 * max(0.0, math.sqrt((mu_w - 1) / (n + 1)) - 1)

    neg_scale = min(
        1 + c1 / c_mu,
        1 + 2 * mu_w_neg / (mu_w + 2),
        (1 - c1 - c_mu) / (n * c_mu),
    )
    neg_abs = np.sum(np.abs(neg))
    weights = np.empty(lam)
    weights[:mu] = pos / pos.sum()
    weights[mu:] = neg / neg_abs * neg_scale if neg_abs > 0 else 0.0

    return CmaParams(
        n=n, lam=lam, mu=mu, weights=weights, mu_w=mu_w, mu_w_neg=mu_w_neg,
        c_m=1.0, c_sigma=c_sigma, c_c=c_c, c1=c1, c_mu=c_mu, d_sigma=d_sigma,
    )


@dataclass(frozen=True)
class Eigen:
    """Shared eigendecomposition of C and the matrix roots derived from it."""

    values: np.ndarray
    vectors: np.ndarray
    sqrt_c: np.ndarray
    invsqrt_c: np.ndarray

    @classmethod
    def of(cls, c: np.ndarray) -> "Eigen":
        w, b = sym_eig(c)
        d = np.sqrt(np.maximum(w, EIGEN_CLAMP))
        return cls(w, b, symmetrize((b * d) @ b.T), symmetrize((b / d) @ b.T))

    @property
    def min_eig(self) -> float:
        return float(self.values[0])

    @property
    def condition(self) -> float:
        if self.values[0] <= 0:
            return math.inf
        return float(self.values[-1] / self.values[0])


@dataclass
class CmaState:
    mean: np.ndarray
    sigma: float
    C: np.ndarray
    p_sigma: np.ndarray
    p_c: np.ndarray
    t: int = 0
    _eigen: Optional[Eigen] = field(default=None, repr=False, compare=False)

    @classmethod
    def initial(cls, mean: np.ndarray, sigma: float = 1.0, C: Optional[np.ndarray] = None) -> "CmaState":
        mean = np.array(mean, dtype=float)
        n = len(mean)
        if sigma <= 0:
            raise DomainError("sigma must be positive")
        C = np.eye(n) if C is None else symmetrize(np.asarray(C, dtype=float))
        return cls(mean, float(sigma), C, np.zeros(n), np.zeros(n), 0)

    @property
    def dim(self) -> int:
        return len(self.mean)

    @property
    def eigen(self) -> Eigen:
        if self._eigen is None:
            self._eigen = Eigen.of(self.C)
        return self._eigen

    @property
    def coordinate_std(self) -> np.ndarray:
        return self.sigma * np.sqrt(np.diag(self.C))


@dataclass
class GenerationRecord:
    """One generation: raw draws, the candidates built from them, and update by-products."""

    xi: np.ndarray
    y: np.ndarray
    x: np.ndarray
    ranking: Optional[np.ndarray] = None
    h_sigma: Optional[int] = None
    w_circ: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    v_bar: Optional[np.ndarray] = None
    penalty: Optional[np.ndarray] = None


def sample_generation(state: CmaState, params: CmaParams, rng: Rng) -> GenerationRecord:
    xi = rng.standard_normal((params.lam, state.dim))
    y = xi @ state.eigen.sqrt_c.T
    x = state.mean + state.sigma * y
    return GenerationRecord(xi=xi, y=y, x=x)


def rank(f_values: np.ndarray) -> np.ndarray:
    """Indices sorting ``f_values`` ascending; ties keep sample order."""
    f = np.asarray(f_values, dtype=float)
    if np.any(np.isnan(f)):
        raise EvaluationError("objective returned NaN")
    return np.argsort(f, kind="stable")


def csa_sigma(
    sigma: float, params: CmaParams, p_sigma: np.ndarray, mask: Optional[np.ndarray] = None
) -> float:
    """Cumulative step-size adaptation, optionally over unmasked coordinates only.

    With every coordinate masked out the step-size is returned unchanged.
    """
    if mask is None:
        norm, chi = np.linalg.norm(p_sigma), params.chi_n
    else:
        m_count = int(np.count_nonzero(mask))
        if m_count == 0:
            return sigma
        norm, chi = np.linalg.norm(p_sigma * mask), expected_norm(m_count)
    return sigma * math.exp((params.c_sigma / params.d_sigma) * (norm / chi - 1.0))


def update(
    state: CmaState,
    params: CmaParams,
    record: GenerationRecord,
    sigma_mask: Optional[np.ndarray] = None,
    mean_points: Optional[np.ndarray] = None,
) -> CmaState:
    """Advance the distribution by one generation from a ranked record.

    Order: mean, p_sigma, h_sigma, p_c, C, sigma. ``sigma_mask`` switches
    the step-size rule to the masked variant used by integer mutation.
    ``mean_points`` replaces ``record.x`` in the mean shift only (the
    mutated candidates of integer mutation); paths and C always use y.
    """
    if record.ranking is None:
        raise ValueError("record must be ranked before the update")
    n, mu = state.dim, params.mu
    w = params.weights
    eig = state.eigen
    y_sorted = record.y[record.ranking]
    points = record.x if mean_points is None else mean_points
    x_sorted = points[record.ranking]

    mean = state.mean + params.c_m * (w[:mu] @ (x_sorted[:mu] - state.mean))

    y_w = w[:mu] @ y_sorted[:mu]
    c_s = params.c_sigma
    p_sigma = (1 - c_s) * state.p_sigma + math.sqrt(c_s * (2 - c_s) * params.mu_w) * (eig.invsqrt_c @ y_w)

    threshold = math.sqrt(1 - (1 - c_s) ** (2 * (state.t + 1))) * (1.4 + 2 / (n + 1)) * params.chi_n
    h_sigma = 1 if np.linalg.norm(p_sigma) < threshold else 0

    c_c = params.c_c
    p_c = (1 - c_c) * state.p_c + h_sigma * math.sqrt(c_c * (2 - c_c) * params.mu_w) * y_w

    z_sq = np.sum((y_sorted @ eig.invsqrt_c) ** 2, axis=1)
    if np.any(z_sq[w < 0] < _NORM_EPS):
        raise NumericalFailure("zero Mahalanobis norm in negative-weight rescaling")
    w_circ = np.where(w >= 0, w, w * n / np.maximum(z_sq, _NORM_EPS))

    coef = 1 - params.c1 - params.c_mu * np.sum(w) + (1 - h_sigma) * params.c1 * c_c * (2 - c_c)
    C = (
        coef * state.C
        + params.c1 * np.outer(p_c, p_c)
        + params.c_mu * (y_sorted.T * w_circ) @ y_sorted
    )
    C = symmetrize(C)

    sigma = csa_sigma(state.sigma, params, p_sigma, sigma_mask)

    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(C)) and math.isfinite(sigma) and sigma > 0):
        raise NumericalFailure("non-finite state after update")

    record.h_sigma = h_sigma
    record.w_circ = w_circ
    return CmaState(mean, sigma, C, p_sigma, p_c, state.t + 1)


class CMA:
    """Plain CMA-ES over a search space, evaluating encoded candidates.

    ``ask`` returns a record whose ``v_bar`` rows are the mixed vectors
    to evaluate; ``tell`` takes their objective values in the same order.
    """

    name = "cmaes"

    def __init__(self, space, mean: np.ndarray, rng: Rng, sigma: float = 1.0,
                 params: Optional[CmaParams] = None):
        self.space = space
        self.rng = rng
        self.params = params or default_params(space.dim)
        self.state = CmaState.initial(mean, sigma)

    @property
    def population_size(self) -> int:
        return self.params.lam

    def ask(self) -> GenerationRecord:
        rec = sample_generation(self.state, self.params, self.rng)
        rec.v = rec.x
        rec.v_bar = self.space.encode(rec.x)
        return rec

    def tell(self, record: GenerationRecord, f_values: np.ndarray) -> None:
        record.ranking = rank(f_values)
        self.state = update(self.state, self.params, record)

    def trajectory_extra(self) -> dict:
        return {}


def with_state(state: CmaState, **changes) -> CmaState:
    """Copy of ``state`` with fields replaced and the eigen cache dropped."""
    return replace(state, _eigen=None, **changes)
