"""CMA-ES with Margin.

The sampler keeps the unmodified CMA-ES distribution N(m, sigma^2 C) for
all parameter updates, but candidates are evaluated after a diagonal
affine map ``v = m + sigma * A * y``. After every update the discrete
coordinates of the mean (and of ``A`` for interior integer coordinates)
are corrected so the marginal probability of leaving the current
discretization cell never falls below the margin ``alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np

from . import cmaes
from .cmaes import CmaParams, CmaState, GenerationRecord
from .errors import DomainError, NumericalFailure
from .numerics import Rng, chi2_ppf_1dof, normal_cdf
from .space import SearchSpace


def default_alpha(n: int, lam: int) -> float:
    return 1.0 / (n * lam)


def _check_alpha(alpha: float) -> float:
    if not 0.0 <= alpha < 0.5:
        raise DomainError(f"margin parameter must lie in [0, 0.5), got {alpha}")
    return float(alpha)


@dataclass
class MarginState:
    base: CmaState
    A: np.ndarray
    alpha: float

    def __post_init__(self) -> None:
        self.alpha = _check_alpha(self.alpha)

    @classmethod
    def initial(cls, mean: np.ndarray, alpha: float, sigma: float = 1.0) -> "MarginState":
        base = CmaState.initial(mean, sigma)
        return cls(base, np.ones(base.dim), alpha)


@dataclass(frozen=True)
class MarginProbabilities:
    p_low: float
    p_up: float
    p_mid: float
    p1_low: float
    p1_up: float
    p2_low: float
    p2_up: float


def ask(state: MarginState, params: CmaParams, space: SearchSpace, rng: Rng) -> GenerationRecord:
    rec = cmaes.sample_generation(state.base, params, rng)
    base = state.base
    rec.v = base.mean + base.sigma * (state.A * rec.y)
    rec.v_bar = space.encode(rec.v)
    return rec


def marginal_ci(state: MarginState, j: int, coverage: float) -> float:
    """Half-width of the ``coverage`` interval of the j-th marginal of N(m, sigma^2 A C A)."""
    base = state.base
    return math.sqrt(chi2_ppf_1dof(coverage) * base.sigma**2 * state.A[j] ** 2 * base.C[j, j])


def toward_threshold(m_j: float, ell: float, ci: float) -> float:
    """Pull ``m_j`` to within ``ci`` of the threshold ``ell``."""
    d = m_j - ell
    return ell + math.copysign(1.0, d) * min(abs(d), ci) if d != 0.0 else m_j


def correct_toward_threshold(state: MarginState, space: SearchSpace, j: int) -> float:
    """Corrected mean coordinate for a binary or edge-integer dimension."""
    m_j = float(state.base.mean[j])
    ell = space.nearest_threshold(j, m_j)
    return toward_threshold(m_j, ell, marginal_ci(state, j, 1.0 - 2.0 * state.alpha))


def restrict_probabilities(p_low: float, p_up: float, p_mid: float, alpha: float) -> MarginProbabilities:
    """Lower-bound both tail masses by alpha/2 and renormalize against the middle mass."""
    half = alpha / 2.0
    p1_low = max(half, p_low)
    p1_up = max(half, p_up)
    denom = p1_low + p1_up + p_mid - 3.0 * half
    if denom <= 0.0:
        raise DomainError("degenerate probability restriction (non-positive denominator)")
    ratio = (1.0 - p1_low - p1_up - p_mid) / denom
    p2_low = p1_low + ratio * (p1_low - half)
    p2_up = p1_up + ratio * (p1_up - half)
    return MarginProbabilities(p_low, p_up, p_mid, p1_low, p1_up, p2_low, p2_up)


def interior_closed_form(
    ell_low: float, ell_up: float, p2_low: float, p2_up: float, scale: float
) -> Tuple[float, float]:
    """Mean and affine factor placing tail masses p2_low / p2_up beyond the thresholds.

    ``scale`` is the pre-affine marginal standard deviation sigma*sqrt(C_jj).
    """
    if p2_low > 0.5 or p2_up > 0.5 or (p2_low == 0.5 and p2_up == 0.5):
        raise NumericalFailure(f"restricted tail masses out of range: {p2_low}, {p2_up}")
    q_low = math.sqrt(chi2_ppf_1dof(1.0 - 2.0 * p2_low))
    q_up = math.sqrt(chi2_ppf_1dof(1.0 - 2.0 * p2_up))
    total = q_low + q_up
    m_j = (ell_low * q_up + ell_up * q_low) / total
    a_j = (ell_up - ell_low) / (scale * total)
    return m_j, a_j


def correct_interior_integer(
    state: MarginState, space: SearchSpace, j: int, literal_a: bool = False
) -> Tuple[float, float, MarginProbabilities]:
    """Corrected (m_j, A_j) for an integer dimension whose mean lies between two thresholds.

    ``literal_a`` drops the sigma*sqrt(C_jj) factor from the A update,
    reproducing the printed closed form; the default solves the
    condition pair exactly.
    """
    base = state.base
    m_j = float(base.mean[j])
    ell_low, ell_up = space.low_up_thresholds(j, m_j)
    scale = base.sigma * math.sqrt(base.C[j, j])
    sd = scale * state.A[j]
    p_low = normal_cdf((ell_low - m_j) / sd)
    p_up = normal_cdf((m_j - ell_up) / sd)
    probs = restrict_probabilities(p_low, p_up, 1.0 - p_low - p_up, state.alpha)
    new_m, new_a = interior_closed_form(
        ell_low, ell_up, probs.p2_low, probs.p2_up, 1.0 if literal_a else scale
    )
    return new_m, new_a, probs


def apply_margin(state: MarginState, space: SearchSpace, literal_a: bool = False) -> MarginState:
    """Correct the discrete coordinates of an already-updated state.

    Every dimension reads the same pre-correction snapshot of ``A``.
    """
    if state.alpha == 0.0:
        return state
    base = state.base
    mean = base.mean.copy()
    a_new = state.A.copy()
    chi_alpha = chi2_ppf_1dof(1.0 - 2.0 * state.alpha)
    diag_c = np.diag(base.C)
    for j in range(space.n_co, space.dim):
        m_j = float(base.mean[j])
        if space.is_interior(j, m_j):
            mean[j], a_new[j], _ = correct_interior_integer(state, space, j, literal_a)
        else:
            ci = math.sqrt(chi_alpha * base.sigma**2 * state.A[j] ** 2 * diag_c[j])
            mean[j] = toward_threshold(m_j, space.nearest_threshold(j, m_j), ci)
    if not np.all(a_new > 0) or not np.all(np.isfinite(a_new)):
        raise NumericalFailure("affine factor left the positive reals")
    return MarginState(replace(base, mean=mean), a_new, state.alpha)


def tell(
    state: MarginState,
    params: CmaParams,
    space: SearchSpace,
    record: GenerationRecord,
    f_values: np.ndarray,
    literal_a: bool = False,
) -> MarginState:
    record.ranking = cmaes.rank(f_values)
    base = cmaes.update(state.base, params, record)
    return apply_margin(MarginState(base, state.A, state.alpha), space, literal_a)


class CMAWithMargin:
    """Ask/tell optimizer for CMA-ES with Margin over a mixed search space."""

    name = "margin"

    def __init__(
        self,
        space: SearchSpace,
        mean: np.ndarray,
        rng: Rng,
        alpha: Union[float, str] = "auto",
        sigma: float = 1.0,
        params: Optional[CmaParams] = None,
        literal_a: bool = False,
    ):
        self.space = space
        self.rng = rng
        self.params = params or cmaes.default_params(space.dim)
        if alpha == "auto":
            alpha = default_alpha(space.dim, self.params.lam)
        self.margin = MarginState.initial(mean, float(alpha), sigma)
        self.literal_a = literal_a

    @property
    def state(self) -> CmaState:
        return self.margin.base

    @property
    def alpha(self) -> float:
        return self.margin.alpha

    @property
    def population_size(self) -> int:
        return self.params.lam

    def ask(self) -> GenerationRecord:
        return ask(self.margin, self.params, self.space, self.rng)

    def tell(self, record: GenerationRecord, f_values: np.ndarray) -> None:
        self.margin = tell(self.margin, self.params, self.space, record, f_values, self.literal_a)

    def trajectory_extra(self) -> dict:
        return {"A": self.margin.A.copy()}
