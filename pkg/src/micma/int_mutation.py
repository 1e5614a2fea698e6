"""CMA-ES with integer mutation (CMA-ES-IM) and its box-constrained variant.

Candidates whose per-coordinate standard deviation has fallen below the
variable granularity receive integer-valued kicks, and those coordinates
are excluded from the step-size path length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import cmaes
from .cmaes import CmaParams, CmaState, GenerationRecord
from .numerics import Rng
from .space import SearchSpace


def granularity(space: SearchSpace) -> np.ndarray:
    """Default granularity vector: 1 on discrete dims, 0 on continuous dims."""
    return space.discrete_mask.astype(float)


def floor_shift(space: SearchSpace) -> np.ndarray:
    """Origin of the integer grid used by the lagged-best mutation.

    Binary dims are encoded around the threshold 0.5, so their grid is
    shifted to put a cell boundary on that threshold.
    """
    shift = np.zeros(space.dim)
    shift[space.binary_idx] = [space.thresholds(j)[0] for j in space.binary_idx]
    return shift


def build_J(state: CmaState, s: np.ndarray, rng: Rng) -> np.ndarray:
    """Randomly ordered indices whose 2*sigma*sqrt(C_jj) is below the granularity.

    The RNG is left untouched when no index qualifies.
    """
    idx = np.flatnonzero(2.0 * state.sigma * np.sqrt(np.diag(state.C)) < s)
    if idx.size == 0:
        return idx
    return rng.permutation(idx)


def lambda_int(j_size: int, lam: int, n: int) -> int:
    """Number of candidates receiving an integer mutation."""
    if j_size == 0:
        return 0
    if j_size == n:
        return lam // 2
    return int(math.floor(min(lam / 10 + j_size + 1, lam // 2 - 1)))


@dataclass
class MutationDraw:
    J: np.ndarray
    lambda_int: int
    r_int: np.ndarray
    R1: np.ndarray
    R2: np.ndarray


def sample_mutations(
    state: CmaState,
    s: np.ndarray,
    J: np.ndarray,
    lam_int: int,
    lam: int,
    rng: Rng,
    prev_best: Optional[np.ndarray] = None,
    shift: Optional[np.ndarray] = None,
    per_vector_sign: bool = False,
) -> MutationDraw:
    n = state.dim
    R1 = np.zeros((lam, n))
    R2 = np.zeros((lam, n))
    r = np.zeros((lam, n))
    if lam_int == 0:
        return MutationDraw(J, 0, r, R1, R2)

    size = len(J)
    for i in range(lam_int):
        R1[i, J[i % size]] = 1.0
    R2[:lam_int, J] = rng.geometric(0.7 ** (1.0 / size), (lam_int, size))
    if per_vector_sign:
        sign = rng.signs((lam_int, 1))
    else:
        sign = rng.signs((lam_int, size))
    r[:lam_int, J] = sign * (R1[:lam_int, J] + R2[:lam_int, J])

    if prev_best is not None:
        shift = np.zeros(n) if shift is None else shift
        on = s > 0
        steps = np.floor((prev_best[on] - shift[on]) / s[on]) - np.floor((state.mean[on] - shift[on]) / s[on])
        r[lam - 1] = 0.0
        r[lam - 1, on] = (rng.signs(1) if per_vector_sign else rng.signs(int(on.sum()))) * steps
    return MutationDraw(J, lam_int, r, R1, R2)


def inject(record: GenerationRecord, draw: MutationDraw, s: np.ndarray) -> np.ndarray:
    """Mutated candidates x + s * r; the Gaussian steps y are left as drawn."""
    return record.x + s * draw.r_int


def sigma_mask(state: CmaState, params: CmaParams, s: np.ndarray) -> np.ndarray:
    """1 for coordinates kept in the step-size path length, 0 for masked ones."""
    std = state.sigma * np.sqrt(np.diag(state.C))
    return np.where(5.0 * std / math.sqrt(params.c_sigma) < s, 0.0, 1.0)


def masked_sigma_update(
    sigma: float, params: CmaParams, p_sigma_next: np.ndarray, mask: np.ndarray
) -> float:
    return cmaes.csa_sigma(sigma, params, p_sigma_next, mask)


@dataclass(frozen=True)
class BoxBounds:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        if np.any(np.asarray(self.lo) > np.asarray(self.hi)):
            raise ValueError("box bounds need lo <= hi")


def box_penalty(x: np.ndarray, bounds: BoxBounds) -> Tuple[np.ndarray, np.ndarray]:
    """Project onto the box and return (x_feas, ||x_feas - x||^2 / N) row-wise."""
    x = np.asarray(x, dtype=float)
    x_feas = np.clip(x, bounds.lo, bounds.hi)
    penalty = np.sum((x_feas - x) ** 2, axis=-1) / x.shape[-1]
    return x_feas, penalty


def default_box(space: SearchSpace) -> BoxBounds:
    """Bounds on discrete dims only, matching the benchmark conventions.

    Binary dims get a width-2 box centered on their threshold; wider
    discrete dims are boxed by their candidate range.
    """
    lo = np.full(space.dim, -np.inf)
    hi = np.full(space.dim, np.inf)
    for j in space.binary_idx:
        ell = space.thresholds(j)[0]
        lo[j], hi[j] = ell - 1.0, ell + 1.0
    for j in space.integer_idx:
        c = space.candidates(j)
        lo[j], hi[j] = c[0], c[-1]
    return BoxBounds(lo, hi)


class CMAIM:
    """Ask/tell optimizer for CMA-ES-IM, optionally with a box-constraint penalty."""

    def __init__(
        self,
        space: SearchSpace,
        mean: np.ndarray,
        rng: Rng,
        sigma: float = 1.0,
        params: Optional[CmaParams] = None,
        box: Optional[BoxBounds] = None,
        s: Optional[np.ndarray] = None,
        mutated_mean: bool = True,
        per_vector_sign: bool = False,
    ):
        self.space = space
        self.mutated_mean = mutated_mean
        self.per_vector_sign = per_vector_sign
        self.rng = rng
        self.params = params or cmaes.default_params(space.dim)
        self.state = CmaState.initial(mean, sigma)
        self.s = granularity(space) if s is None else np.asarray(s, dtype=float)
        self.box = box
        self.shift = floor_shift(space)
        self.prev_best: Optional[np.ndarray] = None
        self.last_draw: Optional[MutationDraw] = None

    name = "cmaes-im"

    @property
    def population_size(self) -> int:
        return self.params.lam

    def ask(self) -> GenerationRecord:
        rec = cmaes.sample_generation(self.state, self.params, self.rng)
        J = build_J(self.state, self.s, self.rng)
        lam_int = lambda_int(len(J), self.params.lam, self.state.dim)
        draw = sample_mutations(
            self.state, self.s, J, lam_int, self.params.lam, self.rng, self.prev_best, self.shift,
            self.per_vector_sign,
        )
        self.last_draw = draw
        rec.v = inject(rec, draw, self.s)
        if self.box is not None:
            feasible, rec.penalty = box_penalty(rec.v, self.box)
            rec.v_bar = self.space.encode(feasible)
        else:
            rec.v_bar = self.space.encode(rec.v)
        return rec

    def tell(self, record: GenerationRecord, f_values: np.ndarray) -> None:
        f = np.asarray(f_values, dtype=float)
        if record.penalty is not None:
            f = f + record.penalty
        record.ranking = cmaes.rank(f)
        mask = sigma_mask(self.state, self.params, self.s)
        self.state = cmaes.update(
            self.state, self.params, record, sigma_mask=mask,
            mean_points=record.v if self.mutated_mean else None,
        )
        self.prev_best = record.v[record.ranking[0]].copy()

    def trajectory_extra(self) -> dict:
        return {}
