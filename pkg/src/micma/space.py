"""Mixed continuous/discrete search spaces and the midpoint discretization."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DimensionError, EdgeCase

CONTINUOUS = "continuous"
DISCRETE = "discrete"


@dataclass(frozen=True)
class VariableSpec:
    kind: str
    candidates: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if self.kind == CONTINUOUS:
            if self.candidates is not None:
                raise ConfigError("continuous variables take no candidates")
        elif self.kind == DISCRETE:
            if self.candidates is None or len(self.candidates) < 2:
                raise ConfigError("discrete variables need at least two candidates")
            c = tuple(float(z) for z in self.candidates)
            if any(b <= a for a, b in zip(c, c[1:])):
                raise ConfigError(f"candidates must be strictly ascending: {c}")
            object.__setattr__(self, "candidates", c)
        else:
            raise ConfigError(f"unknown variable kind {self.kind!r}")

    @classmethod
    def continuous(cls) -> "VariableSpec":
        return cls(CONTINUOUS)

    @classmethod
    def discrete(cls, candidates: Sequence[float]) -> "VariableSpec":
        return cls(DISCRETE, tuple(candidates))

    @classmethod
    def int_range(cls, lo: int, hi: int) -> "VariableSpec":
        return cls(DISCRETE, tuple(float(k) for k in range(int(lo), int(hi) + 1)))

    @property
    def is_discrete(self) -> bool:
        return self.kind == DISCRETE

    @property
    def is_binary(self) -> bool:
        return self.kind == DISCRETE and len(self.candidates) == 2

    @property
    def thresholds(self) -> Tuple[float, ...]:
        c = self.candidates or ()
        return tuple((a + b) / 2.0 for a, b in zip(c, c[1:]))


def spec_from_dict(entry: Mapping[str, Any]) -> VariableSpec:
    """Parse one per-dimension entry of a run-config space description."""
    if "int_range" in entry:
        lo, hi = entry["int_range"]
        return VariableSpec.int_range(lo, hi)
    kind = entry.get("kind")
    if kind == CONTINUOUS:
        return VariableSpec.continuous()
    if kind == DISCRETE:
        return VariableSpec.discrete(entry.get("candidates", ()))
    raise ConfigError(f"cannot parse variable spec {dict(entry)!r}")


@dataclass(frozen=True)
class SearchSpace:
    """Ordered variable specs laid out as continuous | binary | wider discrete.

    ``order`` maps internal position to the user-facing index, so callers
    may declare variables in any order.
    """

    specs: Tuple[VariableSpec, ...]
    order: Tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if len(self.specs) < 1:
            raise ConfigError("a search space needs at least one dimension")
        if not self.order:
            object.__setattr__(self, "order", tuple(range(len(self.specs))))
        rank = [0 if s.kind == CONTINUOUS else 1 if s.is_binary else 2 for s in self.specs]
        if rank != sorted(rank):
            raise ConfigError("specs must be ordered continuous, binary, then wider discrete")
        thr = [np.asarray(s.thresholds, dtype=float) for s in self.specs]
        object.__setattr__(self, "_thresholds", thr)
        cand = [np.asarray(s.candidates or (), dtype=float) for s in self.specs]
        object.__setattr__(self, "_candidates", cand)
        object.__setattr__(self, "_n_co", rank.count(0))
        object.__setattr__(self, "_n_bi", rank.count(1))
        # runs of consecutive discrete dims sharing one candidate set, encoded together
        blocks = []
        j = rank.count(0)
        while j < len(self.specs):
            k = j
            while k + 1 < len(self.specs) and self.specs[k + 1] == self.specs[j]:
                k += 1
            blocks.append((j, k + 1))
            j = k + 1
        object.__setattr__(self, "_blocks", tuple(blocks))

    @classmethod
    def from_specs(cls, specs: Sequence[VariableSpec]) -> "SearchSpace":
        """Build a space from specs in arbitrary order, recording the permutation."""
        keyed = sorted(
            range(len(specs)),
            key=lambda i: (0 if not specs[i].is_discrete else 1 if specs[i].is_binary else 2, i),
        )
        return cls(tuple(specs[i] for i in keyed), tuple(keyed))

    @classmethod
    def mixed(
        cls,
        n_co: int,
        n_bi: int = 0,
        n_int: int = 0,
        int_range: Tuple[int, int] = (-10, 10),
    ) -> "SearchSpace":
        specs = (
            [VariableSpec.continuous()] * n_co
            + [VariableSpec.discrete((0.0, 1.0))] * n_bi
            + [VariableSpec.int_range(*int_range)] * n_int
        )
        return cls(tuple(specs))

    @classmethod
    def from_config(cls, entries: Sequence[Mapping[str, Any]]) -> "SearchSpace":
        return cls.from_specs([spec_from_dict(e) for e in entries])

    @property
    def dim(self) -> int:
        return len(self.specs)

    @property
    def n_co(self) -> int:
        return self._n_co

    @property
    def n_bi(self) -> int:
        return self._n_bi

    @property
    def n_int(self) -> int:
        return self.dim - self.n_co - self.n_bi

    @property
    def continuous_idx(self) -> np.ndarray:
        return np.arange(self.n_co)

    @property
    def binary_idx(self) -> np.ndarray:
        return np.arange(self.n_co, self.n_co + self.n_bi)

    @property
    def integer_idx(self) -> np.ndarray:
        return np.arange(self.n_co + self.n_bi, self.dim)

    @property
    def discrete_mask(self) -> np.ndarray:
        return np.array([s.is_discrete for s in self.specs])

    def thresholds(self, j: int) -> np.ndarray:
        """Midpoint thresholds of dimension ``j`` (empty for continuous dims)."""
        return self._thresholds[j]

    def candidates(self, j: int) -> np.ndarray:
        return self._candidates[j]

    def _discrete(self, j: int) -> np.ndarray:
        if not 0 <= j < self.dim or not self.specs[j].is_discrete:
            raise DimensionError(f"dimension {j} is not discrete")
        return self._thresholds[j]

    def encode(self, v: np.ndarray) -> np.ndarray:
        """Map real vectors (1-D or rows of a 2-D array) to mixed vectors.

        A value equal to a threshold maps to the lower candidate.
        """
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise DimensionError(f"expected length {self.dim}, got {v.shape[-1]}")
        out = v.copy()
        for lo, hi in self._blocks:
            k = np.searchsorted(self._thresholds[lo], v[..., lo:hi], side="left")
            out[..., lo:hi] = self._candidates[lo][k]
        return out

    def to_user_order(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        out = np.empty_like(v)
        out[..., list(self.order)] = v
        return out

    def nearest_threshold(self, j: int, m_j: float) -> float:
        """Threshold closest to ``m_j``; ties go to the smaller threshold."""
        thr = self._discrete(j)
        k = bisect.bisect_left(thr.tolist(), m_j)
        if k == 0:
            return float(thr[0])
        if k == len(thr):
            return float(thr[-1])
        lo, hi = float(thr[k - 1]), float(thr[k])
        return lo if m_j - lo <= hi - m_j else hi

    def is_interior(self, j: int, m_j: float) -> bool:
        thr = self._discrete(j)
        return len(thr) >= 2 and thr[0] < m_j <= thr[-1]

    def low_up_thresholds(self, j: int, m_j: float) -> Tuple[float, float]:
        """Adjacent thresholds with ``low < m_j <= up``.

        Raises :class:`EdgeCase` when ``m_j`` is not strictly inside the
        threshold range, which is always the case for binary dims.
        """
        thr = self._discrete(j)
        if not (len(thr) >= 2 and thr[0] < m_j <= thr[-1]):
            raise EdgeCase(f"mean {m_j} of dim {j} is outside the interior range")
        k = bisect.bisect_left(thr.tolist(), m_j)
        return float(thr[k - 1]), float(thr[k])

