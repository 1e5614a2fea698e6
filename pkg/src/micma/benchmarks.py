"""Mixed-integer benchmark functions evaluated on already-encoded vectors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from .errors import ConfigError, DimensionError
from .space import SearchSpace

INT_RANGE = (-10, 10)


def _sphere(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=-1)


def ellipsoid_coefficients(n: int) -> np.ndarray:
    """1000^((j-1)/(n-1)) for j = 1..n; a single coordinate gets coefficient 1."""
    if n == 1:
        return np.ones(1)
    return 1000.0 ** (np.arange(n) / (n - 1))


def _ellipsoid(x: np.ndarray) -> np.ndarray:
    return np.sum((ellipsoid_coefficients(x.shape[-1]) * x) ** 2, axis=-1)


def _one_max(b: np.ndarray) -> np.ndarray:
    return b.shape[-1] - np.sum(b, axis=-1)


def _leading_ones(b: np.ndarray) -> np.ndarray:
    return b.shape[-1] - np.sum(np.cumprod(b, axis=-1), axis=-1)


def sphere_one_max(x: np.ndarray, n_co: int) -> np.ndarray:
    return _sphere(x[..., :n_co]) + _one_max(x[..., n_co:])


def sphere_leading_ones(x: np.ndarray, n_co: int) -> np.ndarray:
    return _sphere(x[..., :n_co]) + _leading_ones(x[..., n_co:])


def ellipsoid_one_max(x: np.ndarray, n_co: int) -> np.ndarray:
    return _ellipsoid(x[..., :n_co]) + _one_max(x[..., n_co:])


def ellipsoid_leading_ones(x: np.ndarray, n_co: int) -> np.ndarray:
    return _ellipsoid(x[..., :n_co]) + _leading_ones(x[..., n_co:])


def sphere_int(x: np.ndarray, n_co: int) -> np.ndarray:
    return _sphere(x)


def ellipsoid_int(x: np.ndarray, n_co: int) -> np.ndarray:
    return _ellipsoid(x)


# name -> (function, has binary block)
FUNCTIONS: Dict[str, Tuple[Callable[[np.ndarray, int], np.ndarray], bool]] = {
    "sphere-one-max": (sphere_one_max, True),
    "sphere-leading-ones": (sphere_leading_ones, True),
    "ellipsoid-one-max": (ellipsoid_one_max, True),
    "ellipsoid-leading-ones": (ellipsoid_leading_ones, True),
    "sphere-int": (sphere_int, False),
    "ellipsoid-int": (ellipsoid_int, False),
}


@dataclass(frozen=True)
class Benchmark:
    name: str
    n_co: int
    n_bi: int
    n_int: int
    int_range: Tuple[int, int] = INT_RANGE
    optimum_value: float = 0.0

    @property
    def dim(self) -> int:
        return self.n_co + self.n_bi + self.n_int

    @property
    def space(self) -> SearchSpace:
        return SearchSpace.mixed(self.n_co, self.n_bi, self.n_int, self.int_range)

    @property
    def optimum(self) -> np.ndarray:
        """A minimizer: zeros on continuous and integer dims, ones on binary dims."""
        x = np.zeros(self.dim)
        x[self.n_co:self.n_co + self.n_bi] = 1.0
        return x

    def __call__(self, x_bar: np.ndarray) -> np.ndarray:
        return evaluate(self, x_bar)


def make(name: str, n: int) -> Benchmark:
    """Benchmark ``name`` in dimension ``n``, split half continuous, half discrete."""
    if name not in FUNCTIONS:
        raise ConfigError(f"unknown benchmark {name!r}; choose from {sorted(FUNCTIONS)}")
    if n < 2 or n % 2:
        raise ConfigError(f"benchmark dimension must be even and >= 2, got {n}")
    half = n // 2
    if FUNCTIONS[name][1]:
        return Benchmark(name, half, half, 0)
    return Benchmark(name, half, 0, half)


def evaluate(b: Benchmark, x_bar: np.ndarray) -> np.ndarray:
    """Objective value of one encoded vector (or of each row of a 2-D array)."""
    x_bar = np.asarray(x_bar, dtype=float)
    if x_bar.shape[-1] != b.dim:
        raise DimensionError(f"expected length {b.dim}, got {x_bar.shape[-1]}")
    f = FUNCTIONS[b.name][0](x_bar, b.n_co)
    return f if f.ndim else float(f)
