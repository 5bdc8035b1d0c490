"""Geometry of the capped simplex {x >= 0 : sum(x) <= C}.

Projection, feasibility checks, random sampling and exhaustive grids over the
shared constraint set. Everything here is stateless and safe to use
concurrently.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

FEAS_TOL = 1e-9

# grid() enumerates O(resolution**dimension) points; keep it an oracle, not a solver
GRID_DIMENSION_GUARD = 5


class FeasibilityError(ValueError):
    """Raised when a point violates the capped-simplex constraints."""


@dataclass(frozen=True)
class CappedSimplex:
    """The set {x in R^dimension : x >= 0, sum(x) <= capacity}."""

    dimension: int
    capacity: float

    def __post_init__(self):
        if not isinstance(self.dimension, (int, np.integer)) or self.dimension < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dimension}")
        if not np.isfinite(self.capacity) or self.capacity <= 0:
            raise ValueError(f"capacity must be positive and finite, got {self.capacity}")

    def validate(self, x, atol: float = FEAS_TOL) -> np.ndarray:
        """Return x as a float vector, raising FeasibilityError if infeasible."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise FeasibilityError(
                f"expected a vector of length {self.dimension}, got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise FeasibilityError("allocation has non-finite entries")
        if x.min(initial=np.inf) < -atol:
            raise FeasibilityError(f"negative component {x.min()} below -{atol}")
        if x.sum() > self.capacity + atol:
            raise FeasibilityError(
                f"total {x.sum()} exceeds capacity {self.capacity} by more than {atol}"
            )
        return x

    def contains(self, x, atol: float = FEAS_TOL) -> bool:
        try:
            self.validate(x, atol)
        except FeasibilityError:
            return False
        return True

    def slack(self, x) -> float:
        return self.capacity - float(np.sum(x))

    def project(self, y) -> np.ndarray:
        """Euclidean projection of y onto the set.

        If the positive part of y already fits under the capacity, the sum
        constraint is inactive and the projection is just max(y, 0).
        Otherwise the projection lands on the face {z >= 0, sum(z) = capacity}
        and is computed by the sorted-threshold rule: z = max(y - tau, 0) with
        tau chosen so the result sums to the capacity.
        """
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dimension,):
            raise ValueError(f"expected a vector of length {self.dimension}, got shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise ValueError("cannot project a non-finite vector")
        positive = np.maximum(y, 0.0)
        if positive.sum() <= self.capacity:
            return positive
        s = np.sort(y)[::-1]
        shifted_cumsum = np.cumsum(s) - self.capacity
        counts = np.arange(1, self.dimension + 1)
        active = np.nonzero(s - shifted_cumsum / counts > 0)[0]
        rho = active[-1]
        tau = shifted_cumsum[rho] / (rho + 1)
        return np.maximum(y - tau, 0.0)

    def maximize_linear(self, w) -> tuple[np.ndarray, float]:
        """Maximize w'z over the set.

        The maximum sits at a vertex: the origin when no coefficient is
        positive, else capacity * e_i at the lowest index i attaining max(w).
        Returns (argmax, value).
        """
        w = np.asarray(w, dtype=float)
        if w.shape != (self.dimension,):
            raise ValueError(f"expected a vector of length {self.dimension}, got shape {w.shape}")
        best = int(np.argmax(w))
        x = np.zeros(self.dimension)
        if w[best] <= 0.0:
            return x, 0.0
        x[best] = self.capacity
        return x, self.capacity * float(w[best])

    def vertices(self) -> np.ndarray:
        """All nonzero vertices capacity * e_i, one per row."""
        return self.capacity * np.eye(self.dimension)

    def sample(self, count: int, seed=None) -> np.ndarray:
        """Draw `count` feasible points, one per row.

        Each point is built from dimension+1 standard exponential variates
        normalized to sum one; the first `dimension` coordinates are scaled by
        r * capacity with r uniform on [0, 1]. This covers the interior and
        the capacity face well enough for spot checks, and is deterministic
        under a fixed seed.
        """
        if count < 1:
            raise ValueError("count must be >= 1")
        rng = np.random.default_rng(seed)
        e = rng.standard_exponential((count, self.dimension + 1))
        points = e[:, : self.dimension] / e.sum(axis=1, keepdims=True)
        r = rng.uniform(0.0, 1.0, size=(count, 1))
        return points * (r * self.capacity)

    def sample_interior(self, count: int, margin: float, seed=None) -> np.ndarray:
        """Feasible points with every coordinate >= margin and slack >= margin."""
        delta = 2.0 * self.dimension * margin / self.capacity
        if delta >= 1.0:
            raise ValueError(f"margin {margin} too large for this set")
        center = np.full(self.dimension, self.capacity / (2.0 * self.dimension))
        points = self.sample(count, seed)
        return (1.0 - delta) * points + delta * center

    def grid(self, resolution: int) -> np.ndarray:
        """All lattice points k * capacity / resolution with sum(k) <= resolution.

        Guarded to dimension <= 5: the point count grows like
        resolution**dimension and this is meant as a brute-force oracle.
        """
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        if self.dimension > GRID_DIMENSION_GUARD:
            raise ValueError(
                f"grid enumeration is guarded to dimension <= {GRID_DIMENSION_GUARD}, "
                f"got {self.dimension}"
            )
        points = [
            k for k in product(range(resolution + 1), repeat=self.dimension)
            if sum(k) <= resolution
        ]
        return np.array(points, dtype=float) * (self.capacity / resolution)
