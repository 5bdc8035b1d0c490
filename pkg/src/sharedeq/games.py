"""Games on the capped simplex: utility families with analytic gradients.

A game is a capacity together with one utility function per player. Utility
functions evaluate on the full allocation vector and expose an analytic
gradient; the own-partial of player i is what drives the equilibrium
conditions. Everything is immutable after construction.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .simplex import FEAS_TOL, CappedSimplex


class EvaluationError(RuntimeError):
    """A utility evaluator or gradient oracle failed."""


class ScalarFn(NamedTuple):
    """A scalar function t -> f(t) with its derivative."""

    f: Callable[[float], float]
    df: Callable[[float], float]


def affine(a: float, b: float) -> ScalarFn:
    """t -> a + b*t."""
    return ScalarFn(lambda t: a + b * t, lambda t: b)


def quadratic(a: float, b: float) -> ScalarFn:
    """t -> a*t - b*t**2, the workhorse concave utility."""
    return ScalarFn(lambda t: a * t - b * t * t, lambda t: a - 2.0 * b * t)


def log1p_scaled(a: float) -> ScalarFn:
    """t -> a*log(1+t)."""
    return ScalarFn(lambda t: a * np.log1p(t), lambda t: a / (1.0 + t))


class UtilityFunction(ABC):
    """A player's utility: a map from allocations to reals with a gradient.

    `player` is the 0-based index of the coordinate the player controls and
    `n` the number of players; both are fixed at construction.
    """

    player: int
    n: int

    def __init__(self, player: int, n: int):
        if not 0 <= player < n:
            raise ValueError(f"player index {player} out of range for n={n}")
        self.player = player
        self.n = n

    @abstractmethod
    def value(self, x: np.ndarray) -> float:
        ...

    @abstractmethod
    def grad(self, x: np.ndarray) -> np.ndarray:
        ...

    def own_grad(self, x: np.ndarray) -> float:
        """Partial derivative with respect to the player's own coordinate."""
        return float(self.grad(x)[self.player])


class Linear(UtilityFunction):
    """x -> d'x. The own coefficient d[player] is the marginal utility."""

    def __init__(self, player: int, d):
        d = np.asarray(d, dtype=float)
        super().__init__(player, d.shape[0])
        if d.ndim != 1 or not np.all(np.isfinite(d)):
            raise ValueError("coefficient vector must be a finite 1-d array")
        self.d = d

    def value(self, x):
        return float(self.d @ x)

    def grad(self, x):
        return self.d.copy()

    def own_grad(self, x):
        return float(self.d[self.player])


class PerfectlyCompetitive(UtilityFunction):
    """x -> u(x_i): utility depends on the own allocation only."""

    def __init__(self, player: int, n: int, u: ScalarFn):
        super().__init__(player, n)
        self.u = u

    def value(self, x):
        return float(self.u.f(x[self.player]))

    def grad(self, x):
        g = np.zeros(self.n)
        g[self.player] = self.u.df(x[self.player])
        return g

    def own_grad(self, x):
        return float(self.u.df(x[self.player]))


class QuasiLinear(UtilityFunction):
    """x -> u(x_i) - sum_{j != i} offdiag[j] * x_j.

    offdiag must have a zero entry at the player's own index; the cross terms
    are subtracted, so positive coefficients model disutility from others'
    consumption.
    """

    def __init__(self, player: int, u: ScalarFn, offdiag):
        offdiag = np.asarray(offdiag, dtype=float)
        super().__init__(player, offdiag.shape[0])
        if offdiag[player] != 0.0:
            raise ValueError("offdiag must be zero at the player's own index")
        self.u = u
        self.offdiag = offdiag

    def value(self, x):
        return float(self.u.f(x[self.player]) - self.offdiag @ x)

    def grad(self, x):
        g = -self.offdiag.copy()
        g[self.player] = self.u.df(x[self.player])
        return g

    def own_grad(self, x):
        return float(self.u.df(x[self.player]))


class Exponential(UtilityFunction):
    """x -> 1 - exp(-d'x) with d >= 0; gradients are bounded by d."""

    def __init__(self, player: int, d):
        d = np.asarray(d, dtype=float)
        super().__init__(player, d.shape[0])
        if np.any(d < 0):
            raise ValueError("exponential coefficients must be nonnegative")
        self.d = d

    def value(self, x):
        return float(1.0 - np.exp(-self.d @ x))

    def grad(self, x):
        return self.d * np.exp(-self.d @ x)


class ScaledAggregate(UtilityFunction):
    """x -> x_i * g(sum(x)): own share scaled by a function of the total."""

    def __init__(self, player: int, n: int, g: ScalarFn):
        super().__init__(player, n)
        self.g = g

    def value(self, x):
        return float(x[self.player] * self.g.f(np.sum(x)))

    def grad(self, x):
        total = float(np.sum(x))
        g = np.full(self.n, x[self.player] * self.g.df(total))
        g[self.player] += self.g.f(total)
        return g


class Custom(UtilityFunction):
    """Black-box evaluator and gradient oracle supplied by the caller."""

    def __init__(self, player: int, n: int, f, gradf):
        super().__init__(player, n)
        self.f = f
        self.gradf = gradf

    def value(self, x):
        return float(self.f(x))

    def grad(self, x):
        return np.asarray(self.gradf(x), dtype=float)


class ScaledUtility(UtilityFunction):
    """k * base(x) for k > 0; used to exercise positive-scaling invariance."""

    def __init__(self, base: UtilityFunction, k: float):
        if k <= 0:
            raise ValueError("scale must be positive")
        super().__init__(base.player, base.n)
        self.base = base
        self.k = float(k)

    def value(self, x):
        return self.k * self.base.value(x)

    def grad(self, x):
        return self.k * self.base.grad(x)


@dataclass(frozen=True)
class Game:
    """A shared-constraint resource allocation game.

    `utilities[i]` is player i's utility; all players share the constraint
    sum(x) <= capacity, x >= 0.
    """

    capacity: float
    utilities: tuple

    def __post_init__(self):
        if not np.isfinite(self.capacity) or self.capacity <= 0:
            raise ValueError(f"capacity must be positive and finite, got {self.capacity}")
        if len(self.utilities) < 1:
            raise ValueError("a game needs at least one player")
        object.__setattr__(self, "utilities", tuple(self.utilities))
        n = len(self.utilities)
        for i, u in enumerate(self.utilities):
            if not isinstance(u, UtilityFunction):
                raise TypeError(f"utilities[{i}] is not a UtilityFunction")
            if u.n != n:
                raise ValueError(f"utilities[{i}] is built for {u.n} players, game has {n}")
            if u.player != i:
                raise ValueError(f"utilities[{i}] carries player index {u.player}")

    @property
    def n(self) -> int:
        return len(self.utilities)

    @property
    def simplex(self) -> CappedSimplex:
        return CappedSimplex(self.n, self.capacity)


def scale_game(game: Game, k: float) -> Game:
    """The game with every utility multiplied by k > 0."""
    return Game(game.capacity, tuple(ScaledUtility(u, k) for u in game.utilities))


def evaluate_theta(game: Game, x) -> float:
    """Aggregate utility: the sum of all players' utilities at x."""
    x = game.simplex.validate(x)
    return _theta_unchecked(game, x)


def _theta_unchecked(game: Game, x: np.ndarray) -> float:
    return sum(u.value(x) for u in game.utilities)


def grad_theta(game: Game, x) -> np.ndarray:
    """Gradient of the aggregate utility."""
    x = np.asarray(x, dtype=float)
    g = np.zeros(game.n)
    for u in game.utilities:
        g += u.grad(x)
    return g


def gradient_matrix(game: Game, x) -> np.ndarray:
    """Row i holds the full analytic gradient of player i's utility at x."""
    x = np.asarray(x, dtype=float)
    return np.array([u.grad(x) for u in game.utilities], dtype=float)


def evaluate_F(game: Game, x) -> np.ndarray:
    """The pseudo-gradient: component i is minus player i's own-partial at x."""
    x = game.simplex.validate(x)
    out = np.empty(game.n)
    for i, u in enumerate(game.utilities):
        try:
            out[i] = -u.own_grad(x)
        except Exception as exc:  # oracle failure surfaces as an evaluation error
            raise EvaluationError(f"gradient oracle of player {i} failed: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise EvaluationError("gradient oracle returned non-finite values")
    return out


@dataclass
class Assumption1Report:
    """Spot-check results for the standing regularity assumptions.

    The checks sample feasible points and record the worst case of each
    quantity; violations are reported, never silently accepted, because
    custom utilities admit no symbolic certification.
    """

    samples: int
    min_own_gradient: float
    min_grad_theta: float
    min_concavity_gap: float
    min_utility_at_zero: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_assumption1(game: Game, samples: int = 200, seed=0) -> Assumption1Report:
    """Sample feasible points and report the worst violations found.

    Checks, at every sampled point: strict increase of each utility in the
    own coordinate, componentwise nonnegativity of the aggregate gradient,
    midpoint concavity of the aggregate along random segments, and
    nonnegativity of every utility at the zero allocation.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    points = game.simplex.sample(samples, seed)
    min_own = np.inf
    min_gt = np.inf
    min_gap = np.inf
    for x in points:
        grads = gradient_matrix(game, x)
        min_own = min(min_own, float(np.diagonal(grads).min()))
        min_gt = min(min_gt, float(grads.sum(axis=0).min()))
    # midpoint test on segments between consecutive samples
    for a, b in zip(points[:-1], points[1:]):
        mid = 0.5 * (a + b)
        ta, tb, tm = (_theta_unchecked(game, p) for p in (a, b, mid))
        scale = max(1.0, abs(ta), abs(tb))
        min_gap = min(min_gap, (tm - 0.5 * (ta + tb)) / scale)
    zero = np.zeros(game.n)
    min_at_zero = min(u.value(zero) for u in game.utilities)

    report = Assumption1Report(
        samples=samples,
        min_own_gradient=min_own,
        min_grad_theta=min_gt,
        min_concavity_gap=min_gap,
        min_utility_at_zero=min_at_zero,
    )
    if min_own <= 0.0:
        report.violations.append(
            f"own-gradient not strictly positive (min {min_own:g})"
        )
    if min_gt < -FEAS_TOL:
        report.violations.append(
            f"aggregate gradient has negative component (min {min_gt:g})"
        )
    if min_gap < -FEAS_TOL:
        report.violations.append(
            f"aggregate fails midpoint concavity (worst gap {min_gap:g})"
        )
    if min_at_zero < -FEAS_TOL:
        report.violations.append(
            f"some utility is negative at the zero allocation ({min_at_zero:g})"
        )
    return report


def gradient_fd_check(game: Game, x, h: float = 1e-6) -> float:
    """Max relative mismatch between analytic gradients and central differences.

    x must sit inside the feasible set by margin h in every coordinate and in
    the capacity slack, so that all perturbed points stay feasible.
    """
    x = game.simplex.validate(x)
    if x.min() < h or game.simplex.slack(x) < h:
        raise ValueError(f"point is not interior by margin {h}")
    analytic = gradient_matrix(game, x)
    fd = np.empty_like(analytic)
    for j in range(game.n):
        step = np.zeros(game.n)
        step[j] = h
        for i, u in enumerate(game.utilities):
            fd[i, j] = (u.value(x + step) - u.value(x - step)) / (2.0 * h)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1.0)
    return float((np.abs(analytic - fd) / scale).max())
