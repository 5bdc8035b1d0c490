"""Solvers and certificates for the three solution objects of a game.

Three complementarity systems share one template over the capped simplex:

    social   0 <= x_i  perp  -grad_i Theta(x) + lambda    >= 0
    VE       0 <= x_i  perp  -grad_i phi_i(x) + lambda    >= 0
    GNE      0 <= x_i  perp  -grad_i phi_i(x) + lambda_i  >= 0

each paired with 0 <= lambda (resp. lambda_i) perp capacity - sum(x) >= 0.
The social optimum is computed by projected gradient ascent, the VE by an
extragradient iteration on the pseudo-gradient, and arbitrary points are
certified by reading multipliers off the complementarity structure and
measuring the worst violation.
"""

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .games import Game, evaluate_F, grad_theta, _theta_unchecked

KKT_TOL = 1e-6
ACTIVITY_TOL = 1e-7


class EquilibriumKind(Enum):
    GNE = "gne"
    VE = "ve"
    SOCIAL = "social"


@dataclass
class EquilibriumCertificate:
    """A candidate solution with multipliers and its worst KKT violation.

    `multipliers` is a scalar for VE/social certificates and a vector (one
    entry per player) for GNE certificates. A point is certified when
    `residual` does not exceed the tolerance it was checked against.
    """

    x: np.ndarray
    multipliers: object
    kind: EquilibriumKind
    residual: float
    iterations: int
    warnings: tuple = ()

    def certified(self, tolerance: float = KKT_TOL) -> bool:
        return self.residual <= tolerance


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 20000
    step_size: float = 1.0
    backtracking: float = 0.5
    kkt_tolerance: float = KKT_TOL
    seed: object = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if not 0.0 < self.backtracking < 1.0:
            raise ValueError("backtracking factor must lie in (0, 1)")
        if self.kkt_tolerance <= 0:
            raise ValueError("kkt_tolerance must be positive")


class NonConvergenceError(RuntimeError):
    """Solver ran out of iterations; carries the best iterate found."""

    def __init__(self, message: str, certificate: EquilibriumCertificate):
        super().__init__(message)
        self.certificate = certificate


def recover_multiplier(x: np.ndarray, own_grads: np.ndarray, activity_tol: float = ACTIVITY_TOL) -> float:
    """Single multiplier read off complementarity: the largest own-gradient
    among active players, floored at zero."""
    active = x > activity_tol
    if not np.any(active):
        return 0.0
    return max(0.0, float(own_grads[active].max()))


def kkt_residual(x: np.ndarray, own_grads: np.ndarray, lam: float, capacity: float) -> float:
    """Worst violation of the single-multiplier complementarity system."""
    slack = capacity - float(x.sum())
    stationarity = lam - own_grads  # must be >= 0
    return max(
        float(np.maximum(-stationarity, 0.0).max()),
        float(np.abs(x * stationarity).max()),
        abs(lam * slack),
        max(0.0, -lam),
        max(0.0, float(-x.min())),
        max(0.0, -slack),
    )


def kkt_residual_gne(x: np.ndarray, own_grads: np.ndarray, lams: np.ndarray, capacity: float) -> float:
    """Worst violation of the per-player-multiplier complementarity system."""
    slack = capacity - float(x.sum())
    stationarity = lams - own_grads
    return max(
        float(np.maximum(-stationarity, 0.0).max()),
        float(np.abs(x * stationarity).max()),
        float(np.abs(lams * slack).max()),
        max(0.0, float(-lams.min())),
        max(0.0, float(-x.min())),
        max(0.0, -slack),
    )


def _own_grads_for(game: Game, x: np.ndarray, kind: EquilibriumKind) -> np.ndarray:
    if kind is EquilibriumKind.SOCIAL:
        return grad_theta(game, x)
    return -evaluate_F(game, x)


def certify(game: Game, x, kind: EquilibriumKind, config: SolverConfig | None = None) -> EquilibriumCertificate:
    """Recover multipliers for x and measure its worst KKT violation.

    GNE multipliers are max(0, own-gradient) per player when the capacity is
    tight, zero otherwise; VE/social use the single recovered multiplier.
    The point is certified as `kind` iff the residual is within tolerance.
    """
    config = config or SolverConfig()
    x = game.simplex.validate(x)
    g = _own_grads_for(game, x, kind)
    if kind is EquilibriumKind.GNE:
        slack = game.simplex.slack(x)
        if slack <= config.kkt_tolerance:
            lams = np.maximum(g, 0.0)
        else:
            lams = np.zeros(game.n)
        residual = kkt_residual_gne(x, g, lams, game.capacity)
        return EquilibriumCertificate(x, lams, kind, residual, 0)
    lam = recover_multiplier(x, g)
    residual = kkt_residual(x, g, lam, game.capacity)
    return EquilibriumCertificate(x, lam, kind, residual, 0)


def _start_point(game: Game, config: SolverConfig) -> np.ndarray:
    if config.seed is None:
        return np.zeros(game.n)
    return game.simplex.sample(1, config.seed)[0]


def solve_social(game: Game, config: SolverConfig | None = None) -> EquilibriumCertificate:
    """Maximize the aggregate utility over the capped simplex.

    Projected gradient ascent with Armijo backtracking; terminates when the
    social KKT residual drops below the configured tolerance. Raises
    NonConvergenceError (carrying the best iterate) if the iteration budget
    runs out first.
    """
    config = config or SolverConfig()
    simplex = game.simplex
    x = _start_point(game, config)
    step = config.step_size
    best: EquilibriumCertificate | None = None
    sigma = 1e-4

    for iteration in range(config.max_iterations):
        g = grad_theta(game, x)
        lam = recover_multiplier(x, g)
        residual = kkt_residual(x, g, lam, game.capacity)
        cert = EquilibriumCertificate(x.copy(), lam, EquilibriumKind.SOCIAL, residual, iteration)
        if best is None or residual < best.residual:
            best = cert
        if residual <= config.kkt_tolerance:
            return cert
        theta_here = _theta_unchecked(game, x)
        accepted = False
        for _ in range(60):
            candidate = simplex.project(x + step * g)
            move = candidate - x
            if _theta_unchecked(game, candidate) >= theta_here + sigma * float(g @ move):
                accepted = True
                break
            step *= config.backtracking
        if accepted:
            x = candidate
            step = min(step * 1.5, 1e8)
        # no acceptable step at the smallest size: loop again and let the
        # residual-based stop or the iteration budget decide

    assert best is not None
    raise NonConvergenceError(
        f"projected gradient ascent did not reach residual {config.kkt_tolerance} "
        f"in {config.max_iterations} iterations (best {best.residual:.3e})",
        best,
    )


def _natural_residual(simplex, x: np.ndarray, fx: np.ndarray) -> float:
    return float(np.linalg.norm(x - simplex.project(x - fx)))


def solve_ve(game: Game, config: SolverConfig | None = None) -> EquilibriumCertificate:
    """Solve the variational inequality for the pseudo-gradient over the set.

    Extragradient iteration: a half step from the current pseudo-gradient,
    then a full step from the pseudo-gradient at the half point, both
    projected. The step size is backtracked until the natural residual
    ||x - project(x - F(x))|| decreases; convergence is guaranteed for
    monotone pseudo-gradients, and anything else gets a best-effort answer
    with an explicit warning rather than a silent one.
    """
    config = config or SolverConfig()
    simplex = game.simplex
    x = _start_point(game, config)
    step = config.step_size
    best: EquilibriumCertificate | None = None
    stall_count = 0
    warn_flags: list[str] = []

    for iteration in range(config.max_iterations):
        fx = evaluate_F(game, x)
        lam = recover_multiplier(x, -fx)
        residual = kkt_residual(x, -fx, lam, game.capacity)
        cert = EquilibriumCertificate(
            x.copy(), lam, EquilibriumKind.VE, residual, iteration, tuple(warn_flags)
        )
        if best is None or residual < best.residual:
            best = cert
        if residual <= config.kkt_tolerance:
            return cert

        res_here = _natural_residual(simplex, x, fx)
        accepted = None
        for _ in range(40):
            half = simplex.project(x - step * fx)
            candidate = simplex.project(x - step * evaluate_F(game, half))
            res_new = _natural_residual(simplex, candidate, evaluate_F(game, candidate))
            if res_new <= res_here * (1.0 - 1e-4) or res_new <= 0.1 * config.kkt_tolerance:
                accepted = candidate
                break
            step *= config.backtracking
        if accepted is None:
            # accept the last candidate anyway; repeated stalls with a growing
            # residual are the signature of a non-monotone pseudo-gradient
            accepted = candidate
            stall_count += 1
            if stall_count >= 5 and res_new > 2.0 * res_here and not warn_flags:
                warn_flags.append("natural residual stalls while increasing; "
                                  "pseudo-gradient may not be monotone")
                warnings.warn(warn_flags[0], RuntimeWarning)
        else:
            step = min(step * 1.6, 1e8)
        x = accepted

    assert best is not None
    raise NonConvergenceError(
        f"extragradient did not reach residual {config.kkt_tolerance} "
        f"in {config.max_iterations} iterations (best {best.residual:.3e})",
        EquilibriumCertificate(
            best.x, best.multipliers, best.kind, best.residual, best.iterations,
            tuple(warn_flags),
        ),
    )


@dataclass(frozen=True)
class LinearAnalysis:
    """Closed-form description of the equilibria of an all-linear game.

    With every own coefficient positive the equilibrium conditions force the
    capacity to bind, so the GNE set is the whole face {x >= 0, sum(x) = C};
    the VE set is its sub-face supported on the players of maximal own
    coefficient, with the common multiplier equal to that maximum.
    """

    c: np.ndarray
    grad_theta: np.ndarray
    capacity: float
    social_value: float
    social_vertex: np.ndarray
    ve_lambda: float
    ve_support: np.ndarray
    worst_gne_efficiency: float
    best_gne_efficiency: float
    worst_ve_efficiency: float
    worst_gne_vertex: np.ndarray


def analyze_linear(game: Game) -> LinearAnalysis:
    """Closed-form equilibrium sets and efficiencies for linear games.

    Requires every utility to be Linear with a strictly positive own
    coefficient.
    """
    from .games import Linear

    for i, u in enumerate(game.utilities):
        if not isinstance(u, Linear):
            raise ValueError(f"utilities[{i}] is not linear")
    c = np.array([u.d[u.player] for u in game.utilities], dtype=float)
    if np.any(c <= 0):
        raise ValueError("analysis requires strictly positive own coefficients")
    d = np.zeros(game.n)
    for u in game.utilities:
        d += u.d
    C = game.capacity
    social_vertex, social_value = game.simplex.maximize_linear(d)
    d_max = float(d.max())
    d_min = float(d.min())
    ve_support = np.isclose(c, c.max(), rtol=0.0, atol=1e-12)
    worst_ve = float(d[ve_support].min()) / d_max if d_max > 0 else 1.0
    worst_gne = d_min / d_max if d_max > 0 else 1.0
    worst_vertex = np.zeros(game.n)
    worst_vertex[int(np.argmin(d))] = C
    return LinearAnalysis(
        c=c,
        grad_theta=d,
        capacity=C,
        social_value=social_value,
        social_vertex=social_vertex,
        ve_lambda=float(c.max()),
        ve_support=ve_support,
        worst_gne_efficiency=worst_gne,
        best_gne_efficiency=1.0,
        worst_ve_efficiency=worst_ve,
        worst_gne_vertex=worst_vertex,
    )


def brute_force_social(game: Game, resolution: int) -> tuple[np.ndarray, float]:
    """Exhaustive maximization of the aggregate utility over the lattice grid."""
    points = game.simplex.grid(resolution)
    values = np.array([_theta_unchecked(game, p) for p in points])
    best = int(np.argmax(values))
    return points[best], float(values[best])


def brute_force_ve_check(game: Game, x, resolution: int) -> float:
    """Worst inequality margin of the variational characterization at x.

    Returns min over grid points y of F(x)'(y - x); x passes as a VE when the
    margin is >= -1e-6.
    """
    x = game.simplex.validate(x)
    fx = evaluate_F(game, x)
    points = game.simplex.grid(resolution)
    return float(((points - x) @ fx).min())
