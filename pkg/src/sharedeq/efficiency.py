"""Efficiency ratios, the linearized lower bound, and worst-case families.

The efficiency of an allocation is its aggregate utility divided by the
social optimum. Concavity gives a computable lower bound on that ratio from
the gradient alone (tight for linear games on the capacity face), and two
parametric families of linear games realize efficiency exactly 2e/(1+e) for
the VE and exactly e for the worst GNE, for any e in (0,1). Two remedies are
quantified: a reserve price and gradient bounds.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .equilibrium import (
    EquilibriumKind,
    SolverConfig,
    analyze_linear,
    certify,
    solve_social,
    solve_ve,
)
from .games import Exponential, Game, Linear, evaluate_theta, grad_theta


@dataclass
class EfficiencyReport:
    """Aggregate utility of a point, the optimum, their ratio and the bound.

    When the optimal value is numerically zero the ratio is undefined; the
    report flags that instead of dividing.
    """

    theta_at_x: float
    theta_opt: float
    ratio: float | None
    lemma1_bound: float | None
    denominator_degenerate: bool


DEGENERATE_TOL = 1e-12


def lemma1_bound(game: Game, x) -> float:
    """Gradient-only lower bound on the efficiency of x.

    Concavity of the aggregate gives ratio >= g'x / max_z g'z with
    g = grad Theta(x) and z ranging over the feasible set; the denominator is
    the linearized optimum C * max_i g_i. Requires g >= 0; returns 1 by
    convention when the denominator vanishes.
    """
    x = game.simplex.validate(x)
    g = grad_theta(game, x)
    if g.min() < -1e-9:
        raise ValueError(f"aggregate gradient has negative component {g.min():g} at x")
    _, denominator = game.simplex.maximize_linear(g)
    if denominator <= 0.0:
        return 1.0
    return float(g @ x) / denominator


def efficiency(game: Game, x, config: SolverConfig | None = None) -> EfficiencyReport:
    """Efficiency of x: aggregate utility at x over the social optimum.

    Linear games use the exact vertex optimum; everything else solves the
    social problem numerically. The gradient bound is included when the
    aggregate gradient at x is nonnegative, and omitted otherwise.
    """
    x = game.simplex.validate(x)
    theta_x = evaluate_theta(game, x)
    if all(isinstance(u, Linear) for u in game.utilities):
        _, theta_opt = game.simplex.maximize_linear(grad_theta(game, x))
    else:
        theta_opt = evaluate_theta(game, solve_social(game, config).x)
    try:
        bound = lemma1_bound(game, x)
    except ValueError:
        bound = None
    if theta_opt <= DEGENERATE_TOL:
        return EfficiencyReport(theta_x, theta_opt, None, bound, True)
    return EfficiencyReport(theta_x, theta_opt, theta_x / theta_opt, bound, False)


# ---------------------------------------------------------------------------
# parametric game families
# ---------------------------------------------------------------------------

class FamilyKind(Enum):
    WCVE = "wcve"
    WCGNE = "wcgne"
    RESERVE_PRICE_LINEAR = "reserve"
    BOUNDED_GRADIENT_EXP = "bounded_gradient_exp"


@dataclass(frozen=True)
class GameFamily:
    """A parametrized family of games swept over `grid`.

    The grid carries the epsilon values (worst-case families), the reserve
    prices, or the seeds (bounded gradient family). `coefficients` holds the
    base own-coefficient vector for the reserve family.
    """

    kind: FamilyKind
    grid: tuple
    n: int
    capacity: float
    coefficients: tuple | None = None


def wcve_family(grid, n: int = 4, capacity: float = 1.0) -> GameFamily:
    return GameFamily(FamilyKind.WCVE, tuple(float(e) for e in grid), n, capacity)


def wcgne_family(grid, n: int = 4, capacity: float = 1.0) -> GameFamily:
    return GameFamily(FamilyKind.WCGNE, tuple(float(e) for e in grid), n, capacity)


def reserve_family(c, grid, capacity: float = 1.0) -> GameFamily:
    c = tuple(float(v) for v in c)
    return GameFamily(
        FamilyKind.RESERVE_PRICE_LINEAR, tuple(float(p) for p in grid),
        len(c), capacity, c,
    )


def bounded_gradient_family(seeds, n: int = 2, capacity: float = 1.0) -> GameFamily:
    return GameFamily(FamilyKind.BOUNDED_GRADIENT_EXP, tuple(int(s) for s in seeds), n, capacity)


def example2_game(eps: float, n: int = 4, capacity: float = 1.0) -> Game:
    """Linear game whose unique VE has efficiency exactly 2*eps/(1+eps).

    Players 1..n-1 value only their own share at rate eps; the last player
    values his own share at 2*eps but also credits the first player's share
    at rate 1, so the society would rather give everything to player 1 while
    the equilibrium gives everything to the last player.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if n < 2:
        raise ValueError("the construction needs at least 2 players")
    utilities = []
    for i in range(n - 1):
        d = np.zeros(n)
        d[i] = eps
        utilities.append(Linear(i, d))
    d = np.zeros(n)
    d[0] = 1.0
    d[n - 1] = 2.0 * eps
    utilities.append(Linear(n - 1, d))
    return Game(capacity, tuple(utilities))


def linear_competitive_game(c, capacity: float = 1.0) -> Game:
    """Diagonal linear game: player i values only his own share, at rate c[i]."""
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    utilities = []
    for i in range(n):
        d = np.zeros(n)
        d[i] = c[i]
        utilities.append(Linear(i, d))
    return Game(capacity, tuple(utilities))


def example3_game(eps: float, n: int = 4, capacity: float = 1.0) -> Game:
    """Diagonal linear game with own coefficients (1, eps, ..., eps).

    Every point of the capacity face is a GNE; parking the whole capacity on
    any low-value player realizes efficiency exactly eps.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if n < 2:
        raise ValueError("need at least 2 players")
    c = np.full(n, eps)
    c[0] = 1.0
    return linear_competitive_game(c, capacity)


def seeded_exponential_game(seed: int, n: int = 2, capacity: float = 1.0) -> Game:
    """Random exponential-utility game with aggregate gradient pinned to [a, 1].

    Coefficient columns are normalized to sum to one, so the aggregate
    gradient lies between exp(-max_d max_j d_j * C) and one componentwise; with
    entries bounded by one and C = 1 every such game sits in the bounded
    gradient class with lower constant exp(-1).
    """
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.0, 1.0, size=(n, n))
    w[np.diag_indices(n)] = rng.uniform(1.0, 2.0, size=n)
    d = w / w.sum(axis=0, keepdims=True)
    return Game(capacity, tuple(Exponential(i, d[i]) for i in range(n)))


def exp_family_alpha(D, simplex, resolution: int = 0) -> float:
    """Smallest value of exp(-d'z) over coefficient set D and the feasible set.

    d'z is linear and d >= 0, so the minimum over the set sits at a vertex
    C * e_i; the value is min over d in D of exp(-C * max_i d_i). A positive
    `resolution` additionally cross-checks against an exhaustive grid.
    """
    D = [np.asarray(d, dtype=float) for d in D]
    if not D:
        raise ValueError("coefficient set is empty")
    for d in D:
        if d.shape != (simplex.dimension,):
            raise ValueError("coefficient vector has wrong length")
        if np.any(d < 0):
            raise ValueError("coefficients must be nonnegative")
    alpha = min(float(np.exp(-simplex.capacity * d.max())) for d in D)
    if resolution > 0:
        grid = simplex.grid(resolution)
        grid_min = min(float(np.exp(-(grid @ d)).min()) for d in D)
        if grid_min < alpha - 1e-12:
            raise AssertionError(
                f"grid found exp(-d'z)={grid_min} below the vertex minimum {alpha}"
            )
    return alpha


def bounded_gradient_bound(alpha: float, beta: float) -> float:
    """Worst-case GNE efficiency over games whose aggregate gradient lies in
    [alpha, beta] componentwise: alpha / beta."""
    if not 0.0 < alpha <= beta:
        raise ValueError(f"need 0 < alpha <= beta, got alpha={alpha}, beta={beta}")
    return alpha / beta


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    parameter: float
    efficiency: float | None
    closed_form: float
    error: str | None = None


def _wcve_row(eps: float, family: GameFamily, config: SolverConfig) -> SweepRow:
    game = example2_game(eps, family.n, family.capacity)
    cert = solve_ve(game, config)
    report = efficiency(game, cert.x, config)
    return SweepRow(eps, report.ratio, 2.0 * eps / (1.0 + eps))


def _wcgne_row(eps: float, family: GameFamily, config: SolverConfig) -> SweepRow:
    game = example3_game(eps, family.n, family.capacity)
    analysis = analyze_linear(game)
    cert = certify(game, analysis.worst_gne_vertex, EquilibriumKind.GNE, config)
    if not cert.certified(config.kkt_tolerance):
        return SweepRow(eps, None, eps, error="worst vertex failed GNE certification")
    return SweepRow(eps, analysis.worst_gne_efficiency, eps)


def _reserve_row(pi: float, family: GameFamily, config: SolverConfig) -> SweepRow:
    from .structure import reserve_price_bound, reserve_price_transform, worst_reserve_gne

    base = linear_competitive_game(np.array(family.coefficients), family.capacity)
    priced = reserve_price_transform(base, pi)
    x = worst_reserve_gne(np.array(family.coefficients), pi, family.capacity)
    cert = certify(priced, x, EquilibriumKind.GNE, config)
    if not cert.certified(config.kkt_tolerance):
        return SweepRow(pi, None, reserve_price_bound(np.array(family.coefficients), pi),
                        error="worst surviving vertex failed GNE certification")
    report = efficiency(base, x, config)
    measured = 0.0 if report.denominator_degenerate else report.ratio
    return SweepRow(pi, measured, reserve_price_bound(np.array(family.coefficients), pi))


def _bounded_gradient_row(seed: int, family: GameFamily, config: SolverConfig) -> SweepRow:
    game = seeded_exponential_game(seed, family.n, family.capacity)
    social = solve_social(game, config)
    theta_opt = evaluate_theta(game, social.x)
    worst = np.inf
    for vertex in game.simplex.vertices():
        cert = certify(game, vertex, EquilibriumKind.GNE, config)
        if not cert.certified(config.kkt_tolerance):
            return SweepRow(float(seed), None, np.exp(-family.capacity),
                            error="capacity vertex failed GNE certification")
        worst = min(worst, evaluate_theta(game, vertex) / theta_opt)
    return SweepRow(float(seed), float(worst), float(np.exp(-family.capacity)))


_ROW_BUILDERS = {
    FamilyKind.WCVE: _wcve_row,
    FamilyKind.WCGNE: _wcgne_row,
    FamilyKind.RESERVE_PRICE_LINEAR: _reserve_row,
    FamilyKind.BOUNDED_GRADIENT_EXP: _bounded_gradient_row,
}


def sweep_family(family: GameFamily, config: SolverConfig | None = None) -> list[SweepRow]:
    """Instantiate the family at every grid value and measure the designated
    equilibrium's efficiency next to its closed-form reference.

    Solver failures are recorded on their row; the sweep continues. Rows come
    back ordered by parameter value.
    """
    config = config or SolverConfig()
    build = _ROW_BUILDERS[family.kind]
    rows = []
    for parameter in sorted(family.grid):
        try:
            rows.append(build(parameter, family, config))
        except Exception as exc:
            closed = {
                FamilyKind.WCVE: lambda p: 2.0 * p / (1.0 + p),
                FamilyKind.WCGNE: lambda p: p,
                FamilyKind.RESERVE_PRICE_LINEAR: lambda p: float("nan"),
                FamilyKind.BOUNDED_GRADIENT_EXP: lambda p: float(np.exp(-family.capacity)),
            }[family.kind](parameter)
            rows.append(SweepRow(float(parameter), None, closed, error=str(exc)))
    return rows
