"""Swarm tabular Q-learning with imitation (ITQ) over the action chain.

Each of the 13 variables owns a knowledge matrix indexed by (state, action),
where a variable's state is the action chosen for the previous variable
(the first variable is chained to its own previous action). Half the swarm
selects actions epsilon-greedily from the knowledge matrices; the other
half imitates a whale-optimization teacher steered by the best recent
chain. Rewards are improvement-based and the best agent is never lost
(elitism), so the best-fitness trace is non-increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import InvalidConfigError
from .loadmodel import CompositeParams
from .space import (
    ActionChain,
    DiscretizationGrid,
    clip_to_ranges,
    decode,
    encode,
    fitness_with_status,
    params_from_vector,
    vector_from_params,
)

if TYPE_CHECKING:
    from .scenarios import MeasurementSeries

REWARD_CAP = 1e12

GREEDY = "greedy"
TEACHER = "teacher"


@dataclass(frozen=True)
class ItqConfig:
    """Hyperparameters for one ITQ run."""

    alpha: float = 0.1  # learning rate
    gamma: float = 0.2  # discount factor
    epsilon: float = 0.5  # exploitation probability
    w: float = 1.0  # reward multiplicator
    population: int = 30
    k_max: int = 700
    zeta: float = 1e-4  # knowledge-change norm threshold for early stop
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidConfigError("alpha must lie in (0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidConfigError("gamma must lie in [0, 1)")
        if not 0.0 <= self.epsilon <= 1.0:
            raise InvalidConfigError("epsilon must lie in [0, 1]")
        if self.w <= 0.0:
            raise InvalidConfigError("reward multiplicator must be positive")
        if self.population < 2 or self.population % 2:
            raise InvalidConfigError("population must be even and at least 2")
        if self.k_max < 0:
            raise InvalidConfigError("k_max must be nonnegative")

    @staticmethod
    def prelearning(**overrides) -> "ItqConfig":
        """Cold-start defaults (gamma 0.2, epsilon 0.5, 700 iterations)."""
        return ItqConfig(**{**dict(gamma=0.2, epsilon=0.5, k_max=700), **overrides})

    @staticmethod
    def transfer(**overrides) -> "ItqConfig":
        """Warm-start defaults (gamma 0.1, epsilon 0.8, 200 iterations)."""
        return ItqConfig(**{**dict(gamma=0.1, epsilon=0.8, k_max=200), **overrides})


def zero_knowledge(grid: DiscretizationGrid) -> list[np.ndarray]:
    """All-zero knowledge matrices: one bins x bins table per variable."""
    return [np.zeros((grid.bins, grid.bins)) for _ in range(grid.n_vars)]


def knowledge_shapes_ok(matrices: list[np.ndarray], grid: DiscretizationGrid) -> bool:
    return len(matrices) == grid.n_vars and all(
        m.shape == (grid.bins, grid.bins) and np.all(np.isfinite(m)) for m in matrices
    )


def select_action_chain_flags(
    matrices: list[np.ndarray],
    epsilon: float,
    rng: np.random.Generator,
    start_state: int = 0,
) -> tuple[ActionChain, list[bool]]:
    """Walk the variable chain, returning the chosen chain and which picks
    took the greedy branch.

    At each variable, with probability epsilon the row argmax is taken
    (ties to the lowest index), otherwise a uniform random action; the
    chosen action becomes the next variable's state.
    """
    n_actions = matrices[0].shape[1]
    state = start_state
    indices = []
    flags = []
    for q in matrices:
        greedy = rng.random() <= epsilon
        if greedy:
            action = int(np.argmax(q[state]))
        else:
            action = int(rng.integers(n_actions))
        indices.append(action)
        flags.append(greedy)
        state = action
    return ActionChain(indices=tuple(indices)), flags


def select_action_chain(
    matrices: list[np.ndarray],
    epsilon: float,
    rng: np.random.Generator,
    start_state: int = 0,
) -> ActionChain:
    return select_action_chain_flags(matrices, epsilon, rng, start_state)[0]


def compute_reward(f_prev: float, f_new: float, w: float) -> float:
    """Improvement-based reward: w / f_new when not worse, else 0."""
    if f_new <= f_prev:
        return w / f_new if f_new > 0.0 else REWARD_CAP
    return 0.0


def update_knowledge(
    matrices: list[np.ndarray],
    chain: ActionChain,
    reward: float,
    alpha: float,
    gamma: float,
    start_state: int = 0,
    touched: dict | None = None,
) -> None:
    """Q-update along the visited (state, action) cells, in place.

    Exactly one cell per variable changes; the bootstrap term is the row
    maximum at the visited state. `touched` collects each cell's value
    before its first change (used for the convergence norm).
    """
    state = start_state
    for i, (q, action) in enumerate(zip(matrices, chain.indices)):
        row = q[state]
        if touched is not None:
            touched.setdefault((i, state, action), float(row[action]))
        delta = reward + gamma * float(np.max(row)) - row[action]
        row[action] += alpha * delta
        state = action


def imitation_assignments(rewards: list[float]) -> list[str]:
    """Mode per agent: the better-rewarded half keeps the greedy rule, the
    rest imitate the teacher next iteration. Ties go to lower ids."""
    if len(rewards) % 2:
        raise InvalidConfigError("population must be even")
    order = sorted(range(len(rewards)), key=lambda j: (-rewards[j], j))
    modes = [TEACHER] * len(rewards)
    for j in order[: len(rewards) // 2]:
        modes[j] = GREEDY
    return modes


def woa_move(
    pos: np.ndarray,
    leader: np.ndarray,
    a: float,
    population: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """One whale-optimization position update.

    The strategy pick (bubble-net spiral vs encircle/search) is drawn once
    per move; the coefficient vectors are drawn per dimension, following
    the vector form of the update equations.
    """
    n = len(pos)
    out = np.empty(n)
    p = rng.random()
    if p >= 0.5:
        for j in range(n):
            spiral = 2.0 * rng.random() - 1.0
            out[j] = abs(leader[j] - pos[j]) * math.exp(spiral) * math.cos(2.0 * math.pi * spiral) + leader[j]
        return out
    for j in range(n):
        r1 = rng.random()
        r2 = rng.random()
        amp = 2.0 * a * r1 - a
        c = 2.0 * r2
        if abs(amp) < 1.0:
            out[j] = leader[j] - amp * abs(c * leader[j] - pos[j])
        else:
            other = population[int(rng.integers(len(population)))]
            out[j] = other[j] - amp * abs(c * other[j] - pos[j])
    return out


class WoaTeacher:
    """Whale-optimization teacher proposing continuous positions that are
    encoded onto the action grid for imitating agents.

    Each agent owns a position slot that is re-anchored at the agent's
    current solution before a move, so a proposal is always a step from
    where the student actually stands. The leader (prey) is injected by
    the caller each iteration.
    """

    def __init__(self, grid: DiscretizationGrid, population: int, k_max: int, rng: np.random.Generator):
        self.grid = grid
        self.k_max = max(k_max, 1)
        self.rng = rng
        lo = np.array([r.lo for r in grid.ranges])
        hi = np.array([r.hi for r in grid.ranges])
        self.positions = lo + rng.random((population, grid.n_vars)) * (hi - lo)

    def propose(
        self,
        anchors: dict[int, np.ndarray],
        leader: np.ndarray,
        iteration: int,
    ) -> dict[int, ActionChain]:
        a = 2.0 * max(0.0, 1.0 - iteration / self.k_max)
        proposals = {}
        for j, anchor in anchors.items():
            self.positions[j] = anchor
            new = woa_move(self.positions[j], leader, a, self.positions, self.rng)
            new = clip_to_ranges(self.grid, new)
            self.positions[j] = new
            proposals[j] = encode(self.grid, params_from_vector(new))
        return proposals


@dataclass
class Agent:
    """One swarm member and the state of its last executed transition."""

    id: int
    chain: ActionChain
    fitness: float
    var1_state: int = 0  # previous first-variable action; 0 at run start
    reward: float = 0.0
    mode: str = GREEDY


@dataclass
class OptimizationRunResult:
    """Outcome common to every optimizer in the package.

    Baseline optimizers fill best_vector only; the ITQ runners also carry
    the decoded parameters, terminal knowledge and reward trace.
    """

    best_vector: np.ndarray
    best_fitness: float
    trace: np.ndarray  # best-so-far fitness; entry 0 is the seeded population
    iterations: int
    seed: int
    best_params: CompositeParams | None = None
    mean_rewards: np.ndarray | None = None
    knowledge: list[np.ndarray] | None = None
    best_chain: ActionChain | None = None
    penalty_evals: int = 0
    warning: str | None = None
    extras: dict = field(default_factory=dict)


def run_itq(
    series: "MeasurementSeries",
    grid: DiscretizationGrid,
    config: ItqConfig,
    initial_knowledge: list[np.ndarray] | None = None,
) -> OptimizationRunResult:
    """Run the ITQ loop from the given (or zero) knowledge matrices.

    Per iteration: every agent selects a chain (epsilon-greedy or teacher
    proposal), fitness is evaluated, improvement rewards update the
    knowledge matrices, modes are reassigned by reward rank, and the
    elitist best is recorded. Stops at k_max or when the summed Frobenius
    norm of per-iteration knowledge changes falls to zeta.
    """
    if initial_knowledge is None:
        matrices = zero_knowledge(grid)
    else:
        if not knowledge_shapes_ok(initial_knowledge, grid):
            raise InvalidConfigError("initial knowledge does not match the grid")
        matrices = [m.copy() for m in initial_knowledge]

    master = np.random.default_rng(config.seed)
    agent_rngs = master.spawn(config.population)
    teacher = WoaTeacher(grid, config.population, config.k_max, master.spawn(1)[0])

    cache: dict[tuple[int, ...], tuple[float, bool]] = {}
    penalty_evals = 0

    def evaluate(chain: ActionChain) -> float:
        nonlocal penalty_evals
        key = chain.indices
        if key not in cache:
            cache[key] = fitness_with_status(decode(grid, chain), series)
        value, failed = cache[key]
        if failed:
            penalty_evals += 1
        return value

    agents = []
    for j in range(config.population):
        chain = ActionChain(tuple(int(x) for x in agent_rngs[j].integers(grid.bins, size=grid.n_vars)))
        agents.append(Agent(id=j, chain=chain, fitness=evaluate(chain)))

    best = min(agents, key=lambda ag: (ag.fitness, ag.id))
    best_chain, best_fitness = best.chain, best.fitness
    trace = [best_fitness]
    mean_rewards = [float("nan")]

    def chain_vector(chain: ActionChain) -> np.ndarray:
        return np.array([grid.point(i, idx) for i, idx in enumerate(chain.indices)])

    iterations = 0
    for k in range(config.k_max):
        # The chain that earned the historically largest reward is the
        # elitist best, so it serves as the teacher's incumbent prey.
        leader = chain_vector(best_chain)
        anchors = {ag.id: chain_vector(ag.chain) for ag in agents if ag.mode == TEACHER}
        proposals = teacher.propose(anchors, leader, k)

        touched: dict[tuple[int, int, int], float] = {}
        for ag in agents:
            if ag.mode == TEACHER:
                chain = proposals[ag.id]
            else:
                chain = select_action_chain(matrices, config.epsilon, agent_rngs[ag.id], ag.var1_state)
            f_new = evaluate(chain)
            ag.reward = compute_reward(ag.fitness, f_new, config.w)
            update_knowledge(
                matrices, chain, ag.reward, config.alpha, config.gamma, ag.var1_state, touched
            )
            ag.var1_state = chain.indices[0]
            ag.chain = chain
            ag.fitness = f_new
            if f_new < best_fitness:
                best_fitness = f_new
                best_chain = chain
        iterations = k + 1

        rewards = [ag.reward for ag in agents]
        for ag, mode in zip(agents, imitation_assignments(rewards)):
            ag.mode = mode

        trace.append(best_fitness)
        mean_rewards.append(float(np.mean(rewards)))

        per_var = [0.0] * grid.n_vars
        for (i, s, a), old in touched.items():
            diff = float(matrices[i][s, a]) - old
            per_var[i] += diff * diff
        if sum(math.sqrt(x) for x in per_var) <= config.zeta:
            break

    best_params = decode(grid, best_chain)
    return OptimizationRunResult(
        best_vector=vector_from_params(best_params),
        best_fitness=best_fitness,
        trace=np.array(trace),
        iterations=iterations,
        seed=config.seed,
        best_params=best_params,
        mean_rewards=np.array(mean_rewards),
        knowledge=matrices,
        best_chain=best_chain,
        penalty_evals=penalty_evals,
    )
