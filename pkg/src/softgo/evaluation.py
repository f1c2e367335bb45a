"""Match running, the historical-snapshot pool, and its summed win-rate curve.

The training monitor keeps a pool of past parameter snapshots. Each entry
owns a queue of the last 10 outcomes of matches against the latest network
(1 = latest won). The history score gain (HSG) at any moment is the sum over
entries of the queue means; plotted against training steps it tracks whether
the newest network keeps beating its past selves.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import engine, network, softq
from .engine import BLACK, GameState
from .softq import SoftQConfig

QUEUE_LENGTH = 10


# An agent is a callable (state, legal_mask, rng) -> action.


def net_agent(params: network.Parameters, mode: str = "sampling", alpha: float = 0.081):
    """Acting function backed by a Q-network.

    Sampling mode draws from the softmax policy (no exploration floor, which
    is an actor-side device); argmax mode plays the highest masked Q-value.
    """
    if mode not in ("sampling", "argmax"):
        raise ValueError(f"unknown mode {mode!r}")

    def act(state: GameState, mask: np.ndarray, rng: np.random.Generator) -> int:
        q = network.forward(params, engine.features(state))[0]
        if mode == "argmax":
            return softq.argmax_action(q, mask)
        pi = softq.policy_from_q(q, mask, alpha)
        return softq.sample_action(pi, rng)

    return act


def baseline_opponent(kind: str = "uniform_random", pass_prob: float = 0.01):
    """Fixed opponent used as an absolute-strength anchor.

    Uniform over legal board points; passes only when that is the sole legal
    action, or with the small configured probability.
    """
    if kind != "uniform_random":
        raise ValueError(f"unknown baseline {kind!r}")

    def act(state: GameState, mask: np.ndarray, rng: np.random.Generator) -> int:
        board_moves = np.nonzero(mask[:-1])[0]
        if board_moves.size == 0:
            return int(mask.shape[0] - 1)
        if pass_prob > 0 and rng.random() < pass_prob:
            return int(mask.shape[0] - 1)
        return int(board_moves[rng.integers(board_moves.size)])

    return act


def play_game(
    black_agent,
    white_agent,
    board: engine.BoardConfig,
    rng: np.random.Generator,
):
    """One full game; returns (final_state, moves)."""
    state = engine.new_game(board)
    moves: list[int] = []
    while not state.terminal:
        mask = engine.legal_mask(state)
        agent = black_agent if state.to_move == BLACK else white_agent
        action = agent(state, mask, rng)
        state, _, _ = engine.step(state, action)
        moves.append(action)
    return state, moves


@dataclass
class MatchResult:
    winner: str  # "A" or "B"
    score: float  # Black's perspective
    move_count: int
    sgf: str


def _play_match(agent_a, agent_b, board, rng, a_is_black: bool) -> MatchResult:
    black, white = (agent_a, agent_b) if a_is_black else (agent_b, agent_a)
    final, moves = play_game(black, white, board, rng)
    result = engine.score(final)
    black_won = result.score > 0
    winner = ("A" if black_won else "B") if a_is_black else ("B" if black_won else "A")
    return MatchResult(
        winner=winner,
        score=result.score,
        move_count=len(moves),
        sgf=engine.game_to_sgf(moves, board, result),
    )


def play_match(
    params_a: network.Parameters,
    params_b: network.Parameters,
    board: engine.BoardConfig,
    softq_config: SoftQConfig,
    mode: str = "sampling",
    seed: int = 0,
) -> MatchResult:
    """One game, A as Black; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    agent_a = net_agent(params_a, mode, softq_config.alpha)
    agent_b = net_agent(params_b, mode, softq_config.alpha)
    return _play_match(agent_a, agent_b, board, rng, a_is_black=True)


def play_series(
    agent_a,
    agent_b,
    board: engine.BoardConfig,
    games: int,
    seed: int = 0,
) -> list[MatchResult]:
    """A batch of games with strict color alternation: A is Black in games
    0, 2, 4, ... so any even-sized batch is color-balanced."""
    rng = np.random.default_rng(seed)
    return [
        _play_match(agent_a, agent_b, board, rng, a_is_black=(i % 2 == 0))
        for i in range(games)
    ]


# ---------------------------------------------------------------------------
# history pool and its curve
# ---------------------------------------------------------------------------


@dataclass
class PoolEntry:
    version: int
    step: int
    params: network.Parameters
    outcomes: deque = field(default_factory=lambda: deque(maxlen=QUEUE_LENGTH))

    def mean_outcome(self) -> float:
        if not self.outcomes:
            return 0.0
        return sum(self.outcomes) / len(self.outcomes)


class HistoryPool:
    def __init__(self):
        self.entries: list[PoolEntry] = []

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, version: int, step: int, params: network.Parameters) -> PoolEntry:
        entry = PoolEntry(version=version, step=step, params=params)
        self.entries.append(entry)
        return entry

    def find(self, version: int) -> PoolEntry:
        for entry in self.entries:
            if entry.version == version:
                return entry
        raise KeyError(f"no pool entry for version {version}")


def update_pool(pool: HistoryPool, version: int, latest_won: int) -> HistoryPool:
    """Record one match outcome (1 iff the latest network won) for an entry."""
    if latest_won not in (0, 1):
        raise ValueError("latest_won must be 0 or 1")
    pool.find(version).outcomes.append(latest_won)
    return pool


def hsg(pool: HistoryPool) -> float:
    """Sum of per-entry mean outcomes; entries with empty queues contribute 0."""
    return float(sum(entry.mean_outcome() for entry in pool.entries))


@dataclass
class HSGPoint:
    step: int
    hsg: float
    pool_size: int


class Evaluator:
    """Plays the latest published network against sampled pool entries.

    Snapshots are added to the pool every `add_cadence` publications; colors
    alternate between matches. Designed to be driven either inline (one
    `step_once` per cadence) or by a dedicated thread.
    """

    def __init__(
        self,
        hub,
        pool: HistoryPool,
        board: engine.BoardConfig,
        softq_config: SoftQConfig,
        rng: np.random.Generator,
        add_cadence: int = 1,
    ):
        self.hub = hub
        self.pool = pool
        self.board = board
        self.softq_config = softq_config
        self.rng = rng
        self.add_cadence = add_cadence
        self.last_added_version = 0
        self.match_counter = 0
        self.points: list[HSGPoint] = []

    def step_once(self) -> HSGPoint | None:
        snap = self.hub.latest()
        if snap is None:
            return None
        if not self.pool.entries or snap.version >= self.last_added_version + self.add_cadence:
            if not any(e.version == snap.version for e in self.pool.entries):
                self.pool.add(snap.version, snap.step, snap.params.copy())
                self.last_added_version = snap.version
        entry = self.pool.entries[int(self.rng.integers(len(self.pool.entries)))]
        latest_agent = net_agent(snap.params, "sampling", self.softq_config.alpha)
        entry_agent = net_agent(entry.params, "sampling", self.softq_config.alpha)
        latest_is_black = self.match_counter % 2 == 0
        self.match_counter += 1
        result = _play_match(latest_agent, entry_agent, self.board, self.rng, latest_is_black)
        update_pool(self.pool, entry.version, 1 if result.winner == "A" else 0)
        point = HSGPoint(step=snap.step, hsg=hsg(self.pool), pool_size=len(self.pool))
        self.points.append(point)
        return point


def run_evaluator(hub, pool, board, softq_config, rng, stop_event, add_cadence: int = 1):
    """Thread body: evaluate continuously until the stop event is set."""
    import time

    evaluator = Evaluator(hub, pool, board, softq_config, rng, add_cadence)
    while not stop_event.is_set():
        if evaluator.step_once() is None:
            time.sleep(0.01)
    return evaluator.points
