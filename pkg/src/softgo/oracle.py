"""Ground-truth machinery for verification, kept independent of the learning
stack: exact soft Q iteration on enumerable games, a tabular twin of the
training loop, a brute-force scorer, and an independent liberty checker.

Nothing here is used by training; tests compare the learning system against
these oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import engine, softq
from .engine import BLACK, EMPTY, WHITE, BoardConfig, GameState


# ---------------------------------------------------------------------------
# enumerable games
# ---------------------------------------------------------------------------


@dataclass
class EnumerableGame:
    """A finite turn-taking game in padded-array form.

    For state s and slot a with act_mask[s, a] = 1: playing a yields
    mover-perspective reward rew[s, a] and moves to next_state[s, a]
    (-1 when the transition is terminal). depth[s] increases along every
    transition, making the state graph a DAG (move-capped games).
    """

    initial: int
    act_mask: np.ndarray  # (S, A) uint8
    next_state: np.ndarray  # (S, A) int64, -1 = terminal
    rew: np.ndarray  # (S, A) float64, mover perspective
    depth: np.ndarray  # (S,) int64
    labels: list = field(default_factory=list)  # optional per-state labels

    @property
    def num_states(self) -> int:
        return self.act_mask.shape[0]

    @property
    def max_actions(self) -> int:
        return self.act_mask.shape[1]

    def validate(self) -> None:
        legal = self.act_mask.astype(bool)
        nxt = self.next_state[legal]
        live = nxt[nxt >= 0]
        src_depth = np.repeat(self.depth, legal.sum(axis=1))
        dst = self.next_state[legal]
        if (self.depth[dst[dst >= 0]] <= src_depth[dst >= 0]).any():
            raise ValueError("depth must strictly increase along transitions")
        if live.size and (live >= self.num_states).any():
            raise ValueError("dangling successor id")
        if not legal.any(axis=1).all():
            raise ValueError("every state needs at least one action")


def explicit_game(transitions: dict, initial) -> EnumerableGame:
    """Build a game from {state_label: [(next_label | None, reward), ...]}."""
    labels = list(transitions.keys())
    index = {lab: i for i, lab in enumerate(labels)}
    max_a = max(len(acts) for acts in transitions.values())
    s_count = len(labels)
    act_mask = np.zeros((s_count, max_a), dtype=np.uint8)
    next_state = np.full((s_count, max_a), -1, dtype=np.int64)
    rew = np.zeros((s_count, max_a), dtype=np.float64)
    for lab, acts in transitions.items():
        s = index[lab]
        for a, (nxt, r) in enumerate(acts):
            act_mask[s, a] = 1
            rew[s, a] = r
            next_state[s, a] = -1 if nxt is None else index[nxt]
    # depths via longest-path layering from the initial state
    depth = np.zeros(s_count, dtype=np.int64)
    changed = True
    while changed:
        changed = False
        for s in range(s_count):
            for a in range(max_a):
                if act_mask[s, a] and next_state[s, a] >= 0:
                    t = next_state[s, a]
                    if depth[t] < depth[s] + 1:
                        depth[t] = depth[s] + 1
                        changed = True
    game = EnumerableGame(
        initial=index[initial],
        act_mask=act_mask,
        next_state=next_state,
        rew=rew,
        depth=depth,
        labels=labels,
    )
    game.validate()
    return game


def two_outcome_game() -> EnumerableGame:
    """Depth 1: two terminal actions worth +5 and -5 to the mover."""
    return explicit_game({"root": [(None, 5.0), (None, -5.0)]}, "root")


def alternating_two_level_game() -> EnumerableGame:
    """Depth 2: every second-mover reply loses (mover-perspective -5)."""
    return explicit_game(
        {
            "root": [("s1", 0.0), ("s2", 0.0)],
            "s1": [(None, -5.0), (None, -5.0)],
            "s2": [(None, -5.0)],
        },
        "root",
    )


def uniform_entropy_tree(k1: int, k2: int) -> EnumerableGame:
    """Two levels, all rewards zero; values are pure entropy chains."""
    transitions = {"root": [(f"m{i}", 0.0) for i in range(k1)]}
    for i in range(k1):
        transitions[f"m{i}"] = [(None, 0.0)] * k2
    return explicit_game(transitions, "root")


class StateSpaceTooLarge(Exception):
    pass


def tiny_go(
    size: int,
    move_cap: int | None = None,
    komi: float = 7.5,
    state_limit: int = 500_000,
) -> tuple[EnumerableGame, list[GameState]]:
    """Enumerate small-board Go (positional superko + move cap) exhaustively.

    Returns the game table plus the enumerated GameStates (index-aligned),
    so positions can be inspected or scored. Superko bounds repetition and
    the cap bounds depth, so the enumeration is finite by construction.
    """
    if not 2 <= size <= 3:
        raise ValueError("exhaustive enumeration is only supported for sizes 2 and 3")
    # BoardConfig's public constructor enforces size >= 3; the 2x2 oracle
    # board goes through the engine's unchecked builder.
    config = engine._unchecked_board_config(
        size=size,
        max_moves=move_cap or 2 * size * size,
        komi=komi,
        superko=engine.POSITIONAL_SUPERKO,
    )

    def key_of(state: GameState):
        return (
            state.stones.tobytes(),
            state.to_move,
            state.ko_point,
            state.consecutive_passes,
            state.move_count,
            state.history.tobytes(),
        )

    initial = engine.new_game(config)
    states: list[GameState] = [initial]
    index = {key_of(initial): 0}
    edges: list[list[tuple[int, int, float]]] = []  # per state: (slot, next, r)
    frontier = [0]
    while frontier:
        nxt_frontier = []
        for s in frontier:
            state = states[s]
            mask = engine.legal_mask(state)
            moves = np.nonzero(mask)[0]
            out = []
            for slot, action in enumerate(moves):
                child, r, d = engine.step(state, int(action))
                if d:
                    out.append((slot, -1, float(r)))
                    continue
                k = key_of(child)
                t = index.get(k)
                if t is None:
                    t = len(states)
                    if t >= state_limit:
                        raise StateSpaceTooLarge(
                            f"enumeration exceeded {state_limit} states"
                        )
                    index[k] = t
                    states.append(child)
                    nxt_frontier.append(t)
                out.append((slot, t, float(r)))
            edges.append(out)
        frontier = nxt_frontier

    s_count = len(states)
    max_a = max(len(e) for e in edges)
    act_mask = np.zeros((s_count, max_a), dtype=np.uint8)
    next_state = np.full((s_count, max_a), -1, dtype=np.int64)
    rew = np.zeros((s_count, max_a), dtype=np.float64)
    for s, out in enumerate(edges):
        for slot, t, r in out:
            act_mask[s, slot] = 1
            next_state[s, slot] = t
            rew[s, slot] = r
    depth = np.array([st.move_count for st in states], dtype=np.int64)
    game = EnumerableGame(
        initial=0, act_mask=act_mask, next_state=next_state, rew=rew, depth=depth
    )
    game.validate()
    return game, states


# ---------------------------------------------------------------------------
# exact soft Q values
# ---------------------------------------------------------------------------


@dataclass
class SoftQTable:
    q: np.ndarray  # (S, A) float64; valid where act_mask = 1
    act_mask: np.ndarray

    def values(self, state: int) -> np.ndarray:
        return self.q[state][self.act_mask[state].astype(bool)]


def _state_values(game: EnumerableGame, q: np.ndarray, alpha: float) -> np.ndarray:
    return softq.soft_state_value_batch(q, game.act_mask, alpha)


def backup(game: EnumerableGame, q: np.ndarray, alpha: float, gamma: float) -> np.ndarray:
    """One synchronous application of Q(s,a) <- r - gamma * y_v(s')."""
    y_v = _state_values(game, q, alpha)
    succ = game.next_state
    boot = np.where(succ >= 0, y_v[np.clip(succ, 0, None)], 0.0)
    return np.where(game.act_mask.astype(bool), game.rew - gamma * boot, 0.0)


def residual(game: EnumerableGame, q: np.ndarray, alpha: float, gamma: float) -> float:
    """Sup-norm violation of the one-step backup over all legal pairs."""
    diff = backup(game, q, alpha, gamma) - q
    return float(np.abs(diff[game.act_mask.astype(bool)]).max())


def exact_soft_q(
    game: EnumerableGame,
    alpha: float,
    gamma: float = 1.0,
    tol: float = 1e-10,
    max_iters: int = 100_000,
    return_history: bool = False,
):
    """Exact fixed point of the alternating-turn soft backup.

    Move-capped games carry a depth layering, so a single backward-induction
    sweep is exact (and is the only sound choice at gamma = 1). Games without
    usable layering fall back to fixed-point iteration, which contracts for
    gamma < 1.
    """
    legal = game.act_mask.astype(bool)
    q = np.zeros_like(game.rew)
    history: list[float] = []
    if game.depth is not None:
        y_v = np.zeros(game.num_states, dtype=np.float64)
        order = np.argsort(-game.depth, kind="stable")
        depths = game.depth[order]
        start = 0
        while start < order.size:
            end = start
            while end < order.size and depths[end] == depths[start]:
                end += 1
            layer = order[start:end]
            succ = game.next_state[layer]
            boot = np.where(succ >= 0, y_v[np.clip(succ, 0, None)], 0.0)
            q[layer] = np.where(legal[layer], game.rew[layer] - gamma * boot, 0.0)
            y_v[layer] = softq.soft_state_value_batch(q[layer], game.act_mask[layer], alpha)
            start = end
    else:
        for _ in range(max_iters):
            new_q = backup(game, q, alpha, gamma)
            delta = float(np.abs((new_q - q)[legal]).max())
            history.append(delta)
            q = new_q
            if delta < tol:
                break
        else:
            raise RuntimeError(f"no convergence below {tol} within {max_iters} sweeps")
    table = SoftQTable(q=q, act_mask=game.act_mask.copy())
    if return_history:
        return table, history
    return table


# ---------------------------------------------------------------------------
# tabular twin of the training loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TabularSchedule:
    total_updates: int = 100_000
    batch_size: int = 32
    lr: float = 0.5
    rho: float = 0.9
    ignition_updates: int = 1_000
    buffer_capacity: int = 1_000_000
    updates_per_episode: int = 10
    min_fill: int = 320


@dataclass
class TabularResult:
    table: SoftQTable
    target: SoftQTable
    visits: np.ndarray  # (S, A) update counts


def tabular_qzero(
    game: EnumerableGame,
    softq_config: softq.SoftQConfig,
    schedule: TabularSchedule,
    seed: int,
) -> TabularResult:
    """The self-play replay loop with the network replaced by a table.

    Acting samples from the softmax of the target table (with the exploration
    floor); transitions go to a FIFO ring; warm-up updates regress toward the
    signed episode outcome, later ones toward r - gamma * y_v(s') computed
    from the target table; the target table trails by Polyak averaging.
    Per-sample updates are damped by lr.
    """
    rng = np.random.default_rng(seed)
    alpha = softq_config.alpha
    gamma = softq_config.gamma
    eps = softq_config.min_action_prob
    legal = game.act_mask.astype(bool)
    q = np.zeros_like(game.rew)
    q_target = q.copy()
    visits = np.zeros_like(game.act_mask, dtype=np.int64)

    cap = schedule.buffer_capacity
    buf_s = np.zeros(cap, dtype=np.int64)
    buf_a = np.zeros(cap, dtype=np.int64)
    buf_r = np.zeros(cap, dtype=np.float64)
    buf_s2 = np.zeros(cap, dtype=np.int64)
    buf_d = np.zeros(cap, dtype=np.uint8)
    buf_out = np.zeros(cap, dtype=np.float64)
    cursor = 0
    count = 0

    def play_episode():
        nonlocal cursor, count
        s = game.initial
        episode = []
        while True:
            pi = softq.policy_from_q(q_target[s], game.act_mask[s], alpha)
            pi = softq.exploration_mix(pi, eps)
            a = softq.sample_action(pi, rng)
            t = game.next_state[s, a]
            r = game.rew[s, a]
            d = 1 if t < 0 else 0
            episode.append((s, a, r, t, d))
            if d:
                break
            s = t
        final_r = episode[-1][2]
        sign = 0.0 if final_r == 0 else (5.0 if final_r > 0 else -5.0)
        for i, (s, a, r, t, d) in enumerate(episode):
            # movers alternate; parity relative to the final transition
            outcome = sign if (len(episode) - 1 - i) % 2 == 0 else -sign
            buf_s[cursor] = s
            buf_a[cursor] = a
            buf_r[cursor] = r
            buf_s2[cursor] = t
            buf_d[cursor] = d
            buf_out[cursor] = outcome
            cursor = (cursor + 1) % cap
            count = min(count + 1, cap)

    updates = 0
    while updates < schedule.total_updates:
        play_episode()
        if count < schedule.min_fill:
            continue
        for _ in range(schedule.updates_per_episode):
            if updates >= schedule.total_updates:
                break
            idx = rng.integers(0, count, size=schedule.batch_size)
            s = buf_s[idx]
            a = buf_a[idx]
            if updates < schedule.ignition_updates:
                y = buf_out[idx]
            else:
                y = buf_r[idx].copy()
                live = buf_d[idx] == 0
                if live.any():
                    s2 = buf_s2[idx][live]
                    y_v = softq.soft_state_value_batch(
                        q_target[s2], game.act_mask[s2], alpha
                    )
                    y[live] -= gamma * y_v
            for s_i, a_i, y_i in zip(s, a, y):
                q[s_i, a_i] += schedule.lr * (y_i - q[s_i, a_i])
                visits[s_i, a_i] += 1
            if schedule.rho == 0.0:
                q_target[:] = q
            else:
                q_target *= schedule.rho
                q_target += (1.0 - schedule.rho) * q
            updates += 1

    q = np.where(legal, q, 0.0)
    q_target = np.where(legal, q_target, 0.0)
    return TabularResult(
        table=SoftQTable(q=q, act_mask=game.act_mask.copy()),
        target=SoftQTable(q=q_target, act_mask=game.act_mask.copy()),
        visits=visits,
    )


# ---------------------------------------------------------------------------
# independent scorer and liberty checker
# ---------------------------------------------------------------------------


def brute_force_score(state: GameState) -> engine.ScoreResult:
    """Tromp-Taylor score by per-empty-point BFS; shares no code with the
    engine's scorer."""
    n = state.size
    grid = state.stones
    area_black = 0
    area_white = 0
    for r in range(n):
        for c in range(n):
            v = int(grid[r, c])
            if v == BLACK:
                area_black += 1
            elif v == WHITE:
                area_white += 1
            else:
                reached = _reachable_colors(grid, n, r, c)
                if reached == {BLACK}:
                    area_black += 1
                elif reached == {WHITE}:
                    area_white += 1
    komi = state.config.komi
    return engine.ScoreResult(area_black, area_white, area_black - area_white - komi)


def _reachable_colors(grid, n, r, c):
    seen = {(r, c)}
    stack = [(r, c)]
    colors = set()
    while stack:
        y, x = stack.pop()
        for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            ny, nx = y + dy, x + dx
            if not (0 <= ny < n and 0 <= nx < n):
                continue
            v = int(grid[ny, nx])
            if v == EMPTY:
                if (ny, nx) not in seen:
                    seen.add((ny, nx))
                    stack.append((ny, nx))
            else:
                colors.add(v)
    return colors


@njit(cache=True)
def _liberties_sound_kernel(stones, size):
    n2 = size * size
    checked = np.zeros(n2, np.uint8)
    member = np.empty(n2, np.int32)
    for start in range(n2):
        if stones[start] == 0 or checked[start]:
            continue
        color = stones[start]
        m = 0
        member[m] = start
        m += 1
        checked[start] = 1
        i = 0
        has_lib = False
        while i < m:
            p = member[i]
            i += 1
            r = p // size
            c = p % size
            for k in range(4):
                if k == 0:
                    if r == 0:
                        continue
                    q = p - size
                elif k == 1:
                    if r == size - 1:
                        continue
                    q = p + size
                elif k == 2:
                    if c == 0:
                        continue
                    q = p - 1
                else:
                    if c == size - 1:
                        continue
                    q = p + 1
                if stones[q] == 0:
                    has_lib = True
                elif stones[q] == color and checked[q] == 0:
                    checked[q] = 1
                    member[m] = q
                    m += 1
        if not has_lib:
            return False
    return True


def liberties_sound(state: GameState) -> bool:
    """True iff every group on the board has at least one liberty."""
    return bool(_liberties_sound_kernel(state.stones.ravel(), state.size))


def random_positions(config: BoardConfig, rng: np.random.Generator, count: int):
    """Yield `count` positions reached by random legal self-play."""
    produced = 0
    while produced < count:
        state = engine.new_game(config)
        while not state.terminal and produced < count:
            mask = engine.legal_mask(state)
            moves = np.nonzero(mask)[0]
            state, _, _ = engine.step(state, int(moves[rng.integers(moves.size)]))
            yield state
            produced += 1
