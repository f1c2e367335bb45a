"""N x N Go environment: rules, area scoring, observations, and network features.

The board lives in a flat int8 array so the rule kernels can be JIT-compiled
with numba; a GameState is treated as an immutable value and `step` returns a
fresh state. Scoring is Tromp-Taylor area scoring (stones + empty regions
reaching only one color), with komi applied from Black's perspective.

Ko handling is configurable: `simple_ko` forbids the immediate recapture point
(one forbidden point per position), `positional_superko` forbids any board
play that recreates a previous whole-board position (pass is always legal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

EMPTY = 0
BLACK = 1
WHITE = 2

SIMPLE_KO = "simple_ko"
POSITIONAL_SUPERKO = "positional_superko"

# Fixed entropy prefix for the Zobrist tables so position hashes are stable
# across processes and runs.
_ZOBRIST_SALT = 0x60B0A2D


def opponent(color: int) -> int:
    return BLACK + WHITE - color


class IllegalMoveError(Exception):
    """Raised by `step` for an illegal action; `rule` names the violated rule."""

    def __init__(self, rule: str, action: int):
        super().__init__(f"illegal move {action}: {rule}")
        self.rule = rule
        self.action = action


@dataclass(frozen=True)
class BoardConfig:
    size: int = 9
    komi: float = 7.5
    max_moves: int | None = None  # defaults to 2 * size**2
    suicide_allowed: bool = False
    superko: str = SIMPLE_KO
    shaped_reward: bool = True  # add the 2*log10(1+|score|) bonus to the +-5 core
    allow_integer_komi: bool = False

    def __post_init__(self):
        if not 3 <= self.size <= 19:
            raise ValueError(f"board size must be in [3, 19], got {self.size}")
        if self.max_moves is None:
            object.__setattr__(self, "max_moves", 2 * self.size * self.size)
        if self.max_moves < 2:
            raise ValueError(f"max_moves must be >= 2, got {self.max_moves}")
        if self.superko not in (SIMPLE_KO, POSITIONAL_SUPERKO):
            raise ValueError(f"unknown superko mode {self.superko!r}")
        if self.komi == int(self.komi) and not self.allow_integer_komi:
            raise ValueError(
                "komi must have a fractional part to rule out ties "
                "(set allow_integer_komi=True to override)"
            )

    @property
    def num_points(self) -> int:
        return self.size * self.size

    @property
    def pass_action(self) -> int:
        return self.size * self.size

    @property
    def num_actions(self) -> int:
        return self.size * self.size + 1


@dataclass(frozen=True)
class ScoreResult:
    area_black: int
    area_white: int
    score: float  # Black's perspective: area_black - area_white - komi


@dataclass
class GameState:
    """One Go position. Treat as immutable: `step` never mutates its input."""

    config: BoardConfig
    stones: np.ndarray  # (N, N) int8, values EMPTY/BLACK/WHITE
    to_move: int
    ko_point: int | None  # flat index forbidden by simple ko, or None
    consecutive_passes: int
    move_count: int
    terminal: bool
    # Hashes of all board positions seen so far, sorted; only tracked under
    # positional superko.
    history: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.config.size

    @property
    def position_history(self) -> frozenset | None:
        if self.history is None:
            return None
        return frozenset(int(h) for h in self.history)


# ---------------------------------------------------------------------------
# numba kernels (flat int8 board, actions as flat indices, pass = N*N)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _label_groups(stones, size, labels, libs):
    """Label connected same-color groups; libs[g] = liberty count of group g."""
    n2 = size * size
    for i in range(n2):
        labels[i] = -1
    n_groups = 0
    stack = np.empty(n2, np.int32)
    lib_seen = np.zeros(n2, np.int32)
    for start in range(n2):
        if stones[start] == EMPTY or labels[start] >= 0:
            continue
        color = stones[start]
        gid = n_groups
        n_groups += 1
        nlibs = 0
        sp = 0
        stack[sp] = start
        sp += 1
        labels[start] = gid
        while sp > 0:
            sp -= 1
            p = stack[sp]
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
                s = stones[q]
                if s == EMPTY:
                    if lib_seen[q] != gid + 1:
                        lib_seen[q] = gid + 1
                        nlibs += 1
                elif s == color and labels[q] < 0:
                    labels[q] = gid
                    stack[sp] = q
                    sp += 1
        libs[gid] = nlibs
    return n_groups


@njit(cache=True)
def _flood_group(stones, size, start, mask):
    """Fill mask with the group containing `start`; return (size, liberties)."""
    n2 = size * size
    color = stones[start]
    stack = np.empty(n2, np.int32)
    sp = 0
    stack[sp] = start
    sp += 1
    mask[start] = 1
    count = 1
    nlibs = 0
    lib_seen = np.zeros(n2, np.uint8)
    while sp > 0:
        sp -= 1
        p = stack[sp]
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
            s = stones[q]
            if s == EMPTY:
                if lib_seen[q] == 0:
                    lib_seen[q] = 1
                    nlibs += 1
            elif s == color and mask[q] == 0:
                mask[q] = 1
                stack[sp] = q
                sp += 1
                count += 1
    return count, nlibs


@njit(cache=True)
def _legal_mask_kernel(stones, size, to_move, ko_point, suicide_allowed, out):
    n2 = size * size
    labels = np.empty(n2, np.int32)
    libs = np.empty(n2, np.int32)
    _label_groups(stones, size, labels, libs)
    enemy = BLACK + WHITE - to_move
    for p in range(n2):
        if stones[p] != EMPTY:
            out[p] = 0
            continue
        r = p // size
        c = p % size
        has_empty = False
        can_capture = False
        friendly_alive = False
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
            s = stones[q]
            if s == EMPTY:
                has_empty = True
            elif s == enemy:
                # an adjacent enemy group in atari has its last liberty at p
                if libs[labels[q]] == 1:
                    can_capture = True
            else:
                if libs[labels[q]] >= 2:
                    friendly_alive = True
        if has_empty or can_capture or friendly_alive or suicide_allowed:
            out[p] = 1
        else:
            out[p] = 0
    if ko_point >= 0:
        out[ko_point] = 0
    out[n2] = 1  # pass is always legal


@njit(cache=True)
def _apply_move_kernel(stones, size, to_move, action, suicide_allowed):
    """Place a stone in-place, remove captures. Returns (status, ko, captured).

    status: 0 = ok, 1 = suicide while suicide is disallowed (board is left
    dirty; caller must discard it). ko is the new simple-ko point or -1.
    """
    n2 = size * size
    enemy = BLACK + WHITE - to_move
    stones[action] = to_move
    captured = 0
    last_cap = -1
    r = action // size
    c = action % size
    seen = np.zeros(n2, np.uint8)
    for k in range(4):
        if k == 0:
            if r == 0:
                continue
            q = action - size
        elif k == 1:
            if r == size - 1:
                continue
            q = action + size
        elif k == 2:
            if c == 0:
                continue
            q = action - 1
        else:
            if c == size - 1:
                continue
            q = action + 1
        if stones[q] == enemy and seen[q] == 0:
            gmask = np.zeros(n2, np.uint8)
            _, nlibs = _flood_group(stones, size, q, gmask)
            for i in range(n2):
                if gmask[i]:
                    seen[i] = 1
            if nlibs == 0:
                for i in range(n2):
                    if gmask[i]:
                        stones[i] = EMPTY
                        captured += 1
                        last_cap = i
    own = np.zeros(n2, np.uint8)
    own_size, own_libs = _flood_group(stones, size, action, own)
    if own_libs == 0:
        if not suicide_allowed:
            return 1, -1, 0
        for i in range(n2):
            if own[i]:
                stones[i] = EMPTY
        return 0, -1, captured
    ko = -1
    if captured == 1 and own_size == 1 and own_libs == 1:
        ko = last_cap
    return 0, ko, captured


@njit(cache=True)
def _score_kernel(stones, size, out):
    n2 = size * size
    black = 0
    white = 0
    for p in range(n2):
        if stones[p] == BLACK:
            black += 1
        elif stones[p] == WHITE:
            white += 1
    visited = np.zeros(n2, np.uint8)
    stack = np.empty(n2, np.int32)
    for start in range(n2):
        if stones[start] != EMPTY or visited[start]:
            continue
        sp = 0
        stack[sp] = start
        sp += 1
        visited[start] = 1
        region_size = 0
        reach_b = False
        reach_w = False
        while sp > 0:
            sp -= 1
            p = stack[sp]
            region_size += 1
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
                s = stones[q]
                if s == EMPTY:
                    if visited[q] == 0:
                        visited[q] = 1
                        stack[sp] = q
                        sp += 1
                elif s == BLACK:
                    reach_b = True
                else:
                    reach_w = True
        if reach_b and not reach_w:
            black += region_size
        elif reach_w and not reach_b:
            white += region_size
    out[0] = black
    out[1] = white


@njit(cache=True)
def _board_hash(stones, zobrist):
    h = np.uint64(0)
    for p in range(stones.shape[0]):
        s = stones[p]
        if s != EMPTY:
            h ^= zobrist[s - 1, p]
    return h


@njit(cache=True)
def _superko_prune(stones, size, to_move, suicide_allowed, history, zobrist, mask):
    """Zero mask entries whose play would recreate a previous board position."""
    n2 = size * size
    scratch = np.empty(n2, np.int8)
    for p in range(n2):
        if mask[p] == 0:
            continue
        for i in range(n2):
            scratch[i] = stones[i]
        status, _, _ = _apply_move_kernel(scratch, size, to_move, p, suicide_allowed)
        if status != 0:
            mask[p] = 0
            continue
        h = _board_hash(scratch, zobrist)
        lo = 0
        hi = history.shape[0]
        while lo < hi:
            mid = (lo + hi) // 2
            if history[mid] < h:
                lo = mid + 1
            else:
                hi = mid
        if lo < history.shape[0] and history[lo] == h:
            mask[p] = 0


# ---------------------------------------------------------------------------
# Zobrist tables, one per board size
# ---------------------------------------------------------------------------

_zobrist_cache: dict[int, np.ndarray] = {}


def zobrist_table(size: int) -> np.ndarray:
    table = _zobrist_cache.get(size)
    if table is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([_ZOBRIST_SALT, size])))
        table = rng.integers(0, 2**64, size=(2, size * size), dtype=np.uint64)
        _zobrist_cache[size] = table
    return table


def position_hash(state: GameState) -> int:
    """Hash of the stone configuration only (positional, ignores turn)."""
    return int(_board_hash(state.stones.ravel(), zobrist_table(state.size)))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def new_game(config: BoardConfig) -> GameState:
    """Fresh empty board, Black to move."""
    stones = np.zeros((config.size, config.size), dtype=np.int8)
    history = None
    if config.superko == POSITIONAL_SUPERKO:
        h = _board_hash(stones.ravel(), zobrist_table(config.size))
        history = np.array([h], dtype=np.uint64)
    return GameState(
        config=config,
        stones=stones,
        to_move=BLACK,
        ko_point=None,
        consecutive_passes=0,
        move_count=0,
        terminal=False,
        history=history,
    )


def legal_mask(state: GameState) -> np.ndarray:
    """Binary vector over N*N+1 actions; raises on terminal states."""
    if state.terminal:
        raise ValueError("legal_mask is undefined on a terminal state")
    cfg = state.config
    out = np.empty(cfg.num_actions, dtype=np.uint8)
    ko = -1 if state.ko_point is None else state.ko_point
    flat = state.stones.ravel()
    _legal_mask_kernel(flat, cfg.size, state.to_move, ko, cfg.suicide_allowed, out)
    if state.history is not None:
        _superko_prune(
            flat, cfg.size, state.to_move, cfg.suicide_allowed,
            state.history, zobrist_table(cfg.size), out,
        )
    return out


def step(state: GameState, action: int) -> tuple[GameState, float, int]:
    """Apply one action; returns (next_state, reward, done).

    The reward is nonzero only when the move ends the game, and is given from
    the mover's perspective.
    """
    cfg = state.config
    if state.terminal:
        raise IllegalMoveError("terminal", action)
    if not 0 <= action <= cfg.pass_action:
        raise IllegalMoveError("out_of_range", action)

    mover = state.to_move
    if action == cfg.pass_action:
        stones = state.stones.copy()
        ko = -1
        passes = state.consecutive_passes + 1
        history = state.history  # pass does not create a new position
    else:
        flat = state.stones.ravel()
        if flat[action] != EMPTY:
            raise IllegalMoveError("occupied", action)
        if state.ko_point is not None and action == state.ko_point:
            raise IllegalMoveError("ko", action)
        stones = state.stones.copy()
        status, ko, _ = _apply_move_kernel(
            stones.ravel(), cfg.size, mover, action, cfg.suicide_allowed
        )
        if status != 0:
            raise IllegalMoveError("suicide", action)
        passes = 0
        history = state.history
        if history is not None:
            h = _board_hash(stones.ravel(), zobrist_table(cfg.size))
            idx = int(np.searchsorted(history, h))
            if idx < len(history) and history[idx] == h:
                raise IllegalMoveError("superko", action)
            history = np.insert(history, idx, np.uint64(h))

    move_count = state.move_count + 1
    terminal = passes >= 2 or move_count >= cfg.max_moves
    next_state = GameState(
        config=cfg,
        stones=stones,
        to_move=opponent(mover),
        ko_point=None if ko < 0 else int(ko),
        consecutive_passes=passes,
        move_count=move_count,
        terminal=terminal,
        history=history,
    )
    reward = 0.0
    done = 0
    if terminal:
        done = 1
        black_reward = reward_from_score(score(next_state).score, cfg.shaped_reward)
        reward = black_reward if mover == BLACK else -black_reward
    return next_state, reward, done


def score(state: GameState) -> ScoreResult:
    """Tromp-Taylor area score; defined on any position, terminal or not."""
    out = np.empty(2, dtype=np.int64)
    _score_kernel(state.stones.ravel(), state.size, out)
    area_black, area_white = int(out[0]), int(out[1])
    return ScoreResult(area_black, area_white, area_black - area_white - state.config.komi)


def reward_from_score(score_value: float, shaped: bool = True) -> float:
    """Map a Black-perspective score to the terminal reward.

    Core win/loss signal is +-5; the shaped variant adds 2*log10(1+|score|)
    to reward larger margins. A zero score (unreachable with fractional komi)
    maps to 0.
    """
    if score_value == 0:
        return 0.0
    sign = 1.0 if score_value > 0 else -1.0
    if shaped:
        return sign * (5.0 + 2.0 * math.log10(1.0 + abs(score_value)))
    return sign * 5.0


def observe(state: GameState) -> np.ndarray:
    """(N, N, 6) binary planes: black, white, turn, invalid, last-was-pass, over."""
    n = state.size
    planes = np.zeros((n, n, 6), dtype=np.uint8)
    planes[:, :, 0] = state.stones == BLACK
    planes[:, :, 1] = state.stones == WHITE
    if state.to_move == WHITE:
        planes[:, :, 2] = 1
    if state.terminal:
        planes[:, :, 3] = 1
        planes[:, :, 5] = 1
    else:
        mask = legal_mask(state)
        planes[:, :, 3] = (mask[: n * n] == 0).reshape(n, n)
    if state.consecutive_passes >= 1:
        planes[:, :, 4] = 1
    return planes


def features(state: GameState) -> np.ndarray:
    """(2, N, N) float32 network input.

    Channel 0: -1 for Black stones, +1 for White stones, 0.5 at the simple-ko
    point, 0 elsewhere. Channel 1: constant 0 (Black to move) or 1 (White).
    """
    n = state.size
    planes = np.zeros((2, n, n), dtype=np.float32)
    planes[0][state.stones == BLACK] = -1.0
    planes[0][state.stones == WHITE] = 1.0
    if state.ko_point is not None:
        planes[0].ravel()[state.ko_point] = 0.5
    if state.to_move == WHITE:
        planes[1] = 1.0
    return planes


# ---------------------------------------------------------------------------
# Transition records
# ---------------------------------------------------------------------------


@dataclass
class TransitionRecord:
    """One (s, a, r, s', d) tuple with legal masks and the episode outcome."""

    state_features: np.ndarray  # (2, N, N) float32
    action: int
    reward: float  # mover's perspective; nonzero only when done
    next_state_features: np.ndarray
    done: int
    legal_mask: np.ndarray  # (N*N+1,) uint8, mask for s
    next_legal_mask: np.ndarray  # zeros when s' is terminal
    ignition_outcome: float | None = None  # +5 if this mover won the episode


# ---------------------------------------------------------------------------
# Text formats: board dump and SGF export
# ---------------------------------------------------------------------------

_DUMP_CHARS = {EMPTY: ".", BLACK: "X", WHITE: "O"}
_DUMP_VALUES = {v: k for k, v in _DUMP_CHARS.items()}


def board_dump(state: GameState) -> str:
    """One row per line, '.' empty, 'X' Black, 'O' White."""
    return "\n".join(
        "".join(_DUMP_CHARS[int(v)] for v in row) for row in state.stones
    )


def state_from_dump(
    text: str,
    config: BoardConfig | None = None,
    to_move: int = BLACK,
    ko_point: int | None = None,
) -> GameState:
    """Build a GameState from a board dump (test fixture helper)."""
    rows = [line.strip() for line in text.strip().splitlines()]
    n = len(rows)
    if config is None:
        config = BoardConfig(size=n)
    if config.size != n or any(len(r) != n for r in rows):
        raise ValueError("dump does not match the configured board size")
    stones = np.array(
        [[_DUMP_VALUES[ch] for ch in row] for row in rows], dtype=np.int8
    )
    history = None
    if config.superko == POSITIONAL_SUPERKO:
        h = _board_hash(stones.ravel(), zobrist_table(n))
        history = np.array([h], dtype=np.uint64)
    return GameState(
        config=config,
        stones=stones,
        to_move=to_move,
        ko_point=ko_point,
        consecutive_passes=0,
        move_count=0,
        terminal=False,
        history=history,
    )


def _sgf_coord(action: int, size: int) -> str:
    if action == size * size:
        return ""  # pass
    row, col = divmod(action, size)
    letters = "abcdefghijklmnopqrs"
    return letters[col] + letters[row]


def game_to_sgf(
    moves: list[int],
    config: BoardConfig,
    result: ScoreResult | None = None,
) -> str:
    """FF[4] record of a finished game; moves alternate starting with Black."""
    props = f"(;FF[4]GM[1]SZ[{config.size}]KM[{config.komi}]RU[Chinese]"
    if result is not None:
        if result.score > 0:
            props += f"RE[B+{result.score}]"
        elif result.score < 0:
            props += f"RE[W+{-result.score}]"
        else:
            props += "RE[0]"
    body = []
    for i, action in enumerate(moves):
        color = "B" if i % 2 == 0 else "W"
        body.append(f";{color}[{_sgf_coord(action, config.size)}]")
    return props + "".join(body) + ")"


def replay_moves(config: BoardConfig, moves: list[int]) -> GameState:
    """Apply a move list from an empty board; convenience for tests and SGF."""
    state = new_game(config)
    for action in moves:
        state, _, _ = step(state, action)
    return state


def _unchecked_board_config(**kwargs) -> BoardConfig:
    """Construct a BoardConfig without range validation.

    The rule kernels work for any size >= 2; the public constructor enforces
    the 3..19 range, but exhaustive-enumeration oracles legitimately want 2x2
    boards. Not part of the public surface.
    """
    values = dict(
        size=9,
        komi=7.5,
        max_moves=None,
        suicide_allowed=False,
        superko=SIMPLE_KO,
        shaped_reward=True,
        allow_integer_komi=False,
    )
    values.update(kwargs)
    if values["max_moves"] is None:
        values["max_moves"] = 2 * values["size"] * values["size"]
    config = object.__new__(BoardConfig)
    for key, value in values.items():
        object.__setattr__(config, key, value)
    return config
