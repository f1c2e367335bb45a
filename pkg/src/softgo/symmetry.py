"""Dihedral symmetries of the square board (8 ops) for training augmentation.

Op ids 0..7: id % 4 is the number of 90-degree clockwise rotations, id // 4
selects an initial left-right mirror. The same op can be applied to spatial
planes, to action indices, and to length N*N+1 vectors (masks, Q, policies);
pass is a fixed point of every op.
"""

from __future__ import annotations

import numpy as np

NUM_OPS = 8
IDENTITY = 0
ALL_OPS = tuple(range(NUM_OPS))


def apply_planes(op: int, planes: np.ndarray, axes: tuple[int, int] = (-2, -1)) -> np.ndarray:
    """Transform the two spatial axes of a plane stack (default channels-first)."""
    if planes.shape[axes[0]] != planes.shape[axes[1]]:
        raise ValueError("spatial axes must be square")
    out = planes
    if op >= 4:
        out = np.flip(out, axis=axes[1])
    k = op % 4
    if k:
        out = np.rot90(out, k=-k, axes=axes)
    return np.ascontiguousarray(out)


def apply_observation(op: int, obs: np.ndarray) -> np.ndarray:
    """Observation tensors are (N, N, C): spatial axes come first."""
    return apply_planes(op, obs, axes=(0, 1))


_perm_cache: dict[tuple[int, int], np.ndarray] = {}


def action_permutation(op: int, size: int) -> np.ndarray:
    """perm[old_flat_index] = new_flat_index under `op` (board points only)."""
    key = (op, size)
    perm = _perm_cache.get(key)
    if perm is None:
        grid = np.arange(size * size).reshape(size, size)
        moved = apply_planes(op, grid, axes=(0, 1)).ravel()
        perm = np.empty(size * size, dtype=np.int64)
        perm[moved] = np.arange(size * size)
        _perm_cache[key] = perm
    return perm


def apply_action(op: int, action: int, size: int) -> int:
    if action == size * size:
        return action
    return int(action_permutation(op, size)[action])


def apply_vector(op: int, vec: np.ndarray, size: int) -> np.ndarray:
    """Permute a length N*N+1 vector (mask / Q / policy); pass entry stays put."""
    n2 = size * size
    out = vec.copy()
    out[action_permutation(op, size)] = vec[:n2]
    return out


def _composition_table() -> np.ndarray:
    # Derived from the index permutations on a 4x4 grid, where all 8 ops
    # act distinctly.
    perms = [action_permutation(op, 4) for op in ALL_OPS]
    table = np.empty((NUM_OPS, NUM_OPS), dtype=np.int64)
    by_key = {perm.tobytes(): op for op, perm in enumerate(perms)}
    for a in ALL_OPS:
        for b in ALL_OPS:
            combined = perms[a][perms[b]]
            table[a, b] = by_key[combined.tobytes()]
    return table


_COMPOSE = _composition_table()
_INVERSE = np.array(
    [int(np.nonzero(_COMPOSE[a] == IDENTITY)[0][0]) for a in ALL_OPS], dtype=np.int64
)


def compose(a: int, b: int) -> int:
    """Op equivalent to applying b first, then a."""
    return int(_COMPOSE[a, b])


def inverse(op: int) -> int:
    return int(_INVERSE[op])


def sample(rng: np.random.Generator) -> int:
    return int(rng.integers(NUM_OPS))


def apply_state(op: int, state):
    """Transform a GameState (stones grid and ko point); test/analysis helper.

    Positional-superko states are rejected: their position-hash history does
    not transform with the board.
    """
    from . import engine

    if state.history is not None:
        raise ValueError("cannot transform a state that carries a superko history")
    stones = apply_planes(op, state.stones, axes=(0, 1))
    ko = state.ko_point
    if ko is not None:
        ko = apply_action(op, ko, state.size)
    return engine.GameState(
        config=state.config,
        stones=stones.astype(np.int8),
        to_move=state.to_move,
        ko_point=ko,
        consecutive_passes=state.consecutive_passes,
        move_count=state.move_count,
        terminal=state.terminal,
        history=None,
    )
