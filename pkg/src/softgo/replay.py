"""Fixed-capacity FIFO replay buffer with uniform with-replacement sampling.

Transitions are stored in parallel arrays (structure-of-arrays) so batch
gathers are single fancy-index operations. Thread contract: many producers
may push while one consumer samples; a lock keeps records from tearing.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from . import storage
from .engine import TransitionRecord


class BufferNotReady(Exception):
    pass


@dataclass
class Batch:
    features: np.ndarray  # (B, 2, N, N)
    actions: np.ndarray  # (B,)
    rewards: np.ndarray  # (B,)
    next_features: np.ndarray
    dones: np.ndarray
    legal_masks: np.ndarray  # (B, A)
    next_legal_masks: np.ndarray
    ignition_outcomes: np.ndarray  # (B,), +-5
    serials: np.ndarray  # insertion serial numbers, for audit

    def __len__(self) -> int:
        return self.actions.shape[0]


class ReplayBuffer:
    def __init__(self, capacity: int, board_size: int, min_fill: int = 1):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.board_size = board_size
        self.min_fill = min_fill
        n, a = board_size, board_size * board_size + 1
        self._features = np.zeros((capacity, 2, n, n), dtype=np.float32)
        self._actions = np.zeros(capacity, dtype=np.int32)
        self._rewards = np.zeros(capacity, dtype=np.float32)
        self._next_features = np.zeros((capacity, 2, n, n), dtype=np.float32)
        self._dones = np.zeros(capacity, dtype=np.uint8)
        self._legal = np.zeros((capacity, a), dtype=np.uint8)
        self._next_legal = np.zeros((capacity, a), dtype=np.uint8)
        self._ignition = np.zeros(capacity, dtype=np.float32)
        self._serials = np.zeros(capacity, dtype=np.int64)
        self._cursor = 0
        self._count = 0
        self._pushed = 0  # total ever pushed; doubles as the next serial
        self._lock = threading.Lock()

    def __len__(self) -> int:
        with self._lock:
            return self._count

    def total_pushed(self) -> int:
        with self._lock:
            return self._pushed

    def is_ready(self, min_fill: int | None = None) -> bool:
        need = self.min_fill if min_fill is None else min_fill
        with self._lock:
            return self._count >= need

    def push(self, record: TransitionRecord) -> None:
        """Append one transition, overwriting the oldest when full."""
        with self._lock:
            i = self._cursor
            self._features[i] = record.state_features
            self._actions[i] = record.action
            self._rewards[i] = record.reward
            self._next_features[i] = record.next_state_features
            self._dones[i] = record.done
            self._legal[i] = record.legal_mask
            self._next_legal[i] = record.next_legal_mask
            self._ignition[i] = 0.0 if record.ignition_outcome is None else record.ignition_outcome
            self._serials[i] = self._pushed
            self._pushed += 1
            self._cursor = (i + 1) % self.capacity
            self._count = min(self._count + 1, self.capacity)

    def push_episode(self, records: list[TransitionRecord]) -> None:
        for record in records:
            self.push(record)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniformly sample `batch_size` live records, with replacement."""
        with self._lock:
            if self._count < max(self.min_fill, 1):
                raise BufferNotReady(
                    f"buffer holds {self._count} records, needs {max(self.min_fill, 1)}"
                )
            idx = rng.integers(0, self._count, size=batch_size)
            return Batch(
                features=self._features[idx].copy(),
                actions=self._actions[idx].copy(),
                rewards=self._rewards[idx].copy(),
                next_features=self._next_features[idx].copy(),
                dones=self._dones[idx].copy(),
                legal_masks=self._legal[idx].copy(),
                next_legal_masks=self._next_legal[idx].copy(),
                ignition_outcomes=self._ignition[idx].copy(),
                serials=self._serials[idx].copy(),
            )

    # -- persistence (for resumable training) --------------------------------

    def state_arrays(self) -> dict[str, np.ndarray]:
        with self._lock:
            return {
                "features": self._features[: self._count].copy(),
                "actions": self._actions[: self._count].copy(),
                "rewards": self._rewards[: self._count].copy(),
                "next_features": self._next_features[: self._count].copy(),
                "dones": self._dones[: self._count].copy(),
                "legal": self._legal[: self._count].copy(),
                "next_legal": self._next_legal[: self._count].copy(),
                "ignition": self._ignition[: self._count].copy(),
                "serials": self._serials[: self._count].copy(),
                "cursor_count_pushed": np.array(
                    [self._cursor, self._count, self._pushed], dtype=np.int64
                ),
            }

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        cursor, count, pushed = (int(v) for v in arrays["cursor_count_pushed"])
        if count > self.capacity:
            raise ValueError("saved buffer exceeds this buffer's capacity")
        with self._lock:
            self._features[:count] = arrays["features"]
            self._actions[:count] = arrays["actions"]
            self._rewards[:count] = arrays["rewards"]
            self._next_features[:count] = arrays["next_features"]
            self._dones[:count] = arrays["dones"]
            self._legal[:count] = arrays["legal"]
            self._next_legal[:count] = arrays["next_legal"]
            self._ignition[:count] = arrays["ignition"]
            self._serials[:count] = arrays["serials"]
            self._cursor = cursor
            self._count = count
            self._pushed = pushed

    def save(self, path) -> None:
        meta = {"kind": "replay", "capacity": self.capacity, "board_size": self.board_size}
        storage.write_file(path, meta, self.state_arrays())

    @classmethod
    def load(cls, path, capacity: int | None = None, min_fill: int = 1) -> "ReplayBuffer":
        meta, arrays = storage.read_file(path)
        if meta.get("kind") != "replay":
            raise storage.CorruptContainerError("container does not hold a replay buffer")
        buf = cls(capacity or meta["capacity"], meta["board_size"], min_fill=min_fill)
        buf.load_state_arrays(arrays)
        return buf
