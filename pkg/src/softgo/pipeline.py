"""Training orchestration: self-play actors, the learner loop (warm-up stage
then bootstrapped targets), parameter publication, evaluation, checkpoints.

Two modes share all building blocks. Synchronous mode interleaves one actor,
the learner, and the evaluator deterministically on the calling thread and is
bit-reproducible (including across a checkpoint/resume split). Asynchronous
mode runs the same pieces on threads for throughput; it keeps the same
correctness contracts but makes no reproducibility promise.

Wall-clock cadences are expressed in update counts so runs are
hardware-independent.
"""

from __future__ import annotations

import dataclasses
import os
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import engine, evaluation, network, replay, softq, storage, symmetry
from .engine import BLACK, WHITE, BoardConfig, TransitionRecord
from .evaluation import Evaluator, HistoryPool
from .network import NetConfig, Parameters, SgdState
from .replay import ReplayBuffer
from .softq import SoftQConfig

Schedule = list  # [(step, value), ...] piecewise-constant, step-ascending


class TrainingDiverged(Exception):
    pass


def schedule_value(schedule: Schedule, step: int) -> float:
    value = schedule[0][1]
    for at, v in schedule:
        if step >= at:
            value = v
        else:
            break
    return float(value)


def _validate_schedule(name: str, schedule: Schedule) -> None:
    if not schedule:
        raise ValueError(f"{name} must have at least one entry")
    steps = [s for s, _ in schedule]
    if steps != sorted(steps) or steps[0] != 0:
        raise ValueError(f"{name} steps must start at 0 and be non-decreasing")


@dataclass
class TrainConfig:
    board: BoardConfig = field(default_factory=lambda: BoardConfig(size=5))
    net: NetConfig | None = None  # board_size is filled in from `board`
    softq: SoftQConfig = field(default_factory=SoftQConfig)
    replay_capacity: int = 1_000_000
    batch_size: int = 256
    lr_schedule: Schedule = field(default_factory=lambda: [(0, 5e-5)])
    rho_schedule: Schedule = field(default_factory=lambda: [(0, 0.999)])
    l2_c: float = 1e-6
    momentum: float = 0.9
    grad_clip: float = 0.0  # global L2 norm cap; 0 disables
    ignition_updates: int | None = None  # None -> 2% of total_updates
    actor_count: int = 1
    publish_every_updates: int = 100
    actor_refresh_every_updates: int = 100
    total_updates: int = 10_000
    checkpoint_every: int = 0  # 0 -> only initial and final checkpoints
    seed: int = 0
    mode: str = "sync"  # or "async"
    updates_per_episode: int = 8  # sync interleave ratio
    min_fill: int | None = None  # None -> 10 * batch_size
    min_start_episodes: int = 10  # complete episodes required before updates
    eval_every_updates: int | None = None  # None -> publish cadence; 0 -> off
    pool_add_cadence: int = 1  # history-pool growth, in publications
    checkpoint_buffer: bool = True

    def __post_init__(self):
        if self.net is None:
            self.net = NetConfig(board_size=self.board.size)
        elif self.net.board_size != self.board.size:
            raise ValueError("net.board_size must match board.size")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.mode not in ("sync", "async"):
            raise ValueError(f"unknown mode {self.mode!r}")
        _validate_schedule("lr_schedule", self.lr_schedule)
        _validate_schedule("rho_schedule", self.rho_schedule)

    @property
    def resolved_ignition_updates(self) -> int:
        if self.ignition_updates is not None:
            return self.ignition_updates
        return max(1, self.total_updates // 50) if self.total_updates > 0 else 0

    @property
    def resolved_min_fill(self) -> int:
        return self.min_fill if self.min_fill is not None else 10 * self.batch_size

    @property
    def resolved_eval_every(self) -> int:
        if self.eval_every_updates is None:
            return self.publish_every_updates
        return self.eval_every_updates


# ---------------------------------------------------------------------------
# config file loading (TOML, flat keys mirror the dataclass fields)
# ---------------------------------------------------------------------------


def _coerce_schedule(raw) -> Schedule:
    return [(int(s), float(v)) for s, v in raw]


def config_from_dict(data: dict) -> TrainConfig:
    data = dict(data)
    board = BoardConfig(**data.pop("board", {}))
    net_raw = dict(data.pop("net", {}))
    net_raw.setdefault("board_size", board.size)
    net = NetConfig(**net_raw)
    softq_raw = dict(data.pop("softq", {}))
    anneal_raw = softq_raw.pop("anneal", None)
    if anneal_raw is not None:
        softq_raw["anneal"] = softq.AnnealSchedule(**anneal_raw)
    sq = SoftQConfig(**softq_raw)
    for key in ("lr_schedule", "rho_schedule"):
        if key in data:
            data[key] = _coerce_schedule(data[key])
    return TrainConfig(board=board, net=net, softq=sq, **data)


def config_to_dict(config: TrainConfig) -> dict:
    out = dataclasses.asdict(config)
    out["lr_schedule"] = [[s, v] for s, v in config.lr_schedule]
    out["rho_schedule"] = [[s, v] for s, v in config.rho_schedule]
    return out


def _apply_override(data: dict, dotted: str, raw: str) -> None:
    try:
        value = _toml().loads(f"v = {raw}")["v"]
    except Exception:
        value = raw
    node = data
    keys = dotted.split(".")
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def _toml():
    try:
        import tomllib
    except ModuleNotFoundError:  # Python 3.10
        import tomli as tomllib
    return tomllib


def load_train_config(path, overrides: list[str] | None = None) -> TrainConfig:
    """Read a TOML config file; `overrides` are dotted `key.path=value` pairs."""
    with open(path, "rb") as f:
        data = _toml().load(f)
    for item in overrides or []:
        if "=" not in item:
            raise ValueError(f"override {item!r} must look like key.path=value")
        dotted, raw = item.split("=", 1)
        _apply_override(data, dotted.strip(), raw.strip())
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# parameter hub
# ---------------------------------------------------------------------------


@dataclass
class HubSnapshot:
    version: int
    step: int
    params: Parameters


class ParameterHub:
    """Single-writer, many-reader stream of parameter snapshots.

    Readers always see a complete snapshot; published arrays are never
    mutated afterwards. Versions increase strictly.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._latest: HubSnapshot | None = None
        self._version = 0
        self.history: list[tuple[int, int]] = []  # (version, step)

    @property
    def version(self) -> int:
        with self._lock:
            return self._version

    def publish(self, params: Parameters, step: int) -> int:
        with self._lock:
            self._version += 1
            self._latest = HubSnapshot(self._version, step, params)
            self.history.append((self._version, step))
            return self._version

    def latest(self) -> HubSnapshot | None:
        with self._lock:
            return self._latest


# ---------------------------------------------------------------------------
# actor
# ---------------------------------------------------------------------------


@dataclass
class EpisodeResult:
    records: list[TransitionRecord]
    score: engine.ScoreResult
    moves: list[int]


class Actor:
    """Plays self-play games with the most recently adopted snapshot."""

    def __init__(self, config: TrainConfig, hub: ParameterHub, rng: np.random.Generator):
        self.config = config
        self.hub = hub
        self.rng = rng
        self.snapshot: HubSnapshot | None = None
        self.last_seen_version = 0

    def refresh(self) -> None:
        """Adopt the latest snapshot if it is due per the refresh cadence."""
        snap = self.hub.latest()
        if snap is None:
            return
        if snap.version < self.last_seen_version:
            raise RuntimeError("hub versions moved backwards")
        self.last_seen_version = snap.version
        if (
            self.snapshot is None
            or snap.step - self.snapshot.step >= self.config.actor_refresh_every_updates
        ):
            self.snapshot = snap

    def play_episode(self) -> EpisodeResult:
        self.refresh()
        if self.snapshot is None:
            raise RuntimeError("actor has no parameters; publish before running actors")
        cfg = self.config
        alpha = softq.actor_alpha(self.snapshot.step, cfg.softq, self.rng)
        eps = cfg.softq.min_action_prob
        state = engine.new_game(cfg.board)
        mask = engine.legal_mask(state)
        feats = engine.features(state)
        records: list[TransitionRecord] = []
        moves: list[int] = []
        while True:
            q = network.forward(self.snapshot.params, feats)[0]
            pi = softq.policy_from_q(q, mask, alpha)
            pi = softq.exploration_mix(pi, eps)
            action = softq.sample_action(pi, self.rng)
            next_state, reward, done = engine.step(state, action)
            if done:
                next_mask = np.zeros_like(mask)
                next_feats = engine.features(next_state)
            else:
                next_mask = engine.legal_mask(next_state)
                next_feats = engine.features(next_state)
            records.append(
                TransitionRecord(
                    state_features=feats,
                    action=action,
                    reward=reward,
                    next_state_features=next_feats,
                    done=done,
                    legal_mask=mask,
                    next_legal_mask=next_mask,
                )
            )
            moves.append(action)
            if done:
                break
            state, mask, feats = next_state, next_mask, next_feats
        final_score = engine.score(next_state)
        _stamp_outcomes(records, final_score.score)
        return EpisodeResult(records=records, score=final_score, moves=moves)


def _stamp_outcomes(records: list[TransitionRecord], black_score: float) -> None:
    """Tag every transition with +-5 from its mover's final win/loss."""
    if black_score == 0:
        for record in records:
            record.ignition_outcome = 0.0
        return
    winner = BLACK if black_score > 0 else WHITE
    for i, record in enumerate(records):
        mover = BLACK if i % 2 == 0 else WHITE
        record.ignition_outcome = 5.0 if mover == winner else -5.0


def run_actor(hub, buffer, config, actor_seed, stop_event, stats=None):
    """Thread body: self-play into the buffer until asked to stop."""
    actor = Actor(config, hub, np.random.default_rng(actor_seed))
    episodes = 0
    while not stop_event.is_set():
        if hub.latest() is None:
            time.sleep(0.005)
            continue
        episode = actor.play_episode()
        buffer.push_episode(episode.records)
        episodes += 1
        if stats is not None:
            stats.episode_finished()
    return episodes


class RunStats:
    def __init__(self):
        self._lock = threading.Lock()
        self._episodes = 0

    def episode_finished(self) -> None:
        with self._lock:
            self._episodes += 1

    @property
    def episodes(self) -> int:
        with self._lock:
            return self._episodes


# ---------------------------------------------------------------------------
# learner
# ---------------------------------------------------------------------------

LOG_FIELDS = "step,loss,mean_q,max_q,alpha,lr,rho,buffer_len,episodes_completed"


def _augment_batch(batch: replay.Batch, ops: np.ndarray, size: int) -> replay.Batch:
    """Apply one symmetry op per sample, jointly to s, a, s', and both masks."""
    n2 = size * size
    feats = batch.features.copy()
    nfeats = batch.next_features.copy()
    masks = batch.legal_masks.copy()
    nmasks = batch.next_legal_masks.copy()
    actions = batch.actions.copy()
    for op in range(symmetry.NUM_OPS):
        sel = ops == op
        if op == symmetry.IDENTITY or not sel.any():
            continue
        perm = symmetry.action_permutation(op, size)
        feats[sel] = symmetry.apply_planes(op, batch.features[sel])
        nfeats[sel] = symmetry.apply_planes(op, batch.next_features[sel])
        masks[np.ix_(sel.nonzero()[0], perm)] = batch.legal_masks[sel][:, :n2]
        nmasks[np.ix_(sel.nonzero()[0], perm)] = batch.next_legal_masks[sel][:, :n2]
        moved = actions[sel]
        board = moved < n2
        moved[board] = perm[moved[board]]
        actions[sel] = moved
    return replay.Batch(
        features=feats,
        actions=actions,
        rewards=batch.rewards,
        next_features=nfeats,
        dones=batch.dones,
        legal_masks=masks,
        next_legal_masks=nmasks,
        ignition_outcomes=batch.ignition_outcomes,
        serials=batch.serials,
    )


class Learner:
    """Owns the online parameters; performs one gradient update per call."""

    def __init__(
        self,
        config: TrainConfig,
        buffer: ReplayBuffer,
        hub: ParameterHub,
        rng: np.random.Generator,
        stats: RunStats,
        out_dir=None,
    ):
        self.config = config
        self.buffer = buffer
        self.hub = hub
        self.rng = rng
        self.stats = stats
        self.out_dir = out_dir
        self.online = network.init_parameters(config.net, seed=config.seed)
        self.target = self.online.copy()
        self.opt_state = SgdState.for_params(self.online)
        self.updates_done = 0
        self.log_lines: list[str] = []

    def publish(self) -> None:
        self.hub.publish(self.target.copy(), step=self.updates_done)

    def _targets(self, batch: replay.Batch, alpha: float) -> np.ndarray:
        cfg = self.config
        if self.updates_done < cfg.resolved_ignition_updates:
            y = batch.ignition_outcomes.astype(np.float64)
            if not np.all(np.abs(y) == 5.0):
                raise TrainingDiverged("warm-up target missing an episode outcome")
            return y
        y = batch.rewards.astype(np.float64)
        live = batch.dones == 0
        if live.any():
            q_next = network.forward(self.target, batch.next_features[live])
            if cfg.softq.entropy_cancellation:
                y_v = softq.expected_q_batch(q_next, batch.next_legal_masks[live], alpha)
            else:
                y_v = softq.soft_state_value_batch(q_next, batch.next_legal_masks[live], alpha)
            y[live] = softq.q_target(
                batch.rewards[live], batch.dones[live], y_v, cfg.softq.gamma
            )
        return y

    def update_once(self) -> str:
        cfg = self.config
        step = self.updates_done
        lr = schedule_value(cfg.lr_schedule, step)
        rho = schedule_value(cfg.rho_schedule, step)
        alpha = softq.alpha_at(step, cfg.softq)

        raw = self.buffer.sample(cfg.batch_size, self.rng)
        ops = self.rng.integers(symmetry.NUM_OPS, size=cfg.batch_size)
        batch = _augment_batch(raw, ops, cfg.board.size)
        targets = self._targets(batch, alpha)
        loss, grads, q = network.loss_and_grad(
            self.online, batch.features, batch.actions, targets, cfg.l2_c, return_q=True
        )
        if not np.isfinite(loss):
            self._dump_divergence(batch, targets, loss)
            raise TrainingDiverged(f"non-finite loss at update {step}")
        if cfg.grad_clip:
            network.clip_gradients(grads, cfg.grad_clip)
        network.sgd_step(self.online, grads, lr, cfg.momentum, self.opt_state)
        network.polyak(self.target, self.online, rho)
        self.updates_done += 1
        if cfg.publish_every_updates and self.updates_done % cfg.publish_every_updates == 0:
            self.publish()
        line = ",".join(
            [
                str(step),
                repr(float(loss)),
                repr(float(q.mean())),
                repr(float(q.max())),
                repr(float(alpha)),
                repr(float(lr)),
                repr(float(rho)),
                str(len(self.buffer)),
                str(self.stats.episodes),
            ]
        )
        self.log_lines.append(line)
        return line

    def _dump_divergence(self, batch: replay.Batch, targets: np.ndarray, loss: float) -> None:
        if self.out_dir is None:
            return
        path = os.path.join(self.out_dir, f"diverged_update_{self.updates_done}.bin")
        arrays = {
            "features": batch.features,
            "actions": batch.actions,
            "targets": targets,
        }
        arrays.update({f"param/{k}": v for k, v in self.online.arrays.items()})
        storage.write_file(path, {"kind": "divergence_dump", "loss": repr(loss)}, arrays)


def run_learner(buffer, hub, config, learner_rng=None, stats=None, stop_event=None, out_dir=None):
    """Thread body: update until total_updates, waiting for buffer readiness."""
    rng = learner_rng or np.random.default_rng(config.seed + 1)
    stats = stats or RunStats()
    learner = Learner(config, buffer, hub, rng, stats, out_dir)
    learner.publish()
    while learner.updates_done < config.total_updates:
        if stop_event is not None and stop_event.is_set():
            break
        if not buffer.is_ready(config.resolved_min_fill) or (
            stats.episodes < config.min_start_episodes
        ):
            time.sleep(0.005)
            continue
        learner.update_once()
    return learner


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def _rng_state(rng: np.random.Generator) -> dict:
    return rng.bit_generator.state


def _restore_rng(state: dict) -> np.random.Generator:
    rng = np.random.default_rng(0)
    rng.bit_generator.state = state
    return rng


def _spawn_rngs(seed: int, actor_count: int):
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(actor_count + 2)
    actors = [np.random.Generator(np.random.PCG64(s)) for s in children[:actor_count]]
    learner = np.random.Generator(np.random.PCG64(children[actor_count]))
    evaluator = np.random.Generator(np.random.PCG64(children[actor_count + 1]))
    return actors, learner, evaluator


class TrainingRun:
    """Everything a run owns; builds fresh or restores from a checkpoint."""

    def __init__(self, config: TrainConfig, out_dir, resume_from=None):
        self.config = config
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.stats = RunStats()
        self.hub = ParameterHub()
        self.buffer = ReplayBuffer(
            config.replay_capacity, config.board.size, min_fill=config.resolved_min_fill
        )
        actor_rngs, learner_rng, eval_rng = _spawn_rngs(config.seed, config.actor_count)
        self.learner = Learner(config, self.buffer, self.hub, learner_rng, self.stats, out_dir)
        self.actors = [Actor(config, self.hub, rng) for rng in actor_rngs]
        self.pool = HistoryPool()
        self.evaluator = Evaluator(
            self.hub, self.pool, config.board, config.softq, eval_rng, config.pool_add_cadence
        )
        self.episode_log: list[EpisodeResult] = []
        self.pending_updates = 0
        if resume_from is not None:
            self._load_checkpoint(resume_from)
        else:
            self.learner.publish()
            for actor in self.actors:
                actor.refresh()

    # -- checkpoint I/O ------------------------------------------------------

    def checkpoint_dir(self, step: int):
        return os.path.join(self.out_dir, f"ckpt_{step}")

    def save_checkpoint(self) -> str:
        step = self.learner.updates_done
        path = self.checkpoint_dir(step)
        os.makedirs(path, exist_ok=True)
        network.save_checkpoint(self.learner.online, os.path.join(path, "params.bin"))
        network.save_checkpoint(self.learner.target, os.path.join(path, "target.bin"))

        arrays: dict[str, np.ndarray] = {}
        for name, v in self.learner.opt_state.velocity.items():
            arrays[f"opt/{name}"] = v
        if self.config.checkpoint_buffer:
            for key, arr in self.buffer.state_arrays().items():
                arrays[f"buffer/{key}"] = arr
        for i, actor in enumerate(self.actors):
            if actor.snapshot is not None:
                for name, arr in actor.snapshot.params.arrays.items():
                    arrays[f"actor{i}/{name}"] = arr
        for entry in self.pool.entries:
            for name, arr in entry.params.arrays.items():
                arrays[f"pool/{entry.version}/{name}"] = arr

        meta = {
            "kind": "train_state",
            "step": step,
            "episodes": self.stats.episodes,
            "hub_version": self.hub.version,
            "hub_history": self.hub.history,
            "actors": [
                None
                if a.snapshot is None
                else {
                    "version": a.snapshot.version,
                    "step": a.snapshot.step,
                    "last_seen": a.last_seen_version,
                }
                for a in self.actors
            ],
            "pool": [
                {"version": e.version, "step": e.step, "outcomes": list(e.outcomes)}
                for e in self.pool.entries
            ],
            "evaluator": {
                "last_added_version": self.evaluator.last_added_version,
                "match_counter": self.evaluator.match_counter,
            },
            "rng": {
                "actors": [_rng_state(a.rng) for a in self.actors],
                "learner": _rng_state(self.learner.rng),
                "evaluator": _rng_state(self.evaluator.rng),
            },
            "net": {
                "board_size": self.config.net.board_size,
                "blocks": self.config.net.blocks,
                "filters": self.config.net.filters,
            },
            "online_version": self.learner.online.version,
            "target_version": self.learner.target.version,
            "pending_updates": self.pending_updates,
        }
        storage.write_file(os.path.join(path, "state.bin"), meta, arrays)
        return path

    def _load_checkpoint(self, path) -> None:
        self.learner.online = network.load_checkpoint(os.path.join(path, "params.bin"))
        self.learner.target = network.load_checkpoint(os.path.join(path, "target.bin"))
        meta, arrays = storage.read_file(os.path.join(path, "state.bin"))
        if meta.get("kind") != "train_state":
            raise storage.CorruptContainerError("state.bin does not hold training state")
        saved_net = meta["net"]
        now = self.config.net
        if (saved_net["board_size"], saved_net["blocks"], saved_net["filters"]) != (
            now.board_size,
            now.blocks,
            now.filters,
        ):
            raise ValueError("checkpoint network architecture does not match the config")

        self.learner.online.version = int(meta.get("online_version", 0))
        self.learner.target.version = int(meta.get("target_version", 0))
        self.learner.opt_state = SgdState(
            {k.split("/", 1)[1]: v for k, v in arrays.items() if k.startswith("opt/")}
        )
        self.learner.updates_done = int(meta["step"])
        self.stats._episodes = int(meta["episodes"])

        buffer_arrays = {
            k.split("/", 1)[1]: v for k, v in arrays.items() if k.startswith("buffer/")
        }
        if buffer_arrays:
            self.buffer.load_state_arrays(buffer_arrays)

        self.hub._version = int(meta["hub_version"])
        self.hub.history = [tuple(h) for h in meta["hub_history"]]

        rng_meta = meta["rng"]
        self.learner.rng = _restore_rng(rng_meta["learner"])
        self.evaluator.rng = _restore_rng(rng_meta["evaluator"])
        for actor, st in zip(self.actors, rng_meta["actors"]):
            actor.rng = _restore_rng(st)

        for i, (actor, info) in enumerate(zip(self.actors, meta["actors"])):
            if info is None:
                continue
            params = Parameters(
                config=self.learner.online.config,
                arrays={
                    k.split("/", 1)[1]: v for k, v in arrays.items() if k.startswith(f"actor{i}/")
                },
            )
            actor.snapshot = HubSnapshot(info["version"], info["step"], params)
            actor.last_seen_version = info["last_seen"]

        for entry_meta in meta["pool"]:
            version = entry_meta["version"]
            params = Parameters(
                config=self.learner.online.config,
                arrays={
                    k.split("/", 2)[2]: v
                    for k, v in arrays.items()
                    if k.startswith(f"pool/{version}/")
                },
                version=version,
            )
            entry = self.pool.add(version, entry_meta["step"], params)
            entry.outcomes.extend(entry_meta["outcomes"])
        self.evaluator.last_added_version = meta["evaluator"]["last_added_version"]
        self.evaluator.match_counter = meta["evaluator"]["match_counter"]
        self.pending_updates = int(meta.get("pending_updates", 0))

        # Re-publish the restored target so late-joining readers have a
        # snapshot; hub version continues from the saved counter.
        self.hub._latest = HubSnapshot(
            self.hub._version, self.learner.updates_done, self.learner.target.copy()
        )

    # -- driving -------------------------------------------------------------

    def _ready(self) -> bool:
        return (
            self.buffer.is_ready(self.config.resolved_min_fill)
            and self.stats.episodes >= self.config.min_start_episodes
        )

    def _play_episode_sync(self) -> None:
        episode = self.actors[0].play_episode()
        self.buffer.push_episode(episode.records)
        self.stats.episode_finished()

    def run_sync(self, log_file, eval_file) -> None:
        # One deterministic interleave: an episode, then a burst of updates.
        # `pending_updates` tracks the position inside a burst so checkpoints
        # can land on exact update multiples and still resume bit-exactly.
        cfg = self.config
        eval_every = cfg.resolved_eval_every
        while self.learner.updates_done < cfg.total_updates:
            if self.pending_updates == 0:
                self._play_episode_sync()
                if not self._ready():
                    continue
                self.pending_updates = cfg.updates_per_episode
            while self.pending_updates > 0 and self.learner.updates_done < cfg.total_updates:
                line = self.learner.update_once()
                self.pending_updates -= 1
                log_file.write(line + "\n")
                done = self.learner.updates_done
                if eval_every and done % eval_every == 0:
                    point = self.evaluator.step_once()
                    if point is not None:
                        eval_file.write(f"{point.step},{point.hsg!r},{point.pool_size}\n")
                if cfg.checkpoint_every and done % cfg.checkpoint_every == 0:
                    self.save_checkpoint()

    def run_async(self, log_file, eval_file) -> None:
        cfg = self.config
        stop = threading.Event()
        threads = []
        for actor in self.actors:
            t = threading.Thread(
                target=self._actor_thread, args=(actor, stop), daemon=True, name="actor"
            )
            t.start()
            threads.append(t)
        eval_thread = threading.Thread(
            target=self._evaluator_thread, args=(stop, eval_file), daemon=True, name="evaluator"
        )
        eval_thread.start()
        threads.append(eval_thread)
        try:
            next_ckpt = cfg.checkpoint_every or None
            while self.learner.updates_done < cfg.total_updates:
                if not self._ready():
                    time.sleep(0.005)
                    continue
                line = self.learner.update_once()
                log_file.write(line + "\n")
                if next_ckpt is not None and self.learner.updates_done >= next_ckpt:
                    self.save_checkpoint()
                    next_ckpt += cfg.checkpoint_every
        finally:
            stop.set()
            for t in threads:
                t.join(timeout=60)

    def _actor_thread(self, actor: Actor, stop: threading.Event) -> None:
        while not stop.is_set():
            episode = actor.play_episode()
            self.buffer.push_episode(episode.records)
            self.stats.episode_finished()

    def _evaluator_thread(self, stop: threading.Event, eval_file) -> None:
        last_version = 0
        while not stop.is_set():
            if self.hub.version == last_version:
                time.sleep(0.01)
                continue
            last_version = self.hub.version
            point = self.evaluator.step_once()
            if point is not None:
                eval_file.write(f"{point.step},{point.hsg!r},{point.pool_size}\n")


@dataclass
class TrainResult:
    out_dir: str
    final_checkpoint: str
    log_lines: list[str]
    hsg_points: list[evaluation.HSGPoint]
    final_params: Parameters
    episodes: int


def run_training(config: TrainConfig, out_dir, resume_from=None) -> TrainResult:
    """Train per config; returns the final checkpoint path and run logs.

    Fresh runs write an initial checkpoint before any update; every run
    writes a final checkpoint at its last completed update. Resuming appends
    to the output directory's logs.
    """
    run = TrainingRun(config, out_dir, resume_from=resume_from)
    log_path = os.path.join(out_dir, "train_log.csv")
    eval_path = os.path.join(out_dir, "eval_log.csv")
    fresh = resume_from is None
    if fresh:
        run.save_checkpoint()  # ckpt_0 (or ckpt at the restored step)
    log_mode = "w" if fresh else "a"
    with open(log_path, log_mode) as log_file, open(eval_path, log_mode) as eval_file:
        if fresh:
            log_file.write(LOG_FIELDS + "\n")
            eval_file.write("step,hsg,pool_size\n")
        if config.total_updates > run.learner.updates_done:
            if config.mode == "sync":
                run.run_sync(log_file, eval_file)
            else:
                run.run_async(log_file, eval_file)
    final = run.save_checkpoint()
    return TrainResult(
        out_dir=out_dir,
        final_checkpoint=final,
        log_lines=list(run.learner.log_lines),
        hsg_points=list(run.evaluator.points),
        final_params=run.learner.online.copy(),
        episodes=run.stats.episodes,
    )
