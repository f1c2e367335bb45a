"""Match running, history pool arithmetic, the HSG curve, baselines."""

import numpy as np
import pytest

from softgo import evaluation, network, pipeline
from softgo.engine import BoardConfig, legal_mask, new_game
from softgo.evaluation import (
    Evaluator,
    HistoryPool,
    baseline_opponent,
    hsg,
    net_agent,
    play_match,
    play_series,
    update_pool,
)
from softgo.network import NetConfig
from softgo.softq import SoftQConfig


def make_params(seed=0, **kw):
    cfg = dict(board_size=5, blocks=1, filters=8)
    cfg.update(kw)
    return network.init_parameters(NetConfig(**cfg), seed=seed)


BOARD = BoardConfig(size=5)
SOFTQ = SoftQConfig(alpha=0.3)


# ---------------------------------------------------------------------------
# matches
# ---------------------------------------------------------------------------


def test_self_match_argmax_terminates():
    params = make_params(0)
    result = play_match(params, params, BOARD, SOFTQ, mode="argmax", seed=1)
    assert result.winner in ("A", "B")
    assert 1 <= result.move_count <= BOARD.max_moves
    assert result.sgf.startswith("(;FF[4]")


def test_match_deterministic_given_seed():
    a, b = make_params(1), make_params(2)
    r1 = play_match(a, b, BOARD, SOFTQ, mode="sampling", seed=9)
    r2 = play_match(a, b, BOARD, SOFTQ, mode="sampling", seed=9)
    assert r1.sgf == r2.sgf
    assert r1.winner == r2.winner
    r3 = play_match(a, b, BOARD, SOFTQ, mode="sampling", seed=10)
    assert r3.sgf != r1.sgf


def test_match_winner_consistent_with_score():
    a, b = make_params(3), make_params(4)
    for seed in range(6):
        r = play_match(a, b, BOARD, SOFTQ, mode="sampling", seed=seed)
        assert (r.winner == "A") == (r.score > 0)  # A played Black


def test_series_color_alternation():
    a, b = make_params(5), make_params(6)
    agent_a = net_agent(a, "sampling", 0.3)
    agent_b = net_agent(b, "sampling", 0.3)
    results = play_series(agent_a, agent_b, BOARD, 8, seed=2)
    assert len(results) == 8
    # even-indexed games: A is Black, so winner A iff score > 0
    for i, r in enumerate(results):
        if i % 2 == 0:
            assert (r.winner == "A") == (r.score > 0)
        else:
            assert (r.winner == "A") == (r.score < 0)


def test_net_agent_rejects_unknown_mode():
    with pytest.raises(ValueError):
        net_agent(make_params(), mode="greedy")


# ---------------------------------------------------------------------------
# baseline opponent
# ---------------------------------------------------------------------------


def test_baseline_uniform_over_board_moves():
    agent = baseline_opponent(pass_prob=0.0)
    state = new_game(BOARD)
    mask = legal_mask(state)
    rng = np.random.default_rng(0)
    draws = np.array([agent(state, mask, rng) for _ in range(20_000)])
    assert (draws != BOARD.pass_action).all()
    counts = np.bincount(draws, minlength=26)[:25]
    assert (np.abs(counts - 800) < 5 * np.sqrt(20_000 * (1 / 25) * (24 / 25))).all()


def test_baseline_passes_when_forced():
    agent = baseline_opponent(pass_prob=0.0)
    mask = np.zeros(26, dtype=np.uint8)
    mask[25] = 1
    action = agent(new_game(BOARD), mask, np.random.default_rng(1))
    assert action == 25


def test_baseline_small_pass_probability():
    agent = baseline_opponent(pass_prob=0.25)
    state = new_game(BOARD)
    mask = legal_mask(state)
    rng = np.random.default_rng(2)
    draws = np.array([agent(state, mask, rng) for _ in range(4000)])
    pass_rate = (draws == 25).mean()
    assert 0.2 < pass_rate < 0.3


def test_baseline_never_picks_illegal():
    agent = baseline_opponent(pass_prob=0.0)
    mask = np.zeros(26, dtype=np.uint8)
    mask[[3, 17, 25]] = 1
    rng = np.random.default_rng(3)
    state = new_game(BOARD)
    for _ in range(200):
        assert agent(state, mask, rng) in (3, 17)


def test_unknown_baseline_kind():
    with pytest.raises(ValueError):
        baseline_opponent("strongest_engine")


# ---------------------------------------------------------------------------
# history pool and HSG
# ---------------------------------------------------------------------------


def test_empty_pool_hsg_zero():
    assert hsg(HistoryPool()) == 0.0


def test_queue_mean_after_wins_and_loss():
    pool = HistoryPool()
    pool.add(1, 0, make_params())
    for _ in range(10):
        update_pool(pool, 1, 1)
    update_pool(pool, 1, 0)  # evicts the first win
    assert pool.find(1).outcomes.count(1) == 9
    assert hsg(pool) == pytest.approx(0.9)


def test_fresh_entry_single_win():
    pool = HistoryPool()
    pool.add(1, 0, make_params())
    update_pool(pool, 1, 1)
    assert hsg(pool) == pytest.approx(1.0)


def test_queue_bounded_at_ten():
    pool = HistoryPool()
    pool.add(1, 0, make_params())
    for i in range(11):
        update_pool(pool, 1, 1 if i == 0 else 0)
    assert len(pool.find(1).outcomes) == 10
    assert hsg(pool) == 0.0  # the lone win was evicted


def test_hsg_sums_entry_means():
    pool = HistoryPool()
    for v, outcomes in ((1, [1] * 10), (2, [1] * 8 + [0] * 2), (3, [1, 0])):
        pool.add(v, 0, make_params())
        for o in outcomes:
            update_pool(pool, v, o)
    assert hsg(pool) == pytest.approx(1.0 + 0.8 + 0.5)


def test_update_unknown_entry_rejected():
    pool = HistoryPool()
    with pytest.raises(KeyError):
        update_pool(pool, 99, 1)


def test_update_pool_validates_outcome():
    pool = HistoryPool()
    pool.add(1, 0, make_params())
    with pytest.raises(ValueError):
        update_pool(pool, 1, 2)


# ---------------------------------------------------------------------------
# evaluator
# ---------------------------------------------------------------------------


def test_evaluator_no_publications_no_points():
    hub = pipeline.ParameterHub()
    ev = Evaluator(hub, HistoryPool(), BOARD, SOFTQ, np.random.default_rng(0))
    assert ev.step_once() is None
    assert ev.points == []


def test_evaluator_pool_growth_follows_publications():
    hub = pipeline.ParameterHub()
    ev = Evaluator(hub, HistoryPool(), BOARD, SOFTQ, np.random.default_rng(1))
    for step in (0, 10, 20):
        hub.publish(make_params(seed=step), step=step)
        ev.step_once()
    assert len(ev.pool) == 3
    assert [e.version for e in ev.pool.entries] == [1, 2, 3]


def test_evaluator_hsg_bounds_hold():
    hub = pipeline.ParameterHub()
    ev = Evaluator(hub, HistoryPool(), BOARD, SOFTQ, np.random.default_rng(2))
    hub.publish(make_params(seed=0), step=0)
    for i in range(6):
        point = ev.step_once()
        assert 0.0 <= point.hsg <= point.pool_size
        if i == 2:
            hub.publish(make_params(seed=1), step=10)
    assert ev.match_counter == 6


def test_evaluator_forced_outcomes_hsg_equals_pool_size():
    # a hub whose latest always wins: patch the match by making the entry
    # params play into immediate double pass... instead, drive update_pool
    # directly to model forced outcomes
    pool = HistoryPool()
    for v in (1, 2, 3):
        pool.add(v, v * 10, make_params(seed=v))
        for _ in range(10):
            update_pool(pool, v, 1)
    assert hsg(pool) == 3.0 == len(pool)


def test_evaluator_alternates_colors():
    hub = pipeline.ParameterHub()
    ev = Evaluator(hub, HistoryPool(), BOARD, SOFTQ, np.random.default_rng(3))
    hub.publish(make_params(seed=0), step=0)
    ev.step_once()
    ev.step_once()
    assert ev.match_counter == 2
