"""Command-line entry points: train, eval plot, match, serve, export-sgf, bench."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import engine, evaluation, network, pipeline


def _load_params(path: str) -> network.Parameters:
    if os.path.isdir(path):
        path = os.path.join(path, "params.bin")
    return network.load_checkpoint(path)


def _cmd_train(args) -> int:
    config = pipeline.load_train_config(args.config, args.set or [])
    result = pipeline.run_training(config, args.out, resume_from=args.resume)
    print(f"finished {config.total_updates} updates, {result.episodes} episodes")
    print(f"final checkpoint: {result.final_checkpoint}")
    return 0


def _cmd_eval_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    steps, hsg, pool = [], [], []
    with open(args.log) as f:
        header = f.readline().strip().split(",")
        if header[:3] != ["step", "hsg", "pool_size"]:
            raise ValueError(f"{args.log} is not an evaluation log")
        for line in f:
            s, h, p = line.strip().split(",")
            steps.append(int(s))
            hsg.append(float(h))
            pool.append(int(p))
    fig, ax = plt.subplots(figsize=(7, 4))
    if args.cumulative:
        # alternative reading: running sum of the emitted values over time
        series = [sum(hsg[: i + 1]) for i in range(len(hsg))]
        ax.plot(steps, series, label="cumulative history score gain")
    else:
        ax.plot(steps, hsg, label="history score gain")
        ax.plot(steps, pool, linestyle="--", color="gray", label="pool size (upper bound)")
    ax.set_xlabel("update step")
    ax.set_ylabel("HSG")
    ax.legend()
    fig.tight_layout()
    out = args.out or os.path.splitext(args.log)[0] + ".png"
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")
    return 0


def _cmd_match(args) -> int:
    params_a = _load_params(args.ckpt_a)
    params_b = _load_params(args.ckpt_b)
    if params_a.config.board_size != params_b.config.board_size:
        raise ValueError("checkpoints play different board sizes")
    board = engine.BoardConfig(size=params_a.config.board_size, komi=args.komi)
    agent_a = evaluation.net_agent(params_a, args.mode, args.alpha)
    agent_b = evaluation.net_agent(params_b, args.mode, args.alpha)
    results = evaluation.play_series(agent_a, agent_b, board, args.games, seed=args.seed)
    wins_a = sum(r.winner == "A" for r in results)
    print(f"played {len(results)} games: A won {wins_a}, B won {len(results) - wins_a}")
    if args.save_sgf:
        os.makedirs(args.save_sgf, exist_ok=True)
        for i, r in enumerate(results):
            with open(os.path.join(args.save_sgf, f"game_{i:04d}.sgf"), "w") as f:
                f.write(r.sgf)
        print(f"saved SGF records to {args.save_sgf}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    params = _load_params(args.ckpt)
    app = create_app(params, alpha_display=args.alpha, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_export_sgf(args) -> int:
    with open(args.game) as f:
        record = json.load(f)
    config = engine.BoardConfig(size=record["size"], komi=record.get("komi", 7.5))
    moves = [int(m) for m in record["moves"]]
    state = engine.replay_moves(config, moves)
    result = engine.score(state) if state.terminal else None
    sgf = engine.game_to_sgf(moves, config, result)
    out = args.out or os.path.splitext(args.game)[0] + ".sgf"
    with open(out, "w") as f:
        f.write(sgf)
    print(f"wrote {out}")
    return 0


def _cmd_bench(args) -> int:
    board = engine.BoardConfig(size=args.size)
    rng = np.random.default_rng(0)
    # environment throughput: random legal self-play
    state = engine.new_game(board)
    engine.legal_mask(state)  # trigger JIT before timing
    steps = 0
    t0 = time.perf_counter()
    while time.perf_counter() - t0 < args.seconds:
        if state.terminal:
            state = engine.new_game(board)
        mask = engine.legal_mask(state)
        moves = np.nonzero(mask)[0]
        state, _, _ = engine.step(state, int(moves[rng.integers(moves.size)]))
        steps += 1
    env_rate = steps / (time.perf_counter() - t0)

    config = network.NetConfig(board_size=args.size, blocks=args.blocks, filters=args.filters)
    params = network.init_parameters(config, seed=0)
    for batch_size in (1, 256):
        x = rng.standard_normal((batch_size, 2, args.size, args.size)).astype(np.float32)
        network.forward(params, x)
        n = 0
        t0 = time.perf_counter()
        while time.perf_counter() - t0 < args.seconds:
            network.forward(params, x)
            n += batch_size
        rate = n / (time.perf_counter() - t0)
        print(f"net inference (batch {batch_size}): {rate:,.0f} positions/s")
    print(f"environment: {env_rate:,.0f} steps/s on {args.size}x{args.size}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="softgo")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the training pipeline")
    p_train.add_argument("config", help="TOML training config")
    p_train.add_argument("--out", default="runs/latest", help="output directory")
    p_train.add_argument("--resume", default=None, help="checkpoint directory to resume from")
    p_train.add_argument(
        "--set", action="append", metavar="KEY=VALUE", help="override a config value"
    )
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluation utilities")
    eval_sub = p_eval.add_subparsers(dest="eval_command", required=True)
    p_plot = eval_sub.add_parser("plot", help="render an HSG curve to a PNG")
    p_plot.add_argument("log", help="eval_log.csv from a training run")
    p_plot.add_argument("--out", default=None)
    p_plot.add_argument(
        "--cumulative", action="store_true",
        help="plot the running sum of the emitted values instead",
    )
    p_plot.set_defaults(func=_cmd_eval_plot)

    p_match = sub.add_parser("match", help="head-to-head games between checkpoints")
    p_match.add_argument("ckpt_a")
    p_match.add_argument("ckpt_b")
    p_match.add_argument("--games", type=int, default=10)
    p_match.add_argument("--mode", choices=["sampling", "argmax"], default="sampling")
    p_match.add_argument("--alpha", type=float, default=0.081)
    p_match.add_argument("--komi", type=float, default=7.5)
    p_match.add_argument("--seed", type=int, default=0)
    p_match.add_argument("--save-sgf", default=None, help="directory for SGF records")
    p_match.set_defaults(func=_cmd_match)

    p_serve = sub.add_parser("serve", help="serve the play API (and web UI if built)")
    p_serve.add_argument("ckpt")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--alpha", type=float, default=0.081)
    p_serve.add_argument("--ui", default="frontend/dist", help="static UI bundle directory")
    p_serve.set_defaults(func=_cmd_serve)

    p_sgf = sub.add_parser("export-sgf", help="convert a JSON game record to SGF")
    p_sgf.add_argument("game", help='JSON file: {"size": N, "komi": K, "moves": [...]}')
    p_sgf.add_argument("--out", default=None)
    p_sgf.set_defaults(func=_cmd_export_sgf)

    p_bench = sub.add_parser("bench", help="environment and network throughput")
    p_bench.add_argument("--size", type=int, default=5)
    p_bench.add_argument("--blocks", type=int, default=4)
    p_bench.add_argument("--filters", type=int, default=32)
    p_bench.add_argument("--seconds", type=float, default=2.0)
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # storage corruption, config errors
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
