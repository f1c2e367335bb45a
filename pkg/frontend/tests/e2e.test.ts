// End-to-end: the real play service, a freshly initialized (constant) net,
// and the UI controller driving a full scripted game.
import { execFile, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { GameController } from "../src/controller.js";
import type { BoardViewModel } from "../src/types.js";

const execFileAsync = promisify(execFile);
const PORT = 8791;
const BASE = `http://127.0.0.1:${PORT}`;
const REPO_ROOT = join(__dirname, "..", "..");

let server: ChildProcess | null = null;

async function waitForServer(timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/game/probe`);
      if (resp.status === 404) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("play service did not come up");
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "softgo-e2e-"));
  const ckpt = join(dir, "fresh.bin");
  // zero-filled parameters: every Q-value is exactly 0, so the policy over a
  // fresh board is exactly uniform
  await execFileAsync(
    "python3",
    [
      "-c",
      [
        "import numpy as np",
        "from softgo import network",
        "p = network.init_parameters(network.NetConfig(board_size=5, blocks=1, filters=8), seed=0)",
        "[a.fill(0) for a in p.arrays.values()]",
        `network.save_checkpoint(p, ${JSON.stringify(ckpt)})`,
      ].join("\n"),
    ],
    { cwd: REPO_ROOT },
  );
  server = spawn(
    "python3",
    ["-m", "softgo.cli", "serve", ckpt, "--port", String(PORT), "--alpha", "0.3"],
    { cwd: REPO_ROOT, stdio: "ignore" },
  );
  await waitForServer(60_000);
}, 90_000);

afterAll(() => {
  server?.kill();
});

function makeController() {
  const renders: BoardViewModel[] = [];
  const errors: string[] = [];
  const controller = new GameController(new ApiClient(BASE), {
    onRender: (vm) => renders.push(vm),
    onError: (msg) => errors.push(msg),
  });
  return { controller, renders, errors };
}

describe("web UI against the live service", () => {
  it(
    "plays a scripted human-vs-engine game to a terminal scored state",
    { timeout: 120_000 },
    async () => {
      const { controller, renders, errors } = makeController();
      await controller.newGame({ size: 5, komi: 7.5, human_color: "black", mode: "argmax" });
      expect(renders.at(-1)!.myTurn).toBe(true);

      let plies = 0;
      while (!renders.at(-1)!.terminal && plies < 80) {
        const vm = renders.at(-1)!;
        if (!vm.myTurn) {
          await controller.refresh();
          plies += 1;
          continue;
        }
        // script: one early pass, otherwise the highest-index legal point
        if (plies === 9) {
          await controller.pass();
        } else {
          let pick = -1;
          for (let i = vm.size * vm.size - 1; i >= 0; i--) {
            if (vm.legal[i] && vm.cells[i] === "empty") {
              pick = i;
              break;
            }
          }
          if (pick < 0) {
            await controller.pass();
          } else {
            await controller.clickPoint(pick);
          }
        }
        plies += 1;
      }

      const finalVm = renders.at(-1)!;
      expect(finalVm.terminal).toBe(true);
      expect(errors).toHaveLength(0);

      // the displayed score must equal the rules engine's scoring of the
      // recorded move list, recomputed independently in another process
      const state = controller.state!;
      const score = state.score_if_terminal!;
      expect(finalVm.statusLine).toContain(String(Math.abs(score.score)));
      const { stdout } = await execFileAsync(
        "python3",
        [
          "-c",
          [
            "import json, sys",
            "from softgo import engine",
            `moves = ${JSON.stringify(state.move_log)}`,
            "cfg = engine.BoardConfig(size=5, komi=7.5)",
            "final = engine.replay_moves(cfg, moves)",
            "assert final.terminal",
            "s = engine.score(final)",
            "print(json.dumps({'area_black': s.area_black, 'area_white': s.area_white, 'score': s.score}))",
          ].join("\n"),
        ],
        { cwd: REPO_ROOT },
      );
      const recomputed = JSON.parse(stdout.trim());
      expect(score.score).toBe(recomputed.score);
      expect(score.area_black).toBe(recomputed.area_black);
      expect(score.area_white).toBe(recomputed.area_white);
    },
  );

  it("shows a uniform heatmap for the fresh constant net", { timeout: 30_000 }, async () => {
    const { controller, renders } = makeController();
    await controller.newGame({ size: 5, komi: 7.5, human_color: "both", mode: "argmax" });
    await controller.toggleHeatmap();
    const vm = renders.at(-1)!;
    expect(vm.heatmap).not.toBeNull();
    const heat = vm.heatmap!;
    expect(heat).toHaveLength(26);
    // all 26 actions are legal on an empty board; the raw probabilities
    // behind the overlay are equal within 1e-6
    const analysis = await new ApiClient(BASE).analysis(controller.sessionId!);
    const probs = analysis.policy;
    const spread = Math.max(...probs) - Math.min(...probs);
    expect(spread).toBeLessThan(1e-6);
    for (const v of heat) {
      expect(Math.abs(v - 1)).toBeLessThan(1e-6);
    }
  });

  it("never mutates server state on an illegal click", { timeout: 30_000 }, async () => {
    const { controller, errors } = makeController();
    await controller.newGame({ size: 5, komi: 7.5, human_color: "both", mode: "argmax" });
    const api = new ApiClient(BASE);
    const sid = controller.sessionId!;
    await controller.clickPoint(12);
    const before = await api.getGame(sid);
    await controller.clickPoint(12); // occupied
    expect(errors.at(-1)).toContain("occupied");
    const after = await api.getGame(sid);
    expect(after).toEqual(before);
    // the controller still renders the server's authoritative board
    expect(controller.state!.move_log).toEqual(before.move_log);
  });
});
