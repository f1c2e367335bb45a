import { ApiClient } from "./api.js";
import { GameController } from "./controller.js";
import { clearBanner, renderBoard, renderStatus, showBanner } from "./board.js";
import type { NewGameOptions, StoneColor } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function readOptions(): NewGameOptions {
  const color = el<HTMLSelectElement>("human-color").value as StoneColor | "both";
  const mode = el<HTMLSelectElement>("engine-mode").value as "argmax" | "sampling";
  return { size: 5, komi: 7.5, human_color: color, mode };
}

export function start(): void {
  const api = new ApiClient("");
  const boardRoot = el<HTMLDivElement>("board");
  const status = el<HTMLDivElement>("status");
  const banner = el<HTMLDivElement>("banner");

  const controller = new GameController(api, {
    onRender: (vm) => {
      clearBanner(banner);
      renderBoard(boardRoot, vm, {
        onPointClick: (index) => void controller.clickPoint(index),
        onPassClick: () => void controller.pass(),
      });
      renderStatus(status, vm);
      const sid = controller.sessionId;
      const link = el<HTMLAnchorElement>("sgf-link");
      if (sid) {
        link.href = api.sgfUrl(sid);
        link.classList.add("visible");
      }
    },
    onError: (message) => showBanner(banner, message),
  });

  el<HTMLButtonElement>("new-game").addEventListener("click", () => {
    void controller.newGame(readOptions());
  });
  el<HTMLButtonElement>("pass").addEventListener("click", () => void controller.pass());
  el<HTMLButtonElement>("heatmap-toggle").addEventListener("click", () => {
    void controller.toggleHeatmap();
  });

  void controller.newGame(readOptions());
}

if (typeof document !== "undefined" && document.getElementById("board")) {
  start();
}
