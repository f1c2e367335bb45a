import type { BoardViewModel } from "./types.js";

export interface BoardHandlers {
  onPointClick: (index: number) => void;
  onPassClick: () => void;
}

function heat(intensity: number): string {
  // darker shade = stronger action
  const a = Math.max(0, Math.min(1, intensity));
  return `rgba(180, 30, 30, ${(0.85 * a).toFixed(3)})`;
}

/** Rebuild the goban DOM from a view model; no game state lives here. */
export function renderBoard(
  root: HTMLElement,
  vm: BoardViewModel,
  handlers: BoardHandlers,
): void {
  root.textContent = "";
  const grid = root.ownerDocument.createElement("div");
  grid.className = "goban";
  grid.style.gridTemplateColumns = `repeat(${vm.size}, 1fr)`;
  for (let i = 0; i < vm.size * vm.size; i++) {
    const cell = root.ownerDocument.createElement("div");
    const stone = vm.cells[i]!;
    cell.className = `cell ${stone}`;
    cell.dataset.index = String(i);
    if (vm.lastMove === i) {
      cell.classList.add("last-move");
    }
    if (!vm.terminal && vm.legal[i] && stone === "empty" && vm.myTurn) {
      cell.classList.add("playable");
    }
    if (vm.heatmap) {
      const overlay = root.ownerDocument.createElement("div");
      overlay.className = "heat";
      overlay.style.backgroundColor = heat(vm.heatmap[i] ?? 0);
      overlay.dataset.intensity = String(vm.heatmap[i] ?? 0);
      cell.appendChild(overlay);
    }
    cell.addEventListener("click", () => handlers.onPointClick(i));
    grid.appendChild(cell);
  }
  root.appendChild(grid);

  // the pass move gets its own labeled cell under the grid
  const pass = root.ownerDocument.createElement("button");
  pass.className = "pass-cell";
  pass.textContent = "pass";
  pass.dataset.index = String(vm.size * vm.size);
  if (vm.heatmap) {
    const v = vm.heatmap[vm.size * vm.size] ?? 0;
    pass.style.backgroundColor = heat(v);
    pass.dataset.intensity = String(v);
  }
  pass.disabled = vm.terminal || !vm.myTurn;
  pass.addEventListener("click", () => handlers.onPassClick());
  root.appendChild(pass);
}

export function renderStatus(el: HTMLElement, vm: BoardViewModel): void {
  el.textContent = vm.statusLine;
}

export function showBanner(el: HTMLElement, message: string): void {
  el.textContent = message;
  el.classList.add("visible");
}

export function clearBanner(el: HTMLElement): void {
  el.textContent = "";
  el.classList.remove("visible");
}
