import type { Analysis, BoardViewModel, CellState, ServerState } from "./types.js";

function describe(state: ServerState): string {
  if (state.terminal && state.score_if_terminal) {
    const s = state.score_if_terminal;
    const winner = s.score > 0 ? "Black" : "White";
    const margin = Math.abs(s.score);
    return `Game over: ${winner} wins by ${margin} (B ${s.area_black} / W ${s.area_white}, komi ${state.komi})`;
  }
  const turn = state.to_move === "black" ? "Black" : "White";
  const passNote = state.consecutive_passes === 1 ? " — last move was a pass" : "";
  return `${turn} to move (move ${state.move_count})${passNote}`;
}

/** Scale policy entries so the strongest action has intensity 1. */
export function heatmapFromPolicy(policy: number[]): number[] {
  const peak = Math.max(...policy);
  if (peak <= 0) {
    return policy.map(() => 0);
  }
  return policy.map((p) => p / peak);
}

export function buildViewModel(
  state: ServerState,
  analysis: Analysis | null,
): BoardViewModel {
  const n = state.size;
  const cells: CellState[] = [];
  for (const row of state.board) {
    for (const v of row) {
      cells.push(v === 1 ? "black" : v === 2 ? "white" : "empty");
    }
  }
  const legal = new Array<boolean>(n * n + 1).fill(false);
  if (!state.terminal) {
    state.legal_mask.forEach((v, i) => {
      legal[i] = v === 1;
    });
  }
  const moves = state.move_log;
  const last = moves.length ? moves[moves.length - 1]! : null;
  const humanToMove =
    !state.terminal && (state.engine_color === null || state.to_move !== state.engine_color);
  return {
    size: n,
    cells,
    lastMove: last !== null && last < n * n ? last : null,
    legal,
    heatmap: analysis ? heatmapFromPolicy(analysis.policy) : null,
    toMove: state.to_move,
    terminal: state.terminal,
    statusLine: describe(state),
    myTurn: humanToMove,
  };
}
