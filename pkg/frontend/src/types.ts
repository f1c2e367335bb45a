export type StoneColor = "black" | "white";

export interface ScorePayload {
  area_black: number;
  area_white: number;
  score: number;
}

export interface ServerState {
  session_id: string;
  size: number;
  komi: number;
  board: number[][]; // 0 empty, 1 black, 2 white
  to_move: StoneColor;
  legal_mask: number[]; // empty when terminal
  terminal: boolean;
  score_if_terminal: ScorePayload | null;
  move_log: number[];
  engine_color: StoneColor | null;
  mode: string;
  consecutive_passes: number;
  move_count: number;
}

export interface MoveResponse extends ServerState {
  human_move: number;
  engine_moves: number[];
}

export interface Analysis {
  q_values: number[];
  policy: number[];
  legal_mask: number[];
  argmax: number;
  alpha: number;
  to_move: StoneColor;
}

export interface NewGameOptions {
  size: number;
  komi: number;
  human_color: StoneColor | "both";
  mode: "argmax" | "sampling";
}

export type CellState = "empty" | "black" | "white";

/** Everything the board renderer needs; computed, never stored. */
export interface BoardViewModel {
  size: number;
  cells: CellState[]; // row-major, length size*size
  lastMove: number | null; // flat index, or null (pass / no moves yet)
  legal: boolean[]; // length size*size + 1, all false when terminal
  // Policy heatmap scaled so the strongest entry has intensity 1.
  // Length size*size + 1 (pass is the final, separately rendered cell);
  // null when the overlay is off.
  heatmap: number[] | null;
  toMove: StoneColor;
  terminal: boolean;
  statusLine: string;
  myTurn: boolean;
}
