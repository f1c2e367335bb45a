import { ApiClient, ApiError } from "./api.js";
import { buildViewModel } from "./viewmodel.js";
import type { BoardViewModel, NewGameOptions, ServerState } from "./types.js";

export interface ControllerEvents {
  onRender: (vm: BoardViewModel) => void;
  onError: (message: string) => void;
}

/**
 * Holds the last server-confirmed state and mediates every interaction.
 * The board shown to the user is always rebuilt from that state: a rejected
 * move surfaces its rule message and renders exactly what the server holds.
 */
export class GameController {
  state: ServerState | null = null;
  heatmapOn = false;
  private busy = false;

  constructor(
    private api: ApiClient,
    private events: ControllerEvents,
  ) {}

  get sessionId(): string | null {
    return this.state ? this.state.session_id : null;
  }

  private async render(): Promise<void> {
    if (!this.state) return;
    let analysis = null;
    if (this.heatmapOn && !this.state.terminal) {
      try {
        analysis = await this.api.analysis(this.state.session_id);
      } catch (err) {
        this.events.onError(errorText(err));
      }
    }
    this.events.onRender(buildViewModel(this.state, analysis));
  }

  async newGame(options: NewGameOptions): Promise<void> {
    await this.guarded(async () => {
      this.state = await this.api.newGame(options);
    });
  }

  async restart(): Promise<void> {
    const sid = this.sessionId;
    if (!sid) return;
    await this.guarded(async () => {
      this.state = await this.api.restart(sid);
    });
  }

  async clickPoint(index: number): Promise<void> {
    const sid = this.sessionId;
    if (!sid || !this.state || this.state.terminal) return;
    await this.guarded(async () => {
      this.state = await this.api.move(sid, index);
    });
  }

  async pass(): Promise<void> {
    const sid = this.sessionId;
    if (!sid || !this.state || this.state.terminal) return;
    await this.guarded(async () => {
      this.state = await this.api.pass(sid);
    });
  }

  async toggleHeatmap(): Promise<void> {
    this.heatmapOn = !this.heatmapOn;
    await this.render();
  }

  async refresh(): Promise<void> {
    const sid = this.sessionId;
    if (!sid) return;
    await this.guarded(async () => {
      this.state = await this.api.getGame(sid);
    });
  }

  /** Serialize interactions; on failure keep the confirmed state on screen. */
  private async guarded(action: () => Promise<void>): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    try {
      await action();
    } catch (err) {
      this.events.onError(errorText(err));
    } finally {
      this.busy = false;
    }
    await this.render();
  }
}

function errorText(err: unknown): string {
  if (err instanceof ApiError) {
    return err.message || err.code;
  }
  return err instanceof Error ? `network failure: ${err.message}` : String(err);
}
