// Session flow. The view from the last response is the whole truth;
// this module only decides what to do next with it and runs the
// step/poll loop at a fixed cadence while the agent is thinking.

import { ApiError, LegalMoves, SessionClient, SessionView } from "./api.js";

export const POLL_MS = 500;
export const STEPS_PER_POLL = 8;

export type NextCall = "step" | "legal" | "none";

// What the loop owes the server after seeing a view.
export function nextCall(view: SessionView): NextCall {
  switch (view.status) {
    case "agent_thinking":
      return "step";
    case "awaiting_env":
      return "legal";
    case "finished":
      return "none";
  }
}

export interface DriverEvents {
  onView(view: SessionView): void;
  onLegal(moves: LegalMoves): void;
  onError(err: ApiError): void;
}

// Drives one session: steps the agent every POLL_MS until it either
// grants permission (then fetches the legal moves once) or the play
// ends. Human moves come in through play(); a 409 means our view went
// stale, so the driver re-fetches state and legal moves and carries on.
export class Driver {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    private readonly client: SessionClient,
    private readonly sid: string,
    private readonly events: DriverEvents,
  ) {}

  start(view: SessionView): void {
    this.dispatch(view);
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  async play(move: string): Promise<void> {
    try {
      const view = await this.client.move(this.sid, move);
      this.dispatch(view);
    } catch (err) {
      await this.recover(err);
    }
  }

  private dispatch(view: SessionView): void {
    if (this.stopped) return;
    this.events.onView(view);
    switch (nextCall(view)) {
      case "step":
        this.timer = setTimeout(() => void this.tick(), POLL_MS);
        break;
      case "legal":
        void this.fetchLegal();
        break;
      case "none":
        break;
    }
  }

  private async tick(): Promise<void> {
    this.timer = null;
    if (this.stopped) return;
    try {
      const view = await this.client.step(this.sid, STEPS_PER_POLL);
      this.dispatch(view);
    } catch (err) {
      await this.recover(err);
    }
  }

  private async fetchLegal(): Promise<void> {
    try {
      const moves = await this.client.legal(this.sid);
      if (!this.stopped) this.events.onLegal(moves);
    } catch (err) {
      await this.recover(err);
    }
  }

  private async recover(err: unknown): Promise<void> {
    if (this.stopped) return;
    if (!(err instanceof ApiError)) throw err;
    this.events.onError(err);
    if (err.status === 409) {
      const view = await this.client.state(this.sid);
      this.dispatch(view);
    }
  }
}
