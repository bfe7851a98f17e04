/**
 * Flow controller: binds the API client to the state reducer.
 *
 * Enforces one in-flight request per session — a second call while
 * `pending` is true returns false without touching the network. Keeps the
 * last attempted request so the Error phase can offer a retry.
 */

import { ApiError, type SessionApi } from './api.js';
import {
  INITIAL_STATE,
  canSubmitAnswer,
  canSubmitClaim,
  reduce,
  type UiError,
  type UiEvent,
  type UiSessionState,
} from './state.js';
import type { SessionResource } from './types.js';

export type StateListener = (state: UiSessionState) => void;

function toUiError(cause: unknown): UiError {
  if (cause instanceof ApiError) {
    return { code: cause.code, message: cause.message, retriable: cause.retriable };
  }
  const message = cause instanceof Error ? cause.message : String(cause);
  return { code: 'unexpected', message, retriable: true };
}

export class ClarifyFlow {
  private state: UiSessionState = INITIAL_STATE;
  private lastAttempt: (() => Promise<SessionResource>) | null = null;
  private listeners: StateListener[] = [];

  constructor(private readonly api: SessionApi) {}

  getState(): UiSessionState {
    return this.state;
  }

  get sessionId(): string | null {
    return this.state.session?.id ?? null;
  }

  subscribe(listener: StateListener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((candidate) => candidate !== listener);
    };
  }

  /** Submit the claim text; false when blocked (blank, busy, wrong panel). */
  async submitClaim(text: string): Promise<boolean> {
    if (!canSubmitClaim(this.state, text)) {
      return false;
    }
    const statement = text.trim();
    return this.execute(() => this.api.createSession(statement));
  }

  /** Submit the answer to the clarifying question; false when blocked. */
  async submitAnswer(text: string): Promise<boolean> {
    const sessionId = this.sessionId;
    if (sessionId === null || !canSubmitAnswer(this.state, text)) {
      return false;
    }
    const answer = text.trim();
    return this.execute(() => this.api.submitAnswer(sessionId, answer));
  }

  /** Reload a session by id (page refresh mid-session); false when busy. */
  async restore(sessionId: string): Promise<boolean> {
    if (this.state.pending || sessionId.length === 0) {
      return false;
    }
    return this.execute(() => this.api.getSession(sessionId));
  }

  /** Re-run the request that landed us in the Error phase. */
  async retry(): Promise<boolean> {
    if (this.state.phase !== 'error' || this.lastAttempt === null) {
      return false;
    }
    return this.execute(this.lastAttempt);
  }

  /** Back to a blank entry panel; drops the retry context. */
  reset(): void {
    this.lastAttempt = null;
    this.apply({ type: 'reset' });
  }

  private async execute(attempt: () => Promise<SessionResource>): Promise<boolean> {
    if (this.state.pending) {
      return false;
    }
    this.lastAttempt = attempt;
    this.apply({ type: 'request-start' });
    try {
      const session = await attempt();
      this.apply({ type: 'session-loaded', session });
    } catch (cause) {
      this.apply({ type: 'request-failed', error: toUiError(cause) });
    }
    return true;
  }

  private apply(event: UiEvent): void {
    this.state = reduce(this.state, event);
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }
}
