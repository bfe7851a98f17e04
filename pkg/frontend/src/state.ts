/**
 * UI session state: a pure reducer over the server's session resource.
 *
 * The client never computes a verdict — the verdict panel only ever shows
 * what the server sent, and a consistency guard routes to the Error phase
 * if a resource ever violates the label/score contract or carries an
 * unknown category letter. `pending` is true exactly while one request is
 * in flight; the controller enforces one request at a time.
 */

import { isCategoryLetter } from './categories.js';
import type { SessionResource, SnappedScore, Verdict, VerdictLabel } from './types.js';

export type UiPhase = 'entry' | 'awaiting-answer' | 'routed-to-web' | 'verdict' | 'error';

export interface UiError {
  code: string;
  message: string;
  retriable: boolean;
}

export interface UiSessionState {
  phase: UiPhase;
  pending: boolean;
  session: SessionResource | null;
  error: UiError | null;
}

export const INITIAL_STATE: UiSessionState = {
  phase: 'entry',
  pending: false,
  session: null,
  error: null,
};

export type UiEvent =
  | { type: 'request-start' }
  | { type: 'session-loaded'; session: SessionResource }
  | { type: 'request-failed'; error: UiError }
  | { type: 'reset' };

/** The only score-to-label mapping the UI will display. */
export const VERDICT_LABEL_BY_SCORE: Readonly<Record<string, VerdictLabel>> = {
  '0': 'False',
  '0.5': 'Uncertain',
  '1': 'True',
};

export function labelForScore(snapped: SnappedScore): VerdictLabel {
  return VERDICT_LABEL_BY_SCORE[String(snapped)] as VerdictLabel;
}

export function verdictConsistent(verdict: Verdict): boolean {
  return VERDICT_LABEL_BY_SCORE[String(verdict.snapped)] === verdict.label;
}

/**
 * Reason a resource breaks the server contract, or null when it is sound.
 * Checked on every load so a broken payload can never reach the screen.
 */
export function contractViolation(session: SessionResource): string | null {
  for (const category of session.categories ?? []) {
    if (!isCategoryLetter(category.letter)) {
      return `unknown category letter ${JSON.stringify(category.letter)}`;
    }
  }
  if (session.state === 'completed') {
    if (!session.verdict) {
      return 'completed session is missing its verdict';
    }
    if (!verdictConsistent(session.verdict)) {
      return (
        `verdict label ${JSON.stringify(session.verdict.label)} does not match ` +
        `score ${session.verdict.snapped}`
      );
    }
  }
  return null;
}

/**
 * UI phase for a server state. "awaiting-question" is transient on the
 * server (the question is generated before the resource is first served),
 * but if it ever shows up the exchange panel simply renders a placeholder.
 */
export function phaseForSession(session: SessionResource): UiPhase {
  switch (session.state) {
    case 'completed':
      return 'verdict';
    case 'routed-to-web':
      return 'routed-to-web';
    case 'awaiting-question':
    case 'awaiting-answer':
      return 'awaiting-answer';
  }
}

export function reduce(state: UiSessionState, event: UiEvent): UiSessionState {
  switch (event.type) {
    case 'request-start':
      return { ...state, pending: true, error: null };
    case 'session-loaded': {
      const violation = contractViolation(event.session);
      if (violation !== null) {
        return {
          phase: 'error',
          pending: false,
          session: state.session,
          error: { code: 'contract-violation', message: violation, retriable: false },
        };
      }
      return {
        phase: phaseForSession(event.session),
        pending: false,
        session: event.session,
        error: null,
      };
    }
    case 'request-failed':
      return { ...state, phase: 'error', pending: false, error: event.error };
    case 'reset':
      return INITIAL_STATE;
  }
}

/** Claim submission is open only on the entry panel, idle, with real text. */
export function canSubmitClaim(state: UiSessionState, text: string): boolean {
  return state.phase === 'entry' && !state.pending && text.trim().length > 0;
}

/** Answer submission is open only while a question is awaiting one. */
export function canSubmitAnswer(state: UiSessionState, text: string): boolean {
  return state.phase === 'awaiting-answer' && !state.pending && text.trim().length > 0;
}
