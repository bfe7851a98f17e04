import { describe, expect, it } from 'vitest';

import {
  INITIAL_STATE,
  canSubmitAnswer,
  canSubmitClaim,
  contractViolation,
  labelForScore,
  phaseForSession,
  reduce,
  verdictConsistent,
  type UiEvent,
  type UiSessionState,
} from '../src/state.js';
import type { SessionResource, SnappedScore, VerdictLabel } from '../src/types.js';
import { awaitingAnswer, completed, routedToWeb } from './fixtures.js';

describe('verdict label mapping', () => {
  it.each([
    [0, 'False'],
    [0.5, 'Uncertain'],
    [1, 'True'],
  ] as Array<[SnappedScore, VerdictLabel]>)('maps %s to %s', (snapped, label) => {
    expect(labelForScore(snapped)).toBe(label);
    expect(verdictConsistent({ snapped, label })).toBe(true);
  });

  it('rejects any crossed label/score pair', () => {
    expect(verdictConsistent({ snapped: 0, label: 'True' })).toBe(false);
    expect(verdictConsistent({ snapped: 1, label: 'Uncertain' })).toBe(false);
    expect(verdictConsistent({ snapped: 0.5, label: 'False' })).toBe(false);
  });
});

describe('phaseForSession', () => {
  it('maps every server state to a UI phase', () => {
    expect(phaseForSession(awaitingAnswer())).toBe('awaiting-answer');
    expect(phaseForSession(awaitingAnswer({ state: 'awaiting-question', question: null }))).toBe(
      'awaiting-answer',
    );
    expect(phaseForSession(routedToWeb())).toBe('routed-to-web');
    expect(phaseForSession(completed())).toBe('verdict');
  });
});

describe('contractViolation', () => {
  it('accepts well-formed resources', () => {
    expect(contractViolation(awaitingAnswer())).toBeNull();
    expect(contractViolation(routedToWeb())).toBeNull();
    expect(contractViolation(completed())).toBeNull();
  });

  it('rejects an unknown category letter (D is not a category)', () => {
    const broken = awaitingAnswer({
      categories: [{ letter: 'D' as never, name: 'Not a thing' }],
    });
    expect(contractViolation(broken)).toContain('"D"');
  });

  it('rejects a completed session without a verdict', () => {
    const broken = completed({ verdict: null });
    expect(contractViolation(broken)).toContain('missing its verdict');
  });

  it('rejects a verdict label inconsistent with the snapped score', () => {
    const broken = completed({ verdict: { snapped: 1, label: 'False' } });
    expect(contractViolation(broken)).toContain('does not match');
  });
});

describe('reduce', () => {
  it('request-start marks pending and clears a stale error', () => {
    const errored: UiSessionState = {
      phase: 'error',
      pending: false,
      session: null,
      error: { code: 'network', message: 'down', retriable: true },
    };
    const next = reduce(errored, { type: 'request-start' });
    expect(next.pending).toBe(true);
    expect(next.error).toBeNull();
  });

  it('session-loaded lands on the phase for the server state', () => {
    const pending = reduce(INITIAL_STATE, { type: 'request-start' });
    const next = reduce(pending, { type: 'session-loaded', session: awaitingAnswer() });
    expect(next).toEqual({
      phase: 'awaiting-answer',
      pending: false,
      session: awaitingAnswer(),
      error: null,
    });
  });

  it('session-loaded with a contract violation lands on the error phase', () => {
    const broken = completed({ verdict: { snapped: 0, label: 'True' } });
    const next = reduce(INITIAL_STATE, { type: 'session-loaded', session: broken });
    expect(next.phase).toBe('error');
    expect(next.error?.code).toBe('contract-violation');
    expect(next.error?.retriable).toBe(false);
    expect(next.session).toBeNull();
  });

  it('request-failed keeps the session context for a later retry', () => {
    const inSession: UiSessionState = {
      phase: 'awaiting-answer',
      pending: true,
      session: awaitingAnswer(),
      error: null,
    };
    const next = reduce(inSession, {
      type: 'request-failed',
      error: { code: 'backend-exhausted', message: 'upstream', retriable: true },
    });
    expect(next.phase).toBe('error');
    expect(next.pending).toBe(false);
    expect(next.session).toEqual(awaitingAnswer());
  });

  it('reset returns to the initial state', () => {
    const next = reduce(
      { phase: 'verdict', pending: false, session: completed(), error: null },
      { type: 'reset' },
    );
    expect(next).toEqual(INITIAL_STATE);
  });
});

describe('submission guards', () => {
  const awaiting: UiSessionState = {
    phase: 'awaiting-answer',
    pending: false,
    session: awaitingAnswer(),
    error: null,
  };

  it('blank input disables claim submission', () => {
    expect(canSubmitClaim(INITIAL_STATE, '')).toBe(false);
    expect(canSubmitClaim(INITIAL_STATE, '   \n')).toBe(false);
    expect(canSubmitClaim(INITIAL_STATE, 'Crime is up.')).toBe(true);
  });

  it('claim submission is closed off the entry panel and while pending', () => {
    expect(canSubmitClaim(awaiting, 'Crime is up.')).toBe(false);
    expect(canSubmitClaim({ ...INITIAL_STATE, pending: true }, 'Crime is up.')).toBe(false);
  });

  it('blank input disables answer submission', () => {
    expect(canSubmitAnswer(awaiting, '')).toBe(false);
    expect(canSubmitAnswer(awaiting, '  ')).toBe(false);
    expect(canSubmitAnswer(awaiting, 'The United States.')).toBe(true);
  });

  it('answer submission is closed outside awaiting-answer and while pending', () => {
    expect(canSubmitAnswer(INITIAL_STATE, 'x')).toBe(false);
    expect(canSubmitAnswer({ ...awaiting, pending: true }, 'x')).toBe(false);
  });
});

describe('state invariants over random event sequences', () => {
  function lcg(seed: number): () => number {
    let value = seed >>> 0;
    return () => {
      value = (Math.imul(value, 1664525) + 1013904223) >>> 0;
      return value / 2 ** 32;
    };
  }

  const EVENT_POOL: ReadonlyArray<UiEvent> = [
    { type: 'request-start' },
    { type: 'session-loaded', session: awaitingAnswer() },
    { type: 'session-loaded', session: routedToWeb() },
    { type: 'session-loaded', session: completed() },
    { type: 'session-loaded', session: completed({ verdict: { snapped: 1, label: 'False' } }) },
    { type: 'request-failed', error: { code: 'network', message: 'down', retriable: true } },
    { type: 'reset' },
  ];

  it('pending is true exactly after request-start; verdicts are always server-consistent', () => {
    const random = lcg(20260816);
    for (let run = 0; run < 300; run += 1) {
      let state = INITIAL_STATE;
      for (let step = 0; step < 12; step += 1) {
        const event = EVENT_POOL[Math.floor(random() * EVENT_POOL.length)] as UiEvent;
        state = reduce(state, event);

        expect(state.pending).toBe(event.type === 'request-start');
        if (state.phase === 'verdict') {
          expect(state.session?.state).toBe('completed');
          expect(state.session?.verdict).not.toBeNull();
          expect(verdictConsistent(state.session!.verdict!)).toBe(true);
        }
        if (state.error !== null) {
          expect(state.phase).toBe('error');
        }
        if (canSubmitClaim(state, 'text')) {
          expect(state.phase).toBe('entry');
          expect(state.pending).toBe(false);
        }
      }
    }
  });
});
