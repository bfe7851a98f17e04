/** Canned session resources matching the wire schema, for mocked-API tests. */

import type { SessionResource } from '../src/types.js';

export function awaitingAnswer(overrides: Partial<SessionResource> = {}): SessionResource {
  return {
    id: 'sess-1',
    state: 'awaiting-answer',
    statement: "Our country's crime rate is the highest it has ever been.",
    question: 'Which country are you asking about?',
    categories: [{ letter: 'B', name: 'Location' }],
    route: { value: 'user-query', source: 'llm-router' },
    answer: null,
    verdict: null,
    message: null,
    error: null,
    ...overrides,
  };
}

export function completed(overrides: Partial<SessionResource> = {}): SessionResource {
  return awaitingAnswer({
    state: 'completed',
    answer: 'The United States.',
    verdict: { snapped: 0, label: 'False' },
    ...overrides,
  });
}

export function routedToWeb(overrides: Partial<SessionResource> = {}): SessionResource {
  return awaitingAnswer({
    state: 'routed-to-web',
    question: 'When was this figure published?',
    categories: [{ letter: 'F', name: 'Date and time period' }],
    route: { value: 'web-retrieval', source: 'heuristic-router' },
    message: 'This question was routed to web retrieval; no user input is required.',
    ...overrides,
  });
}
