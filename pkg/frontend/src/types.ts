/**
 * Wire types for the clarify-session HTTP API.
 *
 * These mirror the session resource the server returns (see
 * docs/session-resource.schema.json at the repository root): every key is
 * always present, with null where the state has not produced a value yet.
 */

import type { CategoryLetter } from './categories.js';

export type SessionStateName =
  | 'awaiting-question'
  | 'awaiting-answer'
  | 'routed-to-web'
  | 'completed';

export type RouteValue = 'user-query' | 'web-retrieval';
export type RouteSource = 'llm-router' | 'heuristic-router';

export type SnappedScore = 0 | 0.5 | 1;
export type VerdictLabel = 'False' | 'Uncertain' | 'True';

export interface CategoryRef {
  letter: CategoryLetter;
  name: string;
}

export interface RouteRef {
  value: RouteValue;
  source: RouteSource;
}

export interface Verdict {
  snapped: SnappedScore;
  label: VerdictLabel;
}

export interface SessionResource {
  id: string;
  state: SessionStateName;
  statement: string;
  question: string | null;
  categories: CategoryRef[] | null;
  route: RouteRef | null;
  answer: string | null;
  verdict: Verdict | null;
  message: string | null;
  error: string | null;
}

/** Error body shape shared by every non-2xx API response. */
export interface ErrorEnvelope {
  error: {
    code: string;
    message: string;
    retriable: boolean;
  };
}
