/**
 * Thin fetch client for the clarify-session HTTP API.
 *
 * Non-2xx responses carry a JSON error envelope
 * `{"error": {"code", "message", "retriable"}}`; this client unwraps that
 * into an ApiError so callers never touch raw responses. Network failures
 * (server unreachable, connection dropped) become retriable ApiErrors with
 * status 0 and code "network".
 */

import type { ErrorEnvelope, SessionResource } from './types.js';

export class ApiError extends Error {
  override readonly name = 'ApiError';

  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly retriable: boolean,
  ) {
    super(message);
  }
}

/** The three session operations the UI needs; ApiClient is the live implementation. */
export interface SessionApi {
  createSession(statement: string): Promise<SessionResource>;
  getSession(sessionId: string): Promise<SessionResource>;
  submitAnswer(sessionId: string, answer: string): Promise<SessionResource>;
}

export class ApiClient implements SessionApi {
  /** `baseUrl` may be empty for same-origin deployments. No trailing slash. */
  constructor(private readonly baseUrl: string = '') {}

  createSession(statement: string): Promise<SessionResource> {
    return this.request('/sessions', {
      method: 'POST',
      body: JSON.stringify({ statement }),
    });
  }

  getSession(sessionId: string): Promise<SessionResource> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  submitAnswer(sessionId: string, answer: string): Promise<SessionResource> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/answer`, {
      method: 'POST',
      body: JSON.stringify({ answer }),
    });
  }

  private async request(path: string, init?: RequestInit): Promise<SessionResource> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, {
        ...init,
        headers: { 'content-type': 'application/json', ...(init?.headers ?? {}) },
      });
    } catch (cause) {
      const reason = cause instanceof Error ? cause.message : String(cause);
      throw new ApiError(0, 'network', `request failed: ${reason}`, true);
    }
    if (!response.ok) {
      throw await toApiError(response);
    }
    return (await response.json()) as SessionResource;
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let code = `http-${response.status}`;
  let message = `HTTP ${response.status}`;
  let retriable = response.status >= 500;
  try {
    const body = (await response.json()) as ErrorEnvelope;
    if (body && typeof body.error === 'object' && body.error !== null) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
      retriable = body.error.retriable ?? retriable;
    }
  } catch {
    // Non-JSON body (proxy page, truncated response): keep status-derived defaults.
  }
  return new ApiError(response.status, code, message, retriable);
}
