/**
 * Session id <-> URL fragment. The fragment carries only the session id so
 * a refresh mid-session can restore state from GET /sessions/{id}.
 */

export function parseSessionHash(hash: string): string | null {
  const raw = hash.startsWith('#') ? hash.slice(1) : hash;
  if (raw.length === 0) {
    return null;
  }
  try {
    return decodeURIComponent(raw);
  } catch {
    return null;
  }
}

export function formatSessionHash(sessionId: string): string {
  return `#${encodeURIComponent(sessionId)}`;
}
