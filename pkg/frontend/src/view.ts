/**
 * Pure renderers: UI state in, HTML string out. No DOM access, so the whole
 * presentation layer is unit-testable as plain strings; main.ts owns the
 * single innerHTML assignment and event wiring.
 *
 * Control ids the wiring layer relies on: #claim-input, #claim-submit,
 * #answer-input, #answer-submit, #retry-btn, #reset-btn.
 */

import { categoryBadgeText, isCategoryLetter } from './categories.js';
import { canSubmitAnswer, canSubmitClaim, type UiSessionState } from './state.js';
import type { SessionResource } from './types.js';

/** Live input text, kept outside UI state so re-renders never eat keystrokes. */
export interface Drafts {
  claim: string;
  answer: string;
}

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => {
    switch (ch) {
      case '&':
        return '&amp;';
      case '<':
        return '&lt;';
      case '>':
        return '&gt;';
      case '"':
        return '&quot;';
      default:
        return '&#39;';
    }
  });
}

function attr(name: string, on: boolean): string {
  return on ? ` ${name}` : '';
}

function statementPanel(state: UiSessionState, drafts: Drafts): string {
  if (state.phase === 'entry') {
    const busy = state.pending;
    const submittable = canSubmitClaim(state, drafts.claim);
    return `<section class="panel" id="panel-claim">
  <h2>Claim</h2>
  <p class="hint">Paste a claim to check. The system will ask for whatever context it is missing.</p>
  <textarea id="claim-input" rows="3" placeholder="e.g. Our country's crime rate is the highest it has ever been."${attr('disabled', busy)}>${escapeHtml(drafts.claim)}</textarea>
  <button id="claim-submit"${attr('disabled', busy || !submittable)}>${busy ? 'Submitting…' : 'Check this claim'}</button>
</section>`;
  }
  const statement = state.session?.statement ?? '';
  return `<section class="panel" id="panel-claim">
  <h2>Claim</h2>
  <blockquote class="statement">${escapeHtml(statement)}</blockquote>
</section>`;
}

function badges(session: SessionResource): string {
  const refs = (session.categories ?? []).filter((ref) => isCategoryLetter(ref.letter));
  if (refs.length === 0) {
    return '';
  }
  const items = refs
    .map((ref) => `<span class="badge">${escapeHtml(categoryBadgeText(ref.letter, ref.name))}</span>`)
    .join(' ');
  return `<p class="badges">Missing information: ${items}</p>`;
}

function questionBlock(session: SessionResource): string {
  const question = session.question ?? 'Preparing the clarifying question…';
  return `${badges(session)}
  <p class="question">${escapeHtml(question)}</p>`;
}

function exchangePanel(state: UiSessionState, drafts: Drafts): string {
  const session = state.session;
  if (!session) {
    return '';
  }
  const busy = state.pending;
  const submittable = canSubmitAnswer(state, drafts.answer);
  return `<section class="panel" id="panel-exchange">
  <h2>Clarification</h2>
  ${questionBlock(session)}
  <textarea id="answer-input" rows="2" placeholder="Your answer"${attr('disabled', busy)}>${escapeHtml(drafts.answer)}</textarea>
  <button id="answer-submit"${attr('disabled', busy || !submittable)}>${busy ? 'Scoring…' : 'Send answer'}</button>
</section>`;
}

function transcriptPanel(session: SessionResource): string {
  if (session.question === null && session.answer === null) {
    return '';
  }
  const lines: string[] = [];
  if (session.question !== null) {
    lines.push(`<dt>Q</dt><dd>${escapeHtml(session.question)}</dd>`);
  }
  if (session.answer !== null) {
    lines.push(`<dt>A</dt><dd>${escapeHtml(session.answer)}</dd>`);
  }
  return `<section class="panel" id="panel-exchange">
  <h2>Clarification</h2>
  ${badges(session)}
  <dl class="transcript">${lines.join('')}</dl>
</section>`;
}

function routedPanel(session: SessionResource): string {
  const advisory =
    session.message ?? 'This question is being answered from web sources; no input is needed from you.';
  return `<section class="panel" id="panel-exchange">
  <h2>Clarification</h2>
  ${questionBlock(session)}
  <p class="advisory">${escapeHtml(advisory)}</p>
  <button id="reset-btn">Start a new claim</button>
</section>`;
}

function verdictPanel(session: SessionResource): string {
  const verdict = session.verdict;
  if (!verdict) {
    return '';
  }
  const uncertain =
    verdict.label === 'Uncertain'
      ? '\n  <p class="hint">The available context was not sufficient to decide either way.</p>'
      : '';
  return `<section class="panel" id="panel-verdict">
  <h2>Verdict</h2>
  <p class="verdict verdict-${verdict.label.toLowerCase()}"><strong>${verdict.label}</strong> <span class="score">(score ${verdict.snapped})</span></p>${uncertain}
  <button id="reset-btn">Check another claim</button>
</section>`;
}

function errorPanel(state: UiSessionState): string {
  const error = state.error ?? { code: 'unexpected', message: 'Unknown failure', retriable: false };
  const heading = error.code === 'wrong-state' ? 'Session already completed' : 'Something went wrong';
  const hint = error.retriable
    ? 'This looks temporary — you can retry the request.'
    : 'This request cannot be retried.';
  const retry = error.retriable ? '\n  <button id="retry-btn">Retry</button>' : '';
  return `<section class="panel panel-error" id="panel-error">
  <h2>${escapeHtml(heading)}</h2>
  <p class="error-message">${escapeHtml(error.message)}</p>
  <p class="hint">${escapeHtml(hint)}</p>${retry}
  <button id="reset-btn">Start over</button>
</section>`;
}

export function renderApp(state: UiSessionState, drafts: Drafts): string {
  const parts: string[] = [statementPanel(state, drafts)];
  switch (state.phase) {
    case 'entry':
      break;
    case 'awaiting-answer':
      parts.push(exchangePanel(state, drafts));
      break;
    case 'routed-to-web':
      if (state.session) {
        parts.push(routedPanel(state.session));
      }
      break;
    case 'verdict':
      if (state.session) {
        parts.push(transcriptPanel(state.session), verdictPanel(state.session));
      }
      break;
    case 'error':
      parts.push(errorPanel(state));
      break;
  }
  return `<main class="clarify">\n${parts.filter((part) => part.length > 0).join('\n')}\n</main>`;
}
