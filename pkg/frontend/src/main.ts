/**
 * Browser entry point: the only module that touches the DOM.
 *
 * Wires the flow controller to a root element with event delegation (the
 * panel is re-rendered wholesale on every state change), keeps the session
 * id in the URL fragment so a refresh restores the session from the server,
 * and reads the API base URL from a global or a meta tag.
 */

import { ApiClient } from './api.js';
import { ClarifyFlow } from './controller.js';
import { formatSessionHash, parseSessionHash } from './hash.js';
import { canSubmitAnswer, canSubmitClaim } from './state.js';
import { renderApp, type Drafts } from './view.js';

/** window.CLARIFY_API_BASE wins; then <meta name="clarify-api-base">; then same origin. */
export function resolveApiBase(doc: Document): string {
  const fromGlobal = (globalThis as { CLARIFY_API_BASE?: unknown }).CLARIFY_API_BASE;
  if (typeof fromGlobal === 'string') {
    return fromGlobal;
  }
  const meta = doc.querySelector('meta[name="clarify-api-base"]');
  return meta?.getAttribute('content') ?? '';
}

function start(): void {
  const root = document.getElementById('app');
  if (!root) {
    return;
  }
  const flow = new ClarifyFlow(new ApiClient(resolveApiBase(document)));
  const drafts: Drafts = { claim: '', answer: '' };

  const render = (): void => {
    root.innerHTML = renderApp(flow.getState(), drafts);
    const sessionId = flow.sessionId;
    const wanted = sessionId === null ? '' : formatSessionHash(sessionId);
    if (window.location.hash !== wanted) {
      // replaceState keeps back-button history clean across state changes.
      window.history.replaceState(null, '', wanted === '' ? window.location.pathname : wanted);
    }
  };

  flow.subscribe(render);

  root.addEventListener('input', (event) => {
    const target = event.target;
    if (!(target instanceof HTMLTextAreaElement)) {
      return;
    }
    const state = flow.getState();
    if (target.id === 'claim-input') {
      drafts.claim = target.value;
      const button = root.querySelector<HTMLButtonElement>('#claim-submit');
      if (button) {
        button.disabled = !canSubmitClaim(state, drafts.claim);
      }
    } else if (target.id === 'answer-input') {
      drafts.answer = target.value;
      const button = root.querySelector<HTMLButtonElement>('#answer-submit');
      if (button) {
        button.disabled = !canSubmitAnswer(state, drafts.answer);
      }
    }
  });

  root.addEventListener('click', (event) => {
    const target = event.target;
    if (!(target instanceof HTMLElement)) {
      return;
    }
    switch (target.id) {
      case 'claim-submit':
        void flow.submitClaim(drafts.claim);
        break;
      case 'answer-submit':
        void flow.submitAnswer(drafts.answer);
        break;
      case 'retry-btn':
        void flow.retry();
        break;
      case 'reset-btn':
        drafts.claim = '';
        drafts.answer = '';
        flow.reset();
        break;
      default:
        break;
    }
  });

  const restored = parseSessionHash(window.location.hash);
  if (restored !== null) {
    void flow.restore(restored);
  } else {
    render();
  }
}

start();
