/** Minimal DOM layer: a compose box with a non-modal suggestion side panel.
 *
 * Everything interactive is reachable by keyboard: the suggestion chips are
 * buttons, so Tab + Enter inserts an exemplar without touching the mouse.
 */

import { CompositionController, ComposerState } from './composer.js';

export function mountComposeView(
  root: HTMLElement,
  controller: CompositionController,
): void {
  root.innerHTML = '';

  const layout = document.createElement('div');
  layout.className = 'compose-layout';

  const main = document.createElement('div');
  main.className = 'compose-main';

  const customerBox = document.createElement('textarea');
  customerBox.className = 'customer-input';
  customerBox.placeholder = 'Paste the customer message here';
  customerBox.setAttribute('aria-label', 'Customer message');
  customerBox.addEventListener('change', () => {
    controller.setCustomerText(customerBox.value);
  });

  const committedList = document.createElement('ol');
  committedList.className = 'committed-sentences';

  const draftBox = document.createElement('textarea');
  draftBox.className = 'draft-input';
  draftBox.placeholder = 'Type the next sentence of your reply';
  draftBox.setAttribute('aria-label', 'Reply draft');
  draftBox.addEventListener('input', () => {
    controller.updateDraft(draftBox.value);
  });
  draftBox.addEventListener('keydown', (event) => {
    if (event.key === 'Enter' && !event.shiftKey) {
      event.preventDefault();
      controller.commitDraft();
    }
  });

  main.append(customerBox, committedList, draftBox);

  const panel = document.createElement('aside');
  panel.className = 'suggestion-panel';
  panel.setAttribute('aria-label', 'Topic suggestions');
  panel.setAttribute('aria-live', 'polite');

  layout.append(main, panel);
  root.append(layout);

  controller.onChange((state) => {
    render(state, { committedList, draftBox, panel, controller });
  });
  render(controller.getState(), { committedList, draftBox, panel, controller });
}

interface RenderTargets {
  committedList: HTMLOListElement;
  draftBox: HTMLTextAreaElement;
  panel: HTMLElement;
  controller: CompositionController;
}

function render(state: ComposerState, t: RenderTargets): void {
  t.committedList.innerHTML = '';
  for (const sentence of state.committedSentences) {
    const item = document.createElement('li');
    item.textContent = sentence;
    t.committedList.append(item);
  }

  if (t.draftBox.value !== state.draft) t.draftBox.value = state.draft;

  t.panel.innerHTML = '';
  if (state.error) {
    const err = document.createElement('p');
    err.className = 'suggestion-error';
    err.textContent = state.error;
    t.panel.append(err);
    return;
  }
  if (state.loading) {
    const busy = document.createElement('p');
    busy.className = 'suggestion-loading';
    busy.textContent = 'Fetching suggestions…';
    t.panel.append(busy);
    return;
  }
  for (const suggestion of state.suggestions) {
    const card = document.createElement('div');
    card.className = 'suggestion-card';

    const chip = document.createElement('button');
    chip.type = 'button';
    chip.className = 'suggestion-chip';
    chip.textContent = suggestion.top_words.slice(0, 5).join(' · ');
    chip.title = `p=${suggestion.probability.toFixed(3)}`;
    chip.addEventListener('click', () => {
      t.controller.applySuggestion(suggestion);
    });
    card.append(chip);

    if (suggestion.top_phrases.length > 0) {
      const phrases = document.createElement('p');
      phrases.className = 'suggestion-phrases';
      phrases.textContent = suggestion.top_phrases.join(' | ');
      card.append(phrases);
    }
    t.panel.append(card);
  }
}
