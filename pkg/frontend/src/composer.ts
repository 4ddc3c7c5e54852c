/** State machine behind the compose view.
 *
 * The controller owns the customer message, the list of committed reply
 * sentences, and the in-progress draft sentence.  Whenever a sentence is
 * committed (terminator typed, then a short quiet period — or an explicit
 * commit such as pressing Enter) it asks the service for next-sentence
 * suggestions at the new position.  Responses are tagged with a sequence
 * number and a position; anything stale is dropped so the panel always
 * reflects the latest committed state.
 */

import { SuggestClient, Suggestion } from './api.js';
import { debounce, Debounced } from './debounce.js';

const COMMIT_QUIET_MS = 400;
const TERMINATORS = /[.!?]/;

export interface ComposerState {
  customerText: string;
  committedSentences: string[];
  draft: string;
  suggestions: Suggestion[];
  /** Position the current suggestions were computed for, or -1 if none. */
  suggestionsPosition: number;
  loading: boolean;
  error: string | null;
  k: number;
}

export type StateListener = (state: ComposerState) => void;

export class CompositionController {
  private customerText = '';
  private committed: string[] = [];
  private draft = '';
  private suggestions: Suggestion[] = [];
  private suggestionsPosition = -1;
  private loading = false;
  private error: string | null = null;
  private k: number;

  /** Monotone counter; only the response matching the newest request wins. */
  private seq = 0;
  private abort: AbortController | null = null;
  private readonly debouncedCommit: Debounced<[]>;
  private readonly listeners = new Set<StateListener>();

  constructor(
    private readonly client: SuggestClient,
    options: { k?: number } = {},
  ) {
    this.k = options.k ?? 5;
    this.debouncedCommit = debounce(() => this.commitDraft(), COMMIT_QUIET_MS);
  }

  onChange(listener: StateListener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  getState(): ComposerState {
    return {
      customerText: this.customerText,
      committedSentences: [...this.committed],
      draft: this.draft,
      suggestions: [...this.suggestions],
      suggestionsPosition: this.suggestionsPosition,
      loading: this.loading,
      error: this.error,
      k: this.k,
    };
  }

  /** Load a customer message and fetch whole-reply suggestions (position 0). */
  setCustomerText(text: string): void {
    this.debouncedCommit.cancel();
    this.customerText = text;
    this.committed = [];
    this.draft = '';
    this.suggestions = [];
    this.suggestionsPosition = -1;
    this.error = null;
    if (text.trim().length > 0) {
      void this.requestSuggestions();
    } else {
      this.emit();
    }
  }

  setK(k: number): void {
    this.k = k;
    if (this.customerText.trim().length > 0) {
      void this.requestSuggestions();
    }
  }

  /** Called on every keystroke in the draft box. */
  updateDraft(text: string): void {
    this.draft = text;
    if (TERMINATORS.test(text.trimEnd().slice(-1))) {
      this.debouncedCommit(); // commit after a quiet period
    } else {
      this.debouncedCommit.cancel();
    }
    this.emit();
  }

  /** Explicit commit (e.g. Enter).  No-op on an empty draft. */
  commitDraft(): void {
    this.debouncedCommit.cancel();
    const sentence = this.draft.trim();
    if (!sentence) return;
    this.committed.push(sentence);
    this.draft = '';
    void this.requestSuggestions();
  }

  /** Insert a suggestion's top exemplar into the draft box. */
  applySuggestion(suggestion: Suggestion): void {
    const exemplar = suggestion.exemplars[0];
    if (exemplar === undefined) return;
    this.draft = this.draft ? `${this.draft} ${exemplar}` : exemplar;
    this.emit();
  }

  /** The full state is reconstructible from (customer, committed sentences). */
  restore(customerText: string, committedSentences: string[]): void {
    this.debouncedCommit.cancel();
    this.customerText = customerText;
    this.committed = [...committedSentences];
    this.draft = '';
    this.error = null;
    void this.requestSuggestions();
  }

  private async requestSuggestions(): Promise<void> {
    const requestSeq = ++this.seq;
    const position = this.committed.length;
    this.abort?.abort();
    const abort = new AbortController();
    this.abort = abort;
    this.loading = true;
    this.error = null;
    this.emit();
    try {
      const response =
        position === 0
          ? await this.client.suggestReply(
              this.customerText,
              this.k,
              abort.signal,
            )
          : await this.client.suggestNext(
              this.customerText,
              [...this.committed],
              this.k,
              abort.signal,
            );
      if (requestSeq !== this.seq) return; // a newer request superseded us
      this.suggestions = response.topics;
      this.suggestionsPosition = position;
      this.loading = false;
      this.emit();
    } catch (err) {
      if (requestSeq !== this.seq) return;
      if (err instanceof DOMException && err.name === 'AbortError') return;
      this.loading = false;
      this.error = err instanceof Error ? err.message : String(err);
      this.emit();
    }
  }

  private emit(): void {
    const state = this.getState();
    for (const listener of this.listeners) listener(state);
  }
}
