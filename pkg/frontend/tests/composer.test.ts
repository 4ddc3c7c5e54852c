import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { SuggestClient, Suggestion } from '../src/api.js';
import { CompositionController } from '../src/composer.js';

function suggestion(topic: number, exemplar: string): Suggestion {
  return {
    topic,
    probability: 0.5,
    top_words: [`w${topic}`],
    top_phrases: [],
    exemplars: [exemplar],
  };
}

interface Deferred<T> {
  promise: Promise<T>;
  resolve(value: T): void;
}

function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  const promise = new Promise<T>((r) => {
    resolve = r;
  });
  return { promise, resolve };
}

function makeClient() {
  const suggestReply = vi
    .fn()
    .mockResolvedValue({ topics: [suggestion(0, 'Hi.')], tau: [1] });
  const suggestNext = vi
    .fn()
    .mockResolvedValue({ topics: [suggestion(1, 'Sure.')], position: 1 });
  const client = { suggestReply, suggestNext } as unknown as SuggestClient;
  return { client, suggestReply, suggestNext };
}

const flush = () => vi.advanceTimersByTimeAsync(0);

describe('CompositionController', () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it('fetches whole-reply suggestions when the customer text is set', async () => {
    const { client, suggestReply, suggestNext } = makeClient();
    const c = new CompositionController(client);

    c.setCustomerText('I need a refund.');
    await flush();

    expect(suggestReply).toHaveBeenCalledTimes(1);
    expect(suggestReply).toHaveBeenCalledWith(
      'I need a refund.',
      5,
      expect.anything(),
    );
    expect(suggestNext).not.toHaveBeenCalled();
    expect(c.getState().suggestionsPosition).toBe(0);
  });

  it('commits a terminated sentence after the quiet period, calling /suggest/next exactly once with the full committed list', async () => {
    const { client, suggestNext } = makeClient();
    const c = new CompositionController(client);
    c.setCustomerText('I need a refund.');
    await flush();

    c.updateDraft('Hello there.');
    expect(suggestNext).not.toHaveBeenCalled(); // still inside the quiet period
    await vi.advanceTimersByTimeAsync(400);

    expect(suggestNext).toHaveBeenCalledTimes(1);
    expect(suggestNext).toHaveBeenCalledWith(
      'I need a refund.',
      ['Hello there.'],
      5,
      expect.anything(),
    );

    c.updateDraft('We can help.');
    await vi.advanceTimersByTimeAsync(400);

    expect(suggestNext).toHaveBeenCalledTimes(2);
    expect(suggestNext).toHaveBeenLastCalledWith(
      'I need a refund.',
      ['Hello there.', 'We can help.'],
      5,
      expect.anything(),
    );
    expect(c.getState().committedSentences).toEqual([
      'Hello there.',
      'We can help.',
    ]);
  });

  it('does not commit while the sentence has no terminator or typing continues', async () => {
    const { client, suggestNext } = makeClient();
    const c = new CompositionController(client);
    c.setCustomerText('Help.');
    await flush();

    c.updateDraft('Hello');
    await vi.advanceTimersByTimeAsync(1000);
    expect(suggestNext).not.toHaveBeenCalled();

    c.updateDraft('Hello.');
    await vi.advanceTimersByTimeAsync(200);
    c.updateDraft('Hello. And'); // typing resumed: cancel the pending commit
    await vi.advanceTimersByTimeAsync(1000);
    expect(suggestNext).not.toHaveBeenCalled();
  });

  it('never renders a stale response for an older position', async () => {
    const { client, suggestNext } = makeClient();
    const first = deferred<{ topics: Suggestion[]; position: number }>();
    const second = deferred<{ topics: Suggestion[]; position: number }>();
    suggestNext.mockReturnValueOnce(first.promise);
    suggestNext.mockReturnValueOnce(second.promise);

    const c = new CompositionController(client);
    c.setCustomerText('Help.');
    await flush();

    c.updateDraft('One.');
    c.commitDraft();
    c.updateDraft('Two.');
    c.commitDraft();
    expect(suggestNext).toHaveBeenCalledTimes(2);

    second.resolve({ topics: [suggestion(7, 'Newest.')], position: 2 });
    await flush();
    expect(c.getState().suggestions[0].topic).toBe(7);
    expect(c.getState().suggestionsPosition).toBe(2);

    first.resolve({ topics: [suggestion(3, 'Stale.')], position: 1 });
    await flush();
    expect(c.getState().suggestions[0].topic).toBe(7);
    expect(c.getState().suggestionsPosition).toBe(2);
  });

  it('applySuggestion inserts the top exemplar into the draft', async () => {
    const { client } = makeClient();
    const c = new CompositionController(client);
    c.setCustomerText('Help.');
    await flush();

    c.applySuggestion(suggestion(0, 'Thanks for reaching out.'));
    expect(c.getState().draft).toBe('Thanks for reaching out.');

    c.updateDraft('Thanks for reaching out'); // user trims the terminator
    c.applySuggestion(suggestion(1, 'We will look into it.'));
    expect(c.getState().draft).toBe(
      'Thanks for reaching out We will look into it.',
    );
  });

  it('reconstructs state from the customer text and committed sentences', async () => {
    const { client, suggestNext } = makeClient();
    const c = new CompositionController(client);

    c.restore('Help.', ['Hello.', 'Sure thing.']);
    await flush();

    expect(suggestNext).toHaveBeenCalledWith(
      'Help.',
      ['Hello.', 'Sure thing.'],
      5,
      expect.anything(),
    );
    const state = c.getState();
    expect(state.committedSentences).toEqual(['Hello.', 'Sure thing.']);
    expect(state.suggestionsPosition).toBe(2);
  });

  it('surfaces request failures as an error state', async () => {
    const { client, suggestReply } = makeClient();
    suggestReply.mockRejectedValueOnce(new Error('boom'));
    const c = new CompositionController(client);

    c.setCustomerText('Help.');
    await flush();

    const state = c.getState();
    expect(state.error).toBe('boom');
    expect(state.loading).toBe(false);
    expect(state.suggestions).toEqual([]);
  });
});
