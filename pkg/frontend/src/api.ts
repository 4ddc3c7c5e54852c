/** JSON client for the suggestion service. */

export interface Suggestion {
  topic: number;
  probability: number;
  top_words: string[];
  top_phrases: string[];
  exemplars: string[];
}

export interface ReplyResponse {
  topics: Suggestion[];
  tau: number[];
}

export interface NextResponse {
  topics: Suggestion[];
  position: number;
}

export interface TopicsResponse {
  view: string;
  topics: Array<{ topic: number; top_words: string[]; top_phrases: string[] }>;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

export type FetchLike = typeof fetch;

/**
 * Thin typed wrapper over the service endpoints.  The base URL comes from
 * build-time/env configuration; every method supports cancellation through
 * an AbortSignal so newer requests can supersede in-flight ones.
 */
export class SuggestClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private async postJson<T>(
    path: string,
    body: unknown,
    signal?: AbortSignal,
  ): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
      signal,
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, `${path} failed with ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  suggestReply(
    customer: string,
    k: number,
    signal?: AbortSignal,
  ): Promise<ReplyResponse> {
    return this.postJson('/suggest/reply', { customer, k }, signal);
  }

  suggestNext(
    customer: string,
    sentences: string[],
    k: number,
    signal?: AbortSignal,
  ): Promise<NextResponse> {
    return this.postJson('/suggest/next', { customer, sentences, k }, signal);
  }

  async topics(view = 'S'): Promise<TopicsResponse> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/topics?view=${encodeURIComponent(view)}`,
    );
    if (!resp.ok) {
      throw new ApiError(resp.status, `/topics failed with ${resp.status}`);
    }
    return (await resp.json()) as TopicsResponse;
  }
}
