import type { CorrectionResponse, ItemStatus, QueueItem, TicketResult } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function errorDetail(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { detail?: string };
    return body.detail ?? res.statusText;
  } catch {
    return res.statusText;
  }
}

/** Thin typed client over the review service. All methods throw ApiError on
 * non-2xx responses so callers can branch on status codes (409 conflicts). */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ApiError(0, err instanceof Error ? err.message : "network failure");
    }
    if (!res.ok) {
      throw new ApiError(res.status, await errorDetail(res));
    }
    return (await res.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/api/health");
  }

  queue(status?: ItemStatus): Promise<QueueItem[]> {
    const suffix = status ? `?status=${status}` : "";
    return this.request(`/api/queue${suffix}`);
  }

  correct(itemId: string, label: string): Promise<CorrectionResponse> {
    return this.request(`/api/queue/${encodeURIComponent(itemId)}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ label }),
    });
  }

  ticket(ticketId: string): Promise<TicketResult> {
    return this.request(`/api/tickets/${encodeURIComponent(ticketId)}`);
  }

  cropUrl(itemId: string): string {
    return `${this.baseUrl}/api/crops/${encodeURIComponent(itemId)}`;
  }
}
