import { ApiClient, ApiError } from "./api.js";
import type { ItemStatus, QueueItem, TicketResult } from "./types.js";

export type Filter = ItemStatus | "all";

export interface ItemError {
  message: string;
  /** Label the server already holds, when the error was a 409 conflict. */
  storedLabel?: string;
}

export interface State {
  items: QueueItem[];
  filter: Filter;
  selectedId: string | null;
  /** item id -> optimistically submitted label (mutation in flight) */
  inflight: ReadonlyMap<string, string>;
  /** item id -> last submission error, shown inline */
  errors: ReadonlyMap<string, ItemError>;
  /** latest result for the selected item's ticket */
  ticket: TicketResult | null;
  /** queue refresh failed; existing state is kept and a retry is offered */
  loadError: string | null;
  loaded: boolean;
}

export type Listener = (state: State) => void;

function initialState(): State {
  return {
    items: [],
    filter: "pending",
    selectedId: null,
    inflight: new Map(),
    errors: new Map(),
    ticket: null,
    loadError: null,
    loaded: false,
  };
}

/** Items as displayed: server order, optimistic submissions applied.
 *
 * Filtering uses the *server-confirmed* status: an optimistically corrected
 * item stays in the pending list (rendered as corrected) until the server
 * acknowledges it with a 200, at which point the confirmed record drops it. */
export function visibleItems(state: State): QueueItem[] {
  const out: QueueItem[] = [];
  for (const item of state.items) {
    if (state.filter !== "all" && item.status !== state.filter) continue;
    const label = state.inflight.get(item.id);
    out.push(
      label === undefined
        ? item
        : { ...item, status: "corrected" as const, correction: label },
    );
  }
  return out;
}

export function selectedItem(state: State): QueueItem | null {
  return visibleItems(state).find((item) => item.id === state.selectedId) ?? null;
}

/** Single source of truth for the UI. State is derived purely from server
 * responses plus the set of in-flight submissions, so a reload reconstructs
 * the same view. At most one mutation per item is in flight. */
export class Store {
  private state: State = initialState();
  private listeners = new Set<Listener>();

  constructor(private readonly api: ApiClient) {}

  getState(): State {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private set(patch: Partial<State>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  /** Fetch the queue; on failure keep current items and surface a banner. */
  async refresh(): Promise<void> {
    try {
      const status = this.state.filter === "all" ? undefined : this.state.filter;
      const items = await this.api.queue(status);
      const patch: Partial<State> = { items, loadError: null, loaded: true };
      const visible = visibleItems({ ...this.state, items });
      if (!visible.some((item) => item.id === this.state.selectedId)) {
        patch.selectedId = visible[0]?.id ?? null;
      }
      this.set(patch);
      await this.syncTicket();
    } catch (err) {
      this.set({ loadError: err instanceof Error ? err.message : String(err) });
    }
  }

  async setFilter(filter: Filter): Promise<void> {
    this.set({ filter, selectedId: null });
    await this.refresh();
  }

  select(itemId: string): void {
    this.set({ selectedId: itemId });
    void this.syncTicket();
  }

  /** Move the selection by `delta` within the visible list (keyboard nav). */
  moveSelection(delta: number): void {
    const visible = visibleItems(this.state);
    if (visible.length === 0) return;
    const index = visible.findIndex((item) => item.id === this.state.selectedId);
    const next = Math.min(Math.max(index + delta, 0), visible.length - 1);
    this.select(visible[next]!.id);
  }

  private async syncTicket(): Promise<void> {
    const item = selectedItem(this.state);
    if (!item) {
      if (this.state.ticket !== null) this.set({ ticket: null });
      return;
    }
    if (this.state.ticket?.id === item.ticket_id) return;
    try {
      const ticket = await this.api.ticket(item.ticket_id);
      this.set({ ticket });
    } catch {
      this.set({ ticket: null });
    }
  }

  /** Optimistic correction: the item renders as corrected immediately; a
   * failed request rolls it back and surfaces the error inline. */
  async submit(itemId: string, label: string): Promise<void> {
    if (!label) {
      this.setError(itemId, { message: "label must not be empty" });
      return;
    }
    if (this.state.inflight.has(itemId)) return; // one mutation per item
    this.setInflight(itemId, label);
    this.clearError(itemId);
    try {
      const response = await this.api.correct(itemId, label);
      const items = this.state.items.map((item) =>
        item.id === itemId
          ? { ...item, status: "corrected" as const, correction: label }
          : item,
      );
      // the reviewer just acted on this ticket: show its refreshed result
      this.set({ items, ticket: response.result });
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        const stored = await this.storedLabel(itemId);
        this.setError(itemId, {
          message: "already corrected with a different label",
          storedLabel: stored,
        });
      } else {
        this.setError(itemId, {
          message: err instanceof Error ? err.message : String(err),
        });
      }
    } finally {
      this.clearInflight(itemId); // rollback: server state wins again
    }
  }

  /** Submit the selected item's k-th candidate (one-keystroke shortcut). */
  async submitCandidate(k: number): Promise<void> {
    const item = selectedItem(this.state);
    if (!item || item.status !== "pending") return;
    const candidate = item.candidates[k];
    if (!candidate) return;
    await this.submit(item.id, candidate[0]);
  }

  private async storedLabel(itemId: string): Promise<string | undefined> {
    try {
      const items = await this.api.queue();
      return items.find((item) => item.id === itemId)?.correction ?? undefined;
    } catch {
      return undefined;
    }
  }

  private setInflight(itemId: string, label: string): void {
    const inflight = new Map(this.state.inflight);
    inflight.set(itemId, label);
    this.set({ inflight });
  }

  private clearInflight(itemId: string): void {
    const inflight = new Map(this.state.inflight);
    inflight.delete(itemId);
    this.set({ inflight });
  }

  private setError(itemId: string, error: ItemError): void {
    const errors = new Map(this.state.errors);
    errors.set(itemId, error);
    this.set({ errors });
  }

  private clearError(itemId: string): void {
    if (!this.state.errors.has(itemId)) return;
    const errors = new Map(this.state.errors);
    errors.delete(itemId);
    this.set({ errors });
  }
}
