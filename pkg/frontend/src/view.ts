import type { ApiClient } from "./api.js";
import { visibleItems, type Filter, type State, type Store } from "./store.js";
import type { QueueItem, TicketResult } from "./types.js";

const FILTERS: Filter[] = ["pending", "corrected", "all"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderToolbar(state: State, store: Store): HTMLElement {
  const bar = el("div", "toolbar");
  const label = el("label", "filter-label", "show: ");
  const select = el("select", "filter-select");
  select.setAttribute("data-testid", "filter");
  for (const f of FILTERS) {
    const option = el("option", undefined, f);
    option.value = f;
    option.selected = f === state.filter;
    select.appendChild(option);
  }
  select.addEventListener("change", () => {
    void store.setFilter(select.value as Filter);
  });
  label.appendChild(select);
  bar.appendChild(label);
  bar.appendChild(
    el("span", "hint", "keys: j/k select · 1-5 accept candidate · e free text"),
  );
  return bar;
}

function renderLoadError(state: State, store: Store): HTMLElement | null {
  if (!state.loadError) return null;
  const banner = el("div", "banner error");
  banner.setAttribute("data-testid", "load-error");
  banner.appendChild(el("span", undefined, `queue refresh failed: ${state.loadError} `));
  const retry = el("button", "retry", "retry");
  retry.addEventListener("click", () => void store.refresh());
  banner.appendChild(retry);
  return banner;
}

function renderCard(item: QueueItem, state: State, store: Store, api: ApiClient): HTMLElement {
  const card = el("article", "card");
  card.setAttribute("data-testid", "queue-item");
  card.setAttribute("data-item-id", item.id);
  card.setAttribute("data-status", item.status);
  if (item.id === state.selectedId) card.classList.add("selected");
  card.addEventListener("click", () => store.select(item.id));

  const crop = el("img", "crop");
  crop.src = api.cropUrl(item.id);
  crop.alt = `glyph crop ${item.id}`;
  card.appendChild(crop);

  const body = el("div", "card-body");
  body.appendChild(
    el("div", "context", `${item.ticket_id} · ${item.region_id} · char #${item.char_index}`),
  );

  if (item.status === "corrected") {
    const done = el("div", "corrected", `corrected: ${item.correction ?? ""}`);
    done.setAttribute("data-testid", "corrected-label");
    body.appendChild(done);
  } else {
    const row = el("div", "candidates");
    item.candidates.forEach(([label, confidence], k) => {
      const button = el("button", "candidate");
      button.setAttribute("data-testid", `candidate-${k}`);
      button.textContent = `${k + 1}: ${label} (${(confidence * 100).toFixed(1)}%)`;
      button.addEventListener("click", (event) => {
        event.stopPropagation();
        void store.submit(item.id, label);
      });
      row.appendChild(button);
    });
    body.appendChild(row);

    const form = el("form", "free-text");
    const input = el("input");
    input.setAttribute("data-testid", "free-text-input");
    input.placeholder = "other character…";
    input.maxLength = 4;
    const submit = el("button", "submit", "apply");
    submit.type = "submit";
    form.appendChild(input);
    form.appendChild(submit);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void store.submit(item.id, input.value.trim());
    });
    body.appendChild(form);
  }

  const error = state.errors.get(item.id);
  if (error) {
    const note = el("div", "banner error inline");
    note.setAttribute("data-testid", "item-error");
    note.textContent = error.storedLabel
      ? `${error.message} (server has: ${error.storedLabel})`
      : error.message;
    body.appendChild(note);
  }
  if (state.inflight.has(item.id)) {
    body.appendChild(el("div", "inflight", "submitting…"));
  }
  card.appendChild(body);
  return card;
}

function renderQueue(state: State, store: Store, api: ApiClient): HTMLElement {
  const list = el("section", "queue");
  list.setAttribute("data-testid", "queue");
  const items = visibleItems(state);
  if (state.loaded && items.length === 0) {
    const empty = el("p", "empty", "no pending items");
    empty.setAttribute("data-testid", "empty-queue");
    list.appendChild(empty);
    return list;
  }
  for (const item of items) list.appendChild(renderCard(item, state, store, api));
  return list;
}

function renderTicket(ticket: TicketResult | null): HTMLElement {
  const panel = el("aside", "ticket");
  panel.setAttribute("data-testid", "ticket-panel");
  if (!ticket) {
    panel.appendChild(el("p", "empty", "select an item to see its ticket"));
    return panel;
  }
  panel.appendChild(el("h2", undefined, ticket.id));
  const regions = el("ul", "regions");
  for (const region of ticket.regions) {
    const row = el("li", region.complete ? "region complete" : "region");
    row.setAttribute("data-testid", `region-${region.id}`);
    row.textContent = `${region.id}: ${region.text}`;
    regions.appendChild(row);
  }
  panel.appendChild(regions);
  const fields = el("dl", "fields");
  for (const [key, value] of Object.entries(ticket.fields)) {
    fields.appendChild(el("dt", undefined, key));
    fields.appendChild(el("dd", undefined, value));
  }
  panel.appendChild(fields);
  if (ticket.pending.length > 0) {
    panel.appendChild(el("p", "pending-note", `${ticket.pending.length} glyph(s) awaiting review`));
  }
  return panel;
}

/** Replace `root`'s contents from the state. Rendering is a pure function
 * of the store state, so every update repaints the whole view. */
export function render(root: HTMLElement, state: State, store: Store, api: ApiClient): void {
  root.textContent = "";
  root.appendChild(renderToolbar(state, store));
  const banner = renderLoadError(state, store);
  if (banner) root.appendChild(banner);
  const main = el("main", "layout");
  main.appendChild(renderQueue(state, store, api));
  main.appendChild(renderTicket(state.ticket));
  root.appendChild(main);
}
