/** In-memory stand-in for the review service, faithful to its semantics:
 * idempotent identical re-corrections, 409 on conflicting labels, 404 on
 * unknown ids, and ticket results re-derived when a correction lands. */
import type { QueueItem, TicketResult } from "../src/types.js";

export interface FixtureService {
  fetchFn: typeof fetch;
  items: Map<string, QueueItem>;
  tickets: Map<string, TicketResult>;
  requests: { method: string; path: string }[];
  /** when set, POSTs fail once with this status, then the override clears */
  failNextPost: { status: number; detail: string } | null;
  /** artificial latency hook resolved by the test */
  gate: Promise<void> | null;
}

const PLACEHOLDER = "□";

function makeTicket(id: string, itemId: string): TicketResult {
  return {
    id,
    regions: [
      {
        id: "f0k",
        bbox: [10, 10, 90, 40],
        text: "甲乙:",
        complete: true,
        chars: [
          { bbox: [10, 10, 35, 40], char: "甲", confidence: 0.99, source: "classifier" },
          { bbox: [36, 10, 60, 40], char: "乙", confidence: 0.99, source: "classifier" },
          { bbox: [61, 10, 70, 40], char: ":", confidence: 0.97, source: "segmenter" },
        ],
      },
      {
        id: "f0v",
        bbox: [110, 10, 220, 40],
        text: `12${PLACEHOLDER}45`,
        complete: false,
        chars: [
          { bbox: [110, 10, 130, 40], char: "1", confidence: 0.99, source: "segmenter" },
          { bbox: [131, 10, 150, 40], char: "2", confidence: 0.99, source: "segmenter" },
          {
            bbox: [151, 10, 170, 40],
            char: PLACEHOLDER,
            confidence: 0.61,
            source: "classifier",
            pending_item: itemId,
          },
          { bbox: [171, 10, 190, 40], char: "4", confidence: 0.99, source: "segmenter" },
          { bbox: [191, 10, 210, 40], char: "5", confidence: 0.99, source: "segmenter" },
        ],
      },
    ],
    fields: {},
    pending: [itemId],
  };
}

function makeItem(id: string, ticketId: string): QueueItem {
  return {
    id,
    ticket_id: ticketId,
    region_id: "f0v",
    char_index: 2,
    crop_path: `crops/${id}.png`,
    candidates: [
      ["丙", 0.62],
      ["丁", 0.21],
      ["戊", 0.1],
    ],
    status: "pending",
    correction: null,
    created_at: null,
    corrected_at: null,
  };
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function applyCorrection(service: FixtureService, item: QueueItem, label: string): TicketResult {
  item.status = "corrected";
  item.correction = label;
  item.corrected_at = "2026-01-01T00:00:00+00:00";
  const ticket = service.tickets.get(item.ticket_id)!;
  const region = ticket.regions.find((r) => r.id === item.region_id)!;
  const rec = region.chars[item.char_index]!;
  rec.char = label;
  rec.confidence = 1.0;
  rec.source = "manual";
  delete rec.pending_item;
  region.text = region.chars.map((c) => c.char).join("");
  region.complete = region.chars.every((c) => c.pending_item === undefined);
  ticket.pending = ticket.pending.filter((p) => p !== item.id);
  return ticket;
}

export function makeFixtureService(
  itemIds: string[] = ["t00001.f0v.2", "t00002.f0v.2", "t00003.f0v.2"],
): FixtureService {
  const service: FixtureService = {
    items: new Map(),
    tickets: new Map(),
    requests: [],
    failNextPost: null,
    gate: null,
    fetchFn: undefined as unknown as typeof fetch,
  };
  for (const id of itemIds) {
    const ticketId = id.split(".")[0]!;
    service.items.set(id, makeItem(id, ticketId));
    service.tickets.set(ticketId, makeTicket(ticketId, id));
  }

  service.fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = new URL(String(input), "http://fixture");
    const path = url.pathname;
    const method = init?.method ?? "GET";
    service.requests.push({ method, path });
    if (service.gate) await service.gate;

    if (method === "GET" && path === "/api/health") {
      return json({ status: "ok" });
    }
    if (method === "GET" && path === "/api/queue") {
      const status = url.searchParams.get("status");
      if (status && status !== "pending" && status !== "corrected") {
        return json({ detail: `unknown status ${status}` }, 400);
      }
      const items = [...service.items.values()]
        .filter((it) => !status || it.status === status)
        .sort((a, b) => a.id.localeCompare(b.id));
      return json(items);
    }
    if (method === "POST" && path.startsWith("/api/queue/")) {
      if (service.failNextPost) {
        const { status, detail } = service.failNextPost;
        service.failNextPost = null;
        return json({ detail }, status);
      }
      const id = decodeURIComponent(path.slice("/api/queue/".length));
      const { label } = JSON.parse(String(init?.body)) as { label: string };
      if (!label) return json({ detail: "empty label" }, 400);
      const item = service.items.get(id);
      if (!item) return json({ detail: `unknown correction item '${id}'` }, 404);
      if (item.status === "corrected") {
        if (item.correction !== label) {
          return json({ detail: `item ${id} already corrected as '${item.correction}'` }, 409);
        }
        return json({
          item_id: id,
          ticket_id: item.ticket_id,
          result: service.tickets.get(item.ticket_id)!,
        });
      }
      const ticket = applyCorrection(service, item, label);
      return json({ item_id: id, ticket_id: item.ticket_id, result: ticket });
    }
    if (method === "GET" && path.startsWith("/api/tickets/")) {
      const id = decodeURIComponent(path.slice("/api/tickets/".length));
      const ticket = service.tickets.get(id);
      return ticket ? json(ticket) : json({ detail: `unknown ticket '${id}'` }, 404);
    }
    if (method === "GET" && path.startsWith("/api/crops/")) {
      const id = decodeURIComponent(path.slice("/api/crops/".length));
      if (!service.items.has(id)) return json({ detail: "unknown item" }, 404);
      return new Response(new Uint8Array([0x89, 0x50, 0x4e, 0x47]), {
        status: 200,
        headers: { "content-type": "image/png" },
      });
    }
    return json({ detail: "not found" }, 404);
  }) as typeof fetch;

  return service;
}

/** Flush pending microtasks so store updates settle. */
export async function flush(times = 25): Promise<void> {
  for (let i = 0; i < times; i += 1) {
    await Promise.resolve();
  }
}
