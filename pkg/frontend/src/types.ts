/** Wire types mirroring the review service's JSON payloads. */

export type ItemStatus = "pending" | "corrected";

export interface QueueItem {
  id: string;
  ticket_id: string;
  region_id: string;
  char_index: number;
  crop_path: string;
  /** [label, confidence] pairs in descending confidence, server order. */
  candidates: [string, number][];
  status: ItemStatus;
  correction: string | null;
  created_at: string | null;
  corrected_at: string | null;
}

export interface CharRecord {
  bbox: number[];
  char: string;
  confidence: number;
  source: string;
  pending_item?: string;
}

export interface RegionResult {
  id: string;
  bbox: number[];
  text: string;
  complete: boolean;
  chars: CharRecord[];
}

export interface TicketResult {
  id: string;
  regions: RegionResult[];
  fields: Record<string, string>;
  pending: string[];
}

export interface CorrectionResponse {
  item_id: string;
  ticket_id: string;
  result: TicketResult;
}
