/** Wire types mirroring the service API payloads. The console never
 * computes on these values; it renders them exactly as received. */

export interface Quantity {
  id: string;
  value: number | number[];
  unit: string;
  provenance: string | null;
}

export interface OffsetRow {
  pair_key: string;
  trc: string;
  tlc: string;
  delta: string;
  within_bounds: boolean;
}

export interface EvidenceRecord {
  id: string;
  subject: string;
  relation: string;
  object: string;
  context: string;
  figure_ref: string;
  source_doc: string;
}

export interface ClaimView {
  text: string;
  kind: string;
  evidence: string[];
}

export interface TableView {
  columns: string[];
  rows: string[][];
}

export interface Recommendation {
  narrative: string;
  quantities: Quantity[];
  offsets: OffsetRow[];
  evidence: EvidenceRecord[];
  claims: ClaimView[];
  table: TableView | null;
}

export interface FailedCheck {
  check: string;
  detail: string;
}

export interface Escalation {
  failed_checks: FailedCheck[];
  missing_info: string[];
}

export interface TurnPayload {
  turn_id: string;
  session_id: string;
  kind: string;
  verdict: "accepted" | "escalated";
  recommendation: Recommendation;
  escalation: Escalation | null;
  critic: { decision: string; score_j: number; iterations: number } | null;
  audit_range: [number, number];
  elapsed_s: number;
  called_tools: string[];
}

export interface AuditEventView {
  index: number;
  ts: number;
  actor: string;
  kind: string;
  digest: string;
}

export interface AuditPage {
  total: number;
  offset: number;
  events: AuditEventView[];
}

export interface ApprovalResponse {
  event_index: number;
  ts: number;
}
