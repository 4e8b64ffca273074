/** Browser wiring: query bar, recommendation pane, evidence pane, audit
 * timeline, and the approve/override workflow. One request in flight at a
 * time, polling (not push) for trail refresh. */

import { ApiError, ConsoleApi } from "./api.js";
import {
  renderAuditTimeline,
  renderEvidenceDetail,
  renderTurn,
} from "./render.js";
import type { TurnPayload } from "./types.js";

const POLL_INTERVAL_MS = 2000;

interface ConsoleElements {
  queryInput: HTMLInputElement;
  submitButton: HTMLButtonElement;
  turnPane: HTMLElement;
  evidencePane: HTMLElement;
  auditPane: HTMLElement;
  approveButton: HTMLButtonElement;
  overrideButton: HTMLButtonElement;
  noteInput: HTMLInputElement;
  statusLine: HTMLElement;
}

export class ConsoleApp {
  private sessionId: string | null = null;
  private currentTurn: TurnPayload | null = null;
  private decidedTurns = new Set<string>();
  private inFlight = false;

  constructor(private api: ConsoleApi, private el: ConsoleElements) {}

  async start(): Promise<void> {
    this.sessionId = await this.api.createSession();
    this.el.statusLine.textContent = `session ${this.sessionId}`;
    this.el.submitButton.addEventListener("click", () => void this.submit());
    this.el.queryInput.addEventListener("keydown", (event) => {
      if (event.key === "Enter") void this.submit();
    });
    this.el.approveButton.addEventListener("click", () => void this.decide("approved"));
    this.el.overrideButton.addEventListener("click", () => void this.decide("override"));
    this.el.turnPane.addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      const tripleId = target.dataset?.triple;
      if (tripleId) void this.showEvidence(tripleId);
    });
    setInterval(() => void this.refreshAudit(), POLL_INTERVAL_MS);
  }

  private async submit(): Promise<void> {
    if (!this.sessionId || this.inFlight) return;
    const query = this.el.queryInput.value.trim();
    if (!query) return;
    this.inFlight = true;
    this.el.submitButton.disabled = true;
    try {
      const turn = await this.api.submitTurn(this.sessionId, query);
      this.currentTurn = turn;
      this.el.turnPane.innerHTML = renderTurn(turn);
      this.updateApprovalControls();
      await this.refreshAudit();
    } catch (error) {
      this.showError(error);
      // keep the input so the operator can retry or edit
      return;
    } finally {
      this.inFlight = false;
      this.el.submitButton.disabled = false;
    }
    this.el.queryInput.value = "";
  }

  private updateApprovalControls(): void {
    const turn = this.currentTurn;
    const approvable = !!turn && turn.kind === "recommendation" &&
      !this.decidedTurns.has(turn.turn_id);
    this.el.approveButton.disabled = !approvable || turn!.verdict !== "accepted";
    this.el.overrideButton.disabled = !approvable || turn!.verdict !== "escalated";
  }

  private async decide(decision: "approved" | "override"): Promise<void> {
    if (!this.sessionId || !this.currentTurn) return;
    const turnId = this.currentTurn.turn_id;
    if (this.decidedTurns.has(turnId)) {
      this.el.statusLine.textContent = "this turn already has a recorded decision";
      return;
    }
    try {
      await this.api.approve(this.sessionId, turnId, decision,
        this.el.noteInput.value.trim());
      this.decidedTurns.add(turnId);
      this.updateApprovalControls();
      await this.refreshAudit();
      this.el.statusLine.textContent = `${decision} recorded for turn ${turnId}`;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.decidedTurns.add(turnId);
        this.updateApprovalControls();
        this.el.statusLine.textContent = "stale: decision already recorded";
      } else {
        this.showError(error);
      }
    }
  }

  private async showEvidence(tripleId: string): Promise<void> {
    try {
      const record = await this.api.evidence(tripleId);
      this.el.evidencePane.innerHTML = renderEvidenceDetail(record);
    } catch (error) {
      this.showError(error);
    }
  }

  private async refreshAudit(): Promise<void> {
    if (!this.sessionId) return;
    try {
      const page = await this.api.auditPage(this.sessionId, 0, 200);
      this.el.auditPane.innerHTML = renderAuditTimeline(page);
    } catch {
      // transient poll failures leave the previous trail on screen
    }
  }

  private showError(error: unknown): void {
    const message = error instanceof Error ? error.message : String(error);
    this.el.statusLine.textContent = `error: ${message}`;
  }
}

export function mount(): void {
  const byId = <T extends HTMLElement>(id: string): T => {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  };
  const app = new ConsoleApp(new ConsoleApi(""), {
    queryInput: byId<HTMLInputElement>("query-input"),
    submitButton: byId<HTMLButtonElement>("submit-button"),
    turnPane: byId("turn-pane"),
    evidencePane: byId("evidence-pane"),
    auditPane: byId("audit-pane"),
    approveButton: byId<HTMLButtonElement>("approve-button"),
    overrideButton: byId<HTMLButtonElement>("override-button"),
    noteInput: byId<HTMLInputElement>("note-input"),
    statusLine: byId("status-line"),
  });
  void app.start();
}

if (typeof document !== "undefined" && document.getElementById("query-input")) {
  mount();
}
