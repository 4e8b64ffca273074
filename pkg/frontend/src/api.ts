/** Typed client over the service HTTP API. All console data flows through
 * these calls; there is no other data source. */

import type { ApprovalResponse, AuditPage, EvidenceRecord, TurnPayload } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(`${base}${path}`, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    } catch {
      // keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ConsoleApi {
  constructor(private base: string = "") {}

  async createSession(): Promise<string> {
    const body = await request<{ session_id: string }>(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify({}),
    });
    return body.session_id;
  }

  submitTurn(sessionId: string, query: string): Promise<TurnPayload> {
    return request<TurnPayload>(this.base, `/sessions/${sessionId}/turns`, {
      method: "POST",
      body: JSON.stringify({ query }),
    });
  }

  auditPage(sessionId: string, offset = 0, limit = 100): Promise<AuditPage> {
    return request<AuditPage>(
      this.base,
      `/sessions/${sessionId}/audit?offset=${offset}&limit=${limit}`,
    );
  }

  approve(
    sessionId: string,
    turnId: string,
    decision: "approved" | "override",
    note = "",
  ): Promise<ApprovalResponse> {
    return request<ApprovalResponse>(this.base, `/sessions/${sessionId}/approvals`, {
      method: "POST",
      body: JSON.stringify({ turn_id: turnId, decision, note }),
    });
  }

  evidence(tripleId: string): Promise<EvidenceRecord> {
    return request<EvidenceRecord>(this.base, `/kg/triples/${tripleId}`);
  }
}
