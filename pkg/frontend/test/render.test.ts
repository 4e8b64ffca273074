import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { join } from "node:path";

import {
  displayValue,
  escapeHtml,
  renderAuditTimeline,
  renderEscalationPanel,
  renderEvidenceDetail,
  renderRecommendation,
  renderTurn,
  renderVerdictBanner,
} from "../src/render.js";
import type { AuditPage, EvidenceRecord, TurnPayload } from "../src/types.js";

function fixture<T>(name: string): T {
  const raw = readFileSync(join(__dirname, "fixtures", name), "utf-8");
  return JSON.parse(raw) as T;
}

const accepted = fixture<TurnPayload>("accepted_turn.json");
const escalated = fixture<TurnPayload>("escalated_turn.json");
const kgTurn = fixture<TurnPayload>("kg_turn.json");
const auditPage = fixture<AuditPage>("audit_page.json");
const auditAfter = fixture<AuditPage>("audit_after_approval.json");
const triple = fixture<EvidenceRecord>("triple.json");

function tableCells(html: string): string[] {
  return [...html.matchAll(/<td[^>]*>([^<]*)<\/td>/g)].map((m) => m[1]);
}

describe("recommendation rendering", () => {
  it("renders every offset cell byte-equal to the fixture value", () => {
    const html = renderRecommendation(accepted);
    const cells = tableCells(html);
    for (const row of accepted.recommendation.table!.rows) {
      for (const value of row) {
        expect(cells).toContain(value);
      }
    }
    // and in row order
    const flat = accepted.recommendation.table!.rows.flat();
    expect(cells).toEqual(flat);
  });

  it("renders every quantity verbatim with its provenance id", () => {
    const html = renderRecommendation(accepted);
    for (const quantity of accepted.recommendation.quantities) {
      expect(html).toContain(escapeHtml(displayValue(quantity.value)));
      expect(html).toContain(quantity.provenance!);
    }
  });

  it("performs no numeric reformatting", () => {
    expect(displayValue(0.001164)).toBe("0.001164");
    expect(displayValue([1, 2.5])).toBe("[1,2.5]");
    expect(displayValue("0.002497")).toBe("0.002497");
  });

  it("marks out-of-bound offsets", () => {
    const tweaked: TurnPayload = JSON.parse(JSON.stringify(accepted));
    tweaked.recommendation.offsets[0].within_bounds = false;
    const html = renderRecommendation(tweaked);
    expect(html).toContain("bound-violation");
    expect(renderRecommendation(accepted)).not.toContain("bound-violation");
  });

  it("renders KG claims with evidence chips", () => {
    const html = renderRecommendation(kgTurn);
    for (const claim of kgTurn.recommendation.claims) {
      for (const id of claim.evidence) {
        expect(html).toContain(`data-triple="${id}"`);
      }
    }
  });
});

describe("verdict banner", () => {
  it("shows the verdict and elapsed time", () => {
    const html = renderVerdictBanner(accepted);
    expect(html).toContain("ACCEPTED");
    expect(html).toContain(displayValue(accepted.elapsed_s));
  });

  it("styles escalations distinctly", () => {
    expect(renderVerdictBanner(escalated)).toContain("banner-escalated");
  });
});

describe("escalation panel", () => {
  it("lists every failed check from the fixture", () => {
    const html = renderEscalationPanel(escalated.escalation!);
    for (const check of escalated.escalation!.failed_checks) {
      expect(html).toContain(check.check);
      expect(html).toContain(escapeHtml(check.detail));
    }
  });

  it("lists the missing information prompts", () => {
    const html = renderEscalationPanel(escalated.escalation!);
    for (const info of escalated.escalation!.missing_info) {
      expect(html).toContain(escapeHtml(info));
    }
  });

  it("renderTurn picks the escalation branch", () => {
    expect(renderTurn(escalated)).toContain("Escalated for human review");
    expect(renderTurn(accepted)).not.toContain("Escalated for human review");
  });
});

describe("audit timeline", () => {
  it("renders one row per event plus the total", () => {
    const html = renderAuditTimeline(auditPage);
    const rows = [...html.matchAll(/<tr><td>\d+<\/td>/g)];
    expect(rows.length).toBe(auditPage.events.length);
    expect(html).toContain(`${auditPage.total} event(s)`);
  });

  it("recorded approval fixture appends exactly one human event", () => {
    expect(auditAfter.total).toBe(auditPage.total + 1);
    const lastEvent = auditAfter.events[auditAfter.events.length - 1];
    expect(lastEvent.actor).toBe("human");
    expect(lastEvent.kind).toBe("human-approved");
    const humanEventsBefore = auditPage.events.filter((e) => e.actor === "human");
    const humanEventsAfter = auditAfter.events.filter((e) => e.actor === "human");
    expect(humanEventsAfter.length).toBe(humanEventsBefore.length + 1);
  });
});

describe("evidence detail", () => {
  it("renders the full triple record", () => {
    const html = renderEvidenceDetail(triple);
    for (const field of [triple.id, triple.subject, triple.relation,
                         triple.object, triple.source_doc]) {
      expect(html).toContain(escapeHtml(field));
    }
  });
});

describe("html safety", () => {
  it("escapes markup in service text", () => {
    expect(escapeHtml("<script>alert(1)</script>"))
      .toBe("&lt;script&gt;alert(1)&lt;/script&gt;");
  });
});
