/** Pure HTML renderers. Every number shown on screen is the exact value the
 * service sent: strings pass through verbatim and numbers are serialized
 * with JSON.stringify, never reformatted, rounded, or recomputed. */

import type {
  AuditPage,
  Escalation,
  EvidenceRecord,
  TurnPayload,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Verbatim value serialization; the console never reformats quantities. */
export function displayValue(value: number | number[] | string): string {
  return typeof value === "string" ? value : JSON.stringify(value);
}

export function renderVerdictBanner(turn: TurnPayload): string {
  const cls = turn.verdict === "accepted" ? "banner-accepted" : "banner-escalated";
  const critic = turn.critic
    ? ` · critic J=${displayValue(turn.critic.score_j)} after ${turn.critic.iterations} check(s)`
    : "";
  return `<div class="banner ${cls}">${turn.verdict.toUpperCase()}${escapeHtml(critic)}` +
    ` · ${displayValue(turn.elapsed_s)}s</div>`;
}

export function renderRecommendation(turn: TurnPayload): string {
  const rec = turn.recommendation;
  const parts: string[] = [];
  parts.push(`<p class="narrative">${escapeHtml(rec.narrative)}</p>`);
  if (rec.table) {
    const header = rec.table.columns.map((c) => `<th>${escapeHtml(c)}</th>`).join("");
    const body = rec.table.rows
      .map((row, i) => {
        const offset = rec.offsets[i];
        const marker = offset && !offset.within_bounds
          ? ` class="bound-violation" title="exceeds configured offset limit"`
          : "";
        const cells = row.map((cell) => `<td${marker}>${escapeHtml(cell)}</td>`).join("");
        return `<tr>${cells}</tr>`;
      })
      .join("");
    parts.push(`<table class="offsets"><thead><tr>${header}</tr></thead>` +
      `<tbody>${body}</tbody></table>`);
  }
  if (rec.quantities.length > 0) {
    const rows = rec.quantities
      .map((q) => {
        const unit = q.unit ? ` ${escapeHtml(q.unit)}` : "";
        const provenance = q.provenance ? escapeHtml(q.provenance) : "unmapped";
        return `<li data-provenance="${provenance}">` +
          `<code>${escapeHtml(q.id)}</code> = ` +
          `<span class="value">${escapeHtml(displayValue(q.value))}</span>${unit}` +
          ` <span class="provenance" title="provenance">${provenance}</span></li>`;
      })
      .join("");
    parts.push(`<ul class="quantities">${rows}</ul>`);
  }
  if (rec.claims.length > 0) {
    const rows = rec.claims
      .map((claim) => {
        const chips = claim.evidence
          .map((id) => `<button class="evidence-chip" data-triple="${escapeHtml(id)}">` +
            `${escapeHtml(id)}</button>`)
          .join(" ");
        return `<li class="claim claim-${escapeHtml(claim.kind)}">` +
          `${escapeHtml(claim.text)} ${chips}</li>`;
      })
      .join("");
    parts.push(`<ul class="claims">${rows}</ul>`);
  }
  return parts.join("\n");
}

export function renderEscalationPanel(escalation: Escalation): string {
  const checks = escalation.failed_checks
    .map((f) => `<li class="failed-check"><strong>${escapeHtml(f.check)}</strong>: ` +
      `${escapeHtml(f.detail)}</li>`)
    .join("");
  const missing = escalation.missing_info
    .map((info) => `<li class="missing-info">${escapeHtml(info)}</li>`)
    .join("");
  return `<div class="escalation"><h3>Escalated for human review</h3>` +
    `<ul class="failed-checks">${checks}</ul>` +
    `<h4>Missing information</h4><ul class="missing">${missing}</ul></div>`;
}

export function renderTurn(turn: TurnPayload): string {
  const body = turn.verdict === "accepted" || !turn.escalation
    ? renderRecommendation(turn)
    : renderEscalationPanel(turn.escalation);
  return `${renderVerdictBanner(turn)}\n${body}`;
}

export function renderAuditTimeline(page: AuditPage): string {
  const rows = page.events
    .map((e) => `<tr><td>${e.index}</td><td>${displayValue(e.ts)}</td>` +
      `<td class="actor-${escapeHtml(e.actor)}">${escapeHtml(e.actor)}</td>` +
      `<td>${escapeHtml(e.kind)}</td>` +
      `<td><code>${escapeHtml(e.digest.slice(0, 12))}</code></td></tr>`)
    .join("");
  return `<table class="audit"><thead><tr><th>#</th><th>ts</th><th>actor</th>` +
    `<th>kind</th><th>digest</th></tr></thead><tbody>${rows}</tbody></table>` +
    `<p class="audit-total">${page.total} event(s)</p>`;
}

export function renderEvidenceDetail(record: EvidenceRecord): string {
  const figure = record.figure_ref
    ? `<span class="figure-ref">${escapeHtml(record.figure_ref)}</span>`
    : "";
  return `<div class="evidence-detail" data-id="${escapeHtml(record.id)}">` +
    `<code>${escapeHtml(record.id)}</code> ` +
    `<strong>${escapeHtml(record.subject)}</strong> ` +
    `<em>${escapeHtml(record.relation)}</em> ` +
    `<strong>${escapeHtml(record.object)}</strong>` +
    `<p>${escapeHtml(record.context)}</p>` +
    `${figure}<span class="source">${escapeHtml(record.source_doc)}</span></div>`;
}
