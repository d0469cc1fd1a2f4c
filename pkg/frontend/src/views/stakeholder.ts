// Stakeholder detail: index time series, risk score with components and
// the current service recommendations. Series cells repeat the served
// display strings; nothing is recomputed client-side.

import { IndexReport, Recommendation, RiskScore } from "../api.js";
import { classColor, escapeHtml } from "../format.js";
import { INDEX_LABELS, INDEX_ORDER } from "./overview.js";

export function renderSeries(container: HTMLElement, history: IndexReport[]): void {
  if (history.length === 0) {
    container.innerHTML = `<div class="empty">No index reports yet (no silo shared)</div>`;
    return;
  }
  const ticks = history.map((r) => r.period_tick);
  const head = ticks.map((t) => `<th>t${t}</th>`).join("");
  const rows = INDEX_ORDER.map((name) => {
    const cells = history
      .map((r) => {
        const cell = r.indices[name];
        if (!cell || cell.display === null) return `<td class="cell undef">&ndash;</td>`;
        return `<td class="cell ${classColor(cell.class)}" data-series="${name}:${r.period_tick}">${cell.display}</td>`;
      })
      .join("");
    return `<tr><th class="rowhead">${INDEX_LABELS[name]}</th>${cells}</tr>`;
  }).join("");
  container.innerHTML = `<table class="series"><thead><tr><th>Index</th>${head}</tr></thead><tbody>${rows}</tbody></table>`;
}

export function renderRisk(container: HTMLElement, risk: RiskScore): void {
  container.innerHTML = `
    <div class="risk" data-risk="${risk.stakeholder_id}">
      <div class="risk-value">${risk.display}</div>
      <div class="risk-components">
        default rate ${escapeHtml(risk.components.default_rate)} &middot;
        late rate ${escapeHtml(risk.components.late_rate)} &middot;
        alerting share ${escapeHtml(risk.components.alert_fraction)}
      </div>
    </div>`;
}

export function renderRecommendations(container: HTMLElement, recs: Recommendation[]): void {
  if (recs.length === 0) {
    container.innerHTML = `<div class="empty">No recommendations</div>`;
    return;
  }
  const items = recs
    .map(
      (r) =>
        `<li class="rec ${classColor(r.severity)}"><b>${r.services.map(escapeHtml).join(", ")}</b>` +
        ` &mdash; ${escapeHtml(r.triggering_index)} (${escapeHtml(r.rationale)})</li>`,
    )
    .join("");
  container.innerHTML = `<ul class="recs">${items}</ul>`;
}
