// Chain overview: per-stakeholder index heatmap and the live alert feed.
// Every cell shows the server's display string and class; coloring is a
// straight lookup on the served classification.

import { AlertRow, IndexReport, StakeholdersResponse } from "../api.js";
import { classColor, escapeHtml, money } from "../format.js";

export const INDEX_ORDER = [
  "debt_index",
  "quick_ratio",
  "availability_index",
  "return_of_capital",
  "rotation_of_current_assets",
  "warehouse_turnover",
  "solvency_index",
];

export const INDEX_LABELS: Record<string, string> = {
  debt_index: "Debt",
  quick_ratio: "Quick",
  availability_index: "Availability",
  return_of_capital: "ROC",
  rotation_of_current_assets: "Rotation",
  warehouse_turnover: "Warehouse",
  solvency_index: "Solvency",
};

export function renderHeatmap(
  container: HTMLElement,
  stakeholders: StakeholdersResponse,
  latestByStakeholder: Map<string, IndexReport | null>,
): void {
  const head = INDEX_ORDER.map((n) => `<th>${INDEX_LABELS[n]}</th>`).join("");
  let rows = "";
  for (const s of stakeholders.stakeholders) {
    const report = latestByStakeholder.get(s.id) ?? null;
    const cells = INDEX_ORDER.map((name) => {
      const cell = report?.indices[name];
      if (!cell || cell.display === null) {
        return `<td class="cell undef" data-stakeholder="${s.id}" data-index="${name}">&ndash;</td>`;
      }
      return (
        `<td class="cell ${classColor(cell.class)}" data-stakeholder="${s.id}" data-index="${name}"` +
        ` title="${cell.class}">${cell.display}</td>`
      );
    }).join("");
    rows += `<tr><th class="rowhead">${s.id}</th><td class="balance" data-balance="${s.id}">${money(s.balance)}</td>${cells}</tr>`;
  }
  container.innerHTML = `
    <table class="heatmap">
      <thead><tr><th>Stakeholder</th><th>FT balance</th>${head}</tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function renderAlertFeed(container: HTMLElement, alerts: AlertRow[]): void {
  if (alerts.length === 0) {
    container.innerHTML = `<div class="empty" id="alert-feed-empty">No alerts</div>`;
    return;
  }
  const items = alerts
    .map((a) => {
      const when =
        a.kind === "predicted" && a.predicted_crossing_tick !== null
          ? ` &rarr; crossing at tick ${a.predicted_crossing_tick}`
          : "";
      return (
        `<li class="alert-item ${classColor(a.severity)}" data-alert="${a.alert_id}">` +
        `<span class="badge">${a.severity}</span> ` +
        `<b>${escapeHtml(a.stakeholder_id)}</b> ${escapeHtml(a.index_name)} (${a.kind}${when})` +
        `</li>`
      );
    })
    .join("");
  container.innerHTML = `<ul class="alert-feed">${items}</ul>`;
}
