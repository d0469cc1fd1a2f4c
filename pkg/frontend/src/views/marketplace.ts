// Deal marketplace: issued deals with unsold units, risk and a buy form;
// settled/impaired deals show the server's distribution record. A 409 on
// purchase renders the server's error message verbatim next to the form.

import { ApiClient, ApiError, DealRow, actionKey } from "../api.js";
import { escapeHtml, money } from "../format.js";

export function renderDeals(container: HTMLElement, deals: DealRow[]): void {
  if (deals.length === 0) {
    container.innerHTML = `<div class="empty">No deals on the market</div>`;
    return;
  }
  const blocks = deals.map((deal) => {
    const holders = deal.holders
      .map(
        (h) =>
          `<tr data-holder="${deal.deal_id}:${h.owner}"><td>${escapeHtml(h.owner)}</td>` +
          `<td>[${h.from_unit}, ${h.to_unit})</td></tr>`,
      )
      .join("");
    const distribution = deal.distribution
      ? `<div class="distribution" data-distribution="${deal.deal_id}">
           outcome <b>${deal.distribution.outcome}</b>,
           collected ${money(deal.distribution.collected)},
           retained ${money(deal.distribution.retained)},
           shortfall ${money(deal.distribution.shortfall)}
           <table class="payouts">${Object.entries(deal.distribution.distributed)
             .map(
               ([owner, amount]) =>
                 `<tr data-payout="${deal.deal_id}:${owner}"><td>${escapeHtml(owner)}</td>` +
                 `<td class="amount">${money(amount)}</td></tr>`,
             )
             .join("")}</table>
         </div>`
      : "";
    const buyForm =
      deal.state === "issued"
        ? `<form class="buy-form" data-deal="${deal.deal_id}">
             <input type="number" name="unit_count" min="1" value="1" />
             <button type="submit">Buy units</button>
             <span class="form-error" data-error="${deal.deal_id}"></span>
           </form>`
        : "";
    return `
      <section class="deal" data-deal-card="${deal.deal_id}">
        <h3>${deal.deal_id} <span class="state ${deal.state}">${deal.state}</span></h3>
        <div class="deal-facts">
          originator <b>${escapeHtml(deal.originator)}</b> &middot;
          pool face <span data-fact="pool_face">${money(deal.pool_face_value)}</span> &middot;
          advance paid <span data-fact="advance_paid">${money(deal.advance_paid)}</span> &middot;
          unit notional <span data-fact="unit_notional">${money(deal.unit_notional)}</span> &middot;
          unsold <span class="unsold" data-unsold="${deal.deal_id}">${deal.unsold_units}</span>/${deal.abs_units} &middot;
          risk <span data-fact="risk">${deal.risk_display}</span>
        </div>
        <table class="holders"><thead><tr><th>Holder</th><th>Units</th></tr></thead><tbody>${holders}</tbody></table>
        ${distribution}
        ${buyForm}
      </section>`;
  });
  container.innerHTML = blocks.join("\n");
}

export function wireBuyForms(container: HTMLElement, api: ApiClient, onDone: () => void): void {
  container.querySelectorAll<HTMLFormElement>("form.buy-form").forEach((form) => {
    const dealId = form.dataset.deal!;
    const errorSlot = form.querySelector<HTMLElement>(`[data-error="${dealId}"]`)!;
    // one idempotency key per rendered form: double-clicks reuse the
    // in-flight request instead of submitting twice
    const key = actionKey(`buy-${dealId}`);
    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      const input = form.querySelector<HTMLInputElement>('input[name="unit_count"]')!;
      const units = parseInt(input.value, 10);
      if (!Number.isFinite(units) || units < 1) {
        errorSlot.textContent = "enter a positive unit count";
        return;
      }
      const unsold = container.querySelector(`[data-unsold="${dealId}"]`)?.textContent ?? "";
      if (unsold && units > parseInt(unsold, 10)) {
        errorSlot.textContent = `only ${unsold} units unsold`;
        return;
      }
      errorSlot.textContent = "";
      try {
        const result = await api.purchase(dealId, units, key);
        // optimistic update from the response; the next poll reconciles
        const slot = container.querySelector(`[data-unsold="${dealId}"]`);
        if (slot) slot.textContent = String(result.deal.unsold_units);
        onDone();
      } catch (err) {
        if (err instanceof ApiError) {
          errorSlot.textContent = err.serverMessage || err.errorCode;
        } else {
          errorSlot.textContent = "network failure, retry";
        }
      }
    });
  });
}
