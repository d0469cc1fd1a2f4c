// Receivables desk: the caller's own positions with the actions they are
// entitled to — securitize a pool of open receivables, pay what they owe,
// propose a dynamic discount as debtor, accept or reject offers as
// creditor. Contract refusals (409) surface verbatim next to the control.

import { ApiClient, ApiError, OfferRow, ReceivableRow, StakeholderRow, actionKey } from "../api.js";
import { escapeHtml, money } from "../format.js";

function rowActions(r: ReceivableRow, me: string): string {
  const actions: string[] = [];
  if (r.status === "open" && r.creditor === me) {
    actions.push(`<label><input type="checkbox" class="pool-pick" value="${r.receivable_id}" /> pool</label>`);
    actions.push(`<button class="assign-btn" data-assign="${r.receivable_id}">Assign</button>`);
  }
  if ((r.status === "open" || r.status === "securitized" || r.status === "assigned") && r.debtor === me) {
    actions.push(`<button class="pay-btn" data-pay="${r.receivable_id}">Pay</button>`);
    if (r.status === "open") {
      actions.push(
        `<button class="offer-btn" data-offer="${r.receivable_id}">Offer 2% discount</button>`,
      );
    }
  }
  return actions.join(" ");
}

export function renderDesk(container: HTMLElement, me: StakeholderRow, tick: number): void {
  const mine = me.receivables;
  const rows = mine
    .map(
      (r) => `
      <tr data-receivable="${r.receivable_id}" class="status-${r.status}">
        <td>${r.receivable_id}</td>
        <td>${escapeHtml(r.creditor)} &rarr; ${escapeHtml(r.debtor)}</td>
        <td class="amount">${money(r.face_value)}</td>
        <td>t${r.due_tick}</td>
        <td class="status" data-status="${r.receivable_id}">${r.status}</td>
        <td>${rowActions(r, me.id)}</td>
      </tr>`,
    )
    .join("");
  const offers = me.offers
    .map((o: OfferRow) => {
      const respond =
        o.state === "offered" && o.proposer !== me.id
          ? `<button class="accept-btn" data-accept="${o.offer_id}">Accept</button>
             <button class="reject-btn" data-reject="${o.offer_id}">Reject</button>`
          : "";
      return `
        <tr data-offer-row="${o.offer_id}">
          <td>${o.offer_id}</td>
          <td>${o.receivable_id}</td>
          <td>${escapeHtml(o.discount_rate)}</td>
          <td class="amount" data-settlement="${o.offer_id}">${money(o.settlement_amount)}</td>
          <td data-offer-state="${o.offer_id}">${o.state}</td>
          <td>${respond}</td>
        </tr>`;
    })
    .join("");
  container.innerHTML = `
    <div class="desk-balance">FT balance <b data-my-balance>${money(me.balance)}</b> at tick ${tick}</div>
    <table class="receivables">
      <thead><tr><th>Id</th><th>Parties</th><th>Face</th><th>Due</th><th>Status</th><th>Actions</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
    <form class="securitize-form">
      <b>Securitize selected pool:</b>
      units <input type="number" name="abs_units" min="1" value="10" />
      advance rate <input type="text" name="advance_rate" value="0.85" size="5" />
      <button type="submit">Initiate</button>
      <span class="form-error" data-error="securitize"></span>
    </form>
    <div class="assign-controls">
      assign to financier <input type="text" name="assignee" data-assignee placeholder="actor id" size="10" />
      at advance <input type="text" name="assign_advance" data-assign-advance value="0.9" size="5" />
      fee <input type="text" name="assign_fee" data-assign-fee value="0.02" size="5" />
      <span class="form-error" data-error="assign"></span>
    </div>
    <h3>Discount offers</h3>
    <table class="offers">
      <thead><tr><th>Offer</th><th>Receivable</th><th>Rate</th><th>Pays now</th><th>State</th><th></th></tr></thead>
      <tbody>${offers || ""}</tbody>
    </table>
    <div class="form-error" data-error="desk"></div>`;
}

function showError(container: HTMLElement, slot: string, err: unknown): void {
  const node = container.querySelector<HTMLElement>(`[data-error="${slot}"]`);
  if (!node) return;
  if (err instanceof ApiError) node.textContent = err.serverMessage || err.errorCode;
  else node.textContent = "network failure, retry";
}

export function wireDesk(container: HTMLElement, api: ApiClient, onDone: () => void): void {
  container.querySelectorAll<HTMLButtonElement>("button[data-pay]").forEach((btn) => {
    const key = actionKey(`pay-${btn.dataset.pay}`);
    btn.addEventListener("click", async () => {
      btn.disabled = true;
      try {
        const result = await api.pay(btn.dataset.pay!, key);
        const status = container.querySelector(`[data-status="${btn.dataset.pay}"]`);
        if (status) status.textContent = result.receivable.status;
        onDone();
      } catch (err) {
        btn.disabled = false;
        showError(container, "desk", err);
      }
    });
  });

  container.querySelectorAll<HTMLButtonElement>("button[data-assign]").forEach((btn) => {
    const key = actionKey(`assign-${btn.dataset.assign}`);
    btn.addEventListener("click", async () => {
      const assignee = container.querySelector<HTMLInputElement>("[data-assignee]")?.value.trim() ?? "";
      const advance = container.querySelector<HTMLInputElement>("[data-assign-advance]")?.value.trim() ?? "0.9";
      const fee = container.querySelector<HTMLInputElement>("[data-assign-fee]")?.value.trim() ?? "0.02";
      if (!assignee) {
        showError(container, "assign", new ApiError(0, "", "name a financier to assign to"));
        return;
      }
      btn.disabled = true;
      try {
        await api.assign(btn.dataset.assign!, assignee, advance, fee, key);
        onDone();
      } catch (err) {
        btn.disabled = false;
        showError(container, "assign", err);
      }
    });
  });

  container.querySelectorAll<HTMLButtonElement>("button[data-offer]").forEach((btn) => {
    const key = actionKey(`offer-${btn.dataset.offer}`);
    btn.addEventListener("click", async () => {
      btn.disabled = true;
      try {
        await api.offerDiscount(btn.dataset.offer!, "0.02", key);
        onDone();
      } catch (err) {
        btn.disabled = false;
        showError(container, "desk", err);
      }
    });
  });

  for (const [attr, accept] of [
    ["data-accept", true],
    ["data-reject", false],
  ] as const) {
    container.querySelectorAll<HTMLButtonElement>(`button[${attr}]`).forEach((btn) => {
      const offerId = btn.getAttribute(attr)!;
      const key = actionKey(`respond-${offerId}`);
      btn.addEventListener("click", async () => {
        btn.disabled = true;
        try {
          const result = await api.respondOffer(offerId, accept, key);
          const state = container.querySelector(`[data-offer-state="${offerId}"]`);
          if (state) state.textContent = result.offer_state;
          onDone();
        } catch (err) {
          btn.disabled = false;
          showError(container, "desk", err);
        }
      });
    });
  }

  const form = container.querySelector<HTMLFormElement>("form.securitize-form");
  if (form) {
    const key = actionKey("securitize");
    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      const pool = Array.from(container.querySelectorAll<HTMLInputElement>("input.pool-pick:checked")).map(
        (cb) => cb.value,
      );
      const units = parseInt(form.querySelector<HTMLInputElement>('input[name="abs_units"]')!.value, 10);
      const rate = form.querySelector<HTMLInputElement>('input[name="advance_rate"]')!.value.trim();
      if (pool.length === 0) {
        showError(container, "securitize", new ApiError(0, "", "pick at least one open receivable"));
        return;
      }
      if (!Number.isFinite(units) || units < 1) {
        showError(container, "securitize", new ApiError(0, "", "units must be positive"));
        return;
      }
      try {
        await api.initiateDeal(pool, rate || null, units, key);
        onDone();
      } catch (err) {
        showError(container, "securitize", err);
      }
    });
  }
}
