// @vitest-environment jsdom
import { readFileSync, readdirSync, statSync } from "node:fs";
import { join } from "node:path";
import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, actionKey } from "../src/api.js";
import { money } from "../src/format.js";
import { renderAlertFeed, renderHeatmap } from "../src/views/overview.js";
import { renderDeals } from "../src/views/marketplace.js";
import { renderDesk } from "../src/views/desk.js";

const session = { baseUrl: "http://test", token: "tok" };

function okResponse(body: unknown): Response {
  return new Response(JSON.stringify(body), { status: 200, headers: { "content-type": "application/json" } });
}

describe("ApiClient", () => {
  beforeEach(() => vi.unstubAllGlobals());

  it("sends the bearer token", async () => {
    const calls: RequestInit[] = [];
    vi.stubGlobal("fetch", async (_url: string, init?: RequestInit) => {
      calls.push(init ?? {});
      return okResponse({ tick: 0, alerts: [] });
    });
    await new ApiClient(session).alerts();
    const headers = calls[0].headers as Record<string, string>;
    expect(headers.Authorization).toBe("Bearer tok");
  });

  it("deduplicates concurrent posts with the same idempotency key", async () => {
    let hits = 0;
    vi.stubGlobal("fetch", async () => {
      hits += 1;
      await new Promise((r) => setTimeout(r, 20));
      return okResponse({ tx_id: "x", committed: true, block_height: 1, deal: {} });
    });
    const api = new ApiClient(session);
    const key = actionKey("buy");
    // double-click: two invocations while the first is still in flight
    const [a, b] = await Promise.all([api.purchase("d1", 2, key), api.purchase("d1", 2, key)]);
    expect(hits).toBe(1);
    expect(a).toEqual(b);
  });

  it("distinct keys are distinct submissions", async () => {
    let hits = 0;
    vi.stubGlobal("fetch", async () => {
      hits += 1;
      return okResponse({ tx_id: "x", committed: true, block_height: 1, deal: {} });
    });
    const api = new ApiClient(session);
    await api.purchase("d1", 1, actionKey("buy"));
    await api.purchase("d1", 1, actionKey("buy"));
    expect(hits).toBe(2);
  });

  it("carries the server 409 body verbatim", async () => {
    vi.stubGlobal("fetch", async () =>
      new Response(
        JSON.stringify({ detail: { error: "Oversubscribed", message: "7 requested, 6 unsold" } }),
        { status: 409 },
      ),
    );
    const api = new ApiClient(session);
    const err = await api.purchase("d1", 7, actionKey("buy")).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.errorCode).toBe("Oversubscribed");
    expect(err.serverMessage).toBe("7 requested, 6 unsold");
  });
});

describe("rendering", () => {
  it("heatmap cells mirror served classes and displays", () => {
    const box = document.createElement("div");
    const stakeholders = {
      tick: 5,
      stakeholders: [
        {
          id: "alice",
          role: "stakeholder-validator",
          balance: 1085000,
          receivables: [],
          offers: [],
          risk: {
            stakeholder_id: "alice", tick: 5, value: "0", display: "0.0000",
            components: { default_rate: "0", late_rate: "0", alert_fraction: "0" },
          },
        },
      ],
    };
    const report = {
      stakeholder_id: "alice",
      period_tick: 5,
      indices: {
        debt_index: { value: "2/5", display: "0.4000", class: "Good" as const },
        quick_ratio: { value: "1", display: "1.0000", class: "Alert" as const },
        availability_index: { value: null, display: null, class: "Undefined" as const },
        return_of_capital: { value: "1/8", display: "0.1250", class: "Good" as const },
        rotation_of_current_assets: { value: "2", display: "2.0000", class: "Good" as const },
        warehouse_turnover: { value: "3/2", display: "1.5000", class: "Good" as const },
        solvency_index: { value: "5/2", display: "2.5000", class: "Good" as const },
      },
    };
    renderHeatmap(box, stakeholders, new Map([["alice", report]]));
    const quick = box.querySelector('[data-stakeholder="alice"][data-index="quick_ratio"]')!;
    expect(quick.textContent).toBe("1.0000");
    expect(quick.className).toContain("alert");
    const avail = box.querySelector('[data-stakeholder="alice"][data-index="availability_index"]')!;
    expect(avail.className).toContain("undef");
    expect(box.querySelector('[data-balance="alice"]')!.textContent).toBe("1,085,000");
  });

  it("alert feed lists served alerts and shows empty state", () => {
    const box = document.createElement("div");
    renderAlertFeed(box, []);
    expect(box.querySelector("#alert-feed-empty")).not.toBeNull();
    renderAlertFeed(box, [
      {
        alert_id: "a1", stakeholder_id: "alice", index_name: "solvency_index",
        kind: "current", tick_raised: 5, severity: "Alert", predicted_crossing_tick: null,
      },
    ]);
    expect(box.querySelectorAll("li").length).toBe(1);
    expect(box.textContent).toContain("solvency_index");
  });

  it("marketplace shows unsold units and buy form only when issued", () => {
    const box = document.createElement("div");
    const deal = {
      deal_id: "deal-1", originator: "alice", spv_id: "spv", pool: ["r1"],
      pool_face_value: 100000, advance_rate: "17/20", advance_paid: 85000,
      abs_units: 10, unit_notional: 10000, risk_score: "0", risk_display: "0.0000",
      state: "issued", holders: [{ from_unit: 0, to_unit: 4, owner: "inv1" }],
      sold_units: 4, unsold_units: 6, collected: 0, distribution: null,
    };
    renderDeals(box, [deal]);
    expect(box.querySelector('[data-unsold="deal-1"]')!.textContent).toBe("6");
    expect(box.querySelector('form.buy-form[data-deal="deal-1"]')).not.toBeNull();
    renderDeals(box, [{ ...deal, state: "settled", distribution: { collected: 100000, distributed: { inv1: 100000 }, retained: 0, shortfall: 0, outcome: "settled" } }]);
    expect(box.querySelector("form.buy-form")).toBeNull();
    expect(box.querySelector('[data-payout="deal-1:inv1"] .amount')!.textContent).toBe("100,000");
  });

  it("desk renders actions only for the roles the caller holds", () => {
    const box = document.createElement("div");
    const me = {
      id: "bob",
      role: "stakeholder-validator",
      balance: 900000,
      receivables: [
        {
          receivable_id: "r1", creditor: "alice", debtor: "bob", face_value: 100000,
          due_tick: 50, status: "open", holder: "alice", paid_tick: null, deal_id: null,
        },
      ],
      offers: [],
    };
    renderDesk(box, me, 3);
    expect(box.querySelector('button[data-pay="r1"]')).not.toBeNull();      // debtor may pay
    expect(box.querySelector("input.pool-pick")).toBeNull();                 // not the creditor
    expect(box.querySelector('button[data-assign="r1"]')).toBeNull();
    expect(box.querySelector("[data-my-balance]")!.textContent).toBe("900,000");

    const creditor = { ...me, id: "alice", balance: 1_000_000 };
    renderDesk(box, creditor, 3);
    expect(box.querySelector("input.pool-pick")).not.toBeNull();             // creditor pools
    expect(box.querySelector('button[data-assign="r1"]')).not.toBeNull();    // and assigns
    expect(box.querySelector('button[data-pay="r1"]')).toBeNull();           // but does not pay
  });
});

describe("zero business logic audit", () => {
  const MONETARY = [
    "balance",
    "face_value",
    "amount",
    "advance_paid",
    "unit_notional",
    "pool_face_value",
    "settlement_amount",
    "collected",
    "retained",
    "shortfall",
    "exposure",
  ];

  function tsSources(dir: string): string[] {
    const out: string[] = [];
    for (const entry of readdirSync(dir)) {
      const path = join(dir, entry);
      if (statSync(path).isDirectory()) out.push(...tsSources(path));
      else if (entry.endsWith(".ts")) out.push(path);
    }
    return out;
  }

  it("the client never does arithmetic on monetary fields", () => {
    const srcDir = join(__dirname, "..", "src");
    for (const file of tsSources(srcDir)) {
      const text = readFileSync(file, "utf-8");
      for (const field of MONETARY) {
        // arithmetic with the field on either side of an operator
        const patterns = [
          new RegExp(`\\.${field}\\s*[-+*/%]`),
          new RegExp(`[-+*/%]\\s*[\\w.]*\\.${field}\\b`),
          new RegExp(`\\b${field}\\s*[-+*/]=`),
        ];
        for (const pattern of patterns) {
          const hit = text.match(pattern);
          expect(hit, `${file}: arithmetic on ${field}: ${hit?.[0]}`).toBeNull();
        }
      }
    }
  });

  it("money() only formats", () => {
    expect(money(1234567)).toBe("1,234,567");
    expect(money(0)).toBe("0");
  });
});
