// Dashboard shell: session handling, tab navigation and the polling loop.
// The client is a pure projection of the API: screens re-render from fresh
// responses every poll interval (default 2s) and after each action.

import { ApiClient, ApiError, IndexReport, Session } from "./api.js";
import { byId, el } from "./dom.js";
import { renderDesk, wireDesk } from "./views/desk.js";
import { renderBlocks } from "./views/explorer.js";
import { renderDeals, wireBuyForms } from "./views/marketplace.js";
import { renderAlertFeed, renderHeatmap } from "./views/overview.js";
import { renderRecommendations, renderRisk, renderSeries } from "./views/stakeholder.js";

export const TABS = ["overview", "stakeholder", "marketplace", "desk", "explorer"] as const;
export type Tab = (typeof TABS)[number];

export interface DashboardOptions {
  pollIntervalMs?: number;
  stakeholderOf?: string; // whose desk/detail to show; defaults to the principal
}

export class Dashboard {
  api: ApiClient;
  root: HTMLElement;
  active: Tab = "overview";
  subject: string;
  pollIntervalMs: number;
  private timer: ReturnType<typeof setInterval> | null = null;
  private authFailed = false;

  constructor(root: HTMLElement, session: Session, options: DashboardOptions = {}) {
    this.root = root;
    this.api = new ApiClient(session);
    this.pollIntervalMs = options.pollIntervalMs ?? 2000;
    this.subject = options.stakeholderOf ?? "";
    this.scaffold();
  }

  private scaffold(): void {
    this.root.innerHTML = `
      <header class="topbar">
        <span class="title">supply-chain finance twin</span>
        <nav>${TABS.map((t) => `<button class="tab" data-tab="${t}">${t}</button>`).join("")}</nav>
        <span class="status" id="status-line">connecting&hellip;</span>
      </header>
      <div id="reauth" class="reauth hidden">
        session expired or token rejected:
        <input id="token-input" type="text" placeholder="bearer token" />
        <button id="token-apply">re-authenticate</button>
      </div>
      <main>
        <section id="view-overview" class="view">
          <h2>Chain overview</h2>
          <div id="heatmap"></div>
          <h2>Alert feed</h2>
          <div id="alert-feed"></div>
        </section>
        <section id="view-stakeholder" class="view hidden">
          <h2>Stakeholder <select id="subject-pick"></select></h2>
          <div id="risk-box"></div>
          <h3>Index history</h3>
          <div id="series"></div>
          <h3>Recommendations</h3>
          <div id="recommendations"></div>
        </section>
        <section id="view-marketplace" class="view hidden">
          <h2>Deal marketplace</h2>
          <div id="deals"></div>
        </section>
        <section id="view-desk" class="view hidden">
          <h2>Receivables desk</h2>
          <div id="desk"></div>
        </section>
        <section id="view-explorer" class="view hidden">
          <h2>Ledger explorer</h2>
          <div id="blocks"></div>
        </section>
      </main>`;
    this.root.querySelectorAll<HTMLButtonElement>("button.tab").forEach((btn) => {
      btn.addEventListener("click", () => this.show(btn.dataset.tab as Tab));
    });
    byId<HTMLButtonElement>("token-apply").addEventListener("click", () => {
      this.api.session.token = byId<HTMLInputElement>("token-input").value.trim();
      this.authFailed = false;
      byId("reauth").classList.add("hidden");
      void this.refresh();
    });
  }

  show(tab: Tab): void {
    this.active = tab;
    for (const t of TABS) {
      byId(`view-${t}`).classList.toggle("hidden", t !== tab);
    }
    void this.refresh();
  }

  start(): void {
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), this.pollIntervalMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  /** One polling pass for the active view. Errors flip the status line but
   * never wedge the loop; a 401 raises the re-auth prompt. */
  async refresh(): Promise<void> {
    if (this.authFailed) return;
    const status = byId("status-line");
    try {
      switch (this.active) {
        case "overview":
          await this.refreshOverview();
          break;
        case "stakeholder":
          await this.refreshStakeholder();
          break;
        case "marketplace":
          await this.refreshMarketplace();
          break;
        case "desk":
          await this.refreshDesk();
          break;
        case "explorer":
          await this.refreshExplorer();
          break;
      }
      status.textContent = `live (${new Date().toLocaleTimeString()})`;
      status.classList.remove("error");
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        this.authFailed = true;
        byId("reauth").classList.remove("hidden");
        status.textContent = "authentication required";
      } else {
        status.textContent = err instanceof ApiError ? err.message : "connection lost, retrying";
      }
      status.classList.add("error");
    }
  }

  private async refreshOverview(): Promise<void> {
    const [stakeholders, alerts] = await Promise.all([this.api.stakeholders(), this.api.alerts()]);
    const latest = new Map<string, IndexReport | null>();
    await Promise.all(
      stakeholders.stakeholders
        .filter((s) => s.risk !== undefined) // trade stakeholders carry risk
        .map(async (s) => {
          const data = await this.api.indices(s.id);
          latest.set(s.id, data.latest);
        }),
    );
    renderHeatmap(byId("heatmap"), stakeholders, latest);
    renderAlertFeed(byId("alert-feed"), alerts.alerts);
  }

  private async refreshStakeholder(): Promise<void> {
    const stakeholders = await this.api.stakeholders();
    const candidates = stakeholders.stakeholders.filter((s) => s.risk !== undefined).map((s) => s.id);
    if (!this.subject) this.subject = candidates[0] ?? "";
    const pick = byId<HTMLSelectElement>("subject-pick");
    if (pick.options.length !== candidates.length) {
      pick.innerHTML = candidates.map((c) => `<option value="${c}">${c}</option>`).join("");
      pick.onchange = () => {
        this.subject = pick.value;
        void this.refresh();
      };
    }
    pick.value = this.subject;
    if (!this.subject) return;
    const [indices, risk, recs] = await Promise.all([
      this.api.indices(this.subject),
      this.api.risk(this.subject),
      this.api.recommendations(this.subject),
    ]);
    renderRisk(byId("risk-box"), risk);
    renderSeries(byId("series"), indices.history);
    renderRecommendations(byId("recommendations"), recs.recommendations);
  }

  private async refreshMarketplace(): Promise<void> {
    const data = await this.api.deals();
    const box = byId("deals");
    renderDeals(box, data.deals);
    wireBuyForms(box, this.api, () => void this.refresh());
  }

  private async refreshDesk(): Promise<void> {
    const data = await this.api.stakeholders();
    const whose = this.subject || this.principalGuess(data.stakeholders.map((s) => s.id));
    const me = data.stakeholders.find((s) => s.id === whose);
    const box = byId("desk");
    if (!me) {
      box.innerHTML = `<div class="empty">No stakeholder view for this principal</div>`;
      return;
    }
    renderDesk(box, me, data.tick);
    wireDesk(box, this.api, () => void this.refresh());
  }

  private async refreshExplorer(): Promise<void> {
    const data = await this.api.blocks();
    renderBlocks(byId("blocks"), data.blocks, data.tip_hash);
  }

  private principalGuess(ids: string[]): string {
    // the API carries no whoami endpoint; desk defaults to an explicit
    // stakeholderOf option, falling back to the first stakeholder
    return ids[0] ?? "";
  }
}

export function sessionFromLocation(loc: Location): Session {
  const params = new URLSearchParams(loc.search);
  return {
    baseUrl: params.get("api") ?? `${loc.protocol}//${loc.host}`,
    token: params.get("token") ?? "",
  };
}

export function boot(): Dashboard {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const params = new URLSearchParams(window.location.search);
  const dash = new Dashboard(root, sessionFromLocation(window.location), {
    stakeholderOf: params.get("as") ?? undefined,
  });
  dash.start();
  return dash;
}

declare global {
  interface Window {
    scftwinDashboard?: Dashboard;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  window.scftwinDashboard = boot();
}
