// Typed client over the platform API. All numbers shown in the UI come out
// of these response shapes untouched; the client never derives a financial
// figure itself.

export interface Session {
  baseUrl: string;
  token: string;
}

export interface IndexCell {
  value: string | null;
  display: string | null;
  class: "Good" | "Watch" | "Alert" | "Undefined";
}

export interface IndexReport {
  stakeholder_id: string;
  period_tick: number;
  indices: Record<string, IndexCell>;
}

export interface AlertRow {
  alert_id: string;
  stakeholder_id: string;
  index_name: string;
  kind: "current" | "predicted";
  tick_raised: number;
  severity: "Watch" | "Alert";
  predicted_crossing_tick: number | null;
}

export interface RiskScore {
  stakeholder_id: string;
  tick: number;
  value: string;
  display: string;
  components: { default_rate: string; late_rate: string; alert_fraction: string };
}

export interface ReceivableRow {
  receivable_id: string;
  creditor: string;
  debtor: string;
  face_value: number;
  due_tick: number;
  status: string;
  holder: string;
  paid_tick: number | null;
  deal_id: string | null;
}

export interface OfferRow {
  offer_id: string;
  receivable_id: string;
  discount_rate: string;
  proposer: string;
  state: string;
  settlement_amount: number;
}

export interface StakeholderRow {
  id: string;
  role: string;
  balance: number;
  receivables: ReceivableRow[];
  offers: OfferRow[];
  risk?: RiskScore;
}

export interface StakeholdersResponse {
  tick: number;
  stakeholders: StakeholderRow[];
}

export interface HolderRange {
  from_unit: number;
  to_unit: number;
  owner: string;
}

export interface DealRow {
  deal_id: string;
  originator: string;
  spv_id: string;
  pool: string[];
  pool_face_value: number;
  advance_rate: string;
  advance_paid: number;
  abs_units: number;
  unit_notional: number;
  risk_score: string;
  risk_display: string;
  state: string;
  holders: HolderRange[];
  sold_units: number;
  unsold_units: number;
  collected: number;
  distribution: {
    collected: number;
    distributed: Record<string, number>;
    retained: number;
    shortfall: number;
    outcome: string;
  } | null;
}

export interface BlockTx {
  tx_id: string;
  submitter: string;
  timestamp: number;
  payload: Record<string, unknown> & { kind: string };
}

export interface BlockRow {
  height: number;
  parent_hash: string;
  proposer: string;
  block_hash: string;
  endorsements: string[];
  tx_list: BlockTx[];
}

export interface Recommendation {
  stakeholder_id: string;
  tick: number;
  triggering_index: string;
  severity: string;
  services: string[];
  rationale: string;
}

export interface MutationResult {
  tx_id: string;
  committed: boolean;
  block_height: number | null;
  [extra: string]: unknown;
}

/** Error carrying the server's body so views can show it verbatim. */
export class ApiError extends Error {
  status: number;
  errorCode: string;
  serverMessage: string;

  constructor(status: number, errorCode: string, serverMessage: string) {
    super(`${status} ${errorCode}: ${serverMessage}`);
    this.status = status;
    this.errorCode = errorCode;
    this.serverMessage = serverMessage;
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let code = `HTTP ${resp.status}`;
  let message = resp.statusText;
  try {
    const body = await resp.json();
    const detail = body?.detail;
    if (detail && typeof detail === "object" && "error" in detail) {
      code = String(detail.error);
      message = String(detail.message ?? "");
    } else if (detail !== undefined) {
      message = typeof detail === "string" ? detail : JSON.stringify(detail);
    }
  } catch {
    /* non-JSON body: keep status text */
  }
  return new ApiError(resp.status, code, message);
}

export class ApiClient {
  session: Session;
  // one logical action = one key; repeat invocations reuse the in-flight
  // request, so a double-click can never submit twice
  private inflight = new Map<string, Promise<unknown>>();

  constructor(session: Session) {
    this.session = session;
  }

  private headers(): Record<string, string> {
    return {
      Authorization: `Bearer ${this.session.token}`,
      "Content-Type": "application/json",
    };
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.session.baseUrl + path, { headers: this.headers() });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  private async post<T>(path: string, body: unknown, idempotencyKey: string): Promise<T> {
    const existing = this.inflight.get(idempotencyKey);
    if (existing) return existing as Promise<T>;
    const run = (async () => {
      const resp = await fetch(this.session.baseUrl + path, {
        method: "POST",
        headers: { ...this.headers(), "X-Idempotency-Key": idempotencyKey },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
      if (!resp.ok) throw await parseError(resp);
      return (await resp.json()) as T;
    })();
    this.inflight.set(idempotencyKey, run);
    try {
      return await run;
    } finally {
      this.inflight.delete(idempotencyKey);
    }
  }

  stakeholders(): Promise<StakeholdersResponse> {
    return this.get("/stakeholders");
  }

  blocks(from = 0, to?: number): Promise<{ height: number; tip_hash: string; blocks: BlockRow[] }> {
    const range = to === undefined ? `?from=${from}` : `?from=${from}&to=${to}`;
    return this.get(`/ledger/blocks${range}`);
  }

  indices(stakeholderId: string): Promise<{
    stakeholder_id: string;
    latest: IndexReport | null;
    history: IndexReport[];
    undefined_indices: string[];
  }> {
    return this.get(`/indices/${stakeholderId}`);
  }

  alerts(): Promise<{ tick: number; alerts: AlertRow[] }> {
    return this.get("/alerts");
  }

  risk(stakeholderId: string): Promise<RiskScore> {
    return this.get(`/risk/${stakeholderId}`);
  }

  recommendations(stakeholderId: string): Promise<{ recommendations: Recommendation[] }> {
    return this.get(`/recommendations/${stakeholderId}`);
  }

  deals(): Promise<{ deals: DealRow[] }> {
    return this.get("/deals");
  }

  deal(dealId: string): Promise<DealRow> {
    return this.get(`/deals/${dealId}`);
  }

  exposure(from: string, to: string): Promise<{ exposure: number }> {
    return this.get(`/graph/exposure?from=${encodeURIComponent(from)}&to=${encodeURIComponent(to)}`);
  }

  createReceivable(
    debtor: string,
    faceValue: number,
    dueTick: number,
    key: string,
  ): Promise<MutationResult & { receivable_id: string }> {
    return this.post(
      "/transactions",
      { kind: "TradeCreditCreated", debtor, face_value: faceValue, due_tick: dueTick },
      key,
    );
  }

  initiateDeal(pool: string[], advanceRate: string | null, absUnits: number, key: string):
    Promise<MutationResult & { deal_id: string; deal: DealRow }> {
    const body: Record<string, unknown> = { pool, abs_units: absUnits };
    if (advanceRate) body.advance_rate = advanceRate;
    return this.post("/deals", body, key);
  }

  purchase(dealId: string, unitCount: number, key: string): Promise<MutationResult & { deal: DealRow }> {
    return this.post(`/deals/${dealId}/purchase`, { unit_count: unitCount }, key);
  }

  pay(receivableId: string, key: string): Promise<MutationResult & { receivable: ReceivableRow }> {
    return this.post(`/receivables/${receivableId}/pay`, undefined, key);
  }

  offerDiscount(receivableId: string, rate: string, key: string): Promise<MutationResult & { offer_id: string }> {
    return this.post("/offers", { receivable_id: receivableId, discount_rate: rate }, key);
  }

  assign(receivableId: string, assignee: string, advanceRate: string, feeRate: string, key: string): Promise<MutationResult> {
    return this.post(
      "/transactions",
      {
        kind: "ContractInvocation",
        action: "assign_receivable",
        args: { receivable_id: receivableId, assignee, advance_rate: advanceRate, fee_rate: feeRate },
      },
      key,
    );
  }

  respondOffer(offerId: string, accept: boolean, key: string): Promise<MutationResult & { offer_state: string }> {
    return this.post(`/offers/${offerId}/respond`, { accept }, key);
  }
}

let keyCounter = 0;

/** Client-generated idempotency key for one user action. */
export function actionKey(prefix: string): string {
  keyCounter += 1;
  return `${prefix}-${Date.now()}-${keyCounter}-${Math.random().toString(36).slice(2, 10)}`;
}
