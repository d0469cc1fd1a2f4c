"""HTTP boundary for the platform: dashboard feed plus fintech operations.

Every mutating endpoint translates into a signed ledger submission followed
by a synchronous commit (commit-then-respond), so a read issued after a 200
always reflects the mutation. Reads only ever see committed state. Token
auth maps bearer tokens to statically provisioned principals; capabilities
are exactly the principal's ledger permissions, never wider.

Error contract: 401 unknown token, 403 capability exceeded, 404 unknown
entity, 409 contract precondition failed (body carries the contract error
code and message verbatim), 422 malformed body.
"""

from __future__ import annotations

import json
import threading
from fractions import Fraction
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from pydantic import BaseModel, Field

from . import contracts
from .config import PlatformConfig
from .contracts import ContractError
from .health import Alert
from .indices import SiloRecord
from .ledger import (
    PERM_INVOKE,
    PERM_SUBMIT,
    DuplicateTx,
    InvalidProposal,
    InvalidSignature,
    LedgerError,
    NodeIdentity,
    PaymentMade,
    SnapshotPublished,
    TokenTransfer,
    TradeCreditCreated,
)
from .twin import FinancialTwin


class TransactionBody(BaseModel):
    kind: str
    receivable_id: Optional[str] = None
    creditor: Optional[str] = None
    debtor: Optional[str] = None
    face_value: Optional[int] = None
    due_tick: Optional[int] = None
    op: Optional[str] = None
    source: Optional[str] = None
    dest: Optional[str] = None
    amount: Optional[int] = None
    stakeholder_id: Optional[str] = None
    period_tick: Optional[int] = None
    figures: Optional[dict] = None
    action: Optional[str] = None  # for kind == ContractInvocation
    args: Optional[dict] = None


FRACTION_ARGS = {"advance_rate", "fee_rate", "discount_rate", "risk_score"}
LIST_ARGS = {"pool"}


def parse_invocation_args(raw: dict) -> dict:
    """JSON argument values to canonical invocation types, keyed by name."""
    out = {}
    for key, value in raw.items():
        if key in LIST_ARGS:
            out[key] = tuple(str(v) for v in value)
        elif key in FRACTION_ARGS:
            out[key] = _fraction_or_422(str(value), key)
        elif isinstance(value, bool):
            out[key] = 1 if value else 0
        elif isinstance(value, int):
            out[key] = value
        else:
            out[key] = str(value)
    return out


class DealBody(BaseModel):
    pool: list[str] = Field(min_length=1)
    advance_rate: Optional[str] = None  # decimal or a/b string
    abs_units: int = 10


class PurchaseBody(BaseModel):
    unit_count: int
    unit_price: Optional[int] = None


class OfferBody(BaseModel):
    receivable_id: str
    discount_rate: str


class RespondBody(BaseModel):
    accept: bool


def _fraction_or_422(text: str, what: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise HTTPException(status_code=422, detail=f"bad {what}: {e}")


def _contract_conflict(exc: Exception) -> HTTPException:
    message = str(exc)
    if isinstance(exc, ContractError):
        code = exc.code
    elif isinstance(exc, InvalidProposal) and ":" in message:
        code = message.split(":", 1)[0]
    else:
        code = type(exc).__name__
    return HTTPException(status_code=409, detail={"error": code, "message": message})


class ServiceState:
    """Shared state behind the app: the twin, a single-writer lock, and the
    monitoring log sink."""

    def __init__(self, twin: FinancialTwin, tokens: dict[str, str], monitoring_log: Optional[Path] = None):
        self.twin = twin
        self.tokens = dict(tokens)
        self.lock = threading.Lock()
        self.monitoring_log = Path(monitoring_log) if monitoring_log else None
        self._logged_alerts: set[str] = set()

    def principal(self, request: Request) -> NodeIdentity:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        token = header.split(" ", 1)[1].strip()
        node_id = self.tokens.get(token)
        if node_id is None or node_id not in self.twin.ledger.nodes:
            raise HTTPException(status_code=401, detail="unknown token")
        return self.twin.ledger.nodes[node_id]

    def require(self, principal: NodeIdentity, permission: str) -> None:
        if not principal.may(permission):
            raise HTTPException(
                status_code=403,
                detail=f"{principal.node_id} ({principal.role}) lacks {permission}",
            )

    def log_alerts(self, alerts: list[Alert]) -> None:
        if self.monitoring_log is None:
            return
        fresh = [a for a in alerts if a.alert_id not in self._logged_alerts]
        if not fresh:
            return
        with open(self.monitoring_log, "a") as f:
            for alert in fresh:
                f.write(json.dumps(alert.to_json(), sort_keys=True) + "\n")
                self._logged_alerts.add(alert.alert_id)

    def commit_or_conflict(self):
        try:
            return self.twin.commit()
        except (InvalidProposal, LedgerError) as e:
            raise _contract_conflict(e)


def _deal_json(deal) -> dict:
    return {
        "deal_id": deal.deal_id,
        "originator": deal.originator,
        "spv_id": deal.spv_id,
        "pool": list(deal.pool),
        "pool_face_value": deal.pool_face_value,
        "advance_rate": str(deal.advance_rate),
        "advance_paid": deal.advance_paid,
        "abs_units": deal.abs_units,
        "unit_notional": deal.unit_notional,
        "rounding_residual": deal.rounding_residual,
        "risk_score": str(deal.risk_score),
        "risk_display": f"{float(deal.risk_score):.4f}",
        "state": deal.state,
        "holders": [{"from_unit": s, "to_unit": e, "owner": o} for s, e, o in deal.holders],
        "sold_units": deal.sold_units,
        "unsold_units": deal.unsold_units,
        "collected": deal.collected,
        "distribution": deal.distribution,
    }


def _receivable_json(r) -> dict:
    return {
        "receivable_id": r.receivable_id,
        "creditor": r.creditor,
        "debtor": r.debtor,
        "face_value": r.face_value,
        "due_tick": r.due_tick,
        "status": r.status,
        "holder": r.holder,
        "paid_tick": r.paid_tick,
        "deal_id": r.deal_id,
    }


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="scftwin service", version="0.1.0")
    twin = state.twin

    def principal_dep(request: Request) -> NodeIdentity:
        return state.principal(request)

    # -- reads ---------------------------------------------------------------

    @app.get("/stakeholders")
    def stakeholders(principal: NodeIdentity = Depends(principal_dep)):
        out = []
        for node_id in sorted(twin.ledger.nodes):
            node = twin.ledger.nodes[node_id]
            entry = {
                "id": node_id,
                "role": node.role,
                "balance": twin.engine.balance(node_id),
                "receivables": [
                    _receivable_json(r)
                    for rid, r in sorted(twin.engine.receivables.items())
                    if node_id in (r.creditor, r.debtor, r.holder)
                ],
                "offers": [
                    {
                        "offer_id": o.offer_id,
                        "receivable_id": o.receivable_id,
                        "discount_rate": str(o.discount_rate),
                        "proposer": o.proposer,
                        "state": o.state,
                        "settlement_amount": twin.engine.discount_settlement_amount(o.offer_id),
                    }
                    for o in sorted(twin.engine.offers.values(), key=lambda o: o.offer_id)
                    if node_id in (o.proposer, twin.engine.receivables[o.receivable_id].creditor)
                ],
            }
            if node_id in twin.engine.stakeholders:
                entry["risk"] = twin.health.score_risk(node_id, twin.current_tick).to_json()
            out.append(entry)
        return {"tick": twin.current_tick, "stakeholders": out}

    @app.get("/ledger/blocks")
    def ledger_blocks(
        principal: NodeIdentity = Depends(principal_dep),
        from_height: int = Query(0, alias="from"),
        to_height: Optional[int] = Query(None, alias="to"),
    ):
        hi = twin.ledger.height if to_height is None else to_height
        blocks = [b.to_json() for b in twin.ledger.chain if from_height <= b.height <= hi]
        return {"height": twin.ledger.height, "tip_hash": twin.ledger.tip_hash.hex(), "blocks": blocks}

    @app.get("/indices/{stakeholder_id}")
    def indices_endpoint(stakeholder_id: str, principal: NodeIdentity = Depends(principal_dep)):
        if stakeholder_id not in twin.engine.stakeholders:
            raise HTTPException(status_code=404, detail=f"unknown stakeholder {stakeholder_id}")
        history = [r.to_json() for r in twin.reports.get(stakeholder_id, [])]
        latest = history[-1] if history else None
        undefined = twin.snapshot_completeness(stakeholder_id, twin.current_tick)
        return {
            "stakeholder_id": stakeholder_id,
            "latest": latest,
            "history": history,
            "undefined_indices": list(undefined),
        }

    @app.get("/alerts")
    def alerts_endpoint(principal: NodeIdentity = Depends(principal_dep)):
        alerts = twin.health.monitor(twin.current_tick)
        state.log_alerts(alerts)
        return {"tick": twin.current_tick, "alerts": [a.to_json() for a in alerts]}

    @app.get("/risk/{stakeholder_id}")
    def risk_endpoint(stakeholder_id: str, principal: NodeIdentity = Depends(principal_dep)):
        if stakeholder_id not in twin.engine.stakeholders:
            raise HTTPException(status_code=404, detail=f"unknown stakeholder {stakeholder_id}")
        return twin.health.score_risk(stakeholder_id, twin.current_tick).to_json()

    @app.get("/recommendations/{stakeholder_id}")
    def recommendations_endpoint(stakeholder_id: str, principal: NodeIdentity = Depends(principal_dep)):
        if stakeholder_id not in twin.engine.stakeholders:
            raise HTTPException(status_code=404, detail=f"unknown stakeholder {stakeholder_id}")
        alerts = twin.health.monitor(twin.current_tick)
        recs = twin.health.recommend_services(stakeholder_id, alerts)
        return {"stakeholder_id": stakeholder_id, "recommendations": [r.to_json() for r in recs]}

    @app.get("/deals")
    def deals_endpoint(principal: NodeIdentity = Depends(principal_dep)):
        return {"deals": [_deal_json(d) for _, d in sorted(twin.engine.deals.items())]}

    @app.get("/deals/{deal_id}")
    def deal_endpoint(deal_id: str, principal: NodeIdentity = Depends(principal_dep)):
        deal = twin.engine.deals.get(deal_id)
        if deal is None:
            raise HTTPException(status_code=404, detail=f"unknown deal {deal_id}")
        return _deal_json(deal)

    @app.get("/graph/exposure")
    def exposure_endpoint(
        principal: NodeIdentity = Depends(principal_dep),
        from_id: str = Query(alias="from"),
        to_id: str = Query(alias="to"),
    ):
        return {"from": from_id, "to": to_id, "exposure": twin.graph.exposure(from_id, to_id)}

    # -- mutations --------------------------------------------------------------

    def mutate(principal: NodeIdentity, permission: str, submit_fn):
        """submit_fn runs under the single-writer lock and returns (tx, extra)."""
        state.require(principal, permission)
        with state.lock:
            try:
                tx, extra = submit_fn()
            except ContractError as e:
                raise _contract_conflict(e)
            except (InvalidProposal,) as e:
                raise _contract_conflict(e)
            except DuplicateTx as e:
                raise HTTPException(status_code=409, detail={"error": "DuplicateTx", "message": str(e)})
            except InvalidSignature as e:
                raise HTTPException(status_code=400, detail=str(e))
            except LedgerError as e:
                raise HTTPException(status_code=403, detail=str(e))
            block = state.commit_or_conflict()
            state.log_alerts(twin.health.monitor(twin.current_tick))
            return {
                "tx_id": tx.tx_id.hex(),
                "committed": block is not None,
                "block_height": None if block is None else block.height,
                **extra,
            }

    @app.post("/transactions")
    def post_transaction(body: TransactionBody, principal: NodeIdentity = Depends(principal_dep)):
        def build():
            if body.kind == "ContractInvocation":
                if not body.action:
                    raise HTTPException(status_code=422, detail="action required")
                from .ledger import invoke

                payload = invoke(body.action, **parse_invocation_args(body.args or {}))
                return twin.submit(principal.node_id, payload), {}
            if body.kind == "TradeCreditCreated":
                if None in (body.debtor, body.face_value, body.due_tick):
                    raise HTTPException(status_code=422, detail="debtor, face_value, due_tick required")
                creditor = body.creditor or principal.node_id
                if creditor != principal.node_id:
                    raise HTTPException(status_code=403, detail="creditor must be the caller")
                tx, rid = twin.create_receivable(creditor, body.debtor, body.face_value, body.due_tick,
                                                 receivable_id=body.receivable_id)
                return tx, {"receivable_id": rid}
            if body.kind == "PaymentMade":
                if body.receivable_id is None:
                    raise HTTPException(status_code=422, detail="receivable_id required")
                return twin.pay_receivable(body.receivable_id, principal.node_id), {}
            if body.kind == "TokenTransfer":
                if None in (body.op, body.amount):
                    raise HTTPException(status_code=422, detail="op and amount required")
                payload = TokenTransfer(body.op, body.source or "", body.dest or "", body.amount)
                return twin.submit(principal.node_id, payload), {}
            if body.kind == "SnapshotPublished":
                figures = body.figures or {}
                silo = SiloRecord(**{k: int(v) for k, v in figures.items()})
                return twin.publish_snapshot(principal.node_id, silo, period_tick=body.period_tick), {}
            raise HTTPException(status_code=422, detail=f"unsupported kind {body.kind}")

        needed = PERM_INVOKE if body.kind == "ContractInvocation" else PERM_SUBMIT
        return mutate(principal, needed, build)

    @app.post("/deals")
    def post_deal(body: DealBody, principal: NodeIdentity = Depends(principal_dep)):
        rate = _fraction_or_422(body.advance_rate, "advance_rate") if body.advance_rate else None

        def build():
            tx, deal_id = twin.initiate_securitization(principal.node_id, body.pool, rate, body.abs_units)
            return tx, {"deal_id": deal_id}

        result = mutate(principal, PERM_INVOKE, build)
        deal = twin.engine.deals.get(result["deal_id"])
        result["deal"] = _deal_json(deal) if deal else None
        return result

    @app.post("/deals/{deal_id}/purchase")
    def post_purchase(deal_id: str, body: PurchaseBody, principal: NodeIdentity = Depends(principal_dep)):
        state.require(principal, PERM_INVOKE)  # capability before entity existence
        if deal_id not in twin.engine.deals:
            raise HTTPException(status_code=404, detail=f"unknown deal {deal_id}")

        def build():
            tx = twin.purchase_abs(deal_id, principal.node_id, body.unit_count, body.unit_price)
            return tx, {"deal_id": deal_id}

        result = mutate(principal, PERM_INVOKE, build)
        result["deal"] = _deal_json(twin.engine.deals[deal_id])
        return result

    @app.post("/receivables/{receivable_id}/pay")
    def post_pay(receivable_id: str, principal: NodeIdentity = Depends(principal_dep)):
        state.require(principal, PERM_SUBMIT)
        if receivable_id not in twin.engine.receivables:
            raise HTTPException(status_code=404, detail=f"unknown receivable {receivable_id}")

        def build():
            tx = twin.pay_receivable(receivable_id, principal.node_id)
            return tx, {"receivable_id": receivable_id}

        result = mutate(principal, PERM_SUBMIT, build)
        r = twin.engine.receivables[receivable_id]
        result["receivable"] = _receivable_json(r)
        deal = twin.engine.deals.get(r.deal_id) if r.deal_id else None
        if deal is not None and deal.state == contracts.ISSUED:
            # auto-settle once the whole pool has paid: one more committed tx
            if all(twin.engine.receivables[rid].status == contracts.PAID for rid in deal.pool):
                with state.lock:
                    try:
                        twin.settle_securitization(deal.deal_id)
                        state.commit_or_conflict()
                        result["deal_settled"] = deal.deal_id
                    except (ContractError, InvalidProposal):
                        pass  # a concurrent settle won the race; payment stands
        return result

    @app.post("/offers")
    def post_offer(body: OfferBody, principal: NodeIdentity = Depends(principal_dep)):
        state.require(principal, PERM_INVOKE)
        rate = _fraction_or_422(body.discount_rate, "discount_rate")
        if body.receivable_id not in twin.engine.receivables:
            raise HTTPException(status_code=404, detail=f"unknown receivable {body.receivable_id}")

        def build():
            tx, offer_id = twin.offer_discount(body.receivable_id, principal.node_id, rate)
            return tx, {"offer_id": offer_id}

        return mutate(principal, PERM_INVOKE, build)

    @app.post("/offers/{offer_id}/respond")
    def post_respond(offer_id: str, body: RespondBody, principal: NodeIdentity = Depends(principal_dep)):
        state.require(principal, PERM_INVOKE)
        offer = twin.engine.offers.get(offer_id)
        if offer is None:
            raise HTTPException(status_code=404, detail=f"unknown offer {offer_id}")
        if body.accept:
            # pre-check settlement feasibility so accept+settle is all-or-nothing
            amount = twin.engine.discount_settlement_amount(offer_id)
            debtor = twin.engine.receivables[offer.receivable_id].debtor
            if twin.engine.balance(debtor) < amount:
                raise _contract_conflict(
                    contracts.InsufficientFunds(f"{debtor} has {twin.engine.balance(debtor)}, needs {amount}")
                )

        def build():
            tx = twin.respond_discount(offer_id, principal.node_id, body.accept)
            return tx, {"offer_id": offer_id}

        result = mutate(principal, PERM_INVOKE, build)
        if body.accept:
            with state.lock:
                try:
                    twin.settle_discount(offer_id)
                except ContractError as e:
                    raise _contract_conflict(e)
                state.commit_or_conflict()
        result["offer_state"] = twin.engine.offers[offer_id].state
        return result

    return app


def serve(twin: FinancialTwin, config: PlatformConfig, monitoring_log: Optional[Path] = None):
    """Run the service with uvicorn (blocking)."""
    import uvicorn

    state = ServiceState(twin, config.tokens, monitoring_log)
    app = create_app(state)
    uvicorn.run(app, host="127.0.0.1", port=config.port, log_level="warning")
