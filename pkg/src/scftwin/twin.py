"""The assembled digital twin: ledger, contracts, indices, health, knowledge.

One FinancialTwin owns a node roster, the consensus ledger, a contract
engine fed by committed blocks, the index-report pipeline, the knowledge
graph and the health engine. All mutations flow through the ledger's
pending pool and commit path, so replaying the committed log through a
fresh twin reproduces every piece of derived state bit for bit.

Actor naming conventions: stakeholders, the SPV and the bank run
stakeholder-validator nodes; investors join as external-investor nodes and
observers as external-observer nodes. The roster is fixed for the lifetime
of a network.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import contracts
from .config import PlatformConfig
from .contracts import ContractEngine, held_receivables_value
from .crypto import DEFAULT_SIGNER, derive_key
from .health import HealthEngine
from .indices import (
    INDEX_NAMES,
    BalanceSheetSnapshot,
    IndexReport,
    SiloRecord,
    build_snapshot,
    full_report,
    undefined_indices,
)
from .knowledge import KnowledgeGraph
from .ledger import (
    ROLE_INVESTOR,
    ROLE_OBSERVER,
    ROLE_STAKEHOLDER,
    ContractInvocation,
    Ledger,
    LedgerBlock,
    LedgerTransaction,
    NodeIdentity,
    Payload,
    PaymentMade,
    SnapshotPublished,
    TokenTransfer,
    TradeCreditCreated,
    invoke,
    make_transaction,
)


@dataclass(frozen=True)
class ActorSpec:
    actor_id: str
    role: str  # ledger role


def default_actors(stakeholders: list[str], investors: list[str] = (), observers: list[str] = (),
                   spv_id: str = "spv", bank_id: str = "bank") -> list[ActorSpec]:
    specs = [ActorSpec(s, ROLE_STAKEHOLDER) for s in stakeholders]
    specs.append(ActorSpec(spv_id, ROLE_STAKEHOLDER))
    specs.append(ActorSpec(bank_id, ROLE_STAKEHOLDER))
    specs.extend(ActorSpec(i, ROLE_INVESTOR) for i in investors)
    specs.extend(ActorSpec(o, ROLE_OBSERVER) for o in observers)
    return specs


class FinancialTwin:
    """Composition root and single-writer command queue for the platform."""

    def __init__(self, actors: list[ActorSpec], config: Optional[PlatformConfig] = None,
                 trade_stakeholders: Optional[list[str]] = None):
        self.config = config = config if config is not None else PlatformConfig()
        self.signer = DEFAULT_SIGNER
        nodes = [
            NodeIdentity(a.actor_id, a.role, derive_key(config.network_secret, a.actor_id))
            for a in actors
        ]
        self.engine = ContractEngine(
            grace_ticks=config.grace_ticks,
            mint_authority=config.bank_id,
            spv_id=config.spv_id,
        )
        trade = set(trade_stakeholders) if trade_stakeholders is not None else {
            a.actor_id for a in actors if a.role == ROLE_STAKEHOLDER and a.actor_id not in (config.spv_id, config.bank_id)
        }
        for a in actors:
            self.engine.register_actor(a.actor_id, stakeholder=a.actor_id in trade or a.actor_id == config.spv_id)
        self.ledger = Ledger(nodes, signer=self.signer, tx_validator=self._validate_txs, tx_filter=self._filter_txs)
        self.graph = KnowledgeGraph()
        self.health = HealthEngine(self)
        self.reports: dict[str, list[IndexReport]] = {}
        self.silos: dict[str, list[tuple[int, SiloRecord]]] = {}
        self.current_tick = 0
        self._id_counters = {"receivable": 0, "deal": 0, "offer": 0}
        self.ledger.on_commit(self._absorb_block)

    # -- plumbing ------------------------------------------------------------

    def _validate_txs(self, txs: list[LedgerTransaction]) -> Optional[str]:
        try:
            if len(txs) == 1:
                self.engine.validate(txs[0])  # no scratch copy for the common case
            else:
                self.engine.dry_run(txs)
        except contracts.ContractError as e:
            return f"{e.code}: {e}"
        return None

    def _filter_txs(self, txs: list[LedgerTransaction]) -> tuple[list[LedgerTransaction], list[tuple[bytes, str]]]:
        """Split a proposal into the prefix-consistent applicable set and the
        rest; used by an honest proposer when the pool soured since submit."""
        scratch = self.engine.fork()
        kept: list[LedgerTransaction] = []
        rejected: list[tuple[bytes, str]] = []
        for tx in txs:
            try:
                scratch.apply(tx)
                kept.append(tx)
            except contracts.ContractError as e:
                rejected.append((tx.tx_id, f"{e.code}: {e}"))
        return kept, rejected

    def _absorb_block(self, block: LedgerBlock) -> None:
        """Apply a committed block to every derived subsystem, in tx order."""
        for tx in block.tx_list:
            self.engine.apply(tx)
            self.graph.ingest(tx)
            if isinstance(tx.payload, SnapshotPublished):
                self._record_snapshot(tx.payload)

    def _record_snapshot(self, p: SnapshotPublished) -> None:
        silo = SiloRecord(**{f: getattr(p, f) for f in SiloRecord.__dataclass_fields__})
        self.silos.setdefault(p.stakeholder_id, []).append((p.period_tick, silo))
        snapshot = self.build_snapshot_from_ledger(p.stakeholder_id, p.period_tick, silo)
        report = full_report(snapshot, self.config.closeness_band, self.config.roc_floor)
        self.reports.setdefault(p.stakeholder_id, []).append(report)
        self.graph.set_current_assets(p.stakeholder_id, snapshot.current_assets)

    def node(self, actor_id: str) -> NodeIdentity:
        return self.ledger.node(actor_id)

    def submit(self, submitter: str, payload: Payload) -> LedgerTransaction:
        node = self.node(submitter)
        tx = make_transaction(node, payload, self.current_tick, self.signer)
        self.ledger.submit_transaction(tx, node)
        return tx

    def unsigned_probe(self, submitter: str, payload: Payload) -> LedgerTransaction:
        """A transaction for what-if validation only; never enters the pool."""
        return make_transaction(self.node(submitter), payload, self.current_tick, self.signer)

    def commit(self) -> Optional[LedgerBlock]:
        if not self.ledger.pending:
            return None
        return self.ledger.propose_and_commit_block()

    def fresh_id(self, kind: str) -> str:
        # counters are rebuilt on replay from the ids already in the log
        self._id_counters[kind] += 1
        return f"{kind}-{self._id_counters[kind]:05d}"

    def _note_existing_id(self, kind: str, entity_id: str) -> None:
        prefix = f"{kind}-"
        if entity_id.startswith(prefix):
            try:
                n = int(entity_id[len(prefix):])
            except ValueError:
                return
            self._id_counters[kind] = max(self._id_counters[kind], n)

    # -- tick clock -------------------------------------------------------------

    def advance_tick(self, tick: int) -> list[LedgerTransaction]:
        """Move the logical clock forward and sweep overdue positions.

        For every receivable whose grace window lapsed unpaid the holder
        declares a default; for every issued deal with a lapsed pool
        receivable the SPV declares impairment. The sweep transactions join
        the pending pool and commit with the next block."""
        if tick < self.current_tick:
            raise ValueError(f"tick must not decrease: {tick} < {self.current_tick}")
        self.current_tick = tick
        swept: list[LedgerTransaction] = []
        grace = self.config.grace_ticks
        for did in sorted(self.engine.deals):
            deal = self.engine.deals[did]
            if deal.state != contracts.ISSUED:
                continue
            if all(self.engine.receivables[rid].status == contracts.PAID for rid in deal.pool):
                swept.append(self.submit(self.config.spv_id, invoke("settle_securitization", deal_id=did)))
                continue
            overdue = any(
                self.engine.receivables[rid].status == contracts.SECURITIZED
                and tick > self.engine.receivables[rid].due_tick + grace
                for rid in deal.pool
            )
            if overdue:
                swept.append(self.submit(self.config.spv_id, invoke("mark_impaired", deal_id=did)))
        for rid in sorted(self.engine.receivables):
            r = self.engine.receivables[rid]
            if r.status not in (contracts.OPEN, contracts.ASSIGNED):
                continue
            if tick > r.due_tick + grace:
                swept.append(self.submit(r.holder, invoke("mark_defaulted", receivable_id=rid)))
        return swept

    # -- domain helpers (payload builders + submission) ---------------------------

    def create_receivable(self, creditor: str, debtor: str, face_value: int, due_tick: int,
                          receivable_id: Optional[str] = None) -> tuple[LedgerTransaction, str]:
        rid = receivable_id or self.fresh_id("receivable")
        self._note_existing_id("receivable", rid)
        tx = self.submit(creditor, TradeCreditCreated(rid, creditor, debtor, face_value, due_tick))
        return tx, rid

    def pay_receivable(self, receivable_id: str, payer: str) -> LedgerTransaction:
        r = self.engine.receivables.get(receivable_id)
        amount = r.face_value if r is not None else 0
        return self.submit(payer, PaymentMade(receivable_id, payer, amount))

    def mint(self, to: str, amount: int) -> LedgerTransaction:
        return self.submit(self.config.bank_id, TokenTransfer("mint", "", to, amount))

    def burn(self, owner: str, amount: int) -> LedgerTransaction:
        return self.submit(owner, TokenTransfer("burn", owner, "", amount))

    def transfer(self, source: str, dest: str, amount: int) -> LedgerTransaction:
        return self.submit(source, TokenTransfer("transfer", source, dest, amount))

    def publish_snapshot(self, stakeholder_id: str, silo: SiloRecord, period_tick: Optional[int] = None) -> LedgerTransaction:
        tick = self.current_tick if period_tick is None else period_tick
        payload = SnapshotPublished(
            stakeholder_id=stakeholder_id,
            period_tick=tick,
            **{f: getattr(silo, f) for f in SiloRecord.__dataclass_fields__},
        )
        return self.submit(stakeholder_id, payload)

    def initiate_securitization(
        self,
        originator: str,
        pool: list[str],
        advance_rate: Optional[Fraction] = None,
        abs_units: int = 10,
        deal_id: Optional[str] = None,
    ) -> tuple[LedgerTransaction, str]:
        did = deal_id or self.fresh_id("deal")
        self._note_existing_id("deal", did)
        rate = advance_rate if advance_rate is not None else self.config.default_advance_rate
        risk = self.health.pool_risk(list(pool), self.current_tick)
        tx = self.submit(
            originator,
            invoke(
                "initiate_securitization",
                deal_id=did,
                originator=originator,
                pool=tuple(pool),
                advance_rate=Fraction(rate),
                abs_units=abs_units,
                risk_score=risk,
                spv_id=self.config.spv_id,
            ),
        )
        return tx, did

    def purchase_abs(self, deal_id: str, buyer: str, unit_count: int, unit_price: Optional[int] = None) -> LedgerTransaction:
        args = dict(deal_id=deal_id, buyer=buyer, unit_count=unit_count)
        if unit_price is not None:
            args["unit_price"] = unit_price
        return self.submit(buyer, invoke("purchase_abs", **args))

    def settle_securitization(self, deal_id: str) -> LedgerTransaction:
        return self.submit(self.config.spv_id, invoke("settle_securitization", deal_id=deal_id))

    def offer_discount(self, receivable_id: str, proposer: str, rate: Fraction,
                       offer_id: Optional[str] = None) -> tuple[LedgerTransaction, str]:
        oid = offer_id or self.fresh_id("offer")
        self._note_existing_id("offer", oid)
        tx = self.submit(
            proposer,
            invoke("offer_discount", offer_id=oid, receivable_id=receivable_id, proposer=proposer,
                   discount_rate=Fraction(rate)),
        )
        return tx, oid

    def respond_discount(self, offer_id: str, responder: str, accept: bool) -> LedgerTransaction:
        return self.submit(responder, invoke("respond_discount", offer_id=offer_id, responder=responder,
                                             accept=1 if accept else 0))

    def settle_discount(self, offer_id: str) -> LedgerTransaction:
        offer = self.engine.offers.get(offer_id)
        if offer is None:
            raise contracts.UnknownEntity(offer_id)
        rid = offer.receivable_id
        debtor = self.engine.receivables[rid].debtor
        return self.submit(debtor, invoke("settle_discount", offer_id=offer_id, receivable_id=rid))

    def assign_receivable(self, receivable_id: str, assignee: str,
                          advance_rate: Optional[Fraction] = None,
                          fee_rate: Optional[Fraction] = None) -> LedgerTransaction:
        r = self.engine.receivables.get(receivable_id)
        if r is None:
            raise contracts.UnknownEntity(receivable_id)
        rate = advance_rate if advance_rate is not None else Fraction(9, 10)
        fee = fee_rate if fee_rate is not None else self.config.default_fee_rate
        return self.submit(
            r.creditor,
            invoke("assign_receivable", receivable_id=receivable_id, assignee=assignee,
                   advance_rate=Fraction(rate), fee_rate=Fraction(fee)),
        )

    # -- derived views ------------------------------------------------------------

    def latest_silo(self, stakeholder_id: str) -> Optional[SiloRecord]:
        entries = self.silos.get(stakeholder_id)
        return entries[-1][1] if entries else None

    def build_snapshot_from_ledger(self, stakeholder_id: str, tick: int,
                                   silo: Optional[SiloRecord] = None) -> BalanceSheetSnapshot:
        """Snapshot whose cash and receivables come from committed state and
        whose remaining figures come from the silo (or the latest shared one)."""
        if stakeholder_id not in self.engine.actors:
            raise contracts.UnknownParty(stakeholder_id)
        if silo is None:
            silo = self.latest_silo(stakeholder_id)
        return build_snapshot(
            stakeholder_id,
            tick,
            cash=self.engine.balance(stakeholder_id),
            receivables_value=held_receivables_value(self.engine, stakeholder_id),
            silo=silo,
        )

    def snapshot_completeness(self, stakeholder_id: str, tick: int) -> tuple[str, ...]:
        return undefined_indices(self.build_snapshot_from_ledger(stakeholder_id, tick))

    def latest_report(self, stakeholder_id: str) -> Optional[IndexReport]:
        entries = self.reports.get(stakeholder_id)
        return entries[-1] if entries else None

    def conservation(self) -> dict:
        balances = self.engine.balances
        total = sum(balances.values())
        return {
            "minted": self.engine.minted,
            "burned": self.engine.burned,
            "sum_balances": total,
            "ok": total == self.engine.minted - self.engine.burned and min(balances.values(), default=0) >= 0,
        }

    def trade_stakeholders(self) -> list[str]:
        skip = {self.config.spv_id, self.config.bank_id}
        return sorted(s for s in self.engine.stakeholders if s not in skip)

    # -- replay ----------------------------------------------------------------------

    def replay_block(self, block: LedgerBlock) -> None:
        """Feed an already-committed block into a fresh twin (no consensus)."""
        expected = self.ledger.height + 1
        if block.height != expected:
            raise ValueError(f"replay out of order: got {block.height}, want {expected}")
        self.ledger.chain.append(block)
        for tx in block.tx_list:
            self.ledger._committed_ids.add(tx.tx_id)
            if tx.timestamp > self.current_tick:
                self.current_tick = tx.timestamp
            payload = tx.payload
            if isinstance(payload, TradeCreditCreated):
                self._note_existing_id("receivable", payload.receivable_id)
            elif isinstance(payload, ContractInvocation):
                args = dict(payload.args)
                if "deal_id" in args:
                    self._note_existing_id("deal", args["deal_id"])
                if "offer_id" in args:
                    self._note_existing_id("offer", args["offer_id"])
        self._absorb_block(block)

    # -- run report ---------------------------------------------------------------------

    def run_report(self, scenario_name: str = "", seed: Optional[int] = None) -> dict:
        """Deterministic JSON-friendly summary of the committed run."""
        alerts = self.health.monitor(self.current_tick)
        final_indices = {}
        for sid in self.trade_stakeholders():
            report = self.latest_report(sid)
            final_indices[sid] = report.to_json()["indices"] if report is not None else None
        risk = {sid: self.health.score_risk(sid, self.current_tick).to_json() for sid in self.trade_stakeholders()}
        deals = {
            did: {
                "state": d.state,
                "originator": d.originator,
                "pool_face_value": d.pool_face_value,
                "advance_paid": d.advance_paid,
                "abs_units": d.abs_units,
                "unit_notional": d.unit_notional,
                "sold_units": d.sold_units,
                "risk_score": str(d.risk_score),
                "distribution": d.distribution,
            }
            for did, d in sorted(self.engine.deals.items())
        }
        receivable_states: dict[str, int] = {}
        for r in self.engine.receivables.values():
            receivable_states[r.status] = receivable_states.get(r.status, 0) + 1
        return {
            "schema_version": 1,
            "scenario": scenario_name,
            "seed": seed,
            "final_tick": self.current_tick,
            "chain_height": self.ledger.height,
            "tip_hash": self.ledger.tip_hash.hex(),
            "tx_count": len(self.ledger.committed_txs()),
            "conservation": self.conservation(),
            "alerts": [a.to_json() for a in alerts],
            "recommendations": {
                sid: [r.to_json() for r in self.health.recommend_services(sid, alerts)]
                for sid in self.trade_stakeholders()
            },
            "deals": deals,
            "receivable_status_counts": dict(sorted(receivable_states.items())),
            "final_indices": final_indices,
            "risk": risk,
        }

    def report_bytes(self, scenario_name: str = "", seed: Optional[int] = None) -> bytes:
        return json.dumps(self.run_report(scenario_name, seed), sort_keys=True, indent=2).encode() + b"\n"
