"""Knowledge graph over ledger events: typed triples, exposure, contagion.

Every committed transaction maps deterministically to triples over a fixed
relation vocabulary; re-ingesting a transaction adds nothing (idempotent on
tx id). Holder edges follow the current beneficial owner: assignment and
securitization move `holds_receivable` to the assignee or SPV, since that
is where the credit risk now sits. Alongside the triples the graph keeps a
small attribute registry (receivable face/status, stakeholder current
assets) needed by the exposure and contagion queries.

Derived triples (`contagion_watch`) come from a single non-recursive rule
and are recomputed from scratch on demand, never asserted.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

from .ledger import (
    ContractInvocation,
    LedgerTransaction,
    PaymentMade,
    SnapshotPublished,
    TokenTransfer,
    TradeCreditCreated,
    invocation_args,
)

VOCABULARY = frozenset(
    {"holds_receivable", "owed_by", "supplies", "member_of_deal", "has_alert", "has_snapshot"}
)
DERIVED_PREDICATE = "contagion_watch"


class UnknownPayloadKind(ValueError):
    pass


@dataclass
class ReceivableFacts:
    face_value: int
    debtor: str
    holder: str
    status: str


class KnowledgeGraph:
    """Triple store with predicate indexes and an attribute registry."""

    def __init__(self):
        self.triples: set[tuple[str, str, str]] = set()
        self._by_predicate: dict[str, set[tuple[str, str, str]]] = {p: set() for p in VOCABULARY}
        self._seen_tx: set[bytes] = set()
        self.receivable_facts: dict[str, ReceivableFacts] = {}
        self.current_assets: dict[str, int] = {}  # stakeholder -> latest snapshot + ledger figure

    # -- assertion ----------------------------------------------------------

    def _assert(self, subject: str, predicate: str, obj: str, added: list) -> None:
        if predicate not in VOCABULARY:
            raise ValueError(f"predicate {predicate} outside vocabulary")
        triple = (subject, predicate, obj)
        if triple not in self.triples:
            self.triples.add(triple)
            self._by_predicate[predicate].add(triple)
            added.append(triple)

    def _retract(self, subject: str, predicate: str, obj: str) -> None:
        triple = (subject, predicate, obj)
        self.triples.discard(triple)
        self._by_predicate[predicate].discard(triple)

    def _move_holder(self, receivable_id: str, new_holder: str, added: list) -> None:
        facts = self.receivable_facts[receivable_id]
        self._retract(facts.holder, "holds_receivable", receivable_id)
        facts.holder = new_holder
        self._assert(new_holder, "holds_receivable", receivable_id, added)

    # -- ingestion ------------------------------------------------------------

    def ingest(self, tx: LedgerTransaction) -> list[tuple[str, str, str]]:
        """Map one committed transaction to triples; idempotent on tx_id."""
        if tx.tx_id in self._seen_tx:
            return []
        self._seen_tx.add(tx.tx_id)
        added: list[tuple[str, str, str]] = []
        p = tx.payload
        if isinstance(p, TradeCreditCreated):
            self.receivable_facts[p.receivable_id] = ReceivableFacts(
                face_value=p.face_value, debtor=p.debtor, holder=p.creditor, status="open"
            )
            self._assert(p.creditor, "holds_receivable", p.receivable_id, added)
            self._assert(p.receivable_id, "owed_by", p.debtor, added)
            self._assert(p.creditor, "supplies", p.debtor, added)
        elif isinstance(p, PaymentMade):
            facts = self.receivable_facts.get(p.receivable_id)
            if facts is not None:
                facts.status = "paid"
        elif isinstance(p, SnapshotPublished):
            snap_id = f"snapshot:{p.stakeholder_id}:{p.period_tick}"
            self._assert(p.stakeholder_id, "has_snapshot", snap_id, added)
            # current assets need ledger-derived cash and receivables too;
            # the twin pushes the merged figure via set_current_assets
        elif isinstance(p, ContractInvocation):
            self._ingest_invocation(p, added)
        elif isinstance(p, TokenTransfer):
            pass  # token moves carry no relationship information
        else:
            raise UnknownPayloadKind(str(type(p)))
        return added

    def _ingest_invocation(self, p: ContractInvocation, added: list) -> None:
        args = invocation_args(p)
        action = p.action
        if action == "initiate_securitization":
            deal_id = args["deal_id"]
            for rid in args["pool"]:
                self._assert(rid, "member_of_deal", deal_id, added)
                if rid in self.receivable_facts:
                    self.receivable_facts[rid].status = "securitized"
                    self._move_holder(rid, args.get("spv_id", "spv"), added)
        elif action == "assign_receivable":
            rid = args["receivable_id"]
            if rid in self.receivable_facts:
                self.receivable_facts[rid].status = "assigned"
                self._move_holder(rid, args["assignee"], added)
        elif action == "settle_discount":
            rid = args.get("receivable_id")
            if rid in self.receivable_facts:
                self.receivable_facts[rid].status = "paid"
        elif action in ("mark_defaulted",):
            rid = args["receivable_id"]
            if rid in self.receivable_facts:
                self.receivable_facts[rid].status = "defaulted"
        elif action == "mark_impaired":
            for rid, facts in self.receivable_facts.items():
                if facts.status == "securitized" and (rid, "member_of_deal", args["deal_id"]) in self.triples:
                    facts.status = "defaulted"
        # purchase_abs / offer / respond / settle_securitization carry no graph edges

    def ingest_alert(self, stakeholder_id: str, alert_id: str) -> list[tuple[str, str, str]]:
        added: list[tuple[str, str, str]] = []
        self._assert(stakeholder_id, "has_alert", alert_id, added)
        return added

    def set_current_assets(self, stakeholder_id: str, amount: int) -> None:
        self.current_assets[stakeholder_id] = amount

    # -- queries ---------------------------------------------------------------

    def exposure(self, creditor: str, debtor: str) -> int:
        """Open plus securitized face value held by `creditor`, owed by `debtor`."""
        total = 0
        for subject, _, rid in self._by_predicate["holds_receivable"]:
            if subject != creditor:
                continue
            facts = self.receivable_facts.get(rid)
            if facts is None or facts.debtor != debtor:
                continue
            if facts.status in ("open", "securitized"):
                total += facts.face_value
        return total

    def holders(self) -> set[str]:
        return {s for s, _, _ in self._by_predicate["holds_receivable"]}

    def infer_contagion(
        self, threshold: Fraction, alerting: Iterable[str]
    ) -> set[tuple[str, str, str]]:
        """Derive (A, contagion_watch, B) when B is alerting and A's exposure
        to B exceeds `threshold` of A's current assets (strict inequality)."""
        alerting = set(alerting)
        derived: set[tuple[str, str, str]] = set()
        for counterparty in alerting:
            for subject in self.holders():
                if subject == counterparty:
                    continue
                assets = self.current_assets.get(subject, 0)
                if assets <= 0:
                    continue
                exp = self.exposure(subject, counterparty)
                if exp > 0 and Fraction(exp, assets) > threshold:
                    derived.add((subject, DERIVED_PREDICATE, counterparty))
        return derived

    # -- export -------------------------------------------------------------------

    def export_tsv(self, path: str | Path) -> int:
        """Write the asserted triples as subject TAB predicate TAB object lines."""
        lines = [f"{s}\t{p}\t{o}" for s, p, o in sorted(self.triples)]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
        return len(lines)
