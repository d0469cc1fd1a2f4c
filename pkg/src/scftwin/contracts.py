"""Deterministic smart-contract engine for supply-chain finance services.

The engine is a pure state machine: (state, committed transaction) -> state'.
It never sees wall clocks or randomness, so replaying a committed log from
genesis reproduces the exact same state. Five services are implemented over
trade receivables: securitization (full lifecycle), dynamic discounting, and
a shared assignment primitive covering receivables discounting, factoring
and inventory financing.

Money is integer minor currency units throughout. Fractional parameters
(advance rates, discount rates) are exact rationals, applied with floor
rounding; distributions use the largest-remainder method so that every
settlement conserves cash to the unit.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from typing import Optional

from .ledger import (
    ContractInvocation,
    LedgerTransaction,
    Payload,
    PaymentMade,
    SnapshotPublished,
    TokenTransfer,
    TradeCreditCreated,
    invocation_args,
)

# receivable statuses
OPEN = "open"
ASSIGNED = "assigned"
SECURITIZED = "securitized"
PAID = "paid"
DEFAULTED = "defaulted"

RECEIVABLE_TRANSITIONS = {
    OPEN: {ASSIGNED, SECURITIZED, PAID, DEFAULTED},
    ASSIGNED: {PAID, DEFAULTED},
    SECURITIZED: {PAID, DEFAULTED},
    PAID: set(),
    DEFAULTED: set(),
}

# deal states
PROPOSED = "proposed"
ADVANCED = "advanced"
ISSUED = "issued"
SETTLED = "settled"
IMPAIRED = "impaired"

# offer states
OFFERED = "offered"
ACCEPTED = "accepted"
REJECTED = "rejected"
OFFER_SETTLED = "settled"


class ContractError(Exception):
    """Base class for contract precondition failures."""

    @property
    def code(self) -> str:
        return type(self).__name__


class UnknownParty(ContractError):
    pass


class NonPositiveValue(ContractError):
    pass


class PastDue(ContractError):
    pass


class InsufficientFunds(ContractError):
    pass


class WrongPayer(ContractError):
    pass


class AlreadySettled(ContractError):
    pass


class ReceivableNotEligible(ContractError):
    pass


class SpvUnderfunded(ContractError):
    pass


class EmptyPool(ContractError):
    pass


class Oversubscribed(ContractError):
    pass


class WrongParty(ContractError):
    pass


class OfferExpired(ContractError):
    pass


class NotYetCollectable(ContractError):
    pass


class DuplicateEntity(ContractError):
    pass


class UnknownEntity(ContractError):
    pass


class InvalidTransition(ContractError):
    pass


@dataclass
class Receivable:
    receivable_id: str
    creditor: str
    debtor: str
    face_value: int
    due_tick: int
    status: str = OPEN
    holder: str = ""          # current beneficial owner; creditor at creation
    paid_tick: Optional[int] = None
    deal_id: Optional[str] = None

    def __post_init__(self):
        if not self.holder:
            self.holder = self.creditor

    def transition(self, new_status: str) -> None:
        if new_status not in RECEIVABLE_TRANSITIONS[self.status]:
            raise InvalidTransition(f"{self.receivable_id}: {self.status} -> {new_status}")
        self.status = new_status


@dataclass
class SecuritizationDeal:
    deal_id: str
    originator: str
    spv_id: str
    pool: tuple
    pool_face_value: int
    advance_rate: Fraction
    advance_paid: int
    abs_units: int
    unit_notional: int
    rounding_residual: int
    risk_score: Fraction
    state: str = ISSUED
    holders: list = field(default_factory=list)  # [start, end, owner] unit ranges, disjoint
    collected: int = 0
    distribution: Optional[dict] = None

    @property
    def sold_units(self) -> int:
        return sum(end - start for start, end, _ in self.holders)

    @property
    def unsold_units(self) -> int:
        return self.abs_units - self.sold_units

    def units_by_owner(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for start, end, owner in self.holders:
            counts[owner] = counts.get(owner, 0) + (end - start)
        return counts


@dataclass
class DiscountOffer:
    offer_id: str
    receivable_id: str
    discount_rate: Fraction
    proposer: str  # the debtor
    state: str = OFFERED


@dataclass
class Assignment:
    receivable_id: str
    assignee: str
    advance_rate: Fraction
    fee_rate: Fraction
    paid_to_creditor: int


def largest_remainder(amount: int, weights: list[tuple[str, int]]) -> dict[str, int]:
    """Integer pro-rata split of `amount` by `weights`, conserving the total.

    Each party gets floor(amount * w / W); the leftover units go one at a
    time to the largest fractional remainders. Ties break deterministically
    on (remainder desc, weight desc, owner asc). Zero-weight parties never
    receive anything.
    """
    total_weight = sum(w for _, w in weights)
    if total_weight <= 0:
        raise ValueError("largest_remainder needs positive total weight")
    shares: dict[str, int] = {}
    remainders = []
    allocated = 0
    for owner, w in weights:
        quota = Fraction(amount * w, total_weight)
        base = math.floor(quota)
        shares[owner] = shares.get(owner, 0) + base
        allocated += base
        if w > 0:
            remainders.append((quota - base, w, owner))
    leftover = amount - allocated
    remainders.sort(key=lambda t: (-t[0], -t[1], t[2]))
    for i in range(leftover):
        shares[remainders[i % len(remainders)][2]] += 1
    return shares


def settlement_split(collected: int, holder_units: list[tuple[str, int]], total_units: int) -> tuple[dict[str, int], int]:
    """Split collected cash between ABS holders and the issuing SPV.

    Holders as a group receive floor(collected * sold / total_units),
    distributed among them by largest remainder on unit counts; the SPV
    retains the rest (its unsold-unit share plus the rounding residual).
    Returns (per-holder allocation, SPV retained). Always exact:
    sum(allocation) + retained == collected.
    """
    sold = sum(u for _, u in holder_units)
    if sold == 0:
        return {}, collected
    holder_pool = (collected * sold) // total_units
    allocation = largest_remainder(holder_pool, holder_units) if holder_pool > 0 else {o: 0 for o, _ in holder_units}
    retained = collected - sum(allocation.values())
    return allocation, retained


def held_receivables_value(engine: "ContractEngine", owner: str) -> int:
    """Face value of unresolved receivables currently held by `owner`."""
    return sum(
        r.face_value
        for r in engine.receivables.values()
        if r.holder == owner and r.status in (OPEN, ASSIGNED, SECURITIZED)
    )


@dataclass
class SettlementRecord:
    deal_id: str
    collected: int
    distributed: dict
    retained: int
    shortfall: int
    outcome: str  # settled | impaired


class ContractEngine:
    """Holds all contract state and applies committed ledger transactions.

    `validate` answers "would this transaction apply cleanly right now"
    without mutating anything; `apply` performs the transition. Validators
    run validate during endorsement, so a committed block can always be
    applied without error.
    """

    def __init__(self, grace_ticks: int = 5, mint_authority: str = "bank", spv_id: str = "spv"):
        self.grace_ticks = grace_ticks
        self.mint_authority = mint_authority
        self.spv_id = spv_id
        self.stakeholders: set[str] = set()
        self.actors: set[str] = set()  # anyone who may hold tokens
        self.balances: dict[str, int] = {}
        self.minted = 0
        self.burned = 0
        self.receivables: dict[str, Receivable] = {}
        self.deals: dict[str, SecuritizationDeal] = {}
        self.offers: dict[str, DiscountOffer] = {}
        self.assignments: dict[str, Assignment] = {}
        self.escrow: dict[str, int] = {}  # deal_id -> collected cash parked at the SPV

    # -- registration (out-of-band, mirrors the node roster) ----------------

    def register_actor(self, actor_id: str, stakeholder: bool = False) -> None:
        self.actors.add(actor_id)
        if stakeholder:
            self.stakeholders.add(actor_id)
        self.balances.setdefault(actor_id, 0)

    # -- token ledger --------------------------------------------------------

    def balance(self, owner: str) -> int:
        return self.balances.get(owner, 0)

    def total_supply(self) -> int:
        return self.minted - self.burned

    def spv_escrowed(self) -> int:
        return sum(self.escrow.values())

    def _require_actor(self, actor_id: str) -> None:
        if actor_id not in self.actors:
            raise UnknownParty(actor_id)

    def _transfer(self, source: str, dest: str, amount: int) -> None:
        # internal move; caller has already validated balances
        self.balances[source] -= amount
        self.balances[dest] = self.balances.get(dest, 0) + amount

    # -- replayable entry points ---------------------------------------------

    def validate(self, tx: LedgerTransaction) -> None:
        """Raise a ContractError if the transaction would not apply cleanly."""
        self._step(tx, dry=True)

    def apply(self, tx: LedgerTransaction) -> None:
        self._step(tx, dry=False)

    def dry_run(self, txs: list[LedgerTransaction]) -> None:
        """Validate a whole proposal sequentially against a scratch copy."""
        scratch = copy.deepcopy(self)
        for tx in txs:
            scratch._step(tx, dry=False)

    def _step(self, tx: LedgerTransaction, dry: bool) -> None:
        p: Payload = tx.payload
        tick = tx.timestamp
        # the signature binds the submitter; the submitter must be the acting
        # party named in the payload, or anyone could move anyone's assets
        if isinstance(p, TradeCreditCreated):
            if tx.submitter != p.creditor:
                raise WrongParty(f"{tx.submitter} cannot create a credit for {p.creditor}")
            self.create_receivable(p.receivable_id, p.creditor, p.debtor, p.face_value, p.due_tick, tick, dry=dry)
        elif isinstance(p, PaymentMade):
            if tx.submitter != p.payer:
                raise WrongParty(f"{tx.submitter} cannot pay as {p.payer}")
            self.pay_receivable(p.receivable_id, p.payer, tick, dry=dry)
        elif isinstance(p, TokenTransfer):
            self.token_op(p.op, p.source, p.dest, p.amount, submitter=tx.submitter, dry=dry)
        elif isinstance(p, SnapshotPublished):
            if tx.submitter != p.stakeholder_id:
                raise WrongParty(f"{tx.submitter} cannot publish figures for {p.stakeholder_id}")
            if p.stakeholder_id not in self.stakeholders:
                raise UnknownParty(p.stakeholder_id)
        elif isinstance(p, ContractInvocation):
            self._invoke(p, tx.submitter, tick, dry=dry)
        else:  # pragma: no cover - union is closed
            raise ContractError(f"unhandled payload {type(p)!r}")

    def _require_submitter(self, submitter: str, expected: Optional[str], action: str) -> None:
        if expected is not None and submitter != expected:
            raise WrongParty(f"{action} must be submitted by {expected}, got {submitter}")

    def _invoke(self, p: ContractInvocation, submitter: str, tick: int, dry: bool) -> None:
        args = invocation_args(p)
        action = p.action
        if action == "initiate_securitization":
            self._require_submitter(submitter, args.get("originator"), action)
            self.initiate_securitization(
                args["deal_id"],
                args["originator"],
                tuple(args["pool"]),
                args["advance_rate"],
                args["abs_units"],
                args["risk_score"],
                tick,
                dry=dry,
            )
        elif action == "purchase_abs":
            self._require_submitter(submitter, args.get("buyer"), action)
            price = args.get("unit_price")
            self.purchase_abs(args["deal_id"], args["buyer"], args["unit_count"], unit_price=price, dry=dry)
        elif action == "settle_securitization":
            self._require_submitter(submitter, self.spv_id, action)
            self.settle_securitization(args["deal_id"], dry=dry)
        elif action == "mark_impaired":
            self._require_submitter(submitter, self.spv_id, action)
            self.mark_impaired(args["deal_id"], tick, dry=dry)
        elif action == "offer_discount":
            self._require_submitter(submitter, args.get("proposer"), action)
            self.offer_discount(args["offer_id"], args["receivable_id"], args["proposer"], args["discount_rate"], tick, dry=dry)
        elif action == "respond_discount":
            self._require_submitter(submitter, args.get("responder"), action)
            self.respond_discount(args["offer_id"], args["responder"], args["accept"] == 1, tick, dry=dry)
        elif action == "settle_discount":
            offer = self.offers.get(args["offer_id"])
            if offer is not None and offer.receivable_id in self.receivables:
                self._require_submitter(submitter, self.receivables[offer.receivable_id].debtor, action)
            self.settle_discount(args["offer_id"], tick, dry=dry)
        elif action == "assign_receivable":
            r = self.receivables.get(args["receivable_id"])
            if r is not None:
                self._require_submitter(submitter, r.creditor, action)
            self.assign_receivable(args["receivable_id"], args["assignee"], args["advance_rate"], args["fee_rate"], tick, dry=dry)
        elif action == "mark_defaulted":
            r = self.receivables.get(args["receivable_id"])
            if r is not None:
                self._require_submitter(submitter, r.holder, action)
            self.mark_defaulted(args["receivable_id"], tick, dry=dry)
        else:
            raise ContractError(f"unknown contract action {action}")

    # -- trade credit ---------------------------------------------------------

    def create_receivable(
        self, receivable_id: str, creditor: str, debtor: str, face_value: int, due_tick: int, tick: int, dry: bool = False
    ) -> Optional[Receivable]:
        if receivable_id in self.receivables:
            raise DuplicateEntity(receivable_id)
        if creditor not in self.stakeholders or debtor not in self.stakeholders:
            raise UnknownParty(f"{creditor} or {debtor} not a registered stakeholder")
        if creditor == debtor:
            raise UnknownParty("self-dealing: creditor equals debtor")
        if face_value <= 0:
            raise NonPositiveValue(str(face_value))
        if due_tick <= tick:
            raise PastDue(f"due {due_tick} not after tick {tick}")
        if dry:
            return None
        r = Receivable(receivable_id, creditor, debtor, face_value, due_tick)
        self.receivables[receivable_id] = r
        return r

    def _receivable(self, receivable_id: str) -> Receivable:
        if receivable_id not in self.receivables:
            raise UnknownEntity(receivable_id)
        return self.receivables[receivable_id]

    def pay_receivable(self, receivable_id: str, payer: str, tick: int, dry: bool = False) -> Optional[dict]:
        r = self._receivable(receivable_id)
        if r.status in (PAID, DEFAULTED):
            raise AlreadySettled(f"{receivable_id} is {r.status}")
        if payer != r.debtor:
            raise WrongPayer(f"{payer} is not the debtor of {receivable_id}")
        amount = r.face_value
        if self.balance(payer) < amount:
            raise InsufficientFunds(f"{payer} has {self.balance(payer)}, owes {amount}")
        if dry:
            return None
        late = tick > r.due_tick
        if r.status == SECURITIZED:
            # cash parks in the deal's escrow at the SPV until settlement
            deal = self.deals[r.deal_id]
            self._transfer(payer, deal.spv_id, amount)
            self.escrow[deal.deal_id] = self.escrow.get(deal.deal_id, 0) + amount
            deal.collected += amount
            payee = deal.spv_id
        else:
            payee = r.holder
            self._transfer(payer, payee, amount)
        r.transition(PAID)
        r.paid_tick = tick
        return {"receivable_id": receivable_id, "amount": amount, "payee": payee, "late": late}

    def mark_defaulted(self, receivable_id: str, tick: int, dry: bool = False) -> None:
        """Flag a standalone receivable whose grace window has lapsed unpaid."""
        r = self._receivable(receivable_id)
        if r.status not in (OPEN, ASSIGNED):
            raise ReceivableNotEligible(f"{receivable_id} is {r.status}")
        if tick <= r.due_tick + self.grace_ticks:
            raise NotYetCollectable(f"grace for {receivable_id} runs to {r.due_tick + self.grace_ticks}")
        if dry:
            return
        r.transition(DEFAULTED)

    # -- securitization --------------------------------------------------------

    def initiate_securitization(
        self,
        deal_id: str,
        originator: str,
        pool: tuple,
        advance_rate: Fraction,
        abs_units: int,
        risk_score: Fraction,
        tick: int,
        dry: bool = False,
    ) -> Optional[SecuritizationDeal]:
        if deal_id in self.deals:
            raise DuplicateEntity(deal_id)
        if originator not in self.stakeholders:
            raise UnknownParty(originator)
        if not pool:
            raise EmptyPool(deal_id)
        if len(set(pool)) != len(pool):
            raise ReceivableNotEligible("pool repeats a receivable")
        if not 0 < advance_rate <= 1:
            raise NonPositiveValue(f"advance rate {advance_rate}")
        if abs_units <= 0:
            raise NonPositiveValue(f"abs units {abs_units}")
        if not 0 <= risk_score <= 1:
            raise NonPositiveValue(f"risk score {risk_score}")
        pool_face = 0
        for rid in pool:
            r = self._receivable(rid)
            if r.status != OPEN or r.holder != originator:
                raise ReceivableNotEligible(f"{rid}: status {r.status}, holder {r.holder}")
            if r.due_tick <= tick:
                raise ReceivableNotEligible(f"{rid} already due")
            pool_face += r.face_value
        advance = math.floor(advance_rate * pool_face)
        spv_available = self.balance(self.spv_id) - self.spv_escrowed()
        if spv_available < advance:
            raise SpvUnderfunded(f"SPV free balance {spv_available} < advance {advance}")
        unit_notional = pool_face // abs_units
        if unit_notional <= 0:
            raise NonPositiveValue("more units than minor currency units in pool")
        if dry:
            return None
        self._transfer(self.spv_id, originator, advance)
        for rid in pool:
            r = self.receivables[rid]
            r.transition(SECURITIZED)
            r.holder = self.spv_id
            r.deal_id = deal_id
        deal = SecuritizationDeal(
            deal_id=deal_id,
            originator=originator,
            spv_id=self.spv_id,
            pool=tuple(pool),
            pool_face_value=pool_face,
            advance_rate=advance_rate,
            advance_paid=advance,
            abs_units=abs_units,
            unit_notional=unit_notional,
            rounding_residual=pool_face - abs_units * unit_notional,
            risk_score=risk_score,
            state=ISSUED,
        )
        self.deals[deal_id] = deal
        return deal

    def _deal(self, deal_id: str) -> SecuritizationDeal:
        if deal_id not in self.deals:
            raise UnknownEntity(deal_id)
        return self.deals[deal_id]

    def purchase_abs(
        self, deal_id: str, buyer: str, unit_count: int, unit_price: Optional[int] = None, dry: bool = False
    ) -> Optional[list]:
        deal = self._deal(deal_id)
        self._require_actor(buyer)
        if deal.state != ISSUED:
            raise AlreadySettled(f"deal {deal_id} is {deal.state}")
        if unit_count <= 0:
            raise NonPositiveValue(str(unit_count))
        if unit_count > deal.unsold_units:
            raise Oversubscribed(f"{unit_count} requested, {deal.unsold_units} unsold")
        price_per_unit = deal.unit_notional if unit_price is None else unit_price
        if price_per_unit < 0:
            raise NonPositiveValue(str(price_per_unit))
        cost = unit_count * price_per_unit
        if self.balance(buyer) < cost:
            raise InsufficientFunds(f"{buyer} has {self.balance(buyer)}, needs {cost}")
        if dry:
            return None
        self._transfer(buyer, deal.spv_id, cost)
        start = deal.sold_units
        deal.holders.append([start, start + unit_count, buyer])
        return deal.holders

    def settle_securitization(self, deal_id: str, dry: bool = False) -> Optional[SettlementRecord]:
        deal = self._deal(deal_id)
        if deal.state != ISSUED:
            raise AlreadySettled(f"deal {deal_id} is {deal.state}")
        unpaid = [rid for rid in deal.pool if self.receivables[rid].status != PAID]
        if unpaid:
            raise NotYetCollectable(f"pool receivables unpaid: {unpaid}")
        if dry:
            return None
        return self._distribute(deal, outcome=SETTLED)

    def mark_impaired(self, deal_id: str, tick: int, dry: bool = False) -> Optional[SettlementRecord]:
        deal = self._deal(deal_id)
        if deal.state != ISSUED:
            raise AlreadySettled(f"deal {deal_id} is {deal.state}")
        overdue = [
            rid
            for rid in deal.pool
            if self.receivables[rid].status == SECURITIZED and tick > self.receivables[rid].due_tick + self.grace_ticks
        ]
        if not overdue:
            raise NotYetCollectable(f"no pool receivable of {deal_id} past grace")
        if dry:
            return None
        # the deal winds down: every unpaid pool receivable defaults, so no
        # late payment can ever strand cash in a closed deal's escrow
        for rid in deal.pool:
            r = self.receivables[rid]
            if r.status == SECURITIZED:
                r.transition(DEFAULTED)
        return self._distribute(deal, outcome=IMPAIRED)

    def _distribute(self, deal: SecuritizationDeal, outcome: str) -> SettlementRecord:
        collected = self.escrow.pop(deal.deal_id, 0)
        holder_units = sorted(deal.units_by_owner().items())
        allocation, retained = settlement_split(collected, holder_units, deal.abs_units)
        for owner, amount in allocation.items():
            if amount > 0:
                self._transfer(deal.spv_id, owner, amount)
        # retained cash simply stays on the SPV balance
        deal.state = outcome
        record = SettlementRecord(
            deal_id=deal.deal_id,
            collected=collected,
            distributed=dict(sorted(allocation.items())),
            retained=retained,
            shortfall=deal.pool_face_value - collected,
            outcome=outcome,
        )
        deal.distribution = {
            "collected": record.collected,
            "distributed": record.distributed,
            "retained": record.retained,
            "shortfall": record.shortfall,
            "outcome": record.outcome,
        }
        return record

    # -- dynamic discounting ----------------------------------------------------

    def offer_discount(
        self, offer_id: str, receivable_id: str, proposer: str, discount_rate: Fraction, tick: int, dry: bool = False
    ) -> Optional[DiscountOffer]:
        if offer_id in self.offers:
            raise DuplicateEntity(offer_id)
        r = self._receivable(receivable_id)
        if r.status != OPEN:
            raise ReceivableNotEligible(f"{receivable_id} is {r.status}")
        if proposer != r.debtor:
            raise WrongParty(f"only the debtor may propose a discount, got {proposer}")
        if not 0 < discount_rate < 1:
            raise NonPositiveValue(f"discount rate {discount_rate}")
        if tick > r.due_tick:
            raise OfferExpired(f"{receivable_id} already due")
        if dry:
            return None
        offer = DiscountOffer(offer_id, receivable_id, discount_rate, proposer)
        self.offers[offer_id] = offer
        return offer

    def _offer(self, offer_id: str) -> DiscountOffer:
        if offer_id not in self.offers:
            raise UnknownEntity(offer_id)
        return self.offers[offer_id]

    def respond_discount(self, offer_id: str, responder: str, accept: bool, tick: int, dry: bool = False) -> Optional[DiscountOffer]:
        offer = self._offer(offer_id)
        r = self._receivable(offer.receivable_id)
        if offer.state != OFFERED:
            raise AlreadySettled(f"offer {offer_id} is {offer.state}")
        if responder != r.creditor:
            raise WrongParty(f"only the creditor may respond, got {responder}")
        if r.status != OPEN or tick > r.due_tick:
            raise OfferExpired(offer_id)
        if dry:
            return None
        offer.state = ACCEPTED if accept else REJECTED
        return offer

    def discount_settlement_amount(self, offer_id: str) -> int:
        offer = self._offer(offer_id)
        face = self._receivable(offer.receivable_id).face_value
        return face - math.floor(offer.discount_rate * face)

    def settle_discount(self, offer_id: str, tick: int, dry: bool = False) -> Optional[dict]:
        offer = self._offer(offer_id)
        r = self._receivable(offer.receivable_id)
        if offer.state != ACCEPTED:
            raise AlreadySettled(f"offer {offer_id} is {offer.state}, not accepted")
        if r.status != OPEN:
            raise ReceivableNotEligible(f"{offer.receivable_id} is {r.status}")
        amount = self.discount_settlement_amount(offer_id)
        if self.balance(r.debtor) < amount:
            raise InsufficientFunds(f"{r.debtor} has {self.balance(r.debtor)}, needs {amount}")
        if dry:
            return None
        self._transfer(r.debtor, r.creditor, amount)
        r.transition(PAID)
        r.paid_tick = tick
        offer.state = OFFER_SETTLED
        return {"offer_id": offer_id, "amount": amount, "receivable_id": r.receivable_id}

    # -- assignment (receivables discounting / factoring / inventory financing) --

    def assign_receivable(
        self, receivable_id: str, assignee: str, advance_rate: Fraction, fee_rate: Fraction, tick: int, dry: bool = False
    ) -> Optional[Assignment]:
        r = self._receivable(receivable_id)
        self._require_actor(assignee)
        if r.status != OPEN:
            raise ReceivableNotEligible(f"{receivable_id} is {r.status}")
        if assignee in (r.creditor, r.debtor):
            raise WrongParty("assignee must be a third party financier")
        if not 0 < advance_rate <= 1:
            raise NonPositiveValue(f"advance rate {advance_rate}")
        if not 0 <= fee_rate < 1:
            raise NonPositiveValue(f"fee rate {fee_rate}")
        payout = math.floor(advance_rate * r.face_value) - math.floor(fee_rate * r.face_value)
        if payout < 0:
            raise NonPositiveValue("fee exceeds advance")
        if self.balance(assignee) < payout:
            raise InsufficientFunds(f"{assignee} has {self.balance(assignee)}, needs {payout}")
        if dry:
            return None
        self._transfer(assignee, r.creditor, payout)
        r.transition(ASSIGNED)
        r.holder = assignee
        a = Assignment(receivable_id, assignee, advance_rate, fee_rate, payout)
        self.assignments[receivable_id] = a
        return a

    # -- token operations ----------------------------------------------------------

    def token_op(self, op: str, source: str, dest: str, amount: int, submitter: str, dry: bool = False) -> None:
        if amount <= 0:
            raise NonPositiveValue(str(amount))
        if op == "mint":
            if submitter != self.mint_authority:
                raise WrongParty(f"only {self.mint_authority} may mint")
            self._require_actor(dest)
            if dry:
                return
            self.balances[dest] = self.balances.get(dest, 0) + amount
            self.minted += amount
        elif op == "burn":
            if submitter not in (self.mint_authority, source):
                raise WrongParty("burn must come from the owner or the mint authority")
            self._require_actor(source)
            if self.balance(source) < amount:
                raise InsufficientFunds(f"{source} has {self.balance(source)}")
            if dry:
                return
            self.balances[source] -= amount
            self.burned += amount
        elif op == "transfer":
            self._require_actor(source)
            self._require_actor(dest)
            if submitter != source:
                raise WrongParty("transfer must be submitted by the source account")
            if self.balance(source) < amount:
                raise InsufficientFunds(f"{source} has {self.balance(source)}")
            if dry:
                return
            self._transfer(source, dest, amount)
        else:
            raise ContractError(f"unknown token op {op}")

    # -- snapshots / forks -----------------------------------------------------------

    def fork(self) -> "ContractEngine":
        """Deep copy for what-if simulation; the original is never touched."""
        return copy.deepcopy(self)

    def to_dict(self) -> dict:
        """JSON-serializable snapshot of the whole contract state."""
        return {
            "grace_ticks": self.grace_ticks,
            "mint_authority": self.mint_authority,
            "spv_id": self.spv_id,
            "stakeholders": sorted(self.stakeholders),
            "actors": sorted(self.actors),
            "balances": dict(sorted(self.balances.items())),
            "minted": self.minted,
            "burned": self.burned,
            "escrow": dict(sorted(self.escrow.items())),
            "receivables": {
                rid: {**asdict(r)} for rid, r in sorted(self.receivables.items())
            },
            "deals": {
                did: {
                    **{k: v for k, v in asdict(d).items() if k not in ("advance_rate", "risk_score")},
                    "advance_rate": str(d.advance_rate),
                    "risk_score": str(d.risk_score),
                }
                for did, d in sorted(self.deals.items())
            },
            "offers": {
                oid: {**{k: v for k, v in asdict(o).items() if k != "discount_rate"}, "discount_rate": str(o.discount_rate)}
                for oid, o in sorted(self.offers.items())
            },
            "assignments": {
                rid: {
                    **{k: v for k, v in asdict(a).items() if k not in ("advance_rate", "fee_rate")},
                    "advance_rate": str(a.advance_rate),
                    "fee_rate": str(a.fee_rate),
                }
                for rid, a in sorted(self.assignments.items())
            },
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ContractEngine":
        eng = cls(
            grace_ticks=raw["grace_ticks"],
            mint_authority=raw["mint_authority"],
            spv_id=raw["spv_id"],
        )
        eng.stakeholders = set(raw["stakeholders"])
        eng.actors = set(raw["actors"])
        eng.balances = dict(raw["balances"])
        eng.minted = raw["minted"]
        eng.burned = raw["burned"]
        eng.escrow = dict(raw["escrow"])
        for rid, r in raw["receivables"].items():
            eng.receivables[rid] = Receivable(**r)
        for did, d in raw["deals"].items():
            d = dict(d)
            d["advance_rate"] = Fraction(d["advance_rate"])
            d["risk_score"] = Fraction(d["risk_score"])
            d["pool"] = tuple(d["pool"])
            d["holders"] = [list(h) for h in d["holders"]]
            eng.deals[did] = SecuritizationDeal(**d)
        for oid, o in raw["offers"].items():
            o = dict(o)
            o["discount_rate"] = Fraction(o["discount_rate"])
            eng.offers[oid] = DiscountOffer(**o)
        for rid, a in raw["assignments"].items():
            a = dict(a)
            a["advance_rate"] = Fraction(a["advance_rate"])
            a["fee_rate"] = Fraction(a["fee_rate"])
            eng.assignments[rid] = Assignment(**a)
        return eng
