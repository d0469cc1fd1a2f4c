"""Permissioned, append-only, hash-chained ledger with quorum endorsement.

Consensus is a single-round endorsement protocol: a round-robin proposer
assembles the pending pool into a block, every stakeholder-validator checks
the proposal against the same deterministic validation rules, and the block
commits once endorsements reach quorum(n) = floor(2n/3) + 1. There is no
networking; validators exchange messages over an in-process bus, which keeps
runs byte-reproducible.

Validator membership is static for the lifetime of a network. The roster
(node ids, roles, MAC keys) is the out-of-band trust anchor: verification of
a persisted chain always takes the roster as input rather than trusting any
roster bytes stored alongside the chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Union

from .codec import DecodeError, Reader, enc_fraction, enc_list, enc_str, enc_uint, frame, sha256
from .crypto import DEFAULT_SIGNER, Signer

ZERO_HASH = b"\x00" * 32

ROLE_STAKEHOLDER = "stakeholder-validator"
ROLE_OBSERVER = "external-observer"
ROLE_INVESTOR = "external-investor"

PERM_SUBMIT = "submit"
PERM_ENDORSE = "endorse"
PERM_READ = "read"
PERM_INVOKE = "invoke-contract"

ROLE_PERMISSIONS = {
    ROLE_STAKEHOLDER: frozenset({PERM_SUBMIT, PERM_ENDORSE, PERM_READ, PERM_INVOKE}),
    ROLE_OBSERVER: frozenset({PERM_READ}),
    ROLE_INVESTOR: frozenset({PERM_READ, PERM_INVOKE}),
}


class LedgerError(Exception):
    """Base class for ledger rejections."""


class PermissionDenied(LedgerError):
    pass


class InvalidSignature(LedgerError):
    pass


class DuplicateTx(LedgerError):
    pass


class NoQuorum(LedgerError):
    pass


class InvalidProposal(LedgerError):
    pass


@dataclass(frozen=True)
class NodeIdentity:
    node_id: str
    role: str
    public_key: bytes
    permissions: frozenset = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.role not in ROLE_PERMISSIONS:
            raise ValueError(f"unknown role: {self.role}")
        perms = self.permissions if self.permissions is not None else ROLE_PERMISSIONS[self.role]
        perms = frozenset(perms)
        if PERM_READ not in perms:
            raise ValueError("every node has read permission")
        if PERM_ENDORSE in perms and self.role != ROLE_STAKEHOLDER:
            raise ValueError("only stakeholder-validator nodes may endorse")
        object.__setattr__(self, "permissions", perms)

    def may(self, permission: str) -> bool:
        return permission in self.permissions


# ---------------------------------------------------------------------------
# Transaction payloads (tagged union)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TradeCreditCreated:
    receivable_id: str
    creditor: str
    debtor: str
    face_value: int
    due_tick: int


@dataclass(frozen=True)
class PaymentMade:
    receivable_id: str
    payer: str
    amount: int


@dataclass(frozen=True)
class SnapshotPublished:
    stakeholder_id: str
    period_tick: int
    inventory_value: int
    other_current_assets: int
    fixed_assets: int
    current_liabilities: int
    long_term_liabilities: int
    production_value: int
    cost_of_goods_sold: int
    average_inventory: int
    invested_capital: int
    capital_returned: int


@dataclass(frozen=True)
class ContractInvocation:
    action: str
    args: tuple  # sorted tuple of (key, value); values: int | str | Fraction | tuple[str, ...]


@dataclass(frozen=True)
class TokenTransfer:
    op: str     # mint | burn | transfer
    source: str  # "" for mint
    dest: str    # "" for burn
    amount: int


Payload = Union[TradeCreditCreated, PaymentMade, SnapshotPublished, ContractInvocation, TokenTransfer]

PAYLOAD_KINDS = {
    TradeCreditCreated: "TradeCreditCreated",
    PaymentMade: "PaymentMade",
    SnapshotPublished: "SnapshotPublished",
    ContractInvocation: "ContractInvocation",
    TokenTransfer: "TokenTransfer",
}
KIND_TO_CLASS = {v: k for k, v in PAYLOAD_KINDS.items()}

SNAPSHOT_FIELDS = (
    "inventory_value",
    "other_current_assets",
    "fixed_assets",
    "current_liabilities",
    "long_term_liabilities",
    "production_value",
    "cost_of_goods_sold",
    "average_inventory",
    "invested_capital",
    "capital_returned",
)


def invoke(action: str, **args) -> ContractInvocation:
    """Build a ContractInvocation with canonically ordered arguments."""
    items = []
    for key in sorted(args):
        value = args[key]
        if isinstance(value, (list, tuple)):
            value = tuple(value)
        items.append((key, value))
    return ContractInvocation(action=action, args=tuple(items))


def invocation_args(payload: ContractInvocation) -> dict:
    return dict(payload.args)


def _enc_arg_value(value) -> bytes:
    if isinstance(value, bool):
        raise TypeError("bool is not a canonical arg type")
    if isinstance(value, int):
        return b"i" + enc_uint(value)
    if isinstance(value, str):
        return b"s" + enc_str(value)
    if isinstance(value, Fraction):
        return b"f" + enc_fraction(value)
    if isinstance(value, tuple):
        return b"l" + enc_list([enc_str(v) for v in value])
    raise TypeError(f"unsupported invocation arg type: {type(value)!r}")


def _dec_arg_value(raw: bytes):
    tag, body = raw[:1], raw[1:]
    try:
        if tag == b"i":
            if len(body) != 8:
                raise DecodeError("bad int arg")
            return int.from_bytes(body, "big")
        if tag == b"s":
            return body.decode("utf-8")
        if tag == b"f":
            sub = Reader(body)
            num = sub.uint()
            den = sub.uint()
            if den == 0:
                raise DecodeError("zero denominator")
            return Fraction(num, den)
        if tag == b"l":
            return tuple(f.decode("utf-8") for f in Reader(body).list_fields())
    except UnicodeDecodeError as e:
        raise DecodeError(f"invalid utf-8 in arg: {e}") from e
    raise DecodeError(f"unknown arg tag {tag!r}")


def payload_bytes(payload: Payload) -> bytes:
    kind = PAYLOAD_KINDS[type(payload)]
    if isinstance(payload, TradeCreditCreated):
        body = frame(
            enc_str(payload.receivable_id),
            enc_str(payload.creditor),
            enc_str(payload.debtor),
            enc_uint(payload.face_value),
            enc_uint(payload.due_tick),
        )
    elif isinstance(payload, PaymentMade):
        body = frame(enc_str(payload.receivable_id), enc_str(payload.payer), enc_uint(payload.amount))
    elif isinstance(payload, SnapshotPublished):
        body = frame(
            enc_str(payload.stakeholder_id),
            enc_uint(payload.period_tick),
            *[enc_uint(getattr(payload, f)) for f in SNAPSHOT_FIELDS],
        )
    elif isinstance(payload, ContractInvocation):
        arg_fields = []
        for key, value in payload.args:
            arg_fields.append(frame(enc_str(key), _enc_arg_value(value)))
        body = frame(enc_str(payload.action), enc_list(arg_fields))
    elif isinstance(payload, TokenTransfer):
        body = frame(enc_str(payload.op), enc_str(payload.source), enc_str(payload.dest), enc_uint(payload.amount))
    else:  # pragma: no cover - union is closed
        raise TypeError(f"unknown payload {type(payload)!r}")
    return frame(enc_str(kind), body)


def payload_from_bytes(raw: bytes) -> Payload:
    r = Reader(raw)
    kind = r.string()
    body = Reader(r.field())
    r.expect_end()
    if kind == "TradeCreditCreated":
        p = TradeCreditCreated(
            receivable_id=body.string(),
            creditor=body.string(),
            debtor=body.string(),
            face_value=body.uint(),
            due_tick=body.uint(),
        )
    elif kind == "PaymentMade":
        p = PaymentMade(receivable_id=body.string(), payer=body.string(), amount=body.uint())
    elif kind == "SnapshotPublished":
        sid = body.string()
        tick = body.uint()
        values = {f: body.uint() for f in SNAPSHOT_FIELDS}
        p = SnapshotPublished(stakeholder_id=sid, period_tick=tick, **values)
    elif kind == "ContractInvocation":
        action = body.string()
        args = []
        args_reader = Reader(body.field())
        for arg_raw in args_reader.list_fields():
            ar = Reader(arg_raw)
            key = ar.string()
            value = _dec_arg_value(ar.field())
            ar.expect_end()
            args.append((key, value))
        args_reader.expect_end()
        p = ContractInvocation(action=action, args=tuple(args))
    elif kind == "TokenTransfer":
        p = TokenTransfer(op=body.string(), source=body.string(), dest=body.string(), amount=body.uint())
    else:
        raise DecodeError(f"unknown payload kind: {kind}")
    body.expect_end()
    return p


def payload_to_json(payload: Payload) -> dict:
    kind = PAYLOAD_KINDS[type(payload)]
    if isinstance(payload, ContractInvocation):
        args = {}
        for key, value in payload.args:
            if isinstance(value, Fraction):
                args[key] = str(value)
            elif isinstance(value, tuple):
                args[key] = list(value)
            else:
                args[key] = value
        return {"kind": kind, "action": payload.action, "args": args}
    out = {"kind": kind}
    out.update({k: v for k, v in payload.__dict__.items()})
    return out


# ---------------------------------------------------------------------------
# Transactions and blocks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LedgerTransaction:
    tx_id: bytes
    submitter: str
    payload: Payload
    timestamp: int  # logical tick, monotone
    signature: bytes

    def signing_bytes(self) -> bytes:
        return frame(enc_str(self.submitter), payload_bytes(self.payload), enc_uint(self.timestamp))

    def canonical_bytes(self) -> bytes:
        return frame(
            self.tx_id,
            enc_str(self.submitter),
            payload_bytes(self.payload),
            enc_uint(self.timestamp),
            self.signature,
        )


def tx_content_hash(submitter: str, payload: Payload, timestamp: int, signature: bytes) -> bytes:
    return sha256(frame(enc_str(submitter), payload_bytes(payload), enc_uint(timestamp), signature))


def make_transaction(
    node: NodeIdentity, payload: Payload, timestamp: int, signer: Signer = DEFAULT_SIGNER
) -> LedgerTransaction:
    signing = frame(enc_str(node.node_id), payload_bytes(payload), enc_uint(timestamp))
    signature = signer.sign(node.public_key, signing)
    tx_id = tx_content_hash(node.node_id, payload, timestamp, signature)
    return LedgerTransaction(tx_id=tx_id, submitter=node.node_id, payload=payload, timestamp=timestamp, signature=signature)


def tx_from_bytes(raw: bytes) -> LedgerTransaction:
    r = Reader(raw)
    tx_id = r.field()
    submitter = r.string()
    payload = payload_from_bytes(r.field())
    timestamp = r.uint()
    signature = r.field()
    r.expect_end()
    return LedgerTransaction(tx_id=tx_id, submitter=submitter, payload=payload, timestamp=timestamp, signature=signature)


@dataclass(frozen=True)
class LedgerBlock:
    height: int
    parent_hash: bytes
    tx_list: tuple
    proposer: str
    endorsements: tuple  # sorted tuple of (node_id, signature)
    block_hash: bytes

    def hash_input(self) -> bytes:
        return block_hash_input(self.height, self.parent_hash, self.tx_list, self.proposer)

    def canonical_bytes(self) -> bytes:
        endorsement_fields = [frame(enc_str(n), sig) for n, sig in self.endorsements]
        return frame(
            enc_uint(self.height),
            self.parent_hash,
            enc_list([tx.canonical_bytes() for tx in self.tx_list]),
            enc_str(self.proposer),
            enc_list(endorsement_fields),
            self.block_hash,
        )

    def to_json(self) -> dict:
        return {
            "height": self.height,
            "parent_hash": self.parent_hash.hex(),
            "proposer": self.proposer,
            "block_hash": self.block_hash.hex(),
            "endorsements": [n for n, _ in self.endorsements],
            "tx_list": [
                {
                    "tx_id": tx.tx_id.hex(),
                    "submitter": tx.submitter,
                    "timestamp": tx.timestamp,
                    "payload": payload_to_json(tx.payload),
                }
                for tx in self.tx_list
            ],
        }


def block_hash_input(height: int, parent_hash: bytes, tx_list: Iterable[LedgerTransaction], proposer: str) -> bytes:
    return frame(
        enc_uint(height),
        parent_hash,
        enc_list([tx.canonical_bytes() for tx in tx_list]),
        enc_str(proposer),
    )


def block_from_bytes(raw: bytes) -> LedgerBlock:
    r = Reader(raw)
    height = r.uint()
    parent_hash = r.field()
    # every inner reader must be fully consumed: a flipped list-count byte
    # would otherwise silently drop entries (endorsements are not covered by
    # the block hash, so parsing itself has to be tamper-evident there)
    tx_reader = Reader(r.field())
    txs = tuple(tx_from_bytes(f) for f in tx_reader.list_fields())
    tx_reader.expect_end()
    proposer = r.string()
    endorsement_reader = Reader(r.field())
    endorsements = []
    for ef in endorsement_reader.list_fields():
        er = Reader(ef)
        endorsements.append((er.string(), er.field()))
        er.expect_end()
    endorsement_reader.expect_end()
    block_hash = r.field()
    r.expect_end()
    return LedgerBlock(
        height=height,
        parent_hash=parent_hash,
        tx_list=txs,
        proposer=proposer,
        endorsements=tuple(endorsements),
        block_hash=block_hash,
    )


def quorum(n: int) -> int:
    """Minimum endorsement count to commit among n validators."""
    return (2 * n) // 3 + 1


# ---------------------------------------------------------------------------
# Chain verification (pure, roster-anchored)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    first_corrupt_height: Optional[int] = None
    reason: str = ""


def verify_chain(
    blocks: list[LedgerBlock],
    roster: dict[str, NodeIdentity],
    signer: Signer = DEFAULT_SIGNER,
) -> VerifyResult:
    """Recompute every hash, parent link, signature and endorsement quorum.

    Corruption is reported as a value (first corrupt height), never raised.
    The roster is trusted input; validator membership is static, so the
    quorum basis at every height is the roster's validator count.
    """
    validators = [n for n in roster.values() if n.role == ROLE_STAKEHOLDER]
    need = quorum(len(validators)) if validators else 1
    prev_hash = None
    for position, block in enumerate(blocks):
        # the position in the verified sequence is the trustworthy coordinate;
        # the stored height field is content under test, not a source of truth
        h = position
        bad = lambda why: VerifyResult(ok=False, first_corrupt_height=h, reason=why)  # noqa: E731
        if block.height != position:
            return bad(f"height field {block.height} out of sequence")
        if h == 0:
            if block.parent_hash != ZERO_HASH:
                return bad("genesis parent hash not all-zero")
        else:
            if block.parent_hash != prev_hash:
                return bad("parent hash mismatch")
        for tx in block.tx_list:
            expect_id = tx_content_hash(tx.submitter, tx.payload, tx.timestamp, tx.signature)
            if tx.tx_id != expect_id:
                return bad("tx id mismatch")
            node = roster.get(tx.submitter)
            if node is None:
                return bad(f"unknown submitter {tx.submitter}")
            if not signer.verify(node.public_key, tx.signing_bytes(), tx.signature):
                return bad("tx signature invalid")
        if sha256(block.hash_input()) != block.block_hash:
            return bad("block hash mismatch")
        if h > 0:
            seen = set()
            for node_id, sig in block.endorsements:
                node = roster.get(node_id)
                if node is None or node.role != ROLE_STAKEHOLDER:
                    return bad(f"endorsement from non-validator {node_id}")
                if node_id in seen:
                    return bad("duplicate endorsement")
                if not signer.verify(node.public_key, block.block_hash, sig):
                    return bad("endorsement signature invalid")
                seen.add(node_id)
            if len(seen) < need:
                return bad(f"endorsements {len(seen)} below quorum {need}")
        prev_hash = block.block_hash
    return VerifyResult(ok=True)


# ---------------------------------------------------------------------------
# The ledger node network
# ---------------------------------------------------------------------------

@dataclass
class RoundOutcome:
    block: Optional[LedgerBlock]
    endorsers: list[str]
    refusals: dict[str, str]
    rejected_txs: list[tuple[bytes, str]]  # (tx_id, reason) dropped at proposal time


class Ledger:
    """In-process permissioned network: pending pool, consensus, committed chain.

    All mutations are serialized through this single object (one command
    queue); reads only ever see committed state. A transaction-validation
    hook lets the contract engine veto payloads both at submission and at
    endorsement time.
    """

    def __init__(
        self,
        nodes: Iterable[NodeIdentity],
        signer: Signer = DEFAULT_SIGNER,
        tx_validator: Optional[Callable[[list[LedgerTransaction]], Optional[str]]] = None,
        tx_filter: Optional[
            Callable[[list[LedgerTransaction]], tuple[list[LedgerTransaction], list[tuple[bytes, str]]]]
        ] = None,
    ):
        self.nodes: dict[str, NodeIdentity] = {}
        for node in nodes:
            if node.node_id in self.nodes:
                raise ValueError(f"duplicate node id {node.node_id}")
            self.nodes[node.node_id] = node
        self.validators = [n for n in self.nodes.values() if n.role == ROLE_STAKEHOLDER]
        if not self.validators:
            raise ValueError("network needs at least one stakeholder-validator")
        self.signer = signer
        self.tx_validator = tx_validator
        self.tx_filter = tx_filter
        self.pending: dict[bytes, LedgerTransaction] = {}
        self.chain: list[LedgerBlock] = [self._genesis()]
        self._committed_ids: set[bytes] = set()
        self._on_commit: list[Callable[[LedgerBlock], None]] = []

    # -- construction ------------------------------------------------------

    def _genesis(self) -> LedgerBlock:
        content = block_hash_input(0, ZERO_HASH, (), "genesis")
        return LedgerBlock(
            height=0,
            parent_hash=ZERO_HASH,
            tx_list=(),
            proposer="genesis",
            endorsements=(),
            block_hash=sha256(content),
        )

    def on_commit(self, callback: Callable[[LedgerBlock], None]) -> None:
        self._on_commit.append(callback)

    # -- queries -----------------------------------------------------------

    @property
    def height(self) -> int:
        return self.chain[-1].height

    @property
    def tip_hash(self) -> bytes:
        return self.chain[-1].block_hash

    def node(self, node_id: str) -> NodeIdentity:
        if node_id not in self.nodes:
            raise PermissionDenied(f"unknown node {node_id}")
        return self.nodes[node_id]

    # -- submission --------------------------------------------------------

    def submit_transaction(self, tx: LedgerTransaction, from_node: NodeIdentity) -> bytes:
        """Admit a signed transaction to the pending pool (idempotent on tx_id)."""
        if from_node.node_id not in self.nodes:
            raise PermissionDenied(f"unknown node {from_node.node_id}")
        if tx.submitter != from_node.node_id:
            raise PermissionDenied("submitter does not match presenting node")
        needed = PERM_INVOKE if isinstance(tx.payload, ContractInvocation) else PERM_SUBMIT
        if not from_node.may(needed):
            raise PermissionDenied(f"node {from_node.node_id} lacks {needed}")
        if tx.tx_id in self.pending or tx.tx_id in self._committed_ids:
            raise DuplicateTx(tx.tx_id.hex())
        expect_id = tx_content_hash(tx.submitter, tx.payload, tx.timestamp, tx.signature)
        if tx.tx_id != expect_id:
            raise InvalidSignature("tx id does not match content")
        if not self.signer.verify(from_node.public_key, tx.signing_bytes(), tx.signature):
            raise InvalidSignature(f"bad signature from {from_node.node_id}")
        if self.tx_validator is not None:
            problem = self.tx_validator([tx])
            if problem is not None:
                raise InvalidProposal(problem)
        self.pending[tx.tx_id] = tx
        return tx.tx_id

    # -- consensus ---------------------------------------------------------

    def _static_check(self, tx: LedgerTransaction) -> Optional[str]:
        node = self.nodes.get(tx.submitter)
        if node is None:
            return f"unknown submitter {tx.submitter}"
        needed = PERM_INVOKE if isinstance(tx.payload, ContractInvocation) else PERM_SUBMIT
        if not node.may(needed):
            return f"submitter {tx.submitter} lacks {needed}"
        if not self.signer.verify(node.public_key, tx.signing_bytes(), tx.signature):
            return f"bad signature on {tx.tx_id.hex()[:12]}"
        return None

    def _validate_proposal(self, txs: list[LedgerTransaction]) -> Optional[str]:
        """The deterministic check every honest validator runs on a proposal."""
        for tx in txs:
            problem = self._static_check(tx)
            if problem is not None:
                return problem
        if self.tx_validator is not None:
            return self.tx_validator(txs)
        return None

    def propose_and_commit_block(
        self,
        endorsement_override: Optional[dict[str, bool]] = None,
        proposal_tamper: Optional[Callable[[list[LedgerTransaction]], list[LedgerTransaction]]] = None,
    ) -> LedgerBlock:
        """Run one consensus round over the pending pool.

        An honest proposer filters out transactions that no longer validate
        against current state (they are dropped, not retried forever). Test
        hooks: `endorsement_override` forces per-validator endorsement
        decisions, `proposal_tamper` lets a Byzantine proposer rewrite the
        proposal. Raises NoQuorum / InvalidProposal when no block commits;
        pool and chain are left unchanged in that case except for dropped
        invalid transactions.
        """
        if not self.pending:
            raise InvalidProposal("no pending transactions")
        height = self.height + 1
        proposer = self.validators[height % len(self.validators)]

        ordered = list(self.pending.values())
        rejected: list[tuple[bytes, str]] = []
        if proposal_tamper is None:
            # honest proposer: drop whatever no longer validates instead of
            # stalling the round (state may have moved since submission)
            proposal = []
            for tx in ordered:
                problem = self._static_check(tx)
                if problem is None:
                    proposal.append(tx)
                else:
                    rejected.append((tx.tx_id, problem))
            if proposal and self._validate_proposal(proposal) is not None:
                if self.tx_filter is not None:
                    proposal, dropped = self.tx_filter(proposal)
                    rejected.extend(dropped)
                else:
                    kept: list[LedgerTransaction] = []
                    for tx in proposal:
                        problem = self._validate_proposal(kept + [tx])
                        if problem is None:
                            kept.append(tx)
                        else:
                            rejected.append((tx.tx_id, problem))
                    proposal = kept
            for tx_id, _ in rejected:
                self.pending.pop(tx_id, None)
            if not proposal:
                raise InvalidProposal("all pending transactions failed validation")
        else:
            proposal = proposal_tamper(ordered)

        content = block_hash_input(height, self.tip_hash, proposal, proposer.node_id)
        block_hash = sha256(content)

        verdict = self._validate_proposal(proposal)
        endorsers: list[str] = []
        refusals: dict[str, str] = {}
        for validator in self.validators:
            if endorsement_override is not None and validator.node_id in endorsement_override:
                decision = endorsement_override[validator.node_id]
            else:
                decision = verdict is None
            if decision:
                endorsers.append(validator.node_id)
            else:
                refusals[validator.node_id] = verdict or "withheld"

        need = quorum(len(self.validators))
        if len(endorsers) < need:
            if verdict is not None:
                raise InvalidProposal(f"honest validators refused: {verdict}")
            raise NoQuorum(f"{len(endorsers)} endorsements, quorum is {need}")

        endorsements = tuple(
            sorted((n, self.signer.sign(self.nodes[n].public_key, block_hash)) for n in endorsers)
        )
        block = LedgerBlock(
            height=height,
            parent_hash=self.tip_hash,
            tx_list=tuple(proposal),
            proposer=proposer.node_id,
            endorsements=endorsements,
            block_hash=block_hash,
        )
        self.chain.append(block)
        for tx in proposal:
            self.pending.pop(tx.tx_id, None)
            self._committed_ids.add(tx.tx_id)
        for callback in self._on_commit:
            callback(block)
        return block

    # -- reads -------------------------------------------------------------

    def verify(self) -> VerifyResult:
        return verify_chain(self.chain, self.nodes, self.signer)

    def read_ledger(
        self,
        caller: NodeIdentity,
        payload_kind: Optional[str] = None,
        stakeholder: Optional[str] = None,
        height_range: Optional[tuple[int, int]] = None,
    ) -> list[LedgerTransaction]:
        """Committed transactions in (height, index) order, filtered."""
        if not caller.may(PERM_READ):
            raise PermissionDenied(f"node {caller.node_id} lacks read")
        lo, hi = height_range if height_range is not None else (0, self.height)
        out = []
        for block in self.chain:
            if block.height < lo or block.height > hi:
                continue
            for tx in block.tx_list:
                if payload_kind is not None and PAYLOAD_KINDS[type(tx.payload)] != payload_kind:
                    continue
                if stakeholder is not None and not _touches(tx, stakeholder):
                    continue
                out.append(tx)
        return out

    def committed_txs(self) -> list[LedgerTransaction]:
        return [tx for block in self.chain for tx in block.tx_list]


def _touches(tx: LedgerTransaction, stakeholder: str) -> bool:
    p = tx.payload
    if tx.submitter == stakeholder:
        return True
    if isinstance(p, TradeCreditCreated):
        return stakeholder in (p.creditor, p.debtor)
    if isinstance(p, PaymentMade):
        return p.payer == stakeholder
    if isinstance(p, SnapshotPublished):
        return p.stakeholder_id == stakeholder
    if isinstance(p, TokenTransfer):
        return stakeholder in (p.source, p.dest)
    if isinstance(p, ContractInvocation):
        return any(v == stakeholder for _, v in p.args)
    return False
