"""Append-only block log with checkpoints and crash-safe replay.

Layout inside a data directory:
    blocks.log     one base64-encoded canonical block per line (the record)
    blocks.jsonl   human-readable JSON mirror, one block per line (debugging)
    nodes.json     the node roster: the out-of-band trust anchor
    meta.json      scenario/config echo
    checkpoints/   derived-state snapshots every K blocks

Replay rules: a complete line that fails to decode or verify is corruption
(reported with its sequence number); an incomplete final line is treated as
a torn write from a crash and the log is accepted up to the previous block.
Replaying from the latest checkpoint plus the tail must equal a replay from
genesis; a test pins that equivalence.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .codec import DecodeError
from .config import PlatformConfig
from .crypto import derive_key
from .ledger import LedgerBlock, NodeIdentity, block_from_bytes, verify_chain
from .twin import ActorSpec, FinancialTwin

BLOCK_LOG = "blocks.log"
BLOCK_MIRROR = "blocks.jsonl"
NODES_FILE = "nodes.json"
META_FILE = "meta.json"
CHECKPOINT_DIR = "checkpoints"


class CorruptLog(Exception):
    def __init__(self, sequence: int, reason: str):
        super().__init__(f"corrupt log at sequence {sequence}: {reason}")
        self.sequence = sequence
        self.reason = reason


@dataclass
class LoadedLog:
    blocks: list[LedgerBlock]
    torn_tail: bool  # an incomplete final line was discarded


class BlockStore:
    """Owns the on-disk representation of one chain."""

    def __init__(self, data_dir: str | Path):
        self.dir = Path(data_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / CHECKPOINT_DIR).mkdir(exist_ok=True)

    # -- roster ---------------------------------------------------------------

    def write_roster(self, actors: list[ActorSpec], config: PlatformConfig) -> None:
        payload = {
            "network_secret": config.network_secret,
            "actors": [{"actor_id": a.actor_id, "role": a.role} for a in actors],
        }
        (self.dir / NODES_FILE).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def read_roster(self) -> tuple[list[ActorSpec], str]:
        raw = json.loads((self.dir / NODES_FILE).read_text())
        actors = [ActorSpec(a["actor_id"], a["role"]) for a in raw["actors"]]
        return actors, raw["network_secret"]

    def roster_nodes(self) -> dict[str, NodeIdentity]:
        actors, secret = self.read_roster()
        return {a.actor_id: NodeIdentity(a.actor_id, a.role, derive_key(secret, a.actor_id)) for a in actors}

    def write_meta(self, meta: dict) -> None:
        (self.dir / META_FILE).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    def read_meta(self) -> dict:
        path = self.dir / META_FILE
        return json.loads(path.read_text()) if path.exists() else {}

    # -- block log --------------------------------------------------------------

    def append_block(self, block: LedgerBlock) -> None:
        with open(self.dir / BLOCK_LOG, "ab") as f:
            f.write(base64.b64encode(block.canonical_bytes()) + b"\n")
            f.flush()
        with open(self.dir / BLOCK_MIRROR, "a") as f:
            f.write(json.dumps(block.to_json(), sort_keys=True) + "\n")

    def load_blocks(self, strict: bool = False) -> LoadedLog:
        """Read and structurally decode the log.

        strict=True turns a torn tail into corruption as well; used by
        verification, while replay-after-crash wants the tolerant mode."""
        path = self.dir / BLOCK_LOG
        blocks: list[LedgerBlock] = []
        if not path.exists():
            return LoadedLog(blocks=blocks, torn_tail=False)
        raw = path.read_bytes()
        torn = False
        lines = raw.split(b"\n")
        incomplete_last = lines[-1] != b""  # a finished log ends with a newline
        if not incomplete_last:
            lines = lines[:-1]
        for seq, line in enumerate(lines):
            final = seq == len(lines) - 1
            try:
                block = block_from_bytes(base64.b64decode(line, validate=True))
            except (DecodeError, ValueError) as e:
                if final and incomplete_last and not strict:
                    torn = True
                    break
                raise CorruptLog(seq, f"undecodable block: {e}") from e
            blocks.append(block)
        return LoadedLog(blocks=blocks, torn_tail=torn)

    def verify_log(self) -> tuple[bool, Optional[int], str]:
        """Strict integrity check over the persisted chain.

        Returns (ok, first_corrupt_height, reason); any undecodable line is
        corruption at its sequence (== height) even at the tail."""
        try:
            loaded = self.load_blocks(strict=True)
        except CorruptLog as e:
            return False, e.sequence, e.reason
        roster = self.roster_nodes()
        result = verify_chain(loaded.blocks, roster)
        if not result.ok:
            return False, result.first_corrupt_height, result.reason
        return True, None, ""

    # -- checkpoints ---------------------------------------------------------------

    def checkpoint_path(self, height: int) -> Path:
        return self.dir / CHECKPOINT_DIR / f"ckpt_{height:08d}.json"

    def write_checkpoint(self, twin: FinancialTwin) -> Path:
        state = {
            "height": twin.ledger.height,
            "tip_hash": twin.ledger.tip_hash.hex(),
            "current_tick": twin.current_tick,
            "engine": twin.engine.to_dict(),
        }
        path = self.checkpoint_path(twin.ledger.height)
        path.write_text(json.dumps(state, sort_keys=True))
        return path

    def latest_checkpoint(self) -> Optional[dict]:
        candidates = sorted((self.dir / CHECKPOINT_DIR).glob("ckpt_*.json"))
        if not candidates:
            return None
        return json.loads(candidates[-1].read_text())


def open_twin(data_dir: str | Path, config: Optional[PlatformConfig] = None) -> tuple[FinancialTwin, BlockStore]:
    """Reconstruct a twin from a data directory by verified full replay,
    then arrange for future commits to append to the same log."""
    store = BlockStore(data_dir)
    actors, secret = store.read_roster()
    if config is None:
        meta = store.read_meta()
        config = PlatformConfig.from_dict(meta.get("config", {}))
    if config.network_secret != secret:
        config = replace(config, network_secret=secret)  # roster is the anchor
    twin = FinancialTwin(actors, config)
    loaded = store.load_blocks(strict=False)
    result = verify_chain(loaded.blocks, twin.ledger.nodes, twin.signer)
    if not result.ok:
        raise CorruptLog(result.first_corrupt_height or 0, result.reason)
    for block in loaded.blocks:
        if block.height == 0:
            if block.block_hash != twin.ledger.chain[0].block_hash:
                raise CorruptLog(0, "genesis does not match roster-derived genesis")
            continue
        twin.replay_block(block)
    attach_persistence(twin, store)
    return twin, store


def attach_persistence(twin: FinancialTwin, store: BlockStore) -> None:
    interval = max(1, twin.config.checkpoint_interval)

    def persist(block: LedgerBlock) -> None:
        store.append_block(block)
        if block.height % interval == 0:
            store.write_checkpoint(twin)

    twin.ledger.on_commit(persist)


def init_store(data_dir: str | Path, actors: list[ActorSpec], config: PlatformConfig,
               meta: Optional[dict] = None) -> tuple[FinancialTwin, BlockStore]:
    """Create a fresh twin persisting into `data_dir` (must be empty of logs)."""
    store = BlockStore(data_dir)
    log_path = store.dir / BLOCK_LOG
    if log_path.exists():
        raise FileExistsError(f"{log_path} already exists; use open_twin to resume")
    store.write_roster(actors, config)
    store.write_meta(meta or {})
    twin = FinancialTwin(actors, config)
    store.append_block(twin.ledger.chain[0])  # genesis at line 0: seq == height
    attach_persistence(twin, store)
    return twin, store


def replay_equivalence(data_dir: str | Path) -> bool:
    """Check the checkpoint invariant: replay from genesis equals the state
    recorded at the latest checkpoint, continued over the tail."""
    store = BlockStore(data_dir)
    twin, _ = open_twin(data_dir)
    ckpt = store.latest_checkpoint()
    if ckpt is None:
        return True
    if ckpt["height"] > twin.ledger.height:
        return False
    full_at_ckpt_engine = _engine_at_height(data_dir, ckpt["height"])
    return full_at_ckpt_engine == ckpt["engine"] and _tip_at_height(twin, ckpt["height"]) == ckpt["tip_hash"]


def _engine_at_height(data_dir: str | Path, height: int) -> dict:
    store = BlockStore(data_dir)
    actors, _ = store.read_roster()
    meta = store.read_meta()
    config = PlatformConfig.from_dict(meta.get("config", {}))
    twin = FinancialTwin(actors, config)
    loaded = store.load_blocks(strict=False)
    for block in loaded.blocks:
        if block.height == 0 or block.height > height:
            continue
        twin.replay_block(block)
    return twin.engine.to_dict()


def _tip_at_height(twin: FinancialTwin, height: int) -> str:
    for block in twin.ledger.chain:
        if block.height == height:
            return block.block_hash.hex()
    return ""
