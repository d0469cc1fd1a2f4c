"""Deterministic scenario engine for the stakeholder frontier.

Generates trade-credit flows, payment behaviors (on time, late, default),
token mints and silo snapshots as an ordered event script, then drives the
script through a twin tick by tick. All randomness comes from one Mersenne
Twister instance (`random.Random`) seeded from the scenario, so the same
config and seed always produce a byte-identical script, and therefore a
byte-identical chain.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .config import PlatformConfig
from .indices import SiloRecord
from .ledger import LedgerError
from .twin import ActorSpec, FinancialTwin, default_actors
from . import contracts


class InvalidConfig(ValueError):
    pass


@dataclass(frozen=True)
class PaymentBehavior:
    p_on_time: Fraction
    p_late: Fraction
    p_default: Fraction

    def __post_init__(self):
        total = self.p_on_time + self.p_late + self.p_default
        if total != 1:
            raise InvalidConfig(f"payment probabilities sum to {total}, not 1")
        for p in (self.p_on_time, self.p_late, self.p_default):
            if p < 0:
                raise InvalidConfig("negative probability")


@dataclass(frozen=True)
class TradeEdge:
    supplier: str
    buyer: str
    intensity: Fraction  # per-tick probability of a new trade credit


@dataclass
class ScenarioConfig:
    seed: int
    stakeholders: list
    trade_graph: list  # list[TradeEdge]
    ticks: int
    payment_behavior: dict  # stakeholder -> PaymentBehavior
    value_range: tuple = (10_000, 200_000)
    term_range: tuple = (5, 30)  # receivable tenor in ticks
    silo_sharing: dict = field(default_factory=dict)  # stakeholder -> bool
    initial_balance: int = 2_000_000
    spv_funding: int = 5_000_000
    snapshot_period: int = 10
    investors: list = field(default_factory=list)
    observers: list = field(default_factory=list)
    name: str = "scenario"

    def validate(self) -> None:
        known = set(self.stakeholders)
        if len(known) != len(self.stakeholders):
            raise InvalidConfig("duplicate stakeholder ids")
        if self.ticks <= 0:
            raise InvalidConfig("ticks must be positive")
        for edge in self.trade_graph:
            if edge.supplier not in known or edge.buyer not in known:
                raise InvalidConfig(f"trade edge references unknown stakeholder: {edge}")
            if edge.supplier == edge.buyer:
                raise InvalidConfig("self-trade edge")
            if not 0 <= edge.intensity <= 1:
                raise InvalidConfig(f"intensity out of range: {edge.intensity}")
        for sid in self.stakeholders:
            if sid not in self.payment_behavior:
                raise InvalidConfig(f"no payment behavior for {sid}")
        lo, hi = self.value_range
        if not 0 < lo <= hi:
            raise InvalidConfig("bad value range")
        lo, hi = self.term_range
        if not 0 < lo <= hi:
            raise InvalidConfig("bad term range")

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidConfig(f"cannot read scenario file: {e}") from e
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        try:
            stakeholders = list(raw["stakeholders"])
            edges = [
                TradeEdge(e["supplier"], e["buyer"], Fraction(str(e["intensity"])))
                for e in raw["trade_graph"]
            ]
            behavior = {
                sid: PaymentBehavior(
                    Fraction(str(b["on_time"])), Fraction(str(b["late"])), Fraction(str(b["default"]))
                )
                for sid, b in raw["payment_behavior"].items()
            }
            cfg = cls(
                seed=int(raw["seed"]),
                stakeholders=stakeholders,
                trade_graph=edges,
                ticks=int(raw["ticks"]),
                payment_behavior=behavior,
                value_range=tuple(raw.get("value_range", (10_000, 200_000))),
                term_range=tuple(raw.get("term_range", (5, 30))),
                silo_sharing={k: bool(v) for k, v in raw.get("silo_sharing", {}).items()},
                initial_balance=int(raw.get("initial_balance", 2_000_000)),
                spv_funding=int(raw.get("spv_funding", 5_000_000)),
                snapshot_period=int(raw.get("snapshot_period", 10)),
                investors=list(raw.get("investors", [])),
                observers=list(raw.get("observers", [])),
                name=str(raw.get("name", "scenario")),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidConfig(f"malformed scenario: {e}") from e
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class ScriptEvent:
    tick: int
    kind: str    # mint | trade | pay | snapshot
    params: tuple  # canonical (key, value) pairs

    def to_json(self) -> dict:
        return {"tick": self.tick, "kind": self.kind, "params": {k: v for k, v in self.params}}


def _event(tick: int, kind: str, **params) -> ScriptEvent:
    return ScriptEvent(tick, kind, tuple(sorted(params.items())))


def script_bytes(script: list[ScriptEvent]) -> bytes:
    return json.dumps([e.to_json() for e in script], sort_keys=True).encode()


def generate(config: ScenarioConfig, platform_config: Optional[PlatformConfig] = None) -> list[ScriptEvent]:
    """Produce the ordered event script for a scenario.

    Payment timing is decided at trade creation, so causality holds by
    construction: a payment always lands at or after its receivable's
    creation, and only late payers draw a delay within the grace window.
    """
    config.validate()
    pc = platform_config if platform_config is not None else PlatformConfig()
    rng = random.Random(config.seed)
    events: list[ScriptEvent] = []

    for sid in config.stakeholders:
        events.append(_event(0, "mint", to=sid, amount=config.initial_balance))
    events.append(_event(0, "mint", to=pc.spv_id, amount=config.spv_funding))
    for investor in config.investors:
        events.append(_event(0, "mint", to=investor, amount=config.initial_balance))

    # stable per-stakeholder financial profile behind the silo snapshots
    profiles = {}
    for sid in config.stakeholders:
        profiles[sid] = {
            "inventory_value": rng.randrange(50_000, 500_000),
            "other_current_assets": rng.randrange(10_000, 100_000),
            "fixed_assets": rng.randrange(100_000, 1_000_000),
            "current_liabilities": rng.randrange(100_000, 900_000),
            "long_term_liabilities": rng.randrange(50_000, 800_000),
            "production_value": rng.randrange(100_000, 600_000),
            "cost_of_goods_sold": rng.randrange(80_000, 500_000),
            "average_inventory": rng.randrange(40_000, 400_000),
            "invested_capital": rng.randrange(200_000, 2_000_000),
            "capital_returned": rng.randrange(0, 300_000),
        }

    pending_payments: list[tuple[int, str, str]] = []  # (pay_tick, receivable_id, debtor)
    serial = 0
    for tick in range(1, config.ticks + 1):
        for edge in config.trade_graph:
            if rng.random() >= float(edge.intensity):
                continue
            serial += 1
            rid = f"receivable-{serial:05d}"
            face = rng.randrange(config.value_range[0], config.value_range[1] + 1)
            term = rng.randrange(config.term_range[0], config.term_range[1] + 1)
            due = tick + term
            events.append(
                _event(tick, "trade", receivable_id=rid, creditor=edge.supplier, buyer=edge.buyer,
                       face_value=face, due_tick=due)
            )
            behavior = config.payment_behavior[edge.buyer]
            roll = Fraction(rng.randrange(10**9), 10**9)
            if roll < behavior.p_on_time:
                pay_tick = due
            elif roll < behavior.p_on_time + behavior.p_late:
                pay_tick = due + rng.randrange(1, pc.grace_ticks + 1)
            else:
                pay_tick = None  # defaulted: never pays
            if pay_tick is not None:
                pending_payments.append((pay_tick, rid, edge.buyer))
        for sid in config.stakeholders:
            if config.silo_sharing.get(sid, True) and tick % config.snapshot_period == 0:
                drift = rng.randrange(-5, 6)
                figures = {
                    k: max(0, v + v * drift // 100) for k, v in profiles[sid].items()
                }
                events.append(_event(tick, "snapshot", stakeholder=sid, **figures))
        due_now = [p for p in pending_payments if p[0] == tick]
        for pay_tick, rid, debtor in sorted(due_now, key=lambda p: p[1]):
            events.append(_event(tick, "pay", receivable_id=rid, payer=debtor))
        pending_payments = [p for p in pending_payments if p[0] != tick]

    events.sort(key=lambda e: e.tick)
    return events


@dataclass
class DriveOutcome:
    report: dict
    commits: int
    submitted: int
    failures: list  # (tick, kind, error) for events the platform refused


def build_twin(config: ScenarioConfig, platform_config: Optional[PlatformConfig] = None) -> FinancialTwin:
    pc = platform_config if platform_config is not None else PlatformConfig()
    actors = default_actors(
        list(config.stakeholders),
        investors=list(config.investors),
        observers=list(config.observers),
        spv_id=pc.spv_id,
        bank_id=pc.bank_id,
    )
    return FinancialTwin(actors, pc)


def drive(script: list[ScriptEvent], twin: FinancialTwin, scenario_name: str = "",
          seed: Optional[int] = None, stop_after_tick: Optional[int] = None,
          resume: bool = False) -> DriveOutcome:
    """Submit the script through the twin in tick order, committing one block
    per tick. `stop_after_tick` ends the run cleanly after that tick's commit;
    `resume=True` continues a replayed twin from the tick after its last
    committed one. Together they give crash-restart equivalence."""
    commits = 0
    submitted = 0
    failures: list[tuple[int, str, str]] = []
    by_tick: dict[int, list[ScriptEvent]] = {}
    for event in script:
        by_tick.setdefault(event.tick, []).append(event)
    last_tick = max(by_tick) if by_tick else 0
    start = twin.current_tick + 1 if resume else 0
    for tick in range(start, last_tick + 1):
        twin.advance_tick(tick)
        for event in by_tick.get(tick, []):
            params = dict(event.params)
            try:
                if event.kind == "mint":
                    twin.mint(params["to"], params["amount"])
                elif event.kind == "trade":
                    twin.create_receivable(
                        params["creditor"], params["buyer"], params["face_value"],
                        params["due_tick"], receivable_id=params["receivable_id"],
                    )
                elif event.kind == "pay":
                    twin.pay_receivable(params["receivable_id"], params["payer"])
                elif event.kind == "snapshot":
                    silo = SiloRecord(**{k: v for k, v in params.items() if k != "stakeholder"})
                    twin.publish_snapshot(params["stakeholder"], silo, period_tick=tick)
                else:
                    raise InvalidConfig(f"unknown event kind {event.kind}")
                submitted += 1
            except (LedgerError, contracts.ContractError) as e:
                failures.append((tick, event.kind, str(e)))
        if twin.ledger.pending:
            twin.commit()
            commits += 1
        if stop_after_tick is not None and tick >= stop_after_tick:
            break
    report = twin.run_report(scenario_name, seed)
    return DriveOutcome(report=report, commits=commits, submitted=submitted, failures=failures)


def run_scenario(config: ScenarioConfig, platform_config: Optional[PlatformConfig] = None) -> tuple[FinancialTwin, DriveOutcome]:
    twin = build_twin(config, platform_config)
    script = generate(config, platform_config)
    outcome = drive(script, twin, scenario_name=config.name, seed=config.seed)
    return twin, outcome
