"""Financial index computation and Good/Watch/Alert classification.

Seven balance-sheet ratios are computed per stakeholder per period. Values
are exact rationals so classification at band boundaries is reproducible;
decimal rendering happens only at presentation edges. A zero denominator
makes an index undefined rather than an error.

Formulas (conventional definitions, one per index):
    debt_index                 = total_debts / total_assets
    quick_ratio                = (cash + receivables) / current_liabilities
    availability_index         = current_assets / current_liabilities
    return_of_capital          = capital_returned / invested_capital
    rotation_of_current_assets = production_value / working_capital
    warehouse_turnover         = cost_of_goods_sold / average_inventory
    solvency_index             = total_assets / total_debts

Working capital is current assets minus current liabilities; when it is not
positive the rotation index is undefined.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional

INDEX_NAMES = (
    "debt_index",
    "quick_ratio",
    "availability_index",
    "return_of_capital",
    "rotation_of_current_assets",
    "warehouse_turnover",
    "solvency_index",
)

# which side of the alert threshold is the bad one; None means no alert values
ALERT_DIRECTION = {
    "debt_index": "high",
    "quick_ratio": "low",
    "availability_index": "low",
    "return_of_capital": "low",
    "rotation_of_current_assets": None,
    "warehouse_turnover": None,
    "solvency_index": "low",
}

SILO_FIELDS = (
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


class IndexClass(str, Enum):
    GOOD = "Good"
    WATCH = "Watch"
    ALERT = "Alert"
    UNDEFINED = "Undefined"


class InvariantViolation(ValueError):
    pass


class UnknownIndexName(KeyError):
    pass


class UnknownStakeholder(KeyError):
    pass


@dataclass(frozen=True)
class SiloRecord:
    """Private per-period figures a stakeholder voluntarily shares."""

    inventory_value: int = 0
    other_current_assets: int = 0
    fixed_assets: int = 0
    current_liabilities: int = 0
    long_term_liabilities: int = 0
    production_value: int = 0
    cost_of_goods_sold: int = 0
    average_inventory: int = 0
    invested_capital: int = 0
    capital_returned: int = 0

    @classmethod
    def from_json(cls, text: str) -> "SiloRecord":
        raw = json.loads(text)
        return cls(**{k: int(raw.get(k, 0)) for k in SILO_FIELDS})

    @classmethod
    def from_delimited(cls, line: str, sep: str = "|") -> "SiloRecord":
        """Parse `field=value` pairs separated by `sep`, e.g.
        ``inventory_value=1000|current_liabilities=500``."""
        values = {}
        for part in line.strip().split(sep):
            if not part:
                continue
            key, _, value = part.partition("=")
            key = key.strip()
            if key not in SILO_FIELDS:
                raise InvariantViolation(f"unknown silo field {key}")
            values[key] = int(value)
        return cls(**values)


@dataclass(frozen=True)
class BalanceSheetSnapshot:
    stakeholder_id: str
    period_tick: int
    cash: int
    receivables_value: int
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
    silo_provided: bool = True

    def __post_init__(self):
        for name in (
            "cash",
            "receivables_value",
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
        ):
            if getattr(self, name) < 0:
                raise InvariantViolation(f"{name} must be non-negative")

    @property
    def current_assets(self) -> int:
        return self.cash + self.receivables_value + self.inventory_value + self.other_current_assets

    @property
    def total_assets(self) -> int:
        return self.current_assets + self.fixed_assets

    @property
    def total_debts(self) -> int:
        return self.current_liabilities + self.long_term_liabilities


def build_snapshot(
    stakeholder_id: str,
    period_tick: int,
    cash: int,
    receivables_value: int,
    silo: Optional[SiloRecord],
) -> BalanceSheetSnapshot:
    """Merge ledger-derived figures with a silo record.

    Without a silo the remaining fields are zero and `silo_provided` is
    False, which marks every index undefined: zero-filled liabilities would
    otherwise fabricate a healthy-looking debt ratio.
    """
    silo_fields = silo if silo is not None else SiloRecord()
    return BalanceSheetSnapshot(
        stakeholder_id=stakeholder_id,
        period_tick=period_tick,
        cash=cash,
        receivables_value=receivables_value,
        silo_provided=silo is not None,
        **{k: getattr(silo_fields, k) for k in SILO_FIELDS},
    )


def undefined_indices(snapshot: BalanceSheetSnapshot) -> tuple[str, ...]:
    """Which indices the given snapshot cannot support (completeness flag)."""
    report = compute_indices(snapshot)
    return tuple(name for name in INDEX_NAMES if report.values[name] is None)


@dataclass
class IndexReport:
    stakeholder_id: str
    period_tick: int
    values: dict = field(default_factory=dict)   # name -> Fraction | None
    classes: dict = field(default_factory=dict)  # name -> IndexClass

    def to_json(self) -> dict:
        out = {"stakeholder_id": self.stakeholder_id, "period_tick": self.period_tick, "indices": {}}
        for name in INDEX_NAMES:
            value = self.values.get(name)
            out["indices"][name] = {
                "value": None if value is None else str(value),
                "display": None if value is None else f"{float(value):.4f}",
                "class": self.classes.get(name, IndexClass.UNDEFINED).value,
            }
        return out


def _ratio(numerator: int, denominator: int) -> Optional[Fraction]:
    if denominator == 0:
        return None
    return Fraction(numerator, denominator)


def compute_indices(s: BalanceSheetSnapshot) -> IndexReport:
    """Compute all seven index values (no classification)."""
    values: dict[str, Optional[Fraction]] = {}
    if not s.silo_provided:
        values = {name: None for name in INDEX_NAMES}
    else:
        values["debt_index"] = _ratio(s.total_debts, s.total_assets)
        values["quick_ratio"] = _ratio(s.cash + s.receivables_value, s.current_liabilities)
        values["availability_index"] = _ratio(s.current_assets, s.current_liabilities)
        values["return_of_capital"] = _ratio(s.capital_returned, s.invested_capital)
        working_capital = s.current_assets - s.current_liabilities
        values["rotation_of_current_assets"] = (
            Fraction(s.production_value, working_capital) if working_capital > 0 else None
        )
        values["warehouse_turnover"] = _ratio(s.cost_of_goods_sold, s.average_inventory)
        values["solvency_index"] = _ratio(s.total_assets, s.total_debts)
    return IndexReport(stakeholder_id=s.stakeholder_id, period_tick=s.period_tick, values=values)


def classify_index(
    name: str,
    value: Optional[Fraction],
    closeness_band: Fraction = Fraction(1, 10),
    roc_floor: Fraction = Fraction(1, 20),
) -> IndexClass:
    """Classify one index value against its published bands.

    Liquidity ratios (quick, availability) are Good at 2 or within the
    closeness band below it, Alert at 1 or within the band above it, Watch
    in between. The debt ratio alerts from 0.5 up, solvency below 1, and
    return of capital at or below the floor.
    """
    if name not in INDEX_NAMES:
        raise UnknownIndexName(name)
    if value is None:
        return IndexClass.UNDEFINED
    if name == "debt_index":
        return IndexClass.GOOD if value < Fraction(1, 2) else IndexClass.ALERT
    if name in ("quick_ratio", "availability_index"):
        if value >= 2 - closeness_band:
            return IndexClass.GOOD
        if value <= 1 + closeness_band:
            return IndexClass.ALERT
        return IndexClass.WATCH
    if name == "return_of_capital":
        return IndexClass.ALERT if value <= roc_floor else IndexClass.GOOD
    if name in ("rotation_of_current_assets", "warehouse_turnover"):
        return IndexClass.GOOD
    if name == "solvency_index":
        return IndexClass.GOOD if value >= 1 else IndexClass.ALERT
    raise UnknownIndexName(name)  # pragma: no cover


def classify_report(
    report: IndexReport,
    closeness_band: Fraction = Fraction(1, 10),
    roc_floor: Fraction = Fraction(1, 20),
) -> IndexReport:
    for name in INDEX_NAMES:
        report.classes[name] = classify_index(name, report.values.get(name), closeness_band, roc_floor)
    return report


def full_report(
    snapshot: BalanceSheetSnapshot,
    closeness_band: Fraction = Fraction(1, 10),
    roc_floor: Fraction = Fraction(1, 20),
) -> IndexReport:
    return classify_report(compute_indices(snapshot), closeness_band, roc_floor)


def alert_threshold(name: str, closeness_band: Fraction, roc_floor: Fraction) -> Optional[Fraction]:
    """The value at which an index first classifies as Alert, if any."""
    if name == "debt_index":
        return Fraction(1, 2)
    if name in ("quick_ratio", "availability_index"):
        return 1 + closeness_band
    if name == "return_of_capital":
        return roc_floor
    if name == "solvency_index":
        return Fraction(1)
    return None
