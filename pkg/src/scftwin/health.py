"""Financial health engine: monitoring, prediction, risk scoring, what-if.

Watches every stakeholder's index reports, raises current alerts from the
classification bands and predicted alerts from a trend forecast, scores
counterparty risk from on-chain payment history, and maps alerts to the
fintech services that address them. Forecasting sits behind a small
predictor interface; the baseline is an ordinary least-squares linear trend
computed in exact rational arithmetic, so predicted crossings on exactly
linear data match the analytic answer with zero tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from . import contracts
from .config import PlatformConfig
from .indices import (
    ALERT_DIRECTION,
    INDEX_NAMES,
    IndexClass,
    IndexReport,
    UnknownStakeholder,
    build_snapshot,
    classify_index,
    full_report,
)

SEVERITY_ORDER = {IndexClass.ALERT: 0, IndexClass.WATCH: 1}

CONTAGION_INDEX = "contagion_watch"

# Table of service recommendations keyed by the index family that triggers them.
LIQUIDITY_SERVICES = ("Account Receivables Securitization", "Receivables Discounting")
ROC_SERVICES = ("Dynamic Discounting",)
ROTATION_SERVICES = ("Factoring",)
WAREHOUSE_SERVICES = ("Inventory Financing",)

SERVICE_INDEX_FAMILY = {
    "Receivables Discounting": ("quick_ratio", "availability_index"),
    "Account Receivables Securitization": ("quick_ratio", "availability_index"),
    "Dynamic Discounting": ("return_of_capital",),
    "Factoring": ("rotation_of_current_assets",),
    "Inventory Financing": ("warehouse_turnover",),
}


class InsufficientHistory(ValueError):
    pass


class InvalidHypothetical(ValueError):
    pass


@dataclass(frozen=True)
class Alert:
    alert_id: str
    stakeholder_id: str
    index_name: str
    kind: str  # current | predicted
    tick_raised: int
    severity: IndexClass
    predicted_crossing_tick: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "stakeholder_id": self.stakeholder_id,
            "index_name": self.index_name,
            "kind": self.kind,
            "tick_raised": self.tick_raised,
            "severity": self.severity.value,
            "predicted_crossing_tick": self.predicted_crossing_tick,
        }


@dataclass(frozen=True)
class RiskScore:
    stakeholder_id: str
    tick: int
    value: Fraction
    default_rate: Fraction
    late_rate: Fraction
    alert_fraction: Fraction

    def to_json(self) -> dict:
        return {
            "stakeholder_id": self.stakeholder_id,
            "tick": self.tick,
            "value": str(self.value),
            "display": f"{float(self.value):.4f}",
            "components": {
                "default_rate": str(self.default_rate),
                "late_rate": str(self.late_rate),
                "alert_fraction": str(self.alert_fraction),
            },
        }


@dataclass(frozen=True)
class Recommendation:
    stakeholder_id: str
    tick: int
    triggering_index: str
    severity: IndexClass
    services: tuple
    rationale: str

    def to_json(self) -> dict:
        return {
            "stakeholder_id": self.stakeholder_id,
            "tick": self.tick,
            "triggering_index": self.triggering_index,
            "severity": self.severity.value,
            "services": list(self.services),
            "rationale": self.rationale,
        }


# ---------------------------------------------------------------------------
# Trend prediction
# ---------------------------------------------------------------------------

class LinearTrend:
    """Least-squares line through (tick, value) points, exact rationals."""

    def __init__(self, series: list[tuple[int, Fraction]]):
        if len(series) < 2:
            raise InsufficientHistory(f"{len(series)} points, need at least 2")
        n = len(series)
        sx = sum(Fraction(x) for x, _ in series)
        sy = sum(y for _, y in series)
        sxx = sum(Fraction(x) * x for x, _ in series)
        sxy = sum(Fraction(x) * y for x, y in series)
        den = n * sxx - sx * sx
        if den == 0:
            raise InsufficientHistory("all points at the same tick")
        self.slope = (n * sxy - sx * sy) / den
        self.intercept = (sy - self.slope * sx) / n

    def predict(self, tick: int) -> Fraction:
        return self.intercept + self.slope * tick


@dataclass(frozen=True)
class Forecast:
    predictions: tuple  # ((tick, Fraction), ...) for the next `horizon` steps
    first_crossing_tick: Optional[int]
    slope: Fraction
    intercept: Fraction


def forecast_index(
    series: list[tuple[int, Fraction]],
    horizon: int,
    crossing_test: Optional[Callable[[Fraction], bool]] = None,
) -> Forecast:
    """Fit the baseline trend and extrapolate `horizon` ticks past the last point.

    `crossing_test` decides whether a predicted value trips the alert band
    for the index in question; the first predicted tick that trips it is
    reported. Raises InsufficientHistory for fewer than two defined points.
    """
    model = LinearTrend(series)
    last_tick = series[-1][0]
    predictions = []
    first_crossing = None
    for k in range(1, horizon + 1):
        t = last_tick + k
        value = model.predict(t)
        predictions.append((t, value))
        if first_crossing is None and crossing_test is not None and crossing_test(value):
            first_crossing = t
    return Forecast(
        predictions=tuple(predictions),
        first_crossing_tick=first_crossing,
        slope=model.slope,
        intercept=model.intercept,
    )


# ---------------------------------------------------------------------------
# The engine
# ---------------------------------------------------------------------------

class HealthEngine:
    """Read-only monitor over a twin's committed state.

    The twin hands over its contract engine, per-stakeholder report history
    and knowledge graph; everything here is a pure function of those, so
    concurrent monitors and replays always agree.
    """

    def __init__(self, twin):
        self.twin = twin

    @property
    def config(self) -> PlatformConfig:
        return self.twin.config

    def _reports(self, stakeholder_id: str, up_to_tick: int) -> list[IndexReport]:
        return [r for r in self.twin.reports.get(stakeholder_id, []) if r.period_tick <= up_to_tick]

    def _series(self, reports: list[IndexReport], name: str) -> list[tuple[int, Fraction]]:
        window = self.config.trend_window
        pts = [(r.period_tick, r.values[name]) for r in reports if r.values.get(name) is not None]
        return pts[-window:]

    # -- alerts ------------------------------------------------------------

    def monitor(self, tick: int) -> list[Alert]:
        """Current alerts from classifications plus predicted threshold
        crossings within the forecast horizon, plus contagion watches derived
        by the knowledge graph. Idempotent per (stakeholder, index, tick)."""
        cfg = self.config
        alerts: list[Alert] = []
        alerting_now: set[str] = set()
        for sid in sorted(self.twin.engine.stakeholders):
            reports = self._reports(sid, tick)
            if not reports:
                continue
            latest = reports[-1]
            for name in INDEX_NAMES:
                cls = latest.classes.get(name, IndexClass.UNDEFINED)
                if cls in (IndexClass.WATCH, IndexClass.ALERT):
                    alerts.append(
                        Alert(
                            alert_id=f"{sid}:{name}:current:{tick}",
                            stakeholder_id=sid,
                            index_name=name,
                            kind="current",
                            tick_raised=tick,
                            severity=cls,
                        )
                    )
                    if cls is IndexClass.ALERT:
                        alerting_now.add(sid)
                if ALERT_DIRECTION[name] is None or cls is IndexClass.ALERT:
                    continue
                series = self._series(reports, name)
                if len(series) < 2:
                    continue
                test = lambda v, _n=name: classify_index(_n, v, cfg.closeness_band, cfg.roc_floor) is IndexClass.ALERT
                forecast = forecast_index(series, cfg.forecast_horizon, test)
                if forecast.first_crossing_tick is not None:
                    alerts.append(
                        Alert(
                            alert_id=f"{sid}:{name}:predicted:{tick}",
                            stakeholder_id=sid,
                            index_name=name,
                            kind="predicted",
                            tick_raised=tick,
                            severity=IndexClass.ALERT,
                            predicted_crossing_tick=forecast.first_crossing_tick,
                        )
                    )
        for subject, _, counterparty in sorted(self.twin.graph.infer_contagion(cfg.contagion_threshold, alerting_now)):
            alerts.append(
                Alert(
                    alert_id=f"{subject}:{CONTAGION_INDEX}:{counterparty}:{tick}",
                    stakeholder_id=subject,
                    index_name=CONTAGION_INDEX,
                    kind="current",
                    tick_raised=tick,
                    severity=IndexClass.WATCH,
                )
            )
        return alerts

    # -- risk ----------------------------------------------------------------

    def score_risk(self, stakeholder_id: str, tick: int) -> RiskScore:
        """Weighted mix of observed default rate, late-payment rate and the
        share of currently alerting indices. A stakeholder with no matured
        receivables and no usable index history gets the neutral prior."""
        engine = self.twin.engine
        if stakeholder_id not in engine.stakeholders:
            raise UnknownStakeholder(stakeholder_id)
        matured = []
        for r in engine.receivables.values():
            if r.debtor != stakeholder_id:
                continue
            if r.status in (contracts.PAID, contracts.DEFAULTED) or tick > r.due_tick:
                matured.append(r)
        if matured:
            n = len(matured)
            defaulted = sum(1 for r in matured if r.status == contracts.DEFAULTED)
            late = sum(1 for r in matured if r.status == contracts.PAID and r.paid_tick is not None and r.paid_tick > r.due_tick)
            default_rate = Fraction(defaulted, n)
            late_rate = Fraction(late, n)
        else:
            default_rate = Fraction(0)
            late_rate = Fraction(0)

        reports = self._reports(stakeholder_id, tick)
        defined_reports = [r for r in reports if any(v is not None for v in r.values.values())]
        if defined_reports:
            latest = defined_reports[-1]
            defined = [n for n in INDEX_NAMES if latest.values.get(n) is not None]
            in_alert = [n for n in defined if latest.classes.get(n) is IndexClass.ALERT]
            alert_fraction = Fraction(len(in_alert), len(defined))
        else:
            alert_fraction = Fraction(0)

        if not matured and not defined_reports:
            value = self.config.neutral_risk
        else:
            w1, w2, w3 = self.config.risk_weights
            value = w1 * default_rate + w2 * late_rate + w3 * alert_fraction
            value = min(max(value, Fraction(0)), Fraction(1))
        return RiskScore(
            stakeholder_id=stakeholder_id,
            tick=tick,
            value=value,
            default_rate=default_rate,
            late_rate=late_rate,
            alert_fraction=alert_fraction,
        )

    def pool_risk(self, pool_receivable_ids: list[str], tick: int) -> Fraction:
        """Face-weighted average debtor risk for a securitization pool."""
        engine = self.twin.engine
        total = 0
        weighted = Fraction(0)
        for rid in pool_receivable_ids:
            r = engine.receivables.get(rid)
            if r is None:
                continue
            weighted += self.score_risk(r.debtor, tick).value * r.face_value
            total += r.face_value
        if total == 0:
            return self.config.neutral_risk
        return weighted / total

    # -- recommendations --------------------------------------------------------

    def recommend_services(self, stakeholder_id: str, alerts: list[Alert]) -> list[Recommendation]:
        """Map alerts (and declining no-alert-value indices) to services.

        Liquidity-ratio alerts recommend receivables financing, a low return
        of capital recommends dynamic discounting, and negative fitted
        slopes on the rotation and warehouse indices recommend factoring and
        inventory financing. Ordered by severity, then index name."""
        tick = self.twin.current_tick
        triggered: dict[str, IndexClass] = {}
        for alert in alerts:
            if alert.stakeholder_id != stakeholder_id:
                continue
            name = alert.index_name
            if name not in INDEX_NAMES:
                continue
            best = triggered.get(name)
            if best is None or SEVERITY_ORDER[alert.severity] < SEVERITY_ORDER[best]:
                triggered[name] = alert.severity

        recs: list[Recommendation] = []
        for name, severity in triggered.items():
            if name in ("quick_ratio", "availability_index"):
                services = LIQUIDITY_SERVICES
                why = "liquidity ratio in its warning band"
            elif name == "return_of_capital":
                services = ROC_SERVICES
                why = "return of capital near zero"
            else:
                continue
            recs.append(
                Recommendation(
                    stakeholder_id=stakeholder_id,
                    tick=tick,
                    triggering_index=name,
                    severity=severity,
                    services=tuple(sorted(services)),
                    rationale=why,
                )
            )

        reports = self._reports(stakeholder_id, tick)
        for name, services, why in (
            ("rotation_of_current_assets", ROTATION_SERVICES, "rotation of current assets trending down"),
            ("warehouse_turnover", WAREHOUSE_SERVICES, "warehouse turnover trending down"),
        ):
            series = self._series(reports, name)
            if len(series) >= 2 and LinearTrend(series).slope < 0:
                recs.append(
                    Recommendation(
                        stakeholder_id=stakeholder_id,
                        tick=tick,
                        triggering_index=name,
                        severity=IndexClass.WATCH,
                        services=tuple(sorted(services)),
                        rationale=why,
                    )
                )
        recs.sort(key=lambda r: (SEVERITY_ORDER[r.severity], r.triggering_index))
        return recs

    # -- what-if -------------------------------------------------------------------

    def simulate_whatif(self, hypothetical: list) -> dict:
        """Apply hypothetical transactions on a private fork and report the
        index deltas. The real ledger and contract state are never touched;
        an invalid hypothetical aborts the whole fork."""
        twin = self.twin
        fork = twin.engine.fork()
        tick = twin.current_tick
        for submitter, payload in hypothetical:
            tx = twin.unsigned_probe(submitter, payload)
            try:
                fork.validate(tx)
                fork.apply(tx)
            except contracts.ContractError as e:
                raise InvalidHypothetical(f"{e.code}: {e}") from e

        out: dict[str, dict] = {}
        cfg = self.config
        for sid in sorted(twin.engine.stakeholders):
            silo = twin.latest_silo(sid)
            before = full_report(
                build_snapshot(sid, tick, twin.engine.balance(sid), contracts.held_receivables_value(twin.engine, sid), silo),
                cfg.closeness_band,
                cfg.roc_floor,
            )
            after = full_report(
                build_snapshot(sid, tick, fork.balance(sid), contracts.held_receivables_value(fork, sid), silo),
                cfg.closeness_band,
                cfg.roc_floor,
            )
            delta = {}
            for name in INDEX_NAMES:
                b, a = before.values.get(name), after.values.get(name)
                if b != a:
                    delta[name] = {"before": None if b is None else str(b), "after": None if a is None else str(a)}
            out[sid] = {"before": before.to_json(), "after": after.to_json(), "delta": delta}
        return out
