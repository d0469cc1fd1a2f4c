"""Platform configuration with file loading and environment overrides.

All tunables that shape classification, scoring and contract defaults live
here so the service, CLI and tests share one source of truth. Environment
variables use the ``SCFTWIN_`` prefix and override file values.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path


def _frac(value) -> Fraction:
    # Accept "1/10", "0.1", 0.1 or ints; decimal strings parse exactly.
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(str(value))


@dataclass(frozen=True)
class PlatformConfig:
    # classification bands
    closeness_band: Fraction = Fraction(1, 10)   # "close to" width for liquidity ratios
    roc_floor: Fraction = Fraction(1, 20)        # return-of-capital alert ceiling

    # risk scoring
    risk_weights: tuple[Fraction, Fraction, Fraction] = (
        Fraction(1, 2),
        Fraction(3, 10),
        Fraction(1, 5),
    )
    neutral_risk: Fraction = Fraction(1, 2)

    # contract defaults
    default_advance_rate: Fraction = Fraction(85, 100)
    default_fee_rate: Fraction = Fraction(2, 100)
    grace_ticks: int = 5

    # monitoring
    forecast_horizon: int = 5
    trend_window: int = 8
    contagion_threshold: Fraction = Fraction(1, 4)

    # identities of platform-level actors
    spv_id: str = "spv"
    bank_id: str = "bank"
    network_secret: str = "scftwin-testnet"

    # service / persistence
    port: int = 8000
    data_dir: str | None = None
    checkpoint_interval: int = 50
    tokens: dict = field(default_factory=dict)  # token -> node_id
    actors: tuple = ()  # statically provisioned principals: (actor_id, role) pairs

    @classmethod
    def from_file(cls, path: str | Path) -> "PlatformConfig":
        raw = json.loads(Path(path).read_text())
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "PlatformConfig":
        kwargs = {}
        frac_keys = {
            "closeness_band",
            "roc_floor",
            "neutral_risk",
            "default_advance_rate",
            "default_fee_rate",
            "contagion_threshold",
        }
        int_keys = {"grace_ticks", "forecast_horizon", "trend_window", "port", "checkpoint_interval"}
        str_keys = {"spv_id", "bank_id", "network_secret", "data_dir"}
        for key, value in raw.items():
            if key in frac_keys:
                kwargs[key] = _frac(value)
            elif key in int_keys:
                kwargs[key] = int(value)
            elif key in str_keys:
                kwargs[key] = value
            elif key == "risk_weights":
                kwargs[key] = tuple(_frac(v) for v in value)
            elif key == "tokens":
                kwargs[key] = dict(value)
            elif key == "actors":
                kwargs[key] = tuple((a["actor_id"], a["role"]) for a in value)
            else:
                raise ValueError(f"unknown config key: {key}")
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "closeness_band": str(self.closeness_band),
            "roc_floor": str(self.roc_floor),
            "risk_weights": [str(w) for w in self.risk_weights],
            "neutral_risk": str(self.neutral_risk),
            "default_advance_rate": str(self.default_advance_rate),
            "default_fee_rate": str(self.default_fee_rate),
            "grace_ticks": self.grace_ticks,
            "forecast_horizon": self.forecast_horizon,
            "trend_window": self.trend_window,
            "contagion_threshold": str(self.contagion_threshold),
            "spv_id": self.spv_id,
            "bank_id": self.bank_id,
            "network_secret": self.network_secret,
            "port": self.port,
            "data_dir": self.data_dir,
            "checkpoint_interval": self.checkpoint_interval,
            "tokens": dict(self.tokens),
            "actors": [{"actor_id": a, "role": r} for a, r in self.actors],
        }

    def with_env_overrides(self, environ=None) -> "PlatformConfig":
        env = os.environ if environ is None else environ
        out = self
        mapping = {
            "SCFTWIN_PORT": ("port", int),
            "SCFTWIN_DATA_DIR": ("data_dir", str),
            "SCFTWIN_CLOSENESS_BAND": ("closeness_band", _frac),
            "SCFTWIN_ROC_FLOOR": ("roc_floor", _frac),
            "SCFTWIN_CONTAGION_THRESHOLD": ("contagion_threshold", _frac),
            "SCFTWIN_ADVANCE_RATE": ("default_advance_rate", _frac),
            "SCFTWIN_GRACE_TICKS": ("grace_ticks", int),
            "SCFTWIN_FORECAST_HORIZON": ("forecast_horizon", int),
            "SCFTWIN_TREND_WINDOW": ("trend_window", int),
            "SCFTWIN_CHECKPOINT_INTERVAL": ("checkpoint_interval", int),
        }
        for var, (attr, conv) in mapping.items():
            if var in env:
                out = replace(out, **{attr: conv(env[var])})
        if "SCFTWIN_RISK_WEIGHTS" in env:
            parts = env["SCFTWIN_RISK_WEIGHTS"].split(",")
            out = replace(out, risk_weights=tuple(_frac(p) for p in parts))
        return out
