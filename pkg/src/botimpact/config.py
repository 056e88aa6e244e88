"""Pipeline configuration: one flat ``key = value`` file, CLI flags win.

Defaults carry the analysis constants: partisan cutoff 0.5 (anti at or
below), bot threshold 0.8 (strictly above), stubborn percentiles 10/90,
followings cap 2000.  Every numeric field is validated against its
documented range at load time.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    """Bad configuration file or field value."""


@dataclass
class PipelineConfig:
    # input/output paths
    tweets: str = "tweets.jsonl"
    profiles: str = "profiles.jsonl"
    ratings: str = "ratings.csv"
    anti_keywords: str = ""  # empty -> packaged list
    pro_keywords: str = ""
    qanon_keywords: str = ""
    out_dir: str = "out"
    # analysis constants
    partisan_cutoff: float = 0.5
    bot_threshold: float = 0.8
    stubborn_low_pct: float = 0.10
    stubborn_high_pct: float = 0.90
    followings_cap: int = 2000
    # solver
    solver_tol: float = 1e-10
    solver_max_iter: int = 5000
    dense_fallback: int = 500
    # bot detection
    bp_prior_bot: float = 0.5
    bp_psi_hh: float = 2.0
    bp_psi_hb: float = 2.0
    bp_psi_bh: float = 1.0
    bp_psi_bb: float = 0.5
    bp_weight_cap: float = 5.0
    bp_damping: float = 0.5
    bp_max_iterations: int = 200
    bp_tolerance: float = 1e-8
    histogram_bins: int = 20
    # ghic
    ghic_groups: str = "all_bots,anti_bots,pro_bots,qanon_bots"
    # execution
    workers: int = 1

    def validate(self) -> None:
        checks = [
            ("partisan_cutoff", 0.0, 1.0),
            ("bot_threshold", 0.5, 1.0),
            ("stubborn_low_pct", 0.0, 1.0),
            ("stubborn_high_pct", 0.0, 1.0),
            ("bp_prior_bot", 0.0, 1.0),
            ("bp_damping", 0.0, 1.0),
        ]
        for name, lo, hi in checks:
            value = getattr(self, name)
            if not lo <= value <= hi:
                raise ConfigError(f"{name} must be in [{lo}, {hi}], got {value}")
        if not self.stubborn_low_pct < self.stubborn_high_pct:
            raise ConfigError("stubborn_low_pct must be below stubborn_high_pct")
        if self.bot_threshold <= 0.5:
            raise ConfigError("bot_threshold must exceed 0.5")
        positive = (
            "followings_cap", "solver_tol", "solver_max_iter", "dense_fallback",
            "bp_psi_hh", "bp_psi_hb", "bp_psi_bh", "bp_psi_bb",
            "bp_weight_cap", "bp_max_iterations", "bp_tolerance", "workers",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.histogram_bins < 2:
            raise ConfigError("histogram_bins must be >= 2")
        if not self.ghic_groups.strip():
            raise ConfigError("ghic_groups must name at least one group")

    @staticmethod
    def load(path: str | Path | None = None, overrides: dict | None = None) -> "PipelineConfig":
        """Defaults, then the config file, then CLI overrides; validated."""
        known = {f.name: f for f in fields(PipelineConfig)}
        kwargs: dict = {}
        if path is not None:
            path = Path(path)
            if not path.exists():
                raise ConfigError(f"config file not found: {path}")
            for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, value = (part.strip() for part in line.split("=", 1))
                if key not in known:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                kwargs[key] = _coerce(known[key].type, value, key)
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if key not in known:
                raise ConfigError(f"unknown config override {key!r}")
            kwargs[key] = value
        cfg = PipelineConfig(**kwargs)
        cfg.validate()
        return cfg

    def snapshot(self) -> dict:
        """Stable mapping of every setting, recorded into run manifests."""
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _coerce(annotation: str, value: str, key: str):
    try:
        if annotation == "int":
            return int(value)
        if annotation == "float":
            return float(value)
        return value
    except ValueError:
        raise ConfigError(f"field {key!r}: cannot parse {value!r} as {annotation}") from None
