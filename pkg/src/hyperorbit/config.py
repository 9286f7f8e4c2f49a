"""Run configuration: one record capturing everything a command needs to be
reproducible.

Precedence, lowest to highest: built-in defaults (with HYPERORBIT_PRECISION
consulted for the default precision only), then command-line flags, then the
config file.  The file wins so that a checked-in experiment config pins a
run exactly even when someone's shell aliases add stray flags.  The
effective config is echoed into every output file.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from fractions import Fraction

from .errors import MalformedInput
from .precision import default_dps
from .scalar_steering import SearchBudget


@dataclass(frozen=True)
class RunConfig:
    precision_digits: int
    budget_exponent: int = 10**18  # per-stage cap on each exponent
    budget_nodes: int = 5_000_000  # candidate evaluations per steering call
    enum_cap: int = 10_000_000  # brute-force word ceiling
    eps: str = "1e-2"  # steering tolerance (decimal string, exact in config)
    tau_zero: str = "1e-40"  # nonzeroness threshold echoed for provenance
    delta_cmp: str = "1e-30"  # comparison tolerance echoed for provenance
    seed: int = 2026  # PRNG seed for randomized suites
    out_dir: str = "."

    def __post_init__(self):
        for name in ("precision_digits", "budget_exponent", "budget_nodes", "enum_cap"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise MalformedInput(f"{name} must be a positive integer, got {value!r}")
        if self.precision_digits < 15:
            raise MalformedInput(
                f"precision_digits must be >= 15, got {self.precision_digits}"
            )
        for name in ("eps", "tau_zero", "delta_cmp"):
            raw = getattr(self, name)
            try:
                value = Fraction(raw)
            except (ValueError, TypeError, ZeroDivisionError) as exc:
                raise MalformedInput(f"{name} must be a decimal string: {raw!r}") from exc
            if value <= 0:
                raise MalformedInput(f"{name} must be positive, got {raw!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise MalformedInput(f"seed must be a non-negative integer, got {self.seed!r}")

    def search_budget(self, exponent=None) -> SearchBudget:
        cap = self.budget_exponent if exponent is None else int(exponent)
        return SearchBudget(max_m=cap, max_n=cap, max_nodes=self.budget_nodes)

    def to_jsonable(self) -> dict:
        return dict(sorted(asdict(self).items()))


_FIELDS = set(RunConfig.__dataclass_fields__)


def default_config() -> RunConfig:
    return RunConfig(precision_digits=default_dps())


def load_config_file(path) -> dict:
    """Raw overrides from a JSON config file; unknown keys are an error."""
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedInput("config file must hold a JSON object")
    unknown = set(obj) - _FIELDS
    if unknown:
        raise MalformedInput(f"unknown config keys: {sorted(unknown)}")
    return obj


def resolve_config(flag_overrides: dict | None = None, config_path=None) -> RunConfig:
    """Fold the three layers into the effective RunConfig.

    `flag_overrides` maps field names to values from the command line; None
    values mean the flag was not given.  The config file, when present,
    overrides flags.
    """
    cfg = default_config()
    if flag_overrides:
        stray = set(flag_overrides) - _FIELDS
        if stray:
            raise MalformedInput(f"unknown config overrides: {sorted(stray)}")
        live = {k: v for k, v in flag_overrides.items() if v is not None}
        if live:
            cfg = replace(cfg, **live)
    if config_path is not None:
        cfg = replace(cfg, **load_config_file(config_path))
    return cfg
