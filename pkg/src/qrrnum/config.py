"""Experiment configuration: YAML parsing, validation, and hashing.

A config file has a `channels` section (per-channel (p01, p10) pairs or
a symmetric shorthand), an optional `utility` section, and optional
`run`, `sweep`, `region`, and `verify` sections with per-command knobs.
Parsed configs are canonicalized so an emitted echo re-parses to an
identical spec, and hashed so every output file can name the exact
configuration that produced it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .channel import ChannelModel
from .capacity import DEFAULT_ENUM_CAP
from .controller import MODES
from .utility import UtilityFunction

FORMATS = ("csv", "json")
COMMANDS = ("region", "verify", "simulate", "sweep")

DEFAULT_HORIZON = 1_000_000
DEFAULT_RAYS = 181


class ConfigError(ValueError):
    """A config file failed validation; the message names the field."""


@dataclass(frozen=True)
class ExperimentSpec:
    """One resolved experiment: command, parameters, output options."""

    command: str
    models: Tuple[ChannelModel, ...]
    utility_kind: str = "log1p"
    utility_weights: Tuple[float, ...] = ()
    horizon: int = DEFAULT_HORIZON
    warmup: Optional[int] = None
    seed: int = 0
    v_g: float = 50.0
    mode: str = "exhaustive"
    enum_cap: int = DEFAULT_ENUM_CAP
    sweep_v_g: Tuple[float, ...] = (10.0, 50.0, 250.0)
    sweep_seeds: Tuple[int, ...] = (1, 2, 3)
    region_rays: int = DEFAULT_RAYS
    pairs_only: bool = False
    verify_horizon: int = DEFAULT_HORIZON
    verify_extra_subsets: int = 5
    verify_tolerance: float = 0.005
    out_dir: str = "out"
    fmt: str = "csv"
    plots: bool = True

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not self.models:
            raise ConfigError("at least one channel is required")
        if self.utility_kind not in ("log1p", "linear"):
            raise ConfigError(
                f"utility kind must be log1p or linear, got {self.utility_kind!r}"
            )
        n = len(self.models)
        if self.utility_weights and len(self.utility_weights) != n:
            raise ConfigError(
                f"utility weights ({len(self.utility_weights)}) do not match "
                f"the channel count ({n})"
            )
        if self.horizon < 0:
            raise ConfigError("horizon must be nonnegative")
        if self.warmup is not None and not (0 <= self.warmup <= self.horizon):
            raise ConfigError("need horizon >= warmup >= 0")
        if self.v_g <= 0:
            raise ConfigError("v_g must be positive")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.sweep_v_g:
            raise ConfigError("sweep v_g list must be nonempty")
        if any(v <= 0 for v in self.sweep_v_g):
            raise ConfigError("sweep v_g values must be positive")
        if not self.sweep_seeds:
            raise ConfigError("sweep seeds list must be nonempty")
        if self.region_rays < 2:
            raise ConfigError("region rays must be at least 2")
        if self.verify_horizon <= 0:
            raise ConfigError("verify horizon must be positive")
        if self.verify_extra_subsets < 0:
            raise ConfigError("verify extra subsets must be nonnegative")
        if self.verify_tolerance <= 0:
            raise ConfigError("verify tolerance must be positive")
        if self.fmt not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")

    @property
    def n(self) -> int:
        return len(self.models)

    def utility(self) -> UtilityFunction:
        weights = self.utility_weights or tuple(1.0 for _ in self.models)
        if self.utility_kind == "linear":
            return UtilityFunction.linear(weights)
        return UtilityFunction.log1p(weights)

    def to_dict(self) -> Dict[str, Any]:
        """Canonical nested representation; the echo/round-trip format."""
        d: Dict[str, Any] = {
            "command": self.command,
            "channels": [
                {"p01": m.p01, "p10": m.p10} for m in self.models
            ],
            "utility": {
                "kind": self.utility_kind,
                "weights": list(
                    self.utility_weights
                    or tuple(1.0 for _ in self.models)
                ),
            },
            "run": {
                "horizon": self.horizon,
                "warmup": self.warmup,
                "seed": self.seed,
                "v_g": self.v_g,
                "mode": self.mode,
                "enum_cap": self.enum_cap,
            },
            "sweep": {
                "v_g": list(self.sweep_v_g),
                "seeds": list(self.sweep_seeds),
            },
            "region": {
                "rays": self.region_rays,
                "pairs_only": self.pairs_only,
            },
            "verify": {
                "horizon": self.verify_horizon,
                "extra_subsets": self.verify_extra_subsets,
                "tolerance": self.verify_tolerance,
            },
            "output": {
                "out_dir": self.out_dir,
                "format": self.fmt,
                "plots": self.plots,
            },
        }
        return d

    def config_hash(self) -> str:
        """sha256 of the canonical JSON form (run-independent identity)."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def echo(self, path: Path) -> None:
        """Write the resolved config back out; re-parsing it is identity."""
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=True)


def _require(mapping: Dict[str, Any], key: str, where: str) -> Any:
    if key not in mapping:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return mapping[key]


def _parse_channels(raw: Any) -> Tuple[ChannelModel, ...]:
    if isinstance(raw, dict):  # symmetric shorthand
        if "symmetric" in raw:  # allow one level of nesting
            raw = raw["symmetric"]
        if not isinstance(raw, dict):
            raise ConfigError("channels.symmetric must be a mapping")
        p01 = float(_require(raw, "p01", "channels"))
        p10 = float(_require(raw, "p10", "channels"))
        n = int(_require(raw, "n", "channels"))
        if n < 1:
            raise ConfigError("channels.n must be at least 1")
        try:
            model = ChannelModel(p01, p10)
        except ValueError as e:
            raise ConfigError(f"channels: {e}") from e
        return tuple(model for _ in range(n))
    if not isinstance(raw, list) or not raw:
        raise ConfigError(
            "channels must be a list of {p01, p10} entries or a "
            "{p01, p10, n} symmetric shorthand"
        )
    models = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ConfigError(f"channels[{i}] must be a mapping")
        try:
            models.append(
                ChannelModel(
                    float(_require(entry, "p01", f"channels[{i}]")),
                    float(_require(entry, "p10", f"channels[{i}]")),
                )
            )
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(f"channels[{i}]: {e}") from e
    return tuple(models)


def spec_from_dict(
    data: Dict[str, Any],
    command: str,
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentSpec:
    """Build a validated spec from a parsed config mapping."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    known = {
        "command", "channels", "utility", "run", "sweep", "region",
        "verify", "output",
    }
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown top-level key {key!r}")
    models = _parse_channels(_require(data, "channels", "config"))

    util = data.get("utility") or {}
    run = data.get("run") or {}
    sweep = data.get("sweep") or {}
    region = data.get("region") or {}
    verify = data.get("verify") or {}
    output = data.get("output") or {}
    for name, section in (
        ("utility", util), ("run", run), ("sweep", sweep),
        ("region", region), ("verify", verify), ("output", output),
    ):
        if not isinstance(section, dict):
            raise ConfigError(f"section {name!r} must be a mapping")

    overrides = overrides or {}
    warmup = run.get("warmup")
    kwargs: Dict[str, Any] = dict(
        command=command,
        models=models,
        utility_kind=str(util.get("kind", "log1p")),
        # resolve defaults here so the emitted echo re-parses identically
        utility_weights=tuple(
            float(w)
            for w in util.get("weights", [1.0] * len(models))
        ),
        horizon=int(overrides.get("horizon", run.get("horizon", DEFAULT_HORIZON))),
        warmup=None if warmup is None else int(warmup),
        seed=int(overrides.get("seed", run.get("seed", 0))),
        v_g=float(overrides.get("v_g", run.get("v_g", 50.0))),
        mode=str(overrides.get("mode", run.get("mode", "exhaustive"))),
        enum_cap=int(run.get("enum_cap", DEFAULT_ENUM_CAP)),
        sweep_v_g=tuple(
            float(v) for v in overrides.get("vg_list", sweep.get("v_g", (10.0, 50.0, 250.0)))
        ),
        sweep_seeds=tuple(int(s) for s in sweep.get("seeds", (1, 2, 3))),
        region_rays=int(region.get("rays", DEFAULT_RAYS)),
        pairs_only=bool(region.get("pairs_only", False)),
        verify_horizon=int(
            overrides.get("horizon", verify.get("horizon", DEFAULT_HORIZON))
        ),
        verify_extra_subsets=int(verify.get("extra_subsets", 5)),
        verify_tolerance=float(verify.get("tolerance", 0.005)),
        out_dir=str(overrides.get("out_dir", output.get("out_dir", "out"))),
        fmt=str(overrides.get("fmt", output.get("format", "csv"))),
        plots=bool(overrides.get("plots", output.get("plots", True))),
    )
    try:
        return ExperimentSpec(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e


def load_spec(
    path: Path,
    command: str,
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentSpec:
    """Parse and validate a YAML config file for one command."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"config {path} is not valid YAML: {e}") from e
    if data is None:
        raise ConfigError(f"config {path} is empty")
    return spec_from_dict(data, command, overrides)
