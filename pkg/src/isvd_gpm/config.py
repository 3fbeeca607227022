"""INI run configuration, validated before any compute starts.

Example::

    [experiment]
    kind = continual-run
    suite = mixed
    seeds = 0, 1, 2
    out = runs/mixed

    [harness]
    gamma_th = 0.999
    projection = both

Unknown sections or keys raise :class:`ConfigError` naming the offender.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field, replace

from .harness.continual import HarnessConfig
from .harness.tasks import TaskGenConfig

__all__ = ["ConfigError", "IsvdBenchConfig", "RunConfig", "SUITES", "load_config", "parse_config"]


class ConfigError(ValueError):
    pass


#: Named task/harness presets. ``conflict`` has overlapping random task
#: frames; ``mixed`` has orthogonal private frames plus a shared subspace.
SUITES: dict[str, tuple[TaskGenConfig, HarnessConfig]] = {
    "conflict": (
        TaskGenConfig(d_in=32, n_tasks=5, rank=3, frames="random", anomaly_scale=0.1),
        HarnessConfig(hidden=(16,), gamma_th=0.999),
    ),
    "mixed": (
        TaskGenConfig(d_in=32, n_tasks=5, rank=3, shared_rank=2, frames="orthogonal", anomaly_scale=0.1),
        HarnessConfig(hidden=(16,), gamma_th=0.999),
    ),
}


@dataclass(frozen=True)
class IsvdBenchConfig:
    d: int = 128
    lambda_total: int = 5000
    gamma_th: float = 0.98
    n_values: tuple[int, ...] = (1, 2, 5, 10)
    spectrum_decay: float = 1.0
    bins: int = 50

    def __post_init__(self):
        if self.d < 1 or self.lambda_total < 1:
            raise ConfigError("isvd.d and isvd.lambda must be positive")
        if not 0.0 <= self.gamma_th <= 1.0:
            raise ConfigError("isvd.gamma_th must lie in [0, 1]")
        if not self.n_values or any(n < 1 or n > self.lambda_total for n in self.n_values):
            raise ConfigError("isvd.n_values must lie in [1, lambda]")
        if self.bins < 1:
            raise ConfigError("isvd.bins must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    kind: str = "continual-run"
    suite: str = "custom"
    seeds: tuple[int, ...] = (0,)
    out: str = "out"
    projection: str = "both"
    harness: HarnessConfig = field(default_factory=HarnessConfig)
    isvd: IsvdBenchConfig = field(default_factory=IsvdBenchConfig)

    def projection_modes(self) -> list[bool]:
        return {"on": [True], "off": [False], "both": [False, True]}[self.projection]


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(v) for v in s.replace(",", " ").split())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _converter(tp):
    tp = str(tp)
    if "tuple" in tp:
        return _ints
    if "bool" in tp:
        return _bool
    if "int" in tp:
        return int
    if "float" in tp:
        return float
    return str


def _fields(cls, section: dict[str, str], sec_name: str, rename: dict[str, str] | None = None) -> dict:
    rename = rename or {}
    names = {f.name: f for f in dataclasses.fields(cls) if f.name != "tasks"}
    out = {}
    for key, raw in section.items():
        name = rename.get(key, key)
        if name not in names:
            raise ConfigError(f"unknown key '{key}' in section [{sec_name}]")
        try:
            out[name] = _converter(names[name].type)(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for '{key}' in [{sec_name}]: {exc}") from None
    return out


_SECTIONS = {"experiment", "tasks", "harness", "isvd"}
_EXPERIMENT_KEYS = {"kind", "suite", "seeds", "out"}


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
    exp = dict(cp["experiment"]) if cp.has_section("experiment") else {}
    for key in exp:
        if key not in _EXPERIMENT_KEYS:
            raise ConfigError(f"unknown key '{key}' in section [experiment]")

    suite = exp.get("suite", "custom")
    if suite == "custom":
        tasks, harness = TaskGenConfig(), HarnessConfig()
    elif suite in SUITES:
        tasks, harness = SUITES[suite]
    else:
        raise ConfigError(f"unknown suite {suite!r}; choose from custom, {', '.join(SUITES)}")

    try:
        if cp.has_section("tasks"):
            tasks = replace(tasks, **_fields(TaskGenConfig, dict(cp["tasks"]), "tasks"))
        harness_kv = dict(cp["harness"]) if cp.has_section("harness") else {}
        projection = harness_kv.pop("projection", "both")
        if projection not in ("on", "off", "both"):
            raise ConfigError("harness.projection must be on, off or both")
        harness_fields = _fields(HarnessConfig, harness_kv, "harness")
        harness = replace(harness, tasks=tasks, **harness_fields)
        isvd_kv = dict(cp["isvd"]) if cp.has_section("isvd") else {}
        isvd = IsvdBenchConfig(**_fields(IsvdBenchConfig, isvd_kv, "isvd", {"lambda": "lambda_total"}))
        kind = exp.get("kind", "continual-run")
        if kind not in ("continual-run", "isvd-bench"):
            raise ConfigError(f"unknown experiment kind {kind!r}")
        seeds = _ints(exp.get("seeds", "0"))
        if not seeds or any(s < 0 for s in seeds):
            raise ConfigError("experiment.seeds must be non-negative integers")
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(kind, suite, seeds, exp.get("out", "out"), projection, harness, isvd)


def load_config(path: str | os.PathLike) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
