"""Scenario configuration, the shipped presets and multi-run orchestration."""

from __future__ import annotations

import copy
import logging
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .behavior import human as hb
from .model import Activity, Role

log = logging.getLogger(__name__)

MARCH_RATIO = (0.139, 0.129, 0.732)   # con, neu, pro
MARCH_THEMES = (158, 239, 550, 190, 34, 67, 1, 52, 26, 35, 24, 25)
THEMES_PER_AGENT = {1: 0.65, 2: 0.25, 3: 0.06, 4: 0.03, 5: 0.01}

# Share of humans per activity level, and roles within each level.
HUMAN_ACTIVITY = {"high": 0.15, "medium": 0.30, "low": 0.55}
# same role mix at every activity level, tuned so humans alone like about
# twice as often as they retweet and eight times as often as they reply
_ROLE_MIX = {"Tweeter": 0.26, "Quoter": 0.04, "Retweeter": 0.175, "Replier": 0.04, "Liker": 0.485}
HUMAN_ROLES = {act: dict(_ROLE_MIX) for act in ("high", "medium", "low")}


class ConfigError(ValueError):
    """Invalid or unresolvable scenario configuration."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_default=True)


def _check_distribution(d: dict, what: str) -> dict:
    if any(v < 0 for v in d.values()):
        raise ValueError(f"{what}: negative weight")
    if sum(d.values()) <= 0:
        raise ValueError(f"{what}: weights sum to zero")
    return d


class GraphSpec(_Strict):
    source: Literal["generate", "file"] = "generate"
    path: Optional[str] = None
    mean_out_degree: float = Field(10.0, gt=0)
    reciprocity: float = Field(0.221, ge=0, le=1)
    attachment_exponent: float = Field(1.0, ge=0)
    bot_placement: Literal["embedded", "fringe"] = "embedded"

    @model_validator(mode="after")
    def _path_needed(self):
        if self.source == "file" and not self.path:
            raise ValueError("graph.path is required when graph.source is 'file'")
        return self


class BotSpec(_Strict):
    role: Union[Role, Literal["mixed"]] = Role.REPLIER
    activity: Union[Activity, Literal["mixed"]] = Activity.HIGH
    reply_tactic_mix: float = Field(1.0, ge=0, le=1)
    poll_size: int = Field(40, gt=0)
    adopt_themes: bool = True
    conserved_themes: list[int] = Field(default_factory=list)
    max_new_theme_fraction: float = Field(0.4, ge=0, le=1)
    memory: int = Field(120, gt=0)
    theme_weights: Optional[list[float]] = None

    @field_validator("theme_weights")
    @classmethod
    def _tw(cls, v):
        if v is not None:
            if len(v) != 12:
                raise ValueError("theme_weights needs 12 entries")
            _check_distribution(dict(enumerate(v)), "theme_weights")
        return v

    @field_validator("conserved_themes")
    @classmethod
    def _ct(cls, v):
        if any(not 1 <= t <= 12 for t in v):
            raise ValueError("conserved themes must lie in 1..12")
        return sorted(set(v))


class HumanSpec(_Strict):
    memory: int = Field(30, gt=0)
    max_new_theme_fraction: float = Field(0.6, ge=0, le=1)
    activity_distribution: dict[Activity, float] = Field(default_factory=lambda: dict(HUMAN_ACTIVITY))
    role_distribution: dict[Activity, dict[Role, float]] = Field(
        default_factory=lambda: copy.deepcopy(HUMAN_ROLES))

    @field_validator("activity_distribution")
    @classmethod
    def _ad(cls, v):
        return _check_distribution(v, "activity_distribution")

    @field_validator("role_distribution")
    @classmethod
    def _rd(cls, v):
        for act in Activity:
            if act not in v:
                raise ValueError(f"role_distribution missing activity level {act.value}")
            _check_distribution(v[act], f"role_distribution.{act.value}")
        return v


class ScheduleSpec(_Strict):
    damping: float = Field(0.9, ge=0, le=1)
    table_path: Optional[str] = None
    weekly_max: dict[Activity, int] = Field(
        default_factory=lambda: {Activity.HIGH: 134, Activity.MEDIUM: 66, Activity.LOW: 6})
    overflow_prob: float = Field(0.01, ge=0, le=1)


class ActionsSpec(_Strict):
    base_profile: dict[str, float] = Field(default_factory=lambda: dict(hb.BASE_PROFILE))
    namesake_share: dict[Activity, float] = Field(default_factory=lambda: dict(hb.NAMESAKE_SHARE))
    super_replier_share: float = Field(hb.SUPER_REPLIER_SHARE, ge=0, le=1)
    follow_rate: float = Field(hb.FOLLOW_RATE, ge=0, le=1)
    unfollow_rate: float = Field(hb.UNFOLLOW_RATE, ge=0, le=1)
    reply_audience: float = Field(hb.REPLY_AUDIENCE, ge=0, le=1)
    # optional full override: "Role/activity" -> {action: probability}
    role_table: Optional[dict[str, dict[str, float]]] = None

    @field_validator("base_profile")
    @classmethod
    def _bp(cls, v):
        expected = {"like", "tweet", "quote", "retweet", "reply"}
        if set(v) != expected:
            raise ValueError(f"base_profile keys must be {sorted(expected)}")
        return _check_distribution(v, "base_profile")


class WeightSpec(_Strict):
    w_g: float = 1.0
    w_c: float = 1.0
    w_s: float = 1.0
    w_t: float = 0.8
    w_like: float = 1.0
    w_rt: float = 0.1
    w_reply: float = 0.1
    contrarian: bool = False


class ConversionSpec(_Strict):
    w_like: float = 1.0
    w_rt: float = 0.5
    w_reply: float = -0.5
    w_s: float = 1.0
    w_t: float = 0.8


class ResistanceSpec(_Strict):
    low: float = Field(0.5, ge=0, le=1)
    mean: float = Field(0.75, ge=0, le=1)
    high: float = Field(1.0, ge=0, le=1)
    sd: float = Field(0.25, ge=0)
    same_delta: float = 0.01
    adjacent_delta: float = -0.005
    opposite_delta: float = -0.01

    @model_validator(mode="after")
    def _order(self):
        if not self.low <= self.high:
            raise ValueError("resistance.low must not exceed resistance.high")
        return self


class ScenarioConfig(_Strict):
    name: str = "custom"
    description: str = ""
    n_agents: int = Field(1000, ge=2)
    bot_fraction: float = Field(0.2, ge=0, le=1)
    # con:neu:pro, or "march" to reuse the population ratio
    bot_stance_ratio: Union[tuple[float, float, float], Literal["march"]] = (1.0, 1.0, 0.0)
    population_stance_ratio: tuple[float, float, float] = MARCH_RATIO
    theme_marginals: list[float] = Field(default_factory=lambda: list(MARCH_THEMES))
    themes_per_agent: dict[int, float] = Field(default_factory=lambda: dict(THEMES_PER_AGENT))
    theme_capacity: int = Field(5, ge=1, le=11)
    graph: GraphSpec = Field(default_factory=GraphSpec)
    bots: BotSpec = Field(default_factory=BotSpec)
    humans: HumanSpec = Field(default_factory=HumanSpec)
    schedule: ScheduleSpec = Field(default_factory=ScheduleSpec)
    actions: ActionsSpec = Field(default_factory=ActionsSpec)
    human_weights: Optional[dict[str, WeightSpec]] = None
    bot_weights: Optional[dict[str, WeightSpec]] = None
    conversion: ConversionSpec = Field(default_factory=ConversionSpec)
    resistance: ResistanceSpec = Field(default_factory=ResistanceSpec)
    steps: int = Field(1344, ge=0)
    runs: int = Field(20, ge=1)
    seed: int = Field(0, ge=0)

    @field_validator("bot_stance_ratio", "population_stance_ratio")
    @classmethod
    def _ratio(cls, v):
        if v == "march":
            return v
        if any(x < 0 for x in v):
            raise ValueError("stance ratios must be non-negative")
        if sum(v) <= 0:
            raise ValueError("stance ratio sums to zero")
        return tuple(float(x) for x in v)

    @field_validator("theme_marginals")
    @classmethod
    def _tm(cls, v):
        if len(v) != 12:
            raise ValueError("theme_marginals needs 12 entries")
        _check_distribution(dict(enumerate(v)), "theme_marginals")
        return v

    @field_validator("themes_per_agent")
    @classmethod
    def _tpa(cls, v):
        if any(k < 1 for k in v):
            raise ValueError("themes_per_agent keys must be >= 1")
        return _check_distribution(v, "themes_per_agent")

    @field_validator("human_weights", "bot_weights")
    @classmethod
    def _weights(cls, v):
        if v is not None:
            unknown = set(v) - {"like", "retweet", "quote", "reply"}
            if unknown:
                raise ValueError(f"unknown actions {sorted(unknown)}")
        return v

    @model_validator(mode="after")
    def _cross(self):
        if max(self.themes_per_agent) > self.theme_capacity:
            raise ValueError("themes_per_agent exceeds theme_capacity")
        return self

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")


# --- presets ------------------------------------------------------------------

def _sim(n: int) -> dict:
    """Overrides on top of the Sim 1 baseline for scenario ``n``."""
    bots: dict = {}
    top: dict = {}
    desc = ""
    if n == 1:
        desc = "baseline: 20% embedded high-activity Replier bots, con:neu:pro 1:1:0, vulnerable tactic"
    elif n == 2:
        desc = "engagement tactic instead of targeting vulnerable users"
        bots["reply_tactic_mix"] = 0.0
    elif n == 3:
        desc = "bots as active as medium-activity humans"
        bots["activity"] = "medium"
    elif n == 4:
        desc = "SuperReplier bots"
        bots["role"] = "SuperReplier"
    elif n == 5:
        desc = "Liker bots"
        bots["role"] = "Liker"
    elif n == 6:
        desc = "Retweeter bots"
        bots["role"] = "Retweeter"
    elif n == 7:
        desc = "bots split between supporters and detractors"
        top["bot_stance_ratio"] = [1, 0, 1]
    elif n == 8:
        desc = "fringe bots with a single followee each"
        top["graph"] = {"bot_placement": "fringe"}
    elif n == 9:
        desc = "fringe Liker bots"
        top["graph"] = {"bot_placement": "fringe"}
        bots["role"] = "Liker"
    elif n == 10:
        desc = "bot roles drawn from the high-activity human role mix"
        bots["role"] = "mixed"
    elif n == 11:
        desc = "bot roles and activity levels drawn from the human distributions"
        bots["role"] = "mixed"
        bots["activity"] = "mixed"
    elif n in (12, 13):
        w = [0.01] * 12
        w[6] = 0.89
        bots["theme_weights"] = w
        desc = "bots start heavily weighted toward theme 7"
        if n == 13:
            bots["adopt_themes"] = False
            desc += " and never adopt new themes"
    elif n == 14:
        desc = "bots conserve theme 7"
        bots["conserved_themes"] = [7]
    elif n == 15:
        desc = "bots share the human stance, role and activity distributions"
        top["bot_stance_ratio"] = "march"
        bots["role"] = "mixed"
        bots["activity"] = "mixed"
    elif n == 16:
        desc = "humans only"
        top["bot_fraction"] = 0.0
    elif 17 <= n <= 21:
        ratios = {17: [1, 1, 0], 18: [1, 0, 0], 19: [2, 2, 1], 20: [4, 0, 1], 21: [1, 1, 1]}
        top["bot_fraction"] = 0.1
        top["bot_stance_ratio"] = ratios[n]
        desc = "10% bots, con:neu:pro " + ":".join(map(str, ratios[n]))
    else:
        raise ConfigError(f"unknown preset sim{n}")
    out = {"name": f"sim{n}", "description": desc, **top}
    if bots:
        out["bots"] = bots
    return out


PRESETS = tuple(f"sim{i}" for i in range(1, 22))


def preset(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return ScenarioConfig.model_validate(_sim(int(name[3:])))


def _format_errors(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def config_from_dict(data: dict) -> ScenarioConfig:
    """Validate a mapping; a ``base`` key names a preset to start from."""
    data = dict(data)
    base = data.pop("base", None)
    if base is not None:
        merged = _deep_merge(preset(base).to_dict(), data)
    else:
        merged = data
    try:
        return ScenarioConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError(_format_errors(e)) from None


def _deep_merge(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def parse_config(source: str) -> ScenarioConfig:
    """Resolve a preset name or a YAML/JSON file path to a full config."""
    if source in PRESETS:
        return preset(source)
    path = Path(source)
    if not path.exists():
        # a bare word is a preset name; anything path-like is a missing file
        if path.suffix == "" and len(path.parts) == 1:
            raise ConfigError(f"unknown preset {source!r}; choose from {', '.join(PRESETS)}")
        raise FileNotFoundError(f"scenario file {source} not found")
    text = path.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    data.setdefault("name", path.stem)
    return config_from_dict(data)


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


# --- orchestration ----------------------------------------------------------

def _run_one(args):
    from .engine import run

    cfg_dict, seed = args
    return run(ScenarioConfig.model_validate(cfg_dict), seed)


def run_scenario(cfg: ScenarioConfig, out_dir=None, *, runs: int | None = None,
                 seed: int | None = None, jobs: int = 1, baseline=None, write_runs: bool = True):
    """Execute ``runs`` seeds (base seed + i), optionally writing exports.

    Returns ``(summary, runs)``. ``baseline`` may be another summary, or a
    directory holding a ``summary.json``, to attach significance flags.
    """
    from . import metrics

    runs = cfg.runs if runs is None else runs
    seed = cfg.seed if seed is None else seed
    seeds = [seed + i for i in range(runs)]
    payload = [(cfg.to_dict(), s) for s in seeds]
    if jobs > 1 and runs > 1:
        import multiprocessing as mp

        with mp.get_context("spawn").Pool(min(jobs, runs)) as pool:
            results = pool.map(_run_one, payload)
    else:
        results = [_run_one(p) for p in payload]

    base = None
    if baseline is not None:
        base = baseline if isinstance(baseline, metrics.ScenarioSummary) else metrics.load_summary(baseline)
    summary = metrics.summarize(cfg.name, results, baseline=base)
    if out_dir is not None:
        root = Path(out_dir) / cfg.name
        if write_runs:
            for r in results:
                metrics.export_run(r, root / str(r.seed))
        metrics.export_summary(summary, root / "summary.json")
        (root / "config.yaml").write_text(dump_config(cfg))
    return summary, results


__all__ = [
    "ScenarioConfig", "ConfigError", "PRESETS", "preset", "parse_config", "config_from_dict",
    "dump_config", "run_scenario", "MARCH_RATIO", "MARCH_THEMES", "THEMES_PER_AGENT",
]
