"""Run configuration and its YAML representation."""
from dataclasses import dataclass, field, replace

import yaml

from ..agent import Hyperparams
from ..errors import ConfigError
from ..reward import RewardWeights
from ..sim import SimConfig

METHODS = ("direct", "dual", "expert", "baseline-only")

# weights used for each method when the config does not set them
DEFAULT_WEIGHTS = {
    "direct": RewardWeights(1.0, 5.0),
    "dual": RewardWeights(0.85, 1.05),
    "expert": RewardWeights(0.9, 1.15),
    "baseline-only": RewardWeights(1.0, 1.0),
}

DEFAULT_EVAL_SEEDS = tuple(1_000_000 + k for k in range(5))


@dataclass
class RunConfig:
    method: str = "expert"
    n_envs: int = 8
    sim: SimConfig = field(default_factory=SimConfig)
    hp: Hyperparams = field(default_factory=Hyperparams)
    weights: RewardWeights = None
    total_updates: int = 4000
    eval_every: int = None
    seeds: tuple = (0,)
    out_dir: str = "runs"
    eval_seeds: tuple = DEFAULT_EVAL_SEEDS
    eval_ttis: int = 2000
    # training environments redraw UE positions after this many TTIs
    episode_ttis: int = 1000
    # dual learning: updates per training phase before the roles swap
    dual_phase_updates: int = 100
    rel_tol: float = 0.01
    # store each transition under a random UE relabeling
    permute_ues: bool = True

    def __post_init__(self):
        if self.weights is None:
            self.weights = DEFAULT_WEIGHTS.get(self.method, RewardWeights())
        if self.eval_every is None:
            self.eval_every = self.hp.updates_per_eval
        self.seeds = tuple(int(s) for s in self.seeds)
        self.eval_seeds = tuple(int(s) for s in self.eval_seeds)

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.n_envs < 1:
            raise ConfigError("n_envs must be >= 1")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")
        if self.total_updates < 0:
            raise ConfigError("total_updates must be >= 0")
        if not self.seeds:
            raise ConfigError("at least one training seed is required")
        if not self.eval_seeds:
            raise ConfigError("at least one evaluation seed is required")
        if set(self.eval_seeds) & set(self.seeds):
            raise ConfigError("evaluation seeds must be disjoint from training seeds")
        if self.eval_ttis < 1 or self.episode_ttis < 1 or self.dual_phase_updates < 1:
            raise ConfigError("eval_ttis, episode_ttis and dual_phase_updates must be >= 1")
        if self.rel_tol < 0:
            raise ConfigError("rel_tol must be >= 0")
        self.sim.validate()
        self.hp.validate()
        return self

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return {
            "method": self.method,
            "n_envs": self.n_envs,
            "total_updates": self.total_updates,
            "eval_every": self.eval_every,
            "seeds": list(self.seeds),
            "out_dir": self.out_dir,
            "eval_seeds": list(self.eval_seeds),
            "eval_ttis": self.eval_ttis,
            "episode_ttis": self.episode_ttis,
            "dual_phase_updates": self.dual_phase_updates,
            "rel_tol": self.rel_tol,
            "permute_ues": self.permute_ues,
            "sim": self.sim.to_dict(),
            "hp": self.hp.to_dict(),
            "weights": {"alpha": self.weights.alpha, "beta": self.weights.beta},
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        try:
            sim = SimConfig.from_dict(d.pop("sim", None) or {})
            hp = Hyperparams.from_dict(d.pop("hp", None) or {})
            w = d.pop("weights", None)
            weights = RewardWeights(**w) if w else None
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown run config keys: {sorted(unknown)}")
        return cls(sim=sim, hp=hp, weights=weights, **d).validate()


def load_run_config(path, **overrides):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_dict(raw)


def dump_run_config(cfg, path):
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False)
