"""Experiment configuration: one JSON document, validated on load.

Unknown keys are rejected, values are type-checked against the defaults, and
error messages carry the dotted key path plus the line in the source file
where the key appears.  CLI overrides use the same dotted paths.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass

import numpy as np

from . import altitude as alt
from . import channel
from .baselines import AcoConfig
from .errors import ConfigError
from .td3 import Td3Config
from .world import RewardParams, WorldInstance, random_gu_positions

DEFAULTS: dict = {
    "world": {
        "arena_side": 100.0,
        "gu_count": 10,
        "gu_seed": 1,
        "gu_positions": None,  # explicit [[x, y], ...] wins over gu_count/gu_seed
        "min_altitude": 10.0,
        "altitude": None,  # null -> closed-form optimal altitude
        "max_step_distance": 2.0,
        "serve_cap": 1,
        "slot_duration": 1.0,
        "start": [0.0, 0.0],
        "step_cap": 2000,
    },
    "vlc": {
        "semi_angle_deg": 60.0,
        "fov_deg": 60.0,
        "detector_area_cm2": 1.0,
        "refractive_index": 1.5,
        "illumination_response": 0.9,
        "tx_power_w": 10.0,
        "noise_power_dbm": -128.82,
        "capacity_threshold": 6.19,
    },
    "reward": {
        "mode": "pheromone",  # "pheromone" | "sparse" (sparse zeroes approach_rate)
        "serve_bonus": 1.0,
        "decay_loss": 0.01,
        "approach_rate": 0.1,
        "boundary_penalty": 0.5,
        "literal_approach_sign": False,
        "completion_bonus_cap": 1.0,
    },
    "td3": {
        "seed": 0,
        "discount": 0.99,
        "soft_update_rate": 0.005,
        "policy_delay": 2,
        "exploration_noise_std": 0.6,
        "noise_decay": 0.999,
        "smoothing_noise_std": 0.2,
        "smoothing_noise_clip": 0.5,
        "actor_lr": 3e-4,
        "critic_lr": 3e-4,
        "batch_size": 256,
        "learn_start": 2000,
        "max_episodes": 8000,
        "hidden_sizes": [256, 256],
        "replay_capacity": 1000000,
        "success_window": 50,
        "success_target": 0.9,
        "early_stop": True,
    },
    "baseline": {
        "aco": {
            "ant_count": 20,
            "pheromone_weight": 1.0,
            "heuristic_weight": 3.0,
            "evaporation": 0.5,
            "iterations": 200,
            "rng_seed": 0,
        },
        "rrt_step": 5.0,
        "rrt_goal_bias": 0.15,
        "rrt_max_iters": 20000,
    },
    "sweep": {
        "altitude_min": 10.0,
        "altitude_max": 20.0,
        "altitude_step": 1.0,
        "gu_counts": [10, 15, 20, 25, 30],
        "seeds": 10,
        "planner": "greedy-rrt",
    },
    "output_dir": "runs",
}

# keys whose default is None, with the type an explicit value must have
_NULLABLE = {
    "world.gu_positions": list,
    "world.altitude": float,
}


def _line_of(text: str | None, key: str) -> str:
    if not text:
        return ""
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return f" (line {lineno})"
    return ""


def _merge(defaults: dict, user: dict, path: str, text: str | None) -> dict:
    merged = {}
    for key, default in defaults.items():
        merged[key] = copy.deepcopy(default)
    for key, value in user.items():
        here = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key '{here}'{_line_of(text, key)}")
        default = defaults[key]
        if isinstance(default, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"'{here}' must be an object{_line_of(text, key)}")
            merged[key] = _merge(default, value, here, text)
            continue
        merged[key] = _check_type(here, value, default, text)
    return merged


def _check_type(path: str, value, default, text: str | None):
    key = path.rsplit(".", 1)[-1]
    if default is None:
        if value is None:
            return None
        want = _NULLABLE[path]
        if want is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, want):
            raise ConfigError(
                f"'{path}' must be {want.__name__} or null, got {type(value).__name__}"
                f"{_line_of(text, key)}"
            )
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"'{path}' must be a boolean{_line_of(text, key)}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"'{path}' must be an integer{_line_of(text, key)}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"'{path}' must be a number{_line_of(text, key)}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"'{path}' must be a string{_line_of(text, key)}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"'{path}' must be a list{_line_of(text, key)}")
        return value
    raise ConfigError(f"unsupported config type at '{path}'")


def _apply_overrides(merged: dict, overrides: list[str]):
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' must look like key.path=value")
        dotted, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        keys = dotted.split(".")
        node = merged
        ref = DEFAULTS
        for key in keys[:-1]:
            if not isinstance(ref, dict) or key not in ref:
                raise ConfigError(f"unknown config key '{dotted}'")
            node = node[key]
            ref = ref[key]
        leaf = keys[-1]
        if not isinstance(ref, dict) or leaf not in ref:
            raise ConfigError(f"unknown config key '{dotted}'")
        if isinstance(ref[leaf], dict):
            raise ConfigError(f"cannot override section '{dotted}' directly")
        node[leaf] = _check_type(dotted, value, ref[leaf], None)


@dataclass
class ExperimentConfig:
    raw: dict
    source: str | None = None

    # ---- domain object builders ----

    def vlc_params(self) -> channel.VlcParams:
        v = self.raw["vlc"]
        return channel.from_physical(
            v["semi_angle_deg"],
            v["fov_deg"],
            v["detector_area_cm2"],
            v["refractive_index"],
            v["illumination_response"],
            v["tx_power_w"],
            v["noise_power_dbm"],
            v["capacity_threshold"],
        )

    def reward_params(self) -> RewardParams:
        r = self.raw["reward"]
        if r["mode"] not in ("pheromone", "sparse"):
            raise ConfigError("reward.mode must be 'pheromone' or 'sparse'")
        approach = 0.0 if r["mode"] == "sparse" else r["approach_rate"]
        return RewardParams(
            serve_bonus=r["serve_bonus"],
            decay_loss=r["decay_loss"],
            approach_rate=approach,
            boundary_penalty=r["boundary_penalty"],
            literal_approach_sign=r["literal_approach_sign"],
            completion_bonus_cap=r["completion_bonus_cap"],
        )

    def td3_config(self) -> Td3Config:
        t = self.raw["td3"]
        return Td3Config(
            discount=t["discount"],
            soft_update_rate=t["soft_update_rate"],
            policy_delay=t["policy_delay"],
            exploration_noise_std=t["exploration_noise_std"],
            noise_decay=t["noise_decay"],
            smoothing_noise_std=t["smoothing_noise_std"],
            smoothing_noise_clip=t["smoothing_noise_clip"],
            actor_lr=t["actor_lr"],
            critic_lr=t["critic_lr"],
            batch_size=t["batch_size"],
            learn_start=t["learn_start"],
            max_episodes=t["max_episodes"],
            hidden_sizes=tuple(t["hidden_sizes"]),
            replay_capacity=t["replay_capacity"],
        )

    def aco_config(self, rng_seed: int | None = None) -> AcoConfig:
        a = self.raw["baseline"]["aco"]
        return AcoConfig(
            ant_count=a["ant_count"],
            pheromone_weight=a["pheromone_weight"],
            heuristic_weight=a["heuristic_weight"],
            evaporation=a["evaporation"],
            iterations=a["iterations"],
            rng_seed=a["rng_seed"] if rng_seed is None else rng_seed,
        )

    def resolved_altitude(self, vlc: channel.VlcParams | None = None) -> float:
        """Configured altitude, or the closed-form optimum above min altitude."""
        w = self.raw["world"]
        if w["altitude"] is not None:
            return float(w["altitude"])
        vlc = vlc if vlc is not None else self.vlc_params()
        problem = alt.problem_from_channel(vlc, h_min=w["min_altitude"])
        return alt.optimal_altitude(problem)

    def build_world(
        self,
        altitude: float,
        gu_count: int | None = None,
        placement_seed: int | None = None,
    ) -> WorldInstance:
        w = self.raw["world"]
        seed = w["gu_seed"] if placement_seed is None else placement_seed
        if w["gu_positions"] is not None and gu_count is None and placement_seed is None:
            positions = np.asarray(w["gu_positions"], dtype=np.float64)
        else:
            count = gu_count if gu_count is not None else w["gu_count"]
            positions = random_gu_positions(w["arena_side"], count, seed)
        return WorldInstance(
            arena_side=w["arena_side"],
            gu_positions=positions,
            altitude=altitude,
            min_altitude=w["min_altitude"],
            max_step_distance=w["max_step_distance"],
            serve_cap=w["serve_cap"],
            slot_duration=w["slot_duration"],
            start_xy=(w["start"][0], w["start"][1]),
            step_cap=w["step_cap"],
            placement_seed=seed,
        )

    def validate(self):
        """Instantiate every domain object once so invariants fire early."""
        vlc = self.vlc_params()
        self.reward_params()
        self.td3_config()
        self.aco_config()
        s = self.raw["sweep"]
        if s["altitude_min"] < self.raw["world"]["min_altitude"]:
            raise ConfigError("sweep.altitude_min below world.min_altitude")
        if s["altitude_max"] <= s["altitude_min"] or s["altitude_step"] <= 0.0:
            raise ConfigError("sweep altitude grid is empty or inverted")
        if s["planner"] not in ("scan", "greedy-rrt", "aco-rrt"):
            raise ConfigError("sweep.planner must be scan, greedy-rrt or aco-rrt")
        if s["seeds"] < 1:
            raise ConfigError("sweep.seeds must be >= 1")
        if not math.isfinite(self.resolved_altitude(vlc)):
            raise ConfigError("resolved altitude is not finite")


def from_dict(user: dict, source: str | None = None, overrides: list[str] | None = None, text: str | None = None) -> ExperimentConfig:
    try:
        merged = _merge(DEFAULTS, user, "", text)
        if overrides:
            _apply_overrides(merged, overrides)
        cfg = ExperimentConfig(raw=merged, source=source)
        cfg.validate()
    except ConfigError:
        raise
    except Exception as exc:  # domain invariants surface as config errors here
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path, overrides: list[str] | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return from_dict(user, source=str(path), overrides=overrides, text=text)
