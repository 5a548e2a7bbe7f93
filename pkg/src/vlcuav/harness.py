"""Seeded experiment orchestration: training, altitude sweep, benchmark
comparison and trajectory dumps, all emitting CSV plus a JSON manifest that
records the full configuration and seeds needed to reproduce the file."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import altitude as alt
from .baselines import (
    aco_order,
    execute_plan,
    greedy_order,
    plan_visiting_path,
    scan_plan,
)
from .channel import comm_radius, reception_radius
from .config import ExperimentConfig
from .errors import ConfigError, InfeasibleAltitudeError
from .replay import ReplayBuffer
from .td3 import Td3Agent, raw_to_action
from .world import DataCollectionEnv, EpisodeLog, run_episode

PLANNERS = ("scan", "greedy-rrt", "aco-rrt")


def _fmt(value) -> str:
    """Round-trippable CSV field for numbers; empty string for None."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header: list[str], rows: list[list]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_manifest(path, cfg: ExperimentConfig, command: str, outputs: list[str], extra: dict | None = None):
    manifest = {
        "tool": "vlcuav",
        "version": __version__,
        "command": command,
        "config": cfg.raw,
        "outputs": sorted(outputs),
    }
    if extra:
        manifest["details"] = extra
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def resolve_out_dir(cfg: ExperimentConfig, override: str | None) -> Path:
    out = override or os.environ.get("VLCUAV_OUTDIR") or cfg.raw["output_dir"]
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _build_env(cfg: ExperimentConfig, altitude=None, gu_count=None, placement_seed=None) -> DataCollectionEnv:
    vlc = cfg.vlc_params()
    h = altitude if altitude is not None else cfg.resolved_altitude(vlc)
    world = cfg.build_world(altitude=h, gu_count=gu_count, placement_seed=placement_seed)
    return DataCollectionEnv(world, vlc, cfg.reward_params())


def _require_feasible(env: DataCollectionEnv):
    if env.comm_radius <= 0.0:
        raise InfeasibleAltitudeError(
            f"communication radius is zero at altitude {env.world.altitude:.3f} m; "
            "no GU can be served (check capacity_threshold / altitude)"
        )


# ---------------- altitude ----------------


def altitude_report(cfg: ExperimentConfig) -> tuple[list[str], list[list]]:
    """CSV row for the closed-form optimum and the grid oracle."""
    vlc = cfg.vlc_params()
    problem = alt.problem_from_channel(vlc, h_min=cfg.raw["world"]["min_altitude"])
    h0, h00 = alt.stationary_points(problem)
    h_star = alt.optimal_altitude(problem)
    oracle = alt.grid_argmax(problem)
    header = ["h0", "h00", "h_star", "f_h_star", "oracle_argmax"]
    row = [h0, h00, h_star, alt.squared_radius(problem, h_star), oracle]
    return header, [row]


# ---------------- training ----------------


@dataclass
class TrainResult:
    episodes_run: int
    first_target_episode: int | None
    final_rolling_success: float
    checkpoint: str
    convergence_csv: str


def train_policy(
    cfg: ExperimentConfig,
    *,
    resume: str | None = None,
    progress=None,
) -> tuple[TrainResult, Td3Agent, DataCollectionEnv, list[list], ReplayBuffer]:
    """Run the training loop; returns the result alongside in-memory objects.

    Per-episode flow: exploration-noisy rollout, one learner update per step
    once the buffer exceeds its warm-up size, episode ends on completion or
    the step cap.  Rolling success over td3.success_window episodes triggers
    early stop at td3.success_target when td3.early_stop is set.
    """
    td3c = cfg.td3_config()
    env = _build_env(cfg)
    _require_feasible(env)
    raw_td3 = cfg.raw["td3"]

    if resume is not None:
        agent, buffer, extra = Td3Agent.load(resume)
        if agent.obs_dim != env.obs_dim:
            raise ConfigError(
                f"checkpoint observation size {agent.obs_dim} does not match world ({env.obs_dim})"
            )
        if buffer is None:
            buffer = ReplayBuffer(td3c.replay_capacity, env.obs_dim)
        start_episode = int(extra.get("episodes_done", 0))
    else:
        agent = Td3Agent(env.obs_dim, td3c, env.world.max_speed, seed=raw_td3["seed"])
        buffer = ReplayBuffer(td3c.replay_capacity, env.obs_dim)
        start_episode = 0

    window = int(raw_td3["success_window"])
    target = float(raw_td3["success_target"])
    early_stop = bool(raw_td3["early_stop"])

    rows: list[list] = []
    recent: list[bool] = []
    first_target: int | None = None
    episodes_run = start_episode

    for episode in range(start_episode, td3c.max_episodes):
        noise_std = agent.noise_std_for_episode(episode)
        state = env.reset()
        obs = env.observe(state)
        ep_return = 0.0
        done = False
        while not done:
            action, raw = agent.act(obs, noise_std)
            state, reward, done, info = env.step(state, action)
            next_obs = env.observe(state)
            buffer.push(obs, raw, reward, next_obs, float(info.completed))
            agent.update(buffer)
            obs = next_obs
            ep_return += reward
        success = bool(state.served.all())
        recent.append(success)
        if len(recent) > window:
            recent.pop(0)
        rolling = sum(recent) / len(recent)
        rows.append(
            [episode, state.step_index, state.cumulative_distance, ep_return, success, rolling]
        )
        episodes_run = episode + 1
        if progress is not None:
            progress(episode, success, rolling)
        if first_target is None and len(recent) >= window and rolling >= target:
            first_target = episode
            if early_stop:
                break

    result = TrainResult(
        episodes_run=episodes_run,
        first_target_episode=first_target,
        final_rolling_success=rows[-1][5] if rows else 0.0,
        checkpoint="",
        convergence_csv="",
    )
    return result, agent, env, rows, buffer


CONVERGENCE_HEADER = ["episode", "steps", "distance", "ep_return", "success", "rolling_success"]


def run_training(cfg: ExperimentConfig, out_dir: Path, *, resume: str | None = None) -> TrainResult:
    result, agent, env, rows, buffer = train_policy(cfg, resume=resume)
    conv = out_dir / "convergence.csv"
    ckpt = out_dir / "checkpoint.npz"
    write_csv(conv, CONVERGENCE_HEADER, rows)
    # include the buffer while it is desk-sized so resume stays bit-exact
    include_buffer = buffer.capacity * buffer.obs.shape[1] <= 40_000_000
    agent.save(
        ckpt,
        buffer=buffer if include_buffer else None,
        extra={"episodes_done": result.episodes_run},
    )
    write_manifest(
        out_dir / "convergence.manifest.json",
        cfg,
        "train",
        [conv.name, ckpt.name],
        extra={
            "episodes_run": result.episodes_run,
            "first_target_episode": result.first_target_episode,
        },
    )
    result.checkpoint = str(ckpt)
    result.convergence_csv = str(conv)
    return result


# ---------------- evaluation / rollouts ----------------


def greedy_policy(agent: Td3Agent):
    def policy(obs):
        return raw_to_action(agent.raw_action(obs, 0.0), agent.max_speed)

    return policy


def rollout_policy(cfg: ExperimentConfig, checkpoint: str, placement_seed: int | None = None) -> tuple[EpisodeLog, DataCollectionEnv]:
    agent, _, _ = Td3Agent.load(checkpoint)
    env = _build_env(cfg, placement_seed=placement_seed)
    if agent.obs_dim != env.obs_dim:
        raise ConfigError(
            f"checkpoint observation size {agent.obs_dim} does not match world ({env.obs_dim})"
        )
    log = run_episode(env, greedy_policy(agent))
    return log, env


def run_eval(cfg: ExperimentConfig, checkpoint: str, episodes: int, out_dir: Path) -> Path:
    rows = []
    base_seed = cfg.raw["world"]["gu_seed"]
    for k in range(episodes):
        seed = base_seed if k == 0 else base_seed + k
        log, env = rollout_policy(cfg, checkpoint, placement_seed=seed)
        rows.append(
            [seed, len(log), log.distance_from(env.world.start_xy), log.success]
        )
    out = out_dir / "eval.csv"
    write_csv(out, ["placement_seed", "steps", "distance", "success"], rows)
    write_manifest(out_dir / "eval.manifest.json", cfg, "eval", [out.name], extra={"checkpoint": checkpoint})
    return out


# ---------------- baselines ----------------


def plan_and_execute(
    cfg: ExperimentConfig,
    planner: str,
    env: DataCollectionEnv,
    seed: int,
) -> EpisodeLog:
    """Run one named planner on an already-built environment."""
    _require_feasible(env)
    world = env.world
    b = cfg.raw["baseline"]
    if planner == "scan":
        plan = scan_plan(world, env.comm_radius)
    else:
        if planner == "greedy-rrt":
            order = greedy_order(world, world.start_xy, env.comm_radius)
        elif planner == "aco-rrt":
            order = aco_order(world, world.start_xy, cfg.aco_config(rng_seed=seed), env.comm_radius)
        else:
            raise ConfigError(f"unknown planner '{planner}'")
        plan = plan_visiting_path(
            world,
            order,
            env.comm_radius,
            np.random.default_rng(seed),
            rrt_step=b["rrt_step"],
            rrt_goal_bias=b["rrt_goal_bias"],
            rrt_max_iters=b["rrt_max_iters"],
        )
    return execute_plan(env, plan)


def run_baseline(cfg: ExperimentConfig, planner: str, seed: int, out_dir: Path) -> Path:
    env = _build_env(cfg, placement_seed=seed)
    log = plan_and_execute(cfg, planner, env, seed)
    out = out_dir / f"baseline_{planner}_seed{seed}.csv"
    log.to_csv(out)
    write_manifest(
        out_dir / f"baseline_{planner}_seed{seed}.manifest.json",
        cfg,
        f"baseline {planner}",
        [out.name],
        extra={"seed": seed, "distance": log.distance_from(env.world.start_xy)},
    )
    return out


# ---------------- altitude sweep ----------------


SWEEP_HEADER = [
    "h",
    "planner",
    "feasible",
    "mean_distance",
    "std_distance",
    "n_seeds",
    "h_star",
    "is_h_star",
]


def run_altitude_sweep(cfg: ExperimentConfig, out_dir: Path) -> Path:
    s = cfg.raw["sweep"]
    vlc = cfg.vlc_params()
    planner = s["planner"]
    n_seeds = int(s["seeds"])
    count = int(math.floor((s["altitude_max"] - s["altitude_min"]) / s["altitude_step"] + 1e-9)) + 1
    grid = [s["altitude_min"] + k * s["altitude_step"] for k in range(count)]
    problem = alt.problem_from_channel(vlc, h_min=cfg.raw["world"]["min_altitude"])
    h_star = alt.optimal_altitude(problem)
    nearest = min(range(len(grid)), key=lambda i: abs(grid[i] - h_star))

    rows = []
    for i, h in enumerate(grid):
        if comm_radius(vlc, h) <= 0.0:
            rows.append([h, planner, False, None, None, 0, h_star, i == nearest])
            continue
        distances = []
        for seed in range(n_seeds):
            env = _build_env(cfg, altitude=h, placement_seed=cfg.raw["world"]["gu_seed"] + seed)
            log = plan_and_execute(cfg, planner, env, seed)
            distances.append(log.distance_from(env.world.start_xy))
        arr = np.asarray(distances)
        rows.append(
            [h, planner, True, float(arr.mean()), float(arr.std()), n_seeds, h_star, i == nearest]
        )
    out = out_dir / "sweep.csv"
    write_csv(out, SWEEP_HEADER, rows)
    write_manifest(out_dir / "sweep.manifest.json", cfg, "sweep", [out.name], extra={"h_star": h_star})
    return out


# ---------------- comparison ----------------


COMPARISON_HEADER = [
    "gu_count",
    "algorithm",
    "mean_distance",
    "std_distance",
    "n",
    "success_rate",
]


def run_comparison(cfg: ExperimentConfig, out_dir: Path, checkpoint: str | None = None) -> Path:
    s = cfg.raw["sweep"]
    n_seeds = int(s["seeds"])
    base_seed = cfg.raw["world"]["gu_seed"]
    agent = None
    if checkpoint is not None:
        agent, _, _ = Td3Agent.load(checkpoint)

    rows = []
    warnings = []
    gaps: dict[str, float] = {}  # relative distance gain of the policy over aco-rrt
    for gu_count in s["gu_counts"]:
        per_planner: dict[str, list[float]] = {p: [] for p in PLANNERS}
        learned: list[float] = []
        learned_successes = 0
        for seed_off in range(n_seeds):
            seed = base_seed + seed_off
            env = _build_env(cfg, gu_count=gu_count, placement_seed=seed)
            for planner in PLANNERS:
                log = plan_and_execute(cfg, planner, env, seed)
                per_planner[planner].append(log.distance_from(env.world.start_xy))
            if agent is not None and agent.obs_dim == env.obs_dim:
                log = run_episode(env, greedy_policy(agent))
                if log.success:
                    learned.append(log.distance_from(env.world.start_xy))
                    learned_successes += 1
        for planner in PLANNERS:
            arr = np.asarray(per_planner[planner])
            rows.append([gu_count, planner, float(arr.mean()), float(arr.std()), n_seeds, 1.0])
        if agent is not None and agent.obs_dim == 2 * gu_count + 3:
            if learned:
                arr = np.asarray(learned)
                rows.append(
                    [
                        gu_count,
                        "td3",
                        float(arr.mean()),
                        float(arr.std()),
                        len(learned),
                        learned_successes / n_seeds,
                    ]
                )
                aco_mean = float(np.mean(per_planner["aco-rrt"]))
                gaps[str(gu_count)] = (aco_mean - float(arr.mean())) / aco_mean
            else:
                warnings.append(f"learned policy solved no instance at gu_count={gu_count}")
        elif agent is not None:
            warnings.append(f"checkpoint incompatible with gu_count={gu_count}; learned row omitted")
    if checkpoint is None:
        warnings.append("no checkpoint given; learned row omitted")

    out = out_dir / "comparison.csv"
    write_csv(out, COMPARISON_HEADER, rows)
    write_manifest(
        out_dir / "comparison.manifest.json",
        cfg,
        "compare",
        [out.name],
        extra={
            "checkpoint": checkpoint,
            "warnings": warnings,
            "policy_gain_over_aco": gaps,
        },
    )
    return out


# ---------------- trajectory dump ----------------


def dump_trajectory(cfg: ExperimentConfig, checkpoint: str, out_dir: Path) -> tuple[Path, Path]:
    log, env = rollout_policy(cfg, checkpoint)
    traj = out_dir / "traj.csv"
    gus = out_dir / "traj_gus.csv"
    log.to_csv(traj)
    vlc = cfg.vlc_params()
    h = env.world.altitude
    rows = [
        [gu, float(x), float(y), comm_radius(vlc, h), reception_radius(vlc, h)]
        for gu, (x, y) in enumerate(env.world.gu_positions)
    ]
    write_csv(gus, ["gu", "x", "y", "comm_radius", "reception_radius"], rows)
    write_manifest(
        out_dir / "traj.manifest.json",
        cfg,
        "dump-traj",
        [traj.name, gus.name],
        extra={"checkpoint": checkpoint, "success": log.success, "altitude": h},
    )
    return traj, gus
