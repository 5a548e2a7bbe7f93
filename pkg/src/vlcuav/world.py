"""Episodic data-collection environment: kinematics, serving, pheromone, reward.

One episode: a UAV starts at a corner of a square arena at fixed altitude and
must fly within the communication radius of every ground user (GU).  Each
time slot the agent picks a heading and a speed; the environment clamps the
motion to the arena, serves up to `serve_cap` covered-and-unserved GUs (best
channel gain first), updates the pheromone shaping state and returns the
shaped reward.  All state transitions are deterministic; an EpisodeLog can be
replayed bit-for-bit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .channel import VlcParams, comm_radius, gain_at_offsets, gain_threshold, reception_radius
from .errors import InvalidParameterError, PlanValidationError, VlcUavError

TWO_PI = 2.0 * math.pi

EPISODE_CSV_COLUMNS = [
    "step",
    "x",
    "y",
    "v",
    "theta",
    "zeta",
    "reward",
    "served_ids",
    "boundary_hit",
    "action_clamped",
]


@dataclass
class WorldInstance:
    """Static description of one mission instance."""

    arena_side: float
    gu_positions: np.ndarray  # (I, 2) meters
    altitude: float
    min_altitude: float
    max_step_distance: float
    serve_cap: int
    slot_duration: float = 1.0
    start_xy: tuple[float, float] = (0.0, 0.0)
    step_cap: int = 2000
    placement_seed: int = 0

    def __post_init__(self):
        self.gu_positions = np.asarray(self.gu_positions, dtype=np.float64)
        if self.gu_positions.ndim != 2 or self.gu_positions.shape[1] != 2:
            raise InvalidParameterError("gu_positions must have shape (I, 2)")
        if self.gu_positions.shape[0] < 1:
            raise InvalidParameterError("need at least one GU")
        if self.arena_side <= 0.0:
            raise InvalidParameterError("arena_side must be positive")
        if (self.gu_positions < 0.0).any() or (self.gu_positions > self.arena_side).any():
            raise InvalidParameterError("all GU positions must lie inside the arena")
        if self.altitude < self.min_altitude:
            raise InvalidParameterError("altitude below the safety minimum")
        if self.max_step_distance <= 0.0:
            raise InvalidParameterError("max_step_distance must be positive")
        if self.serve_cap < 1:
            raise InvalidParameterError("serve_cap must be >= 1")
        if self.slot_duration <= 0.0:
            raise InvalidParameterError("slot_duration must be positive")
        if self.step_cap < 1:
            raise InvalidParameterError("step_cap must be >= 1")
        sx, sy = self.start_xy
        if not (0.0 <= sx <= self.arena_side and 0.0 <= sy <= self.arena_side):
            raise InvalidParameterError("start position outside the arena")

    @property
    def gu_count(self) -> int:
        return int(self.gu_positions.shape[0])

    @property
    def max_speed(self) -> float:
        # chosen so one slot at full speed covers exactly max_step_distance
        return self.max_step_distance / self.slot_duration


def random_gu_positions(arena_side: float, gu_count: int, seed: int) -> np.ndarray:
    """Uniform GU placement over the arena, reproducible from the seed."""
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, arena_side, size=(gu_count, 2))


@dataclass(frozen=True)
class RewardParams:
    """Pheromone and reward shaping constants.

    serve_bonus      : pheromone gained per GU served in a slot
    decay_loss       : fixed pheromone loss per slot
    approach_rate    : pheromone per meter of approach inside the reception annulus
    boundary_penalty : pheromone lost when an action hits the arena boundary
    """

    serve_bonus: float = 1.0
    decay_loss: float = 0.01
    approach_rate: float = 0.1
    boundary_penalty: float = 0.5
    literal_approach_sign: bool = False
    completion_bonus_cap: float = 1.0

    def __post_init__(self):
        if self.serve_bonus <= 0.0 or self.decay_loss <= 0.0 or self.boundary_penalty <= 0.0:
            raise InvalidParameterError("reward constants must be strictly positive")
        if self.approach_rate < 0.0:
            raise InvalidParameterError("approach_rate must be >= 0")
        if self.completion_bonus_cap <= 0.0:
            raise InvalidParameterError("completion_bonus_cap must be positive")


@dataclass(frozen=True)
class ActionCmd:
    """Heading in radians, speed in meters per slot-second."""

    heading: float
    speed: float


@dataclass
class EnvState:
    uav_xy: np.ndarray  # (2,)
    covered: np.ndarray  # (I,) bool
    served: np.ndarray  # (I,) bool
    pheromone: float
    step_index: int
    cumulative_distance: float
    gu_distances: np.ndarray  # (I,) horizontal distances from the current position


@dataclass(frozen=True)
class StepInfo:
    heading: float
    speed: float
    distance: float
    served_ids: tuple[int, ...]
    boundary_hit: bool
    action_clamped: bool
    completed: bool


def coverage_bits(
    params: VlcParams, altitude: float, d_xy: np.ndarray, threshold: float | None = None
) -> np.ndarray:
    """Per-GU coverage: channel gain at the given offsets meets the threshold."""
    if threshold is None:
        threshold = gain_threshold(params)
    return gain_at_offsets(params, altitude, d_xy) >= threshold


def select_served(
    gains: np.ndarray, covered: np.ndarray, served: np.ndarray, serve_cap: int
) -> np.ndarray:
    """Indices of GUs newly served this slot: covered, unserved, best gain first.

    At most serve_cap indices; gain ties break toward the lower GU index.
    """
    candidates = np.flatnonzero(covered & ~served)
    if candidates.size > serve_cap:
        order = np.lexsort((candidates, -gains[candidates]))
        candidates = np.sort(candidates[order[:serve_cap]])
    return candidates


def pheromone_step(
    prev: float,
    params: RewardParams,
    served_count: int,
    annulus: np.ndarray,
    d_prev: np.ndarray,
    d_now: np.ndarray,
    boundary_hit: bool,
) -> float:
    """One pheromone update: serve bonus + annulus approach terms - losses."""
    zeta = prev + served_count * params.serve_bonus
    if params.approach_rate != 0.0 and annulus.any():
        if params.literal_approach_sign:
            diffs = d_now[annulus] - d_prev[annulus]
        else:
            diffs = d_prev[annulus] - d_now[annulus]
        zeta += params.approach_rate * float(np.sum(diffs))
    zeta -= params.decay_loss
    if boundary_hit:
        zeta -= params.boundary_penalty
    return zeta


def shaped_reward(
    zeta: float,
    gu_count: int,
    params: RewardParams,
    total_distance: float,
    completed: bool,
) -> float:
    """Logistic-shaped pheromone reward plus the terminal distance bonus.

    The logistic form 2/(1+exp(-z)) - 1 equals tanh(z/2) exactly; the tanh
    form avoids exp overflow for very negative pheromone.
    """
    z = zeta / (gu_count * params.serve_bonus)
    reward = math.tanh(0.5 * z)
    if completed:
        if total_distance > 0.0:
            reward += min(params.completion_bonus_cap, 1.0 / total_distance)
        else:
            reward += params.completion_bonus_cap
    return reward


def _sanitize_action(action: ActionCmd, max_speed: float) -> tuple[float, float, bool]:
    """Wrap the heading into (0, 2*pi], clamp the speed; flag any adjustment."""
    theta, speed = float(action.heading), float(action.speed)
    clamped = False
    if not 0.0 < theta <= TWO_PI:
        theta = math.fmod(theta, TWO_PI)
        if theta <= 0.0:
            theta += TWO_PI
        clamped = True
    if not 0.0 <= speed <= max_speed:
        speed = min(max(speed, 0.0), max_speed)
        clamped = True
    return theta, speed, clamped


class DataCollectionEnv:
    """Deterministic episodic environment around one WorldInstance."""

    def __init__(self, world: WorldInstance, vlc: VlcParams, reward: RewardParams):
        self.world = world
        self.vlc = vlc
        self.reward_params = reward
        self.h_threshold = gain_threshold(vlc)
        self.comm_radius = comm_radius(vlc, world.altitude)
        self.reception_radius = reception_radius(vlc, world.altitude)
        self.obs_dim = 2 * world.gu_count + 3

    def reset(self) -> EnvState:
        gu_count = self.world.gu_count
        start = np.array(self.world.start_xy, dtype=np.float64)
        d0 = np.hypot(
            self.world.gu_positions[:, 0] - start[0],
            self.world.gu_positions[:, 1] - start[1],
        )
        return EnvState(
            uav_xy=start,
            covered=np.zeros(gu_count, dtype=bool),
            served=np.zeros(gu_count, dtype=bool),
            pheromone=0.0,
            step_index=0,
            cumulative_distance=0.0,
            gu_distances=d0,
        )

    def observe(self, state: EnvState) -> np.ndarray:
        """Flat observation [coverage bits, served bits, x/D, y/D, squashed pheromone]."""
        d = self.world.arena_side
        squash = math.tanh(
            state.pheromone / (self.world.gu_count * self.reward_params.serve_bonus)
        )
        return np.concatenate(
            [
                state.covered.astype(np.float64),
                state.served.astype(np.float64),
                [state.uav_xy[0] / d, state.uav_xy[1] / d, squash],
            ]
        )

    def step(self, state: EnvState, action: ActionCmd) -> tuple[EnvState, float, bool, StepInfo]:
        if state.step_index >= self.world.step_cap or bool(state.served.all()):
            raise VlcUavError("step() called on a terminal state")
        world = self.world
        theta, speed, clamped = _sanitize_action(action, world.max_speed)
        dx = speed * world.slot_duration * math.cos(theta)
        dy = speed * world.slot_duration * math.sin(theta)
        candidate = np.array([state.uav_xy[0] + dx, state.uav_xy[1] + dy])
        new_xy = np.clip(candidate, 0.0, world.arena_side)
        boundary_hit = bool((candidate != new_xy).any())
        moved = float(np.hypot(new_xy[0] - state.uav_xy[0], new_xy[1] - state.uav_xy[1]))

        d_now = np.hypot(
            world.gu_positions[:, 0] - new_xy[0], world.gu_positions[:, 1] - new_xy[1]
        )
        gains = gain_at_offsets(self.vlc, world.altitude, d_now)
        covered = gains >= self.h_threshold
        newly = select_served(gains, covered, state.served, world.serve_cap)
        served = state.served.copy()
        served[newly] = True
        annulus = (d_now > self.comm_radius) & (d_now <= self.reception_radius) & ~served

        zeta = pheromone_step(
            state.pheromone,
            self.reward_params,
            int(newly.size),
            annulus,
            state.gu_distances,
            d_now,
            boundary_hit,
        )
        total = state.cumulative_distance + moved
        completed = bool(served.all())
        reward = shaped_reward(zeta, world.gu_count, self.reward_params, total, completed)
        step_index = state.step_index + 1
        done = completed or step_index >= world.step_cap

        next_state = EnvState(
            uav_xy=new_xy,
            covered=covered,
            served=served,
            pheromone=zeta,
            step_index=step_index,
            cumulative_distance=total,
            gu_distances=d_now,
        )
        info = StepInfo(
            heading=theta,
            speed=speed,
            distance=moved,
            served_ids=tuple(int(i) for i in newly),
            boundary_hit=boundary_hit,
            action_clamped=clamped,
            completed=completed,
        )
        return next_state, reward, done, info


class EpisodeLog:
    """Per-step record of one episode; serializes to the harness CSV schema."""

    def __init__(self):
        self.steps: list[int] = []
        self.x: list[float] = []
        self.y: list[float] = []
        self.v: list[float] = []
        self.theta: list[float] = []
        self.zeta: list[float] = []
        self.reward: list[float] = []
        self.served_ids: list[tuple[int, ...]] = []
        self.boundary_hit: list[bool] = []
        self.action_clamped: list[bool] = []
        self.success: bool = False

    def append(self, state: EnvState, reward: float, info: StepInfo):
        self.steps.append(state.step_index)
        self.x.append(float(state.uav_xy[0]))
        self.y.append(float(state.uav_xy[1]))
        self.v.append(info.speed)
        self.theta.append(info.heading)
        self.zeta.append(state.pheromone)
        self.reward.append(reward)
        self.served_ids.append(info.served_ids)
        self.boundary_hit.append(info.boundary_hit)
        self.action_clamped.append(info.action_clamped)
        if info.completed:
            self.success = True

    def __len__(self) -> int:
        return len(self.steps)

    def distance_from(self, start_xy) -> float:
        """Total flown distance, re-derived from the logged positions."""
        total = 0.0
        px, py = float(start_xy[0]), float(start_xy[1])
        for i in range(len(self.steps)):
            total += math.hypot(self.x[i] - px, self.y[i] - py)
            px, py = self.x[i], self.y[i]
        return total

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(EPISODE_CSV_COLUMNS)
            for i in range(len(self.steps)):
                writer.writerow(
                    [
                        self.steps[i],
                        repr(self.x[i]),
                        repr(self.y[i]),
                        repr(self.v[i]),
                        repr(self.theta[i]),
                        repr(self.zeta[i]),
                        repr(self.reward[i]),
                        ";".join(str(g) for g in self.served_ids[i]),
                        int(self.boundary_hit[i]),
                        int(self.action_clamped[i]),
                    ]
                )

    @classmethod
    def from_csv(cls, path) -> "EpisodeLog":
        log = cls()
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in EPISODE_CSV_COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise PlanValidationError(f"episode CSV missing columns: {missing}")
            for row in reader:
                log.steps.append(int(row["step"]))
                log.x.append(float(row["x"]))
                log.y.append(float(row["y"]))
                log.v.append(float(row["v"]))
                log.theta.append(float(row["theta"]))
                log.zeta.append(float(row["zeta"]))
                log.reward.append(float(row["reward"]))
                ids = row["served_ids"]
                log.served_ids.append(
                    tuple(int(t) for t in ids.split(";")) if ids else tuple()
                )
                log.boundary_hit.append(bool(int(row["boundary_hit"])))
                log.action_clamped.append(bool(int(row["action_clamped"])))
        return log


def run_episode(env: DataCollectionEnv, policy, max_steps: int | None = None) -> EpisodeLog:
    """Roll one episode with `policy(obs) -> ActionCmd`; returns the log."""
    state = env.reset()
    log = EpisodeLog()
    cap = max_steps if max_steps is not None else env.world.step_cap
    for _ in range(cap):
        action = policy(env.observe(state))
        state, reward, done, info = env.step(state, action)
        log.append(state, reward, info)
        if done:
            break
    return log


def validate_episode(
    env: DataCollectionEnv, log: EpisodeLog, *, require_success: bool | None = None
) -> list[str]:
    """Replay a log through the environment rules; returns violation messages.

    Re-derives motion, serving, pheromone and reward from (v, theta) and
    checks them bit-for-bit against the logged values, along with the mission
    constraints: serve cap per slot, per-step distance, arena bounds, safe
    altitude, and completion when success is claimed.
    """
    world = env.world
    problems: list[str] = []
    if world.altitude < world.min_altitude:
        problems.append("altitude below safety minimum")

    state = env.reset()
    served = state.served.copy()
    zeta = state.pheromone
    total = 0.0
    for i in range(len(log.steps)):
        if log.steps[i] != i + 1:
            problems.append(f"step index not contiguous at row {i}")
            break
        theta, speed = log.theta[i], log.v[i]
        if not 0.0 < theta <= TWO_PI:
            problems.append(f"step {i + 1}: heading outside (0, 2*pi]")
        if not 0.0 <= speed <= world.max_speed + 1e-9:
            problems.append(f"step {i + 1}: speed outside [0, max]")
        dx = speed * world.slot_duration * math.cos(theta)
        dy = speed * world.slot_duration * math.sin(theta)
        candidate = np.array([state.uav_xy[0] + dx, state.uav_xy[1] + dy])
        new_xy = np.clip(candidate, 0.0, world.arena_side)
        boundary_hit = bool((candidate != new_xy).any())
        if new_xy[0] != log.x[i] or new_xy[1] != log.y[i]:
            problems.append(f"step {i + 1}: position does not replay from (v, theta)")
            break
        if boundary_hit != log.boundary_hit[i]:
            problems.append(f"step {i + 1}: boundary flag mismatch")
        moved = float(np.hypot(new_xy[0] - state.uav_xy[0], new_xy[1] - state.uav_xy[1]))
        if moved > world.max_step_distance + 1e-9:
            problems.append(f"step {i + 1}: displacement exceeds per-slot maximum")
        if not (0.0 <= log.x[i] <= world.arena_side and 0.0 <= log.y[i] <= world.arena_side):
            problems.append(f"step {i + 1}: position outside the arena")

        d_now = np.hypot(
            world.gu_positions[:, 0] - new_xy[0], world.gu_positions[:, 1] - new_xy[1]
        )
        gains = gain_at_offsets(env.vlc, world.altitude, d_now)
        covered = gains >= env.h_threshold
        newly = select_served(gains, covered, served, world.serve_cap)
        if tuple(int(g) for g in newly) != tuple(log.served_ids[i]):
            problems.append(f"step {i + 1}: serving selection does not replay")
        if len(log.served_ids[i]) > world.serve_cap:
            problems.append(f"step {i + 1}: serve cap exceeded")
        served[newly] = True
        annulus = (d_now > env.comm_radius) & (d_now <= env.reception_radius) & ~served
        if annulus.any():
            dist_in = d_now[annulus]
            if (dist_in <= env.comm_radius).any() or (dist_in > env.reception_radius).any():
                problems.append(f"step {i + 1}: annulus indicator out of band")
        zeta = pheromone_step(
            zeta,
            env.reward_params,
            len(log.served_ids[i]),
            annulus,
            state.gu_distances,
            d_now,
            boundary_hit,
        )
        if zeta != log.zeta[i]:
            problems.append(f"step {i + 1}: pheromone does not replay bit-for-bit")
            break
        total += moved
        completed = bool(served.all())
        reward = shaped_reward(zeta, world.gu_count, env.reward_params, total, completed)
        if reward != log.reward[i]:
            problems.append(f"step {i + 1}: reward does not replay bit-for-bit")
            break
        state = EnvState(
            uav_xy=new_xy,
            covered=covered,
            served=served,
            pheromone=zeta,
            step_index=i + 1,
            cumulative_distance=total,
            gu_distances=d_now,
        )
        if completed and i + 1 < len(log.steps):
            problems.append("episode continues after completion")
            break

    must_succeed = log.success if require_success is None else require_success
    if must_succeed and not bool(served.all()):
        problems.append("success claimed but not all GUs served")
    return problems


def assert_valid_episode(env: DataCollectionEnv, log: EpisodeLog, **kw):
    problems = validate_episode(env, log, **kw)
    if problems:
        raise PlanValidationError("; ".join(problems[:5]))
