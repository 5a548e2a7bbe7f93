"""Benchmark planners: boustrophedon sweep, greedy and ant-colony GU ordering,
and a sampling-based point-to-disk planner, all executed through the same
environment as the learned policy so distance accounting and constraint
checks are identical.

A GU counts as visited once the path touches its communication disk, so
planners aim at disk boundaries rather than GU positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InfeasibleAltitudeError,
    InvalidParameterError,
    PlanningError,
    PlanValidationError,
)
from .world import ActionCmd, DataCollectionEnv, EpisodeLog, WorldInstance

TWO_PI = 2.0 * math.pi
# pull waypoints this far inside the arena so replay clamping never triggers
BOUNDARY_MARGIN = 1e-9
# aim slightly inside the communication disk so the serving test is strict
DISK_SHRINK = 1.0 - 1e-9


@dataclass(frozen=True)
class AcoConfig:
    ant_count: int = 20
    pheromone_weight: float = 1.0
    heuristic_weight: float = 3.0
    evaporation: float = 0.5
    iterations: int = 200
    rng_seed: int = 0

    def __post_init__(self):
        if self.ant_count < 1 or self.iterations < 0:
            raise InvalidParameterError("ant_count must be >= 1 and iterations >= 0")
        if self.pheromone_weight <= 0.0 or self.heuristic_weight <= 0.0:
            raise InvalidParameterError("ACO weights must be positive")
        if not 0.0 < self.evaporation < 1.0:
            raise InvalidParameterError("evaporation must be in (0, 1)")


@dataclass
class PlannedPath:
    waypoints: np.ndarray  # (N, 2), consecutive gaps <= max_step_distance
    total_length: float
    service_events: list[tuple[int, int]]  # (gu index, waypoint index)


def polyline_length(points: np.ndarray) -> float:
    diffs = np.diff(points, axis=0)
    return float(np.sum(np.hypot(diffs[:, 0], diffs[:, 1])))


def densify(points: np.ndarray, max_gap: float) -> np.ndarray:
    """Subdivide segments so that consecutive waypoints are at most max_gap apart."""
    out = [np.asarray(points[0], dtype=np.float64)]
    for a, b in zip(points[:-1], points[1:]):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        gap = float(np.hypot(*(b - a)))
        if gap == 0.0:
            continue
        pieces = max(1, int(math.ceil(gap / max_gap - 1e-12)))
        for k in range(1, pieces):
            out.append(a + (b - a) * (k / pieces))
        out.append(b)
    return np.asarray(out)


def attach_service_events(
    waypoints: np.ndarray, world: WorldInstance, comm_radius: float
) -> list[tuple[int, int]]:
    """First waypoint index within the communication disk, per GU."""
    events = []
    for gu, (gx, gy) in enumerate(world.gu_positions):
        dists = np.hypot(waypoints[:, 0] - gx, waypoints[:, 1] - gy)
        hit = np.flatnonzero(dists <= comm_radius)
        if hit.size == 0:
            raise PlanningError(f"path never reaches the communication disk of GU {gu}")
        events.append((gu, int(hit[0])))
    return events


# ---------------- SCAN ----------------


def slotted_scan_radius(comm_radius: float, max_step_distance: float) -> float:
    """Effective row radius once motion is slotted.

    Positions along a row are up to max_step_distance apart, so a GU sitting
    sideways at the full communication radius can be straddled and missed;
    shrinking the row radius so the worst straddle still lands inside the
    disk restores guaranteed coverage.
    """
    if comm_radius <= 0.0:
        raise InfeasibleAltitudeError("communication radius is zero at this altitude")
    half_gap = max_step_distance / 2.0
    squared = comm_radius * comm_radius - half_gap * half_gap
    if squared <= 0.0:
        raise InfeasibleAltitudeError(
            "communication radius smaller than half a slot step; sweep coverage impossible"
        )
    return math.sqrt(squared) * DISK_SHRINK


def scan_rows(arena_side: float, row_radius: float) -> np.ndarray:
    """Row ordinates of the lawnmower sweep: spacing 2r from 0 up to the far side."""
    if row_radius <= 0.0:
        raise InfeasibleAltitudeError("communication radius is zero at this altitude")
    spacing = 2.0 * row_radius
    count = int(math.ceil(arena_side / spacing - 1e-12)) + 1
    ys = [min(k * spacing, arena_side) for k in range(count)]
    if ys[-1] < arena_side:
        ys.append(arena_side)
    return np.asarray(ys)


def scan_waypoints(arena_side: float, row_radius: float) -> np.ndarray:
    """Serpentine sweep corners over the arena, independent of GU layout."""
    ys = scan_rows(arena_side, row_radius)
    lo = BOUNDARY_MARGIN * arena_side
    hi = arena_side - lo
    points = []
    for k, y in enumerate(ys):
        yy = min(max(y, lo), hi)
        xs = (lo, hi) if k % 2 == 0 else (hi, lo)
        points.append((xs[0], yy))
        points.append((xs[1], yy))
    return np.asarray(points)


def scan_plan(world: WorldInstance, comm_radius: float) -> PlannedPath:
    """Full-coverage sweep; geometry depends only on arena, radius and slot size."""
    row_radius = slotted_scan_radius(comm_radius, world.max_step_distance)
    corners = scan_waypoints(world.arena_side, row_radius)
    dense = densify(corners, world.max_step_distance)
    return PlannedPath(
        waypoints=dense,
        total_length=polyline_length(dense),
        service_events=attach_service_events(dense, world, comm_radius),
    )


def scan_untruncated_length(
    arena_side: float, comm_radius: float, max_step_distance: float
) -> float:
    row_radius = slotted_scan_radius(comm_radius, max_step_distance)
    return polyline_length(scan_waypoints(arena_side, row_radius))


# ---------------- visiting orders ----------------


def disk_touch_point(origin: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    """Closest point of the disk boundary along the straight approach from origin."""
    delta = center - origin
    dist = float(np.hypot(*delta))
    if dist <= radius:
        return origin.copy()
    return origin + delta * ((dist - radius) / dist)


def disk_tour_length(
    start: np.ndarray, order: list[int], positions: np.ndarray, radius: float
) -> float:
    """Length of the open tour visiting each GU's disk boundary in order."""
    pos = np.asarray(start, dtype=np.float64)
    total = 0.0
    for gu in order:
        target = disk_touch_point(pos, positions[gu], radius)
        total += float(np.hypot(*(target - pos)))
        pos = target
    return total


def greedy_order(world: WorldInstance, start, comm_radius: float = 0.0) -> list[int]:
    """Nearest-unvisited-GU order by Euclidean distance; ties to lower index."""
    pos = np.asarray(start, dtype=np.float64)
    remaining = list(range(world.gu_count))
    order = []
    while remaining:
        dists = [float(np.hypot(*(world.gu_positions[g] - pos))) for g in remaining]
        best = remaining[int(np.argmin(dists))]  # argmin takes the first (lowest index)
        order.append(best)
        remaining.remove(best)
        pos = disk_touch_point(pos, world.gu_positions[best], comm_radius)
    return order


def aco_order(
    world: WorldInstance, start, config: AcoConfig, comm_radius: float = 0.0
) -> list[int]:
    """Ant-system open tour over the GUs, deterministic for a given seed.

    Node 0 is the start position; nodes 1..I are GUs.  Heuristic is inverse
    distance; every ant deposits pheromone proportional to 1/length; the best
    tour so far is tracked monotonically.  iterations == 0 degenerates to the
    best of one stochastic construction round.
    """
    gu_count = world.gu_count
    if gu_count < 2:
        return list(range(gu_count))
    rng = np.random.default_rng(config.rng_seed)
    nodes = np.vstack([np.asarray(start, dtype=np.float64)[None, :], world.gu_positions])
    n = gu_count + 1
    dist = np.hypot(
        nodes[:, 0][:, None] - nodes[:, 0][None, :],
        nodes[:, 1][:, None] - nodes[:, 1][None, :],
    )
    heuristic = 1.0 / np.maximum(dist, 1e-6)
    pheromone = np.ones((n, n))

    def build_tours():
        # all ants advance in lockstep; roulette selection via row-wise CDFs
        tours = np.zeros((config.ant_count, gu_count), dtype=np.int64)
        current = np.zeros(config.ant_count, dtype=np.int64)
        visited = np.zeros((config.ant_count, n), dtype=bool)
        visited[:, 0] = True
        tau_a = pheromone**config.pheromone_weight
        eta_b = heuristic**config.heuristic_weight
        for pos_idx in range(gu_count):
            weights = tau_a[current] * eta_b[current]
            weights[visited] = 0.0
            cum = np.cumsum(weights, axis=1)
            draws = rng.random(config.ant_count) * cum[:, -1]
            nxt = (cum <= draws[:, None]).sum(axis=1)
            tours[:, pos_idx] = nxt
            visited[np.arange(config.ant_count), nxt] = True
            current = nxt
        return tours

    start_arr = np.asarray(start, dtype=np.float64)

    def batch_tour_lengths(tours) -> np.ndarray:
        # element-wise identical to disk_tour_length, evaluated for all ants at once
        pos = np.repeat(start_arr[None, :], tours.shape[0], axis=0)
        total = np.zeros(tours.shape[0])
        for k in range(tours.shape[1]):
            centers = nodes[tours[:, k]]
            delta = centers - pos
            dist = np.hypot(delta[:, 0], delta[:, 1])
            step_len = np.maximum(0.0, dist - comm_radius)
            total += step_len
            scale = np.where(dist > 0.0, step_len / np.maximum(dist, 1e-300), 0.0)
            pos = pos + delta * scale[:, None]
        return total

    best_tour = None
    best_len = math.inf
    for _ in range(config.iterations + 1):
        tours = build_tours()
        lengths = batch_tour_lengths(tours)
        k = int(np.argmin(lengths))
        if lengths[k] < best_len:
            best_len = float(lengths[k])
            best_tour = tours[k].copy()
        pheromone *= 1.0 - config.evaporation
        for ant in range(config.ant_count):
            deposit = 1.0 / max(lengths[ant], 1e-9)
            prev = 0
            for node in tours[ant]:
                pheromone[prev, node] += deposit
                prev = int(node)
        # best-so-far reinforcement keeps construction focused
        prev = 0
        for node in best_tour:
            pheromone[prev, node] += 1.0 / max(best_len, 1e-9)
            prev = int(node)
    return [int(t) - 1 for t in best_tour]


def brute_force_order(world: WorldInstance, start, comm_radius: float = 0.0) -> list[int]:
    """Exhaustive optimal open tour; factorial cost, intended for tiny instances."""
    import itertools

    if world.gu_count > 7:
        raise InvalidParameterError("brute force limited to 7 GUs")
    best, best_len = None, math.inf
    for perm in itertools.permutations(range(world.gu_count)):
        length = disk_tour_length(
            np.asarray(start, dtype=np.float64), list(perm), world.gu_positions, comm_radius
        )
        if length < best_len:
            best, best_len = list(perm), length
    return best


# ---------------- RRT ----------------


def _trim_to_disk(a: np.ndarray, b: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    """First crossing of segment a->b into the disk; b is known to be inside."""
    d = b - a
    f = a - center
    aa = float(d @ d)
    if aa == 0.0:
        return b
    bb = 2.0 * float(f @ d)
    cc = float(f @ f) - radius * radius
    disc = bb * bb - 4.0 * aa * cc
    if disc < 0.0:
        return b
    t = (-bb - math.sqrt(disc)) / (2.0 * aa)
    t = min(max(t, 0.0), 1.0)
    return a + t * d


def rrt_to_disk(
    arena_side: float,
    start,
    goal_center,
    goal_radius: float,
    rng: np.random.Generator,
    *,
    step: float = 5.0,
    goal_bias: float = 0.15,
    max_iters: int = 20000,
) -> np.ndarray:
    """Goal-biased tree search from start to any point of the goal disk.

    Returns tree waypoints from start to a point on (or inside) the disk
    boundary; obstacle-free arena, so failure is only possible through a
    degenerate radius or iteration exhaustion.
    """
    start = np.asarray(start, dtype=np.float64)
    goal_center = np.asarray(goal_center, dtype=np.float64)
    if goal_radius <= 0.0:
        raise InvalidParameterError("goal radius must be positive")
    if float(np.hypot(*(start - goal_center))) <= goal_radius:
        return start[None, :]

    nodes = [start]
    parents = [-1]
    for _ in range(max_iters):
        if rng.random() < goal_bias:
            sample = goal_center
        else:
            sample = rng.uniform(0.0, arena_side, size=2)
        arr = np.asarray(nodes)
        d2 = (arr[:, 0] - sample[0]) ** 2 + (arr[:, 1] - sample[1]) ** 2
        nearest = int(np.argmin(d2))
        base = nodes[nearest]
        delta = sample - base
        dist = float(np.hypot(*delta))
        if dist == 0.0:
            continue
        new = base + delta * (min(step, dist) / dist)
        new = np.clip(new, 0.0, arena_side)
        nodes.append(new)
        parents.append(nearest)
        if float(np.hypot(*(new - goal_center))) <= goal_radius:
            path = [len(nodes) - 1]
            while parents[path[-1]] != -1:
                path.append(parents[path[-1]])
            path.reverse()
            points = np.asarray([nodes[i] for i in path])
            points[-1] = _trim_to_disk(points[-2], points[-1], goal_center, goal_radius)
            return points
    raise PlanningError("RRT iteration cap exceeded")


def shortcut(
    path: np.ndarray,
    goal_center: np.ndarray | None = None,
    goal_radius: float | None = None,
) -> np.ndarray:
    """Greedy shortcut smoothing.

    With no obstacles every pair of points connects, so the path collapses to
    its endpoints; when the goal is a disk, the final segment additionally
    slides to the disk point nearest the start, which is the shortest valid
    ending for the leg.
    """
    path = np.asarray(path)
    if len(path) < 2:
        return path
    if goal_center is not None and goal_radius is not None:
        end = disk_touch_point(path[0], np.asarray(goal_center, dtype=np.float64), goal_radius)
    else:
        end = path[-1]
    return np.asarray([path[0], end])


# ---------------- assembly & execution ----------------


def plan_visiting_path(
    world: WorldInstance,
    order: list[int],
    comm_radius: float,
    rng: np.random.Generator,
    *,
    rrt_step: float = 5.0,
    rrt_goal_bias: float = 0.15,
    rrt_max_iters: int = 20000,
) -> PlannedPath:
    """Chain smoothed RRT legs through the GU disks in the given order."""
    if comm_radius <= 0.0:
        raise InfeasibleAltitudeError("communication radius is zero at this altitude")
    lo = BOUNDARY_MARGIN * world.arena_side
    pos = np.asarray(world.start_xy, dtype=np.float64)
    points = [pos]
    for gu in order:
        goal_radius = comm_radius * DISK_SHRINK
        leg = rrt_to_disk(
            world.arena_side,
            pos,
            world.gu_positions[gu],
            goal_radius,
            rng,
            step=rrt_step,
            goal_bias=rrt_goal_bias,
            max_iters=rrt_max_iters,
        )
        leg = shortcut(leg, world.gu_positions[gu], goal_radius)
        for p in leg[1:]:
            points.append(np.clip(p, lo, world.arena_side - lo))
        pos = points[-1]
    dense = densify(np.asarray(points), world.max_step_distance)
    return PlannedPath(
        waypoints=dense,
        total_length=polyline_length(dense),
        service_events=attach_service_events(dense, world, comm_radius),
    )


def execute_plan(env: DataCollectionEnv, plan: PlannedPath) -> EpisodeLog:
    """Replay a planned path through the environment; truncates on completion.

    Raises PlanValidationError when the path ends before every GU is served.
    """
    world = env.world
    state = env.reset()
    log = EpisodeLog()
    for target in plan.waypoints[1:]:
        delta = target - state.uav_xy
        dist = float(np.hypot(*delta))
        if dist == 0.0:
            continue
        heading = math.atan2(delta[1], delta[0])
        if heading <= 0.0:
            heading += TWO_PI
        speed = min(dist / world.slot_duration, world.max_speed)
        state, reward, done, info = env.step(state, ActionCmd(heading, speed))
        log.append(state, reward, info)
        if done:
            break
    if not log.success:
        raise PlanValidationError("plan leaves at least one GU unserved")
    return log
