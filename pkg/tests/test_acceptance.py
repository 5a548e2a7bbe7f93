"""Acceptance suite: one test per release criterion, one PASS line each.

Run with `pytest tests/test_acceptance.py -v -s`.  The convergence experiment
(criterion 7) trains six desk-scale policies and takes the bulk of the
runtime; deselect it with `-m "not slow"` during development.
"""

import csv
import math
import time

import numpy as np
import pytest

from vlcuav import altitude as alt
from vlcuav import channel
from vlcuav import harness
from vlcuav.baselines import (
    AcoConfig,
    aco_order,
    brute_force_order,
    disk_tour_length,
    execute_plan,
    greedy_order,
    plan_visiting_path,
    scan_plan,
)
from vlcuav.config import from_dict
from vlcuav.nets import Approximator, grad_check, soft_update
from vlcuav.replay import ReplayBuffer
from vlcuav.td3 import Td3Agent, Td3Config
from vlcuav.world import (
    DataCollectionEnv,
    EpisodeLog,
    RewardParams,
    WorldInstance,
    coverage_bits,
    random_gu_positions,
    run_episode,
    shaped_reward,
    validate_episode,
)


def report(criterion: str, detail: str = ""):
    print(f"[PASS] {criterion}" + (f": {detail}" if detail else ""))


# --------------------------------------------------------------------------
# criterion 1: altitude closed form vs grid oracle, 1000 random problems
# --------------------------------------------------------------------------


def test_a1_altitude_closed_form_vs_oracle():
    rng = np.random.default_rng(20260808)
    t0 = time.time()
    checked = 0
    worst = 0.0
    while checked < 1000:
        m = rng.uniform(1.0, 6.0)
        # keep the peak below ~1e3 m: beyond that the squared-radius curve is
        # float64-flat at centimeter resolution and no grid oracle can resolve
        # it (see the decisions ledger); draws stay inside the stated ranges
        lam_hi = min(1e4, 1500.0 ** (4.0 / (m + 3.0)))
        lam = math.exp(rng.uniform(0.0, math.log(lam_hi)))
        h_min = rng.uniform(1.0, 50.0)
        root = lam ** ((m + 3.0) / 4.0)  # f crosses zero here
        h_max = max(h_min * 2.0, root * 1.05)
        problem = alt.AltitudeProblem(lam, m, h_min=h_min, h_max=h_max)
        h0, _ = alt.stationary_points(problem)
        peak = min(h0, h_max)
        if abs(alt.squared_radius(problem, h_min) - alt.squared_radius(problem, peak)) < 1e-2:
            continue  # floor and peak tie: both answers valid but far apart
        closed = alt.optimal_altitude(problem)
        oracle = alt.grid_argmax(problem, step=0.01)
        gap = abs(closed - oracle)
        worst = max(worst, gap)
        assert gap <= 0.01 + 1e-9, f"m={m} lam={lam} h_min={h_min}: |{closed} - {oracle}|"
        checked += 1
    elapsed = time.time() - t0
    assert elapsed < 10.0, f"oracle sweep took {elapsed:.1f}s"
    report("A1 altitude closed form vs oracle", f"1000 problems, worst gap {worst:.4f} m, {elapsed:.1f}s")


# --------------------------------------------------------------------------
# criterion 2: channel threshold round trip and coverage boundary bisection
# --------------------------------------------------------------------------


def test_a2_channel_consistency():
    rng = np.random.default_rng(7070)
    checked_roundtrip = 0
    checked_bisect = 0
    for _ in range(100):
        params = channel.from_physical(
            semi_angle_deg=rng.uniform(20.0, 60.0),
            fov_deg=rng.uniform(20.0, 80.0),
            detector_area_cm2=rng.uniform(0.2, 4.0),
            refractive_index=rng.uniform(1.0, 2.0),
            illumination_response=rng.uniform(0.3, 1.0),
            tx_power_w=rng.uniform(1.0, 20.0),
            noise_power_dbm=rng.uniform(-140.0, -110.0),
            capacity_threshold=rng.uniform(0.5, 10.0),
        )
        c_back = channel.capacity(params, channel.gain_threshold(params))
        assert abs(c_back - params.capacity_threshold) <= 1e-9 * params.capacity_threshold
        checked_roundtrip += 1

        h = rng.uniform(2.0, 40.0)
        r = channel.comm_radius(params, h)
        outer = channel.reception_radius(params, h)
        threshold = channel.gain_threshold(params)
        if r == 0.0:
            probe = rng.uniform(0.0, outer, size=16)
            assert not coverage_bits(params, h, probe, threshold).any()
            continue
        lo, hi = 0.0, outer * (1.0 + 1e-9)
        if coverage_bits(params, h, np.array([hi]), threshold)[0]:
            flip = hi  # covered everywhere up to the FOV edge
        else:
            for _ in range(64):
                mid = 0.5 * (lo + hi)
                if coverage_bits(params, h, np.array([mid]), threshold)[0]:
                    lo = mid
                else:
                    hi = mid
            flip = 0.5 * (lo + hi)
        assert abs(flip - r) <= 1e-6, f"flip {flip} vs comm radius {r}"
        checked_bisect += 1
    assert checked_bisect >= 50
    report(
        "A2 channel consistency",
        f"{checked_roundtrip} round trips at 1e-9, {checked_bisect} boundary bisections at 1e-6 m",
    )


# --------------------------------------------------------------------------
# criterion 3: calculus checks on the squared-radius curve
# --------------------------------------------------------------------------


def test_a3_calculus_checks():
    rng = np.random.default_rng(515)
    for _ in range(200):
        m = rng.uniform(1.0, 6.0)
        lam = rng.uniform(1.0, 500.0)
        problem = alt.AltitudeProblem(lam, m, h_min=0.5, h_max=1e6)
        h0, h00 = alt.stationary_points(problem)
        step = max(h0, 1.0) * 1e-5
        fd = (
            alt.squared_radius(problem, h0 + step) - alt.squared_radius(problem, h0 - step)
        ) / (2.0 * step)
        assert abs(fd) <= 1e-5 * 2.0 * h0, f"f'({h0}) = {fd} at m={m} lam={lam}"

        if m > 1.0 + 1e-6 and h00 is not None:
            up = np.linspace(h00, h0, 1000)
            down = np.linspace(h0, 2.0 * h0, 1000)
            assert (np.diff(alt.squared_radius(problem, up)) > 0.0).all()
            assert (np.diff(alt.squared_radius(problem, down)) < 0.0).all()

    # order one: curvature is exactly -2 everywhere
    problem = alt.AltitudeProblem(26.0, 1.0, h_min=1.0, h_max=100.0)
    for h in np.linspace(1.0, 60.0, 100):
        second = (
            alt.squared_radius(problem, h + 1.0)
            - 2.0 * alt.squared_radius(problem, h)
            + alt.squared_radius(problem, h - 1.0)
        )
        assert second == pytest.approx(-2.0, abs=1e-9)
    report("A3 calculus checks", "f'(h0)=0 (rel 1e-5), monotone segments, f''=-2 at m=1")


# --------------------------------------------------------------------------
# desk-scale training fixture shared by criteria 4, 5 and 7
# --------------------------------------------------------------------------

# three paired seeds: (GU layout seed, learner seed); both reward modes run
# with identical seeds, arena, link budget and shaping constants, so the only
# difference inside a pair is the reception-annulus approach term under test
CONVERGENCE_PAIRS = [(29, 0), (369, 4), (141, 2)]
CONVERGENCE_BUDGET = 320


def desk_config(mode: str, gu_seed: int, td3_seed: int, max_episodes: int) -> dict:
    return {
        "world": {"arena_side": 50.0, "gu_count": 5, "gu_seed": gu_seed, "step_cap": 450},
        "vlc": {"capacity_threshold": 8.0},
        "reward": {
            "mode": mode,
            "serve_bonus": 2.0,
            "decay_loss": 0.08,
            "approach_rate": 0.08,
            "boundary_penalty": 0.1,
        },
        "td3": {
            "seed": td3_seed,
            "hidden_sizes": [48, 48],
            "batch_size": 96,
            "learn_start": 1000,
            "max_episodes": max_episodes,
            "noise_decay": 0.99,
            "success_window": 25,
            "success_target": 0.9,
        },
    }


@pytest.fixture(scope="session")
def convergence_runs():
    """Paired pheromone/sparse trainings; sparse only needs to run as long as
    the pheromone run took (the comparison is one-sided)."""
    results = []
    for gu_seed, td3_seed in CONVERGENCE_PAIRS:
        cfg_p = from_dict(desk_config("pheromone", gu_seed, td3_seed, CONVERGENCE_BUDGET))
        res_p, agent_p, env_p, rows_p, _ = harness.train_policy(cfg_p)
        pher_episodes = (
            res_p.first_target_episode + 1
            if res_p.first_target_episode is not None
            else CONVERGENCE_BUDGET + 1
        )
        sparse_budget = min(CONVERGENCE_BUDGET, max(pher_episodes, 1))
        cfg_s = from_dict(desk_config("sparse", gu_seed, td3_seed, sparse_budget))
        res_s, _, _, _, _ = harness.train_policy(cfg_s)
        sparse_episodes = (
            res_s.first_target_episode + 1
            if res_s.first_target_episode is not None
            else sparse_budget + 1
        )
        results.append(
            {
                "pair": (gu_seed, td3_seed),
                "pheromone_episodes": pher_episodes,
                "sparse_episodes": sparse_episodes,
                "agent": agent_p,
                "env": env_p,
                "rows": rows_p,
            }
        )
    return results


# --------------------------------------------------------------------------
# criterion 4: constraint suite over every planner and the trained policy
# --------------------------------------------------------------------------


@pytest.mark.slow
def test_a4_constraint_suite(convergence_runs):
    params = channel.from_physical(60.0, 60.0, 1.0, 1.5, 0.9, 10.0, -128.82, 6.19)
    rewards = RewardParams()
    rng = np.random.default_rng(99)
    episodes = 0
    for seed in range(4):
        world = WorldInstance(
            arena_side=100.0,
            gu_positions=random_gu_positions(100.0, 8, 40 + seed),
            altitude=13.0,
            min_altitude=10.0,
            max_step_distance=2.0,
            serve_cap=1,
            step_cap=5000,
        )
        env = DataCollectionEnv(world, params, rewards)
        plans = [scan_plan(world, env.comm_radius)]
        for order_fn in (
            lambda: greedy_order(world, world.start_xy, env.comm_radius),
            lambda: aco_order(
                world, world.start_xy, AcoConfig(ant_count=12, iterations=40, rng_seed=seed), env.comm_radius
            ),
        ):
            plans.append(
                plan_visiting_path(world, order_fn(), env.comm_radius, np.random.default_rng(seed))
            )
        for plan in plans:
            log = execute_plan(env, plan)
            problems = validate_episode(env, log, require_success=True)
            assert problems == [], problems
            episodes += 1

    # the trained policy, rolled out without exploration noise
    for run in convergence_runs:
        log = run_episode(run["env"], harness.greedy_policy(run["agent"]))
        problems = validate_episode(run["env"], log)
        assert problems == [], problems
        episodes += 1
    report("A4 constraint suite", f"{episodes} episode logs satisfy the serving/motion/bounds constraints")


# --------------------------------------------------------------------------
# criterion 5: pheromone replay and shaped-reward properties
# --------------------------------------------------------------------------


@pytest.mark.slow
def test_a5_pheromone_replay_and_reward_shape(tmp_path, convergence_runs):
    # bit-for-bit replay of planner and policy logs, including a CSV round trip
    params = channel.from_physical(60.0, 60.0, 1.0, 1.5, 0.9, 10.0, -128.82, 6.19)
    world = WorldInstance(
        arena_side=100.0,
        gu_positions=random_gu_positions(100.0, 8, 44),
        altitude=13.0,
        min_altitude=10.0,
        max_step_distance=2.0,
        serve_cap=1,
        step_cap=5000,
    )
    env = DataCollectionEnv(world, params, RewardParams())
    log = execute_plan(env, scan_plan(world, env.comm_radius))
    path = tmp_path / "scan.csv"
    log.to_csv(path)
    back = EpisodeLog.from_csv(path)
    assert back.zeta == log.zeta  # byte-exact floats through the CSV
    assert validate_episode(env, back, require_success=True) == []

    run = convergence_runs[0]
    policy_log = run_episode(run["env"], harness.greedy_policy(run["agent"]))
    assert validate_episode(run["env"], policy_log) == []

    # shaped-reward properties on 10^4 random pheromone values; float64 tanh
    # rounds to exactly +/-1 once |zeta| exceeds ~38 * I * serve_bonus, so the
    # strict-interval check runs over the representable band and the wider
    # draws only assert the saturation bound
    rng = np.random.default_rng(11)
    rp = RewardParams()
    zetas = np.sort(rng.uniform(-150.0, 150.0, size=10_000))
    values = np.array([shaped_reward(z, 5, rp, 1.0, False) for z in zetas])
    assert shaped_reward(0.0, 5, rp, 1.0, False) == 0.0
    assert (values > -1.0).all() and (values < 1.0).all()
    assert (np.diff(values) >= 0.0).all()
    extremes = np.array(
        [shaped_reward(z, 5, rp, 1.0, False) for z in rng.uniform(-1e6, 1e6, size=100)]
    )
    assert (np.abs(extremes) <= 1.0).all()
    report("A5 pheromone replay + reward shape", "bit-exact replays; r(0)=0, range (-1,1), monotone over 1e4 draws")


# --------------------------------------------------------------------------
# criterion 6: learner correctness
# --------------------------------------------------------------------------


def test_a6_td3_correctness():
    rng = np.random.default_rng(606)
    net = Approximator([8, 32, 32, 2], output_activation="tanh", rng=rng)
    check = grad_check(net, rng.normal(size=(24, 8)), rng.uniform(-1, 1, (24, 2)), n_weights=120, rng=rng)
    assert check.checked >= 100 and check.passed, f"grad check max rel err {check.max_rel_err}"

    # exact soft-update identity
    a = Approximator([4, 8, 1], rng=np.random.default_rng(1))
    b = Approximator([4, 8, 1], rng=np.random.default_rng(2))
    prev = [w.copy() for w in b.weights] + [bb.copy() for bb in b.biases]
    soft_update(b, a, 0.125)
    after = list(b.weights) + list(b.biases)
    online = list(a.weights) + list(a.biases)
    for t, o, p in zip(after, online, prev):
        assert (t - (0.125 * o + 0.875 * p) == 0.0).all()

    # frozen below the warm-up threshold
    agent = Td3Agent(6, Td3Config(batch_size=8, learn_start=32, hidden_sizes=(16, 16), replay_capacity=64), 2.0, seed=3)
    buf = ReplayBuffer(64, 6)
    gen = np.random.default_rng(4)
    for _ in range(32):
        buf.push(gen.normal(size=6), gen.uniform(-1, 1, 2), gen.normal(), gen.normal(size=6), 0.0)
    before = [w.copy() for w in agent.critic1.weights]
    assert agent.update(buf) is None
    assert all((x == y).all() for x, y in zip(before, agent.critic1.weights))

    # single-transition regression with bootstrapping off
    agent = Td3Agent(
        6,
        Td3Config(discount=0.0, batch_size=8, learn_start=0, hidden_sizes=(16, 16), replay_capacity=4, policy_delay=10**9),
        2.0,
        seed=5,
    )
    buf = ReplayBuffer(4, 6)
    obs = np.linspace(-1.0, 1.0, 6)
    act = np.array([0.25, -0.5])
    buf.push(obs, act, 0.83, obs, 0.0)
    for _ in range(10_000):
        agent.update(buf)
    q = float(agent.critic1.forward(np.concatenate([obs, act])[None, :])[0, 0])
    assert abs(q - 0.83) <= 1e-3
    report("A6 TD3 correctness", f"grad check {check.max_rel_err:.2e}; warm-up freeze; Q->r gap {abs(q-0.83):.2e}")


# --------------------------------------------------------------------------
# criterion 7: pheromone shaping accelerates convergence (desk substitute)
# --------------------------------------------------------------------------


@pytest.mark.slow
def test_a7_convergence_speedup(convergence_runs):
    strict_wins = 0
    details = []
    for run in convergence_runs:
        p, s = run["pheromone_episodes"], run["sparse_episodes"]
        details.append(f"pair{run['pair']}: pheromone {p} vs sparse {s}")
        assert p <= CONVERGENCE_BUDGET, (
            f"pheromone run never reached 90% rolling success within "
            f"{CONVERGENCE_BUDGET} episodes for pair {run['pair']}"
        )
        assert p <= s, f"pheromone slower than sparse for pair {run['pair']}: {p} > {s}"
        if p < s:
            strict_wins += 1

        # trained policy beats the sweep baseline on its own map
        env = run["env"]
        successful = [r[2] for r in run["rows"][-25:] if r[4]]
        scan_length = scan_plan(env.world, env.comm_radius).total_length
        assert successful and float(np.mean(successful)) < scan_length
    assert strict_wins >= 2, f"strict speedup in only {strict_wins}/3 pairs"
    report("A7 convergence speedup", "; ".join(details))


# --------------------------------------------------------------------------
# criterion 8: baseline shape checks
# --------------------------------------------------------------------------


def test_a8_baseline_shapes():
    params = channel.from_physical(60.0, 60.0, 1.0, 1.5, 0.9, 10.0, -128.82, 6.19)
    comm = channel.comm_radius(params, 13.0)

    # SCAN untruncated length identical across GU counts (exact equality)
    lengths = set()
    for count in (10, 15, 20, 25, 30):
        world = WorldInstance(
            arena_side=100.0,
            gu_positions=random_gu_positions(100.0, count, 77),
            altitude=13.0,
            min_altitude=10.0,
            max_step_distance=2.0,
            serve_cap=1,
            step_cap=10_000,
        )
        lengths.add(scan_plan(world, comm).total_length)
    assert len(lengths) == 1

    # GREEDY-RRT mean distance strictly increasing in the GU count, 10 seeds
    rewards = RewardParams()
    means = []
    for count in (10, 15, 20, 25, 30):
        dists = []
        for seed in range(10):
            world = WorldInstance(
                arena_side=100.0,
                gu_positions=random_gu_positions(100.0, count, 500 + seed),
                altitude=13.0,
                min_altitude=10.0,
                max_step_distance=2.0,
                serve_cap=1,
                step_cap=10_000,
            )
            env = DataCollectionEnv(world, params, rewards)
            order = greedy_order(world, world.start_xy, comm)
            plan = plan_visiting_path(world, order, comm, np.random.default_rng(seed))
            log = execute_plan(env, plan)
            dists.append(log.distance_from(world.start_xy))
        means.append(float(np.mean(dists)))
    assert all(a < b for a, b in zip(means, means[1:])), means

    # ACO equals the brute-force optimum on 50 seeded 3-GU instances
    rng = np.random.default_rng(321)
    for trial in range(50):
        pts = rng.uniform(0.0, 100.0, size=(3, 2))
        world = WorldInstance(
            arena_side=100.0,
            gu_positions=pts,
            altitude=13.0,
            min_altitude=10.0,
            max_step_distance=2.0,
            serve_cap=1,
        )
        ours = aco_order(world, (0.0, 0.0), AcoConfig(ant_count=12, iterations=60, rng_seed=trial), comm)
        best = brute_force_order(world, (0.0, 0.0), comm)
        ours_len = disk_tour_length(np.zeros(2), ours, pts, comm)
        best_len = disk_tour_length(np.zeros(2), best, pts, comm)
        assert ours_len <= best_len * (1.0 + 1e-9)
    report(
        "A8 baseline shapes",
        f"SCAN length constant; greedy means {['%.0f' % m for m in means]} increasing; ACO optimal on 50/50",
    )


# --------------------------------------------------------------------------
# criterion 9: byte-identical reruns
# --------------------------------------------------------------------------


def test_a9_determinism(tmp_path):
    base = {
        "world": {"arena_side": 30.0, "gu_count": 3, "gu_seed": 3, "step_cap": 120},
        "vlc": {"capacity_threshold": 8.0},
        "td3": {
            "seed": 0,
            "hidden_sizes": [16, 16],
            "batch_size": 16,
            "learn_start": 100,
            "max_episodes": 8,
            "success_window": 4,
            "early_stop": False,
        },
        "sweep": {
            "altitude_min": 10.0,
            "altitude_max": 12.0,
            "altitude_step": 2.0,
            "gu_counts": [2, 3],
            "seeds": 2,
        },
    }
    payload = {}
    for tag in ("one", "two"):
        out = tmp_path / tag
        out.mkdir()
        harness.run_training(from_dict(base), out)
        harness.run_comparison(from_dict(base), out)
        payload[tag] = (
            (out / "convergence.csv").read_bytes(),
            (out / "comparison.csv").read_bytes(),
        )
    assert payload["one"][0] == payload["two"][0]
    assert payload["one"][1] == payload["two"][1]
    report("A9 determinism", "train and compare reruns byte-identical")
