import numpy as np
import pytest

from vlcuav import channel
from vlcuav.config import from_dict
from vlcuav.world import DataCollectionEnv, RewardParams, WorldInstance


@pytest.fixture
def feasible_params():
    """Same link budget with the capacity threshold that yields a 13 m optimum."""
    return channel.from_physical(60.0, 60.0, 1.0, 1.5, 0.9, 10.0, -128.82, 6.19)


@pytest.fixture
def small_world():
    return WorldInstance(
        arena_side=50.0,
        gu_positions=np.array([[10.0, 12.0], [40.0, 8.0], [25.0, 40.0]]),
        altitude=13.0,
        min_altitude=10.0,
        max_step_distance=2.0,
        serve_cap=1,
    )


@pytest.fixture
def small_env(small_world, feasible_params):
    return DataCollectionEnv(small_world, feasible_params, RewardParams())


@pytest.fixture
def desk_config():
    """Small feasible instance used across harness tests."""
    return from_dict(
        {
            "world": {"arena_side": 50.0, "gu_count": 5, "gu_seed": 7, "step_cap": 300},
            "vlc": {"capacity_threshold": 8.0},
            "sweep": {
                "altitude_min": 10.0,
                "altitude_max": 14.0,
                "altitude_step": 2.0,
                "gu_counts": [3, 5],
                "seeds": 2,
            },
        }
    )
