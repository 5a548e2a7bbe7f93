"""Twin-critic actor-critic learner with delayed policy updates.

The actor outputs two tanh-bounded values mapped affinely onto heading and
speed.  Both critics regress to the same smoothed bootstrap target built from
the minimum of the two target critics; the actor and all three target
networks refresh every `policy_delay` critic updates.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidParameterError, TrainingDivergedError
from .nets import Adam, Approximator, soft_update
from .replay import ReplayBuffer
from .world import ActionCmd

TWO_PI = 2.0 * math.pi
ACT_DIM = 2
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Td3Config:
    discount: float = 0.99
    soft_update_rate: float = 0.005
    policy_delay: int = 2
    exploration_noise_std: float = 0.6
    noise_decay: float = 0.999
    smoothing_noise_std: float = 0.2
    smoothing_noise_clip: float = 0.5
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    batch_size: int = 256
    learn_start: int = 2000
    max_episodes: int = 8000
    hidden_sizes: tuple[int, ...] = (256, 256)
    replay_capacity: int = 1_000_000

    def __post_init__(self):
        if not 0.0 <= self.discount < 1.0:
            raise InvalidParameterError("discount must be in [0, 1)")
        if not 0.0 < self.soft_update_rate <= 1.0:
            raise InvalidParameterError("soft_update_rate must be in (0, 1]")
        if self.policy_delay < 1:
            raise InvalidParameterError("policy_delay must be >= 1")
        if self.exploration_noise_std < 0.0 or self.smoothing_noise_std < 0.0:
            raise InvalidParameterError("noise stds must be >= 0")
        if not 0.0 < self.noise_decay <= 1.0:
            raise InvalidParameterError("noise_decay must be in (0, 1]")
        if self.batch_size < 1 or self.replay_capacity < 1:
            raise InvalidParameterError("batch_size and replay_capacity must be >= 1")
        # learn_start == 0 explicitly disables the warm-up phase
        if self.learn_start > 0 and self.batch_size > self.learn_start:
            raise InvalidParameterError("batch_size must not exceed learn_start")
        object.__setattr__(self, "hidden_sizes", tuple(self.hidden_sizes))


@dataclass
class LossReport:
    critic1_loss: float
    critic2_loss: float
    actor_objective: float | None
    target_mean: float


def raw_to_action(raw: np.ndarray, max_speed: float) -> ActionCmd:
    """Affine map from the actor's [-1, 1]^2 output onto (0, 2*pi] x [0, v_max]."""
    heading = math.pi * (float(raw[0]) + 1.0)
    if heading == 0.0:
        heading = TWO_PI
    speed = max_speed * (float(raw[1]) + 1.0) / 2.0
    return ActionCmd(heading=heading, speed=speed)


def critic_target(
    rewards: np.ndarray,
    dones: np.ndarray,
    q1: np.ndarray,
    q2: np.ndarray,
    discount: float,
) -> np.ndarray:
    """Bootstrap target y = r + gamma * (1 - done) * min(q1, q2), shape (B, 1)."""
    q_min = np.minimum(q1, q2).reshape(-1)
    y = rewards + discount * (1.0 - dones) * q_min
    return y.reshape(-1, 1)


class Td3Agent:
    def __init__(self, obs_dim: int, config: Td3Config, max_speed: float, seed: int = 0):
        self.obs_dim = obs_dim
        self.config = config
        self.max_speed = max_speed
        self.rng = np.random.default_rng(seed)
        sizes = list(config.hidden_sizes)
        self.actor = Approximator([obs_dim] + sizes + [ACT_DIM], output_activation="tanh", rng=self.rng)
        self.critic1 = Approximator([obs_dim + ACT_DIM] + sizes + [1], rng=self.rng)
        self.critic2 = Approximator([obs_dim + ACT_DIM] + sizes + [1], rng=self.rng)
        self.actor_target = self.actor.clone()
        self.critic1_target = self.critic1.clone()
        self.critic2_target = self.critic2.clone()
        self.actor_opt = Adam(self.actor, config.actor_lr)
        self.critic1_opt = Adam(self.critic1, config.critic_lr)
        self.critic2_opt = Adam(self.critic2, config.critic_lr)
        self.update_count = 0

    def noise_std_for_episode(self, episode: int) -> float:
        return self.config.exploration_noise_std * self.config.noise_decay**episode

    def raw_action(self, obs: np.ndarray, noise_std: float) -> np.ndarray:
        """Policy output plus exploration noise, clipped to [-1, 1]^2."""
        raw = self.actor.forward(obs)[0]
        if noise_std > 0.0:
            raw = raw + self.rng.normal(0.0, noise_std, size=ACT_DIM)
        return np.clip(raw, -1.0, 1.0)

    def act(self, obs: np.ndarray, noise_std: float) -> tuple[ActionCmd, np.ndarray]:
        raw = self.raw_action(obs, noise_std)
        return raw_to_action(raw, self.max_speed), raw

    def update(self, buffer: ReplayBuffer) -> LossReport | None:
        """One learning step; no-op (None) while the buffer is within warm-up."""
        cfg = self.config
        if len(buffer) <= cfg.learn_start:
            return None
        obs, act, rew, next_obs, done = buffer.sample(cfg.batch_size, self.rng)

        noise = self.rng.normal(0.0, cfg.smoothing_noise_std, size=(cfg.batch_size, ACT_DIM))
        noise = np.clip(noise, -cfg.smoothing_noise_clip, cfg.smoothing_noise_clip)
        next_act = np.clip(self.actor_target.forward(next_obs) + noise, -1.0, 1.0)
        next_in = np.concatenate([next_obs, next_act], axis=1)
        y = critic_target(
            rew,
            done,
            self.critic1_target.forward(next_in),
            self.critic2_target.forward(next_in),
            cfg.discount,
        )

        sa = np.concatenate([obs, act], axis=1)
        losses = []
        for critic, opt in ((self.critic1, self.critic1_opt), (self.critic2, self.critic2_opt)):
            q = critic.forward(sa, train=True)
            diff = q - y
            critic.backward(2.0 * diff / diff.size)
            opt.step()
            losses.append(float(np.mean(diff * diff)))
        if not all(math.isfinite(v) for v in losses):
            raise TrainingDivergedError(f"non-finite critic loss: {losses}")

        self.update_count += 1
        actor_objective = None
        if self.update_count % cfg.policy_delay == 0:
            act_out = self.actor.forward(obs, train=True)
            q_in = np.concatenate([obs, act_out], axis=1)
            q = self.critic1.forward(q_in, train=True)
            grad_in = self.critic1.backward(np.full_like(q, 1.0 / q.size))
            self.actor.backward(-grad_in[:, self.obs_dim :])
            self.actor_opt.step()
            actor_objective = float(np.mean(q))
            if not math.isfinite(actor_objective):
                raise TrainingDivergedError("non-finite actor objective")
            tau = cfg.soft_update_rate
            soft_update(self.actor_target, self.actor, tau)
            soft_update(self.critic1_target, self.critic1, tau)
            soft_update(self.critic2_target, self.critic2, tau)

        return LossReport(
            critic1_loss=losses[0],
            critic2_loss=losses[1],
            actor_objective=actor_objective,
            target_mean=float(np.mean(y)),
        )

    # ---------------- checkpointing ----------------

    def _net_items(self):
        return (
            ("actor", self.actor, self.actor_opt),
            ("critic1", self.critic1, self.critic1_opt),
            ("critic2", self.critic2, self.critic2_opt),
            ("actor_target", self.actor_target, None),
            ("critic1_target", self.critic1_target, None),
            ("critic2_target", self.critic2_target, None),
        )

    def save(self, path, buffer: ReplayBuffer | None = None, extra: dict | None = None):
        """Write a versioned npz checkpoint; include the buffer for exact resume."""
        arrays = {}
        for name, net, opt in self._net_items():
            for i, (w, b) in enumerate(zip(net.weights, net.biases)):
                arrays[f"{name}_w{i}"] = w
                arrays[f"{name}_b{i}"] = b
            if opt is not None:
                for i, (m, v) in enumerate(zip(opt.m, opt.v)):
                    arrays[f"{name}_adam_m{i}"] = m
                    arrays[f"{name}_adam_v{i}"] = v
        meta = {
            "version": CHECKPOINT_VERSION,
            "obs_dim": self.obs_dim,
            "max_speed": self.max_speed,
            "config": asdict(self.config),
            "update_count": self.update_count,
            "adam_t": {
                name: opt.t for name, _, opt in self._net_items() if opt is not None
            },
            "rng_state": self.rng.bit_generator.state,
            "has_buffer": buffer is not None,
            "extra": extra or {},
        }
        if buffer is not None:
            arrays["buf_obs"] = buffer.obs[: buffer.size]
            arrays["buf_act"] = buffer.act[: buffer.size]
            arrays["buf_rew"] = buffer.rew[: buffer.size]
            arrays["buf_next_obs"] = buffer.next_obs[: buffer.size]
            arrays["buf_done"] = buffer.done[: buffer.size]
            meta["buf_pos"] = buffer.pos
            meta["buf_size"] = buffer.size
        arrays["meta_json"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
        np.savez_compressed(path, **arrays)

    @classmethod
    def load(cls, path) -> tuple["Td3Agent", ReplayBuffer | None, dict]:
        data = np.load(path)
        meta = json.loads(bytes(data["meta_json"]).decode())
        if meta["version"] != CHECKPOINT_VERSION:
            raise InvalidParameterError(f"unsupported checkpoint version {meta['version']}")
        cfg = Td3Config(**{**meta["config"], "hidden_sizes": tuple(meta["config"]["hidden_sizes"])})
        agent = cls(meta["obs_dim"], cfg, meta["max_speed"], seed=0)
        for name, net, opt in agent._net_items():
            for i in range(len(net.weights)):
                net.weights[i] = data[f"{name}_w{i}"].copy()
                net.biases[i] = data[f"{name}_b{i}"].copy()
            if opt is not None:
                for i in range(len(opt.m)):
                    opt.m[i] = data[f"{name}_adam_m{i}"].copy()
                    opt.v[i] = data[f"{name}_adam_v{i}"].copy()
                opt.t = meta["adam_t"][name]
        agent.update_count = meta["update_count"]
        state = meta["rng_state"]
        agent.rng = np.random.default_rng()
        agent.rng.bit_generator.state = state
        buffer = None
        if meta["has_buffer"]:
            buffer = ReplayBuffer(cfg.replay_capacity, meta["obs_dim"], ACT_DIM)
            size = meta["buf_size"]
            buffer.obs[:size] = data["buf_obs"]
            buffer.act[:size] = data["buf_act"]
            buffer.rew[:size] = data["buf_rew"]
            buffer.next_obs[:size] = data["buf_next_obs"]
            buffer.done[:size] = data["buf_done"]
            buffer.size = size
            buffer.pos = meta["buf_pos"]
        return agent, buffer, meta.get("extra", {})
