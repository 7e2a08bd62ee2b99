"""DDPG with experience replay and soft target networks, on plain numpy."""
import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigError, ContractViolation, TrainingDiverged
from .mlp import IDENTITY, SOFTMAX, Mlp, mlp_backward, mlp_forward, softmax
from .replay import ReplayBuffer

CHECKPOINT_VERSION = 1


@dataclass
class Hyperparams:
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    gamma: float = 0.95
    tau: float = 0.005
    batch_size: int = 64
    # wider, slower-decaying exploration than 0.1 / 0.999: the narrower
    # setting lets the softmax saturate on one UE before the critic is useful
    noise_scale: float = 0.5
    noise_decay: float = 0.9995
    # weight of a quadratic penalty on the actor's pre-softmax logits
    logit_penalty: float = 1e-2
    updates_per_eval: int = 50
    hidden: tuple = (64, 64)
    buffer_capacity: int = 100_000
    seed: int = 0

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)

    def validate(self):
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"tau must be in (0, 1], got {self.tau}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.actor_lr <= 0 or self.critic_lr <= 0:
            raise ConfigError("learning rates must be positive")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ConfigError("need 1 <= batch_size <= buffer_capacity")
        if self.logit_penalty < 0:
            raise ConfigError("logit_penalty must be >= 0")
        if self.noise_scale < 0 or not 0.0 < self.noise_decay <= 1.0:
            raise ConfigError("noise_scale must be >= 0 and noise_decay in (0, 1]")
        if self.updates_per_eval < 1:
            raise ConfigError("updates_per_eval must be >= 1")
        if not self.hidden or min(self.hidden) < 1:
            raise ConfigError("hidden layer sizes must be positive")
        return self

    def to_dict(self):
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown hyperparameter keys: {sorted(unknown)}")
        return cls(**d)


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def soft_update(live, target, tau):
    if live.layer_sizes != target.layer_sizes:
        raise ContractViolation("soft_update needs identically shaped networks")
    for pl, pt in zip(live.params, target.params):
        pt *= 1.0 - tau
        pt += tau * pl
    return target


def _noisy_simplex(logits, noise_scale, rng):
    if noise_scale > 0.0:
        logits = logits + noise_scale * rng.standard_normal(logits.shape)
    return softmax(logits)


class Policy:
    """Immutable actor snapshot; safe to share between environment drivers."""

    def __init__(self, actor):
        self._actor = actor.copy()
        for p in self._actor.params:
            p.flags.writeable = False

    def act(self, states):
        return mlp_forward(self._actor, states)[0]

    def select(self, states):
        return np.argmax(self.act(np.atleast_2d(states)), axis=1)


class DdpgAgent:
    def __init__(self, state_dim, action_dim, hp=None):
        self.hp = (hp or Hyperparams()).validate()
        self.state_dim = int(state_dim)
        self.action_dim = int(action_dim)
        init_ss, buf_ss, noise_ss = np.random.SeedSequence(self.hp.seed).spawn(3)
        init_rng = np.random.default_rng(init_ss)
        hidden = list(self.hp.hidden)
        self.actor = Mlp([state_dim, *hidden, action_dim], SOFTMAX, init_rng)
        self.critic = Mlp([state_dim + action_dim, *hidden, 1], IDENTITY, init_rng)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_opt = Adam(self.actor.params, self.hp.actor_lr)
        self.critic_opt = Adam(self.critic.params, self.hp.critic_lr)
        self.buffer = ReplayBuffer(self.hp.buffer_capacity, state_dim, action_dim, np.random.default_rng(buf_ss))
        self.noise_rng = np.random.default_rng(noise_ss)
        self.noise_scale = self.hp.noise_scale
        self.update_count = 0

    # -- acting ----------------------------------------------------------
    def act(self, states, explore=False, rng=None):
        """Simplex action vectors for a batch (or a single) state."""
        states = np.asarray(states, dtype=float)
        single = states.ndim == 1
        _, cache = mlp_forward(self.actor, np.atleast_2d(states))
        logits = cache["pre"][-1]
        scale = self.noise_scale if explore else 0.0
        a = _noisy_simplex(logits, scale, rng if rng is not None else self.noise_rng)
        return a[0] if single else a

    def snapshot(self):
        return Policy(self.actor)

    # -- learning --------------------------------------------------------
    def train_step(self, batch=None):
        """One critic + actor update; returns ``(critic_loss, actor_objective)``.

        Samples from the agent's own buffer when ``batch`` is None; raises
        ``NotReady`` if the buffer is too small.
        """
        if batch is None:
            batch = self.buffer.sample(self.hp.batch_size)
        s, a, r, s_next = (np.asarray(x, dtype=float) for x in batch)
        n = len(r)
        if n == 0:
            raise ContractViolation("empty batch")
        gamma = self.hp.gamma

        if gamma > 0.0:
            a_next = mlp_forward(self.target_actor, s_next)[0]
            q_next = mlp_forward(self.target_critic, np.hstack([s_next, a_next]))[0][:, 0]
            y = r + gamma * q_next
        else:
            y = r.copy()

        critic_loss = self.critic_step(s, a, y)
        actor_objective = self.actor_step(s)

        soft_update(self.actor, self.target_actor, self.hp.tau)
        soft_update(self.critic, self.target_critic, self.hp.tau)
        self.update_count += 1
        self.noise_scale *= self.hp.noise_decay

        if not (np.isfinite(critic_loss) and np.isfinite(actor_objective)):
            raise TrainingDiverged(
                f"non-finite loss at update {self.update_count}: critic={critic_loss}, actor={actor_objective}"
            )
        for name, net in (("actor", self.actor), ("critic", self.critic)):
            if not net.all_finite():
                raise TrainingDiverged(f"non-finite {name} parameters at update {self.update_count}")
        return critic_loss, actor_objective

    def critic_step(self, s, a, y):
        """One optimizer step of the critic toward targets ``y``; returns the MSE."""
        n = len(y)
        q, cache = mlp_forward(self.critic, np.hstack([s, a]))
        td = q[:, 0] - y
        c_grads, _ = mlp_backward(self.critic, cache, (2.0 / n) * td[:, None])
        self.critic_opt.step(self.critic.params, c_grads)
        return float(np.mean(td * td))

    def actor_step(self, s):
        """One optimizer step of the actor ascending mean Q(s, actor(s)).

        The critic is only read. Returns the objective before the step
        (including the logit penalty when enabled).
        """
        n = len(s)
        a_pred, a_cache = mlp_forward(self.actor, s)
        q_pred, q_cache = mlp_forward(self.critic, np.hstack([s, a_pred]))
        objective = float(q_pred.mean())
        # descend -Q; the gradient reaches the actor through the critic's action input
        _, dx = mlp_backward(self.critic, q_cache, np.full_like(q_pred, -1.0 / n))
        dlogits = None
        if self.hp.logit_penalty > 0.0:
            logits = a_cache["pre"][-1]
            objective -= self.hp.logit_penalty * float(np.mean(np.sum(logits * logits, axis=1)))
            dlogits = (2.0 * self.hp.logit_penalty / n) * logits
        a_grads, _ = mlp_backward(self.actor, a_cache, dx[:, self.state_dim:], dlogits)
        self.actor_opt.step(self.actor.params, a_grads)
        return objective

    def param_hash(self):
        h = hashlib.sha256()
        for net in (self.actor, self.critic, self.target_actor, self.target_critic):
            h.update(net.flat().tobytes())
        return h.hexdigest()


def select_action(agent, s, explore=False, rng=None):
    return agent.act(s, explore, rng)


def train_step(agent, batch):
    return agent.train_step(batch)


def save_checkpoint(agent, path):
    nets = {
        "actor": agent.actor, "critic": agent.critic,
        "target_actor": agent.target_actor, "target_critic": agent.target_critic,
    }
    payload = {
        "version": np.array(CHECKPOINT_VERSION),
        "meta": np.array(json.dumps({
            "state_dim": agent.state_dim,
            "action_dim": agent.action_dim,
            "hp": agent.hp.to_dict(),
            "update_count": agent.update_count,
        }, sort_keys=True)),
        "noise_scale": np.array(agent.noise_scale),
    }
    for name, net in nets.items():
        payload[f"{name}/layer_sizes"] = np.array(net.layer_sizes)
        payload[f"{name}/params"] = net.flat()
    with open(path, "wb") as fh:
        np.savez(fh, **payload)
    return path


def load_checkpoint(path):
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ConfigError(f"{path}: unsupported checkpoint version {version}")
        meta = json.loads(str(data["meta"]))
        agent = DdpgAgent(meta["state_dim"], meta["action_dim"], Hyperparams.from_dict(meta["hp"]))
        for name in ("actor", "critic", "target_actor", "target_critic"):
            net = getattr(agent, name)
            sizes = tuple(int(v) for v in data[f"{name}/layer_sizes"])
            if sizes != net.layer_sizes:
                raise ConfigError(f"{path}: {name} layer sizes {sizes} != {net.layer_sizes}")
            net.load_flat(data[f"{name}/params"])
        agent.update_count = meta["update_count"]
        agent.noise_scale = float(data["noise_scale"])
    return agent

