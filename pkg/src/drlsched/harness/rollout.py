"""State normalization, scheduling policies and evaluation against PF."""
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .. import sched
from ..agent import DdpgAgent, Policy
from ..errors import ContractViolation
from ..sched import SchedulerKind
from ..sim import SchedulingEnv


def normalize_state(inst_rate, avg_rate):
    """Per-TTI max normalization of (I_n, T_n) into [0, 1]^(2N)."""
    inst = np.asarray(inst_rate, dtype=float)
    avg = np.asarray(avg_rate, dtype=float)
    if np.any(inst < 0) or np.any(avg < 0):
        raise ContractViolation("rates must be non-negative")
    i_max = inst.max()
    if i_max <= 0:
        raise ContractViolation("at least one instantaneous rate must be positive")
    t_max = avg.max()
    t_part = avg / t_max if t_max > 0 else np.zeros_like(avg)
    return np.concatenate([inst / i_max, t_part])


def observe(obs):
    return normalize_state(obs.inst_rate, obs.avg_rate)


class SchedulerPolicy:
    """Wraps a conventional scheduler so it can drive a batch of environments."""

    def __init__(self, kind):
        self.kind = SchedulerKind(kind)
        if self.kind is SchedulerKind.AGENT:
            raise ContractViolation("use AgentPolicy for learned schedulers")

    def select(self, observations):
        if self.kind is SchedulerKind.PF:
            return [sched.pf_select(o.inst_rate, o.avg_rate) for o in observations]
        if self.kind is SchedulerKind.MAX_CI:
            return [sched.max_ci_select(o.inst_rate) for o in observations]
        return [sched.round_robin_select(o.tti, len(o.inst_rate)) for o in observations]


class AgentPolicy:
    """Greedy argmax over a frozen actor snapshot."""

    kind = SchedulerKind.AGENT

    def __init__(self, policy):
        if isinstance(policy, DdpgAgent):
            policy = policy.snapshot()
        self.policy = policy

    def select(self, observations):
        states = np.stack([observe(o) for o in observations])
        return [int(i) for i in np.argmax(self.policy.act(states), axis=1)]


def as_policy(p):
    if isinstance(p, (DdpgAgent, Policy)):
        return AgentPolicy(p)
    if hasattr(p, "select"):
        return p
    return SchedulerPolicy(p)


def channel_digest(env):
    """Hash of the current per-UE channel samples, for mirrored-env checks."""
    arr = np.array([(c.fading_power, c.sinr_true_db, c.sinr_reported_db) for c in env.channel_samples()])
    return hashlib.sha256(arr.tobytes()).hexdigest()


@dataclass
class EpisodeStats:
    seed: int
    per_ue_throughput: np.ndarray
    throughput: float
    jfi: float
    schedule_counts: np.ndarray = field(default=None, repr=False)


def run_episodes(policy, sim_config, seeds, n_ttis):
    """Run ``policy`` on one environment per seed in lockstep.

    Throughput is the per-UE mean of delivered bits per TTI over the whole
    run; JFI is Jain's index of those means.
    """
    policy = as_policy(policy)
    envs = [SchedulingEnv(sim_config) for _ in seeds]
    obs = [env.reset(s) for env, s in zip(envs, seeds)]
    n_ue = envs[0].n_ue
    delivered = np.zeros((len(envs), n_ue))
    counts = np.zeros((len(envs), n_ue), dtype=int)
    for _ in range(n_ttis):
        choices = policy.select(obs)
        for i, (env, k) in enumerate(zip(envs, choices)):
            result, obs[i] = env.step(k)
            delivered[i, k] += result.delivered_bits
            counts[i, k] += 1
    stats = []
    for i, s in enumerate(seeds):
        v = delivered[i] / n_ttis
        stats.append(EpisodeStats(int(s), v, float(v.sum()), sched.jain_index(v), counts[i]))
    return stats


@dataclass
class EvalRecord:
    update_count: int
    tp_diff: float
    jfi_diff: float
    per_seed: list = field(default_factory=list)
    agent: int = 0


_PF_CACHE = {}


def _pf_reference(sim_config, seeds, n_ttis):
    key = (json.dumps(sim_config.to_dict(), sort_keys=True), tuple(seeds), n_ttis)
    if key not in _PF_CACHE:
        _PF_CACHE[key] = run_episodes(SchedulerKind.PF, sim_config, seeds, n_ttis)
    return _PF_CACHE[key]


def evaluate_vs_pf(agent, config, eval_seeds=None, update_count=None, agent_id=0):
    """Normalized (agent - PF) / PF differences over held-out seeds.

    ``agent`` may be a DdpgAgent, a Policy snapshot or any scheduler accepted
    by ``as_policy``. The agent's parameters, buffer and noise stream are not
    touched.
    """
    seeds = tuple(eval_seeds if eval_seeds is not None else config.eval_seeds)
    if update_count is None:
        update_count = getattr(agent, "update_count", 0)
    mine = run_episodes(agent, config.sim, seeds, config.eval_ttis)
    ref = _pf_reference(config.sim, seeds, config.eval_ttis)
    per_seed = []
    for m, r in zip(mine, ref):
        if r.throughput <= 0:
            raise ContractViolation(f"PF delivered nothing on seed {r.seed}")
        per_seed.append((m.seed, (m.throughput - r.throughput) / r.throughput, (m.jfi - r.jfi) / r.jfi))
    tp_a = sum(m.throughput for m in mine)
    tp_r = sum(r.throughput for r in ref)
    jfi_a = sum(m.jfi for m in mine)
    jfi_r = sum(r.jfi for r in ref)
    return EvalRecord(int(update_count), (tp_a - tp_r) / tp_r, (jfi_a - jfi_r) / jfi_r, per_seed, agent_id)
