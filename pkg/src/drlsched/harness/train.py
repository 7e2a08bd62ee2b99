"""Direct-, dual- and expert-learning training loops.

All environments of a run step in lockstep on one thread. Experience from
every environment goes through a single ``store_many`` call per round into the
learner's replay buffer, and one gradient update follows each round once the
buffer holds a full batch.
"""
import logging
import os
from dataclasses import dataclass, field, replace

import numpy as np

from ..agent import DdpgAgent, save_checkpoint
from ..errors import ContractViolation, TrainingDiverged
from ..reward import RewardSnapshot, compare_snapshots, direct_reward, dual_reward, expert_reward
from ..sched import SchedulerKind
from ..sim import SchedulingEnv, max_rate_bits
from .rollout import SchedulerPolicy, channel_digest, evaluate_vs_pf, observe

log = logging.getLogger(__name__)

MIRROR_CHECK_EVERY = 50


@dataclass
class TrainingLog:
    method: str
    seed: int
    evals: list = field(default_factory=list)
    # (agent, update_count, mean per-TTI reward of the round feeding that update)
    rewards: list = field(default_factory=list)
    critic_losses: list = field(default_factory=list)
    mirror_checks: int = 0
    freeze_checks: int = 0
    agents: list = field(default_factory=list, repr=False)

    def reward_series(self, agent=0):
        return np.array([r for a, _, r in self.rewards if a == agent])


def _derived_seed(*key):
    return int(np.random.SeedSequence(list(key)).generate_state(1)[0])


class MirroredEnvPair:
    """Two environments sharing one seed, hence one channel and decode stream."""

    def __init__(self, sim_config, reference_policy):
        self.agent_env = SchedulingEnv(sim_config)
        self.reference_env = SchedulingEnv(sim_config)
        self.reference_policy = reference_policy

    def reset(self, seed):
        return self.agent_env.reset(seed), self.reference_env.reset(seed)

    def check_mirror(self):
        if channel_digest(self.agent_env) != channel_digest(self.reference_env):
            raise ContractViolation(f"mirrored environments diverged at TTI {self.agent_env.tti}")


def permute_ues(s, a, s_next, rng):
    """Relabel UEs with an independent random permutation per transition.

    Scheduling is symmetric under UE relabeling, so each transition is stored
    under a random ordering (the same one for state, action and next state).
    """
    n = a.shape[1]
    perm = np.argsort(rng.random(a.shape), axis=1)
    rows = np.arange(len(a))[:, None]
    state_perm = np.hstack([perm, perm + n])
    return s[rows, state_perm], a[rows, perm], s_next[rows, state_perm]


def _ingest(agent, s, a, r, s_next, cfg, rng):
    if cfg.permute_ues:
        s, a, s_next = permute_ues(s, a, s_next, rng)
    agent.buffer.store_many(s, a, r, s_next)


def _snapshot(env, delivered_bits=0.0):
    m = env.metrics
    return RewardSnapshot(delivered_bits, m.throughput_sum, m.jfi)


def _checkpoint_on_failure(agents, checkpoint_dir, seed):
    if checkpoint_dir is None:
        return
    os.makedirs(checkpoint_dir, exist_ok=True)
    for i, agent in enumerate(agents):
        path = os.path.join(checkpoint_dir, f"diverged_seed{seed}_agent{i}.npz")
        try:
            save_checkpoint(agent, path)
        except Exception:  # the parameters may be unusable; keep the original error
            log.exception("could not write divergence checkpoint %s", path)


class _Rollout:
    """Lockstep driver for ``n_envs`` mirrored pairs with episode rollover."""

    def __init__(self, cfg, seed, reference_policy):
        self.cfg = cfg
        self.seed = seed
        self.pairs = [MirroredEnvPair(cfg.sim, reference_policy) for _ in range(cfg.n_envs)]
        self.episode = 0
        self.ttis = 0
        self.mirror_checks = 0
        self._reset_all()

    def _reset_all(self):
        self.obs = [[], []]
        for i, pair in enumerate(self.pairs):
            a, r = pair.reset(_derived_seed(self.seed, i, self.episode))
            self.obs[0].append(a)
            self.obs[1].append(r)
        self.states = [np.stack([observe(o) for o in side]) for side in self.obs]

    def envs(self, side):
        return [p.agent_env if side == 0 else p.reference_env for p in self.pairs]

    def advance(self):
        """Bookkeeping after both sides stepped; returns True on episode rollover."""
        self.ttis += 1
        if self.ttis % MIRROR_CHECK_EVERY == 0:
            for pair in self.pairs:
                pair.check_mirror()
            self.mirror_checks += 1
        if self.pairs[0].agent_env.tti >= self.cfg.episode_ttis:
            self.episode += 1
            self._reset_all()
            return True
        return False


def _train_single(cfg, seed, method, checkpoint_dir=None):
    n = cfg.sim.n_ue
    agent = DdpgAgent(2 * n, n, replace(cfg.hp, seed=seed))
    w = cfg.weights
    pf = SchedulerPolicy(SchedulerKind.PF)
    tp_scale = max_rate_bits(cfg.sim, SchedulingEnv(cfg.sim).table)
    roll = _Rollout(cfg, seed, pf)
    agent_envs, ref_envs = roll.envs(0), roll.envs(1)
    aug_rng = np.random.default_rng(_derived_seed(seed, 0xA06))
    tlog = TrainingLog(method, seed, agents=[agent])
    tlog.evals.append(evaluate_vs_pf(agent, cfg, update_count=0))
    rewards = np.empty(cfg.n_envs)
    try:
        while agent.update_count < cfg.total_updates:
            s = roll.states[0]
            actions = agent.act(s, explore=True)
            choices = np.argmax(actions, axis=1)
            ref_choices = pf.select(roll.obs[1])
            s_next = np.empty_like(s)
            for i in range(cfg.n_envs):
                res, roll.obs[0][i] = agent_envs[i].step(choices[i])
                _, roll.obs[1][i] = ref_envs[i].step(ref_choices[i])
                mine = _snapshot(agent_envs[i], res.delivered_bits)
                if method == "expert":
                    c = compare_snapshots(mine, _snapshot(ref_envs[i]), cfg.rel_tol)
                    rewards[i] = expert_reward(c.throughput, c.jfi, w)
                else:
                    rewards[i] = direct_reward(mine, w, tp_scale)
                s_next[i] = observe(roll.obs[0][i])
            _ingest(agent, s, actions, rewards, s_next, cfg, aug_rng)
            if not roll.advance():
                roll.states[0] = s_next
            if len(agent.buffer) >= cfg.hp.batch_size:
                closs, _ = agent.train_step()
                tlog.rewards.append((0, agent.update_count, float(rewards.mean())))
                tlog.critic_losses.append(closs)
                if agent.update_count % cfg.eval_every == 0:
                    tlog.evals.append(evaluate_vs_pf(agent, cfg))
    except TrainingDiverged:
        _checkpoint_on_failure([agent], checkpoint_dir, seed)
        raise
    tlog.mirror_checks = roll.mirror_checks
    return tlog


def _train_dual(cfg, seed, checkpoint_dir=None):
    n = cfg.sim.n_ue
    agents = [DdpgAgent(2 * n, n, replace(cfg.hp, seed=_derived_seed(seed, k))) for k in (0, 1)]
    w = cfg.weights
    total = cfg.total_updates
    # agent k always drives side k of every mirrored pair
    roll = _Rollout(cfg, seed, reference_policy=None)
    side_envs = [roll.envs(0), roll.envs(1)]
    aug_rng = np.random.default_rng(_derived_seed(seed, 0xA06))
    tlog = TrainingLog("dual", seed, agents=agents)
    for k, agent in enumerate(agents):
        tlog.evals.append(evaluate_vs_pf(agent, cfg, update_count=0, agent_id=k))
    rewards = np.empty(cfg.n_envs)
    learner = 0
    try:
        while min(a.update_count for a in agents) < total:
            me, opp = agents[learner], agents[1 - learner]
            if me.update_count >= total:
                learner = 1 - learner
                continue
            frozen = opp.snapshot()
            frozen_hash = opp.param_hash()
            phase_end = min(me.update_count + cfg.dual_phase_updates, total)
            my_envs, opp_envs = side_envs[learner], side_envs[1 - learner]
            while me.update_count < phase_end:
                s = roll.states[learner]
                actions = me.act(s, explore=True)
                choices = np.argmax(actions, axis=1)
                opp_choices = np.argmax(frozen.act(roll.states[1 - learner]), axis=1)
                s_next = np.empty_like(s)
                s_opp = np.empty_like(s)
                for i in range(cfg.n_envs):
                    res, roll.obs[learner][i] = my_envs[i].step(choices[i])
                    _, roll.obs[1 - learner][i] = opp_envs[i].step(opp_choices[i])
                    c = compare_snapshots(
                        _snapshot(my_envs[i], res.delivered_bits), _snapshot(opp_envs[i]), cfg.rel_tol
                    )
                    rewards[i] = dual_reward(c.throughput, c.jfi, w)
                    s_next[i] = observe(roll.obs[learner][i])
                    s_opp[i] = observe(roll.obs[1 - learner][i])
                _ingest(me, s, actions, rewards, s_next, cfg, aug_rng)
                if not roll.advance():
                    roll.states[learner] = s_next
                    roll.states[1 - learner] = s_opp
                if len(me.buffer) >= cfg.hp.batch_size:
                    closs, _ = me.train_step()
                    tlog.rewards.append((learner, me.update_count, float(rewards.mean())))
                    tlog.critic_losses.append(closs)
                    if me.update_count % cfg.eval_every == 0:
                        tlog.evals.append(evaluate_vs_pf(me, cfg, agent_id=learner))
            if opp.param_hash() != frozen_hash:
                raise ContractViolation(f"frozen agent {1 - learner} changed during the opponent's phase")
            tlog.freeze_checks += 1
            learner = 1 - learner
    except TrainingDiverged:
        _checkpoint_on_failure(agents, checkpoint_dir, seed)
        raise
    tlog.mirror_checks = roll.mirror_checks
    return tlog


def _check_method(cfg, method):
    if cfg.method != method:
        raise ContractViolation(f"config method is {cfg.method!r}, expected {method!r}")
    cfg.validate()


def run_direct(config, checkpoint_dir=None):
    _check_method(config, "direct")
    return [_train_single(config, s, "direct", checkpoint_dir) for s in config.seeds]


def run_expert(config, checkpoint_dir=None):
    _check_method(config, "expert")
    return [_train_single(config, s, "expert", checkpoint_dir) for s in config.seeds]


def run_dual(config, checkpoint_dir=None):
    _check_method(config, "dual")
    return [_train_dual(config, s, checkpoint_dir) for s in config.seeds]


def run(config, checkpoint_dir=None):
    runners = {"direct": run_direct, "dual": run_dual, "expert": run_expert}
    if config.method not in runners:
        raise ContractViolation(f"method {config.method!r} does not train an agent")
    return runners[config.method](config, checkpoint_dir)
