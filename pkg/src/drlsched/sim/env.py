"""TTI-level single-cell downlink environment with one RBG.

Each TTI the environment exposes, for every UE, the instantaneous rate
estimate I_n (what the UE would get if scheduled now, from delayed SINR
feedback plus its OLLA offset) and the exponentially averaged throughput
T_n. ``step`` transmits to one UE, resolves HARQ/OLLA and advances time.

Three independent random streams are derived from the episode seed: UE
placement, channel fading and decoding. Channel and decoding draws are made
for every UE every TTI, so two environments reset with the same seed see the
same channels and the same decoding luck whatever they schedule.
"""
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .. import sched
from ..errors import ContractViolation
from .config import SimConfig
from .mcs import DEFAULT_MCS_TABLE, bler, load_mcs_table, select_mcs, validate_table


@dataclass
class ChannelSample:
    ue_id: int
    fading_power: float
    sinr_true_db: float
    sinr_reported_db: float


@dataclass
class HarqProcess:
    active: bool = False
    mcs: int = 0
    retx_count: int = 0
    tb_size_bits: float = 0.0

    def clear(self):
        self.active = False
        self.mcs = 0
        self.retx_count = 0
        self.tb_size_bits = 0.0


@dataclass
class UeContext:
    ue_id: int
    avg_snr_db: float
    olla_offset_db: float = 0.0
    harq: HarqProcess = field(default_factory=HarqProcess)
    last_instantaneous_rate: float = 0.0
    channel: ChannelSample = None
    # complex fading gain carried between TTIs for correlated fading
    gain: complex = 0j
    sinr_history: deque = None


@dataclass
class TtiObservation:
    tti: int
    inst_rate: np.ndarray
    avg_rate: np.ndarray


@dataclass
class TtiResult:
    tti: int
    scheduled_ue: int
    ack: bool
    delivered_bits: float
    per_ue_inst_rate: np.ndarray
    mcs: int = 0
    retransmission: bool = False


def draw_channel(ue, rng, fading_corr=0.0):
    """Advance ``ue``'s fading one TTI and return the new true-SINR sample.

    The complex gain follows a first-order Gauss-Markov process whose marginal
    power is unit-mean exponential (Rayleigh amplitude); ``fading_corr=0``
    gives i.i.d. block fading per TTI. ``sinr_reported_db`` is filled in by
    the environment from its feedback delay line.
    """
    re, im = rng.standard_normal(2)
    w = complex(re, im) * math.sqrt(0.5)
    if fading_corr > 0.0:
        g = fading_corr * ue.gain + math.sqrt(1.0 - fading_corr * fading_corr) * w
    else:
        g = w
    ue.gain = g
    power = g.real * g.real + g.imag * g.imag
    # zero power has probability zero but would give -inf dB
    power = max(power, 1e-300)
    sinr = ue.avg_snr_db + 10.0 * math.log10(power)
    return ChannelSample(ue.ue_id, power, sinr, sinr)


def apply_olla(ue, ack, step_up_db=0.1, step_down_db=0.9, limit_db=10.0):
    offset = ue.olla_offset_db + (step_up_db if ack else -step_down_db)
    ue.olla_offset_db = min(max(offset, -limit_db), limit_db)
    return ue.olla_offset_db


def estimate_instantaneous_rate(ue, table, n_rb=50, rb_bandwidth_hz=180e3, tti_s=1e-3):
    mcs = select_mcs(ue.channel.sinr_reported_db, ue.olla_offset_db, table)
    return mcs.spectral_efficiency * n_rb * rb_bandwidth_hz * tti_s


def max_rate_bits(config, table=DEFAULT_MCS_TABLE):
    """Largest I_n any UE can report; used to scale throughput rewards."""
    return max(e.spectral_efficiency for e in table) * config.n_rb * config.rb_bandwidth_hz * config.tti_s


class SchedulingEnv:
    def __init__(self, config=None, mcs_table=None):
        self.config = (config or SimConfig()).validate()
        if mcs_table is None:
            path = self.config.mcs_table_path
            mcs_table = load_mcs_table(path) if path else DEFAULT_MCS_TABLE
        self.table = validate_table(tuple(mcs_table))
        self.n_ue = self.config.n_ue
        self._rb_bits_per_se = self.config.n_rb * self.config.rb_bandwidth_hz * self.config.tti_s
        self.tti = None
        self.episode_seed = None

    # -- lifecycle -------------------------------------------------------
    def reset(self, episode_seed=None):
        cfg = self.config
        if episode_seed is None:
            episode_seed = cfg.seed
        self.episode_seed = int(episode_seed)
        place_ss, chan_ss, dec_ss = np.random.SeedSequence(self.episode_seed).spawn(3)
        lo, hi = cfg.avg_snr_range_db
        avg_snr = np.random.default_rng(place_ss).uniform(lo, hi, size=self.n_ue)
        self._chan_rng = np.random.default_rng(chan_ss)
        self._dec_rng = np.random.default_rng(dec_ss)

        self.ues = [UeContext(n, float(avg_snr[n])) for n in range(self.n_ue)]
        delay = cfg.feedback_delay_ttis
        for ue in self.ues:
            ue.gain = complex(*self._chan_rng.standard_normal(2)) * math.sqrt(0.5)
            ue.sinr_history = deque(maxlen=delay + 1)
        # pre-roll the delay line so TTI 0 already has a report from TTI -delay
        for _ in range(delay):
            self._advance_channels()
        self.tracker = sched.ThroughputTracker(self.n_ue, cfg.avg_window, cfg.epsilon_init)
        self.metrics = sched.WindowedMetrics(self.n_ue, cfg.metrics_window)
        self.tti = 0
        self._advance_channels()
        self._estimate_rates()
        return self.observation()

    def _advance_channels(self):
        # vectorized draw_channel over all UEs; consumes the stream in the same order
        corr = self.config.fading_corr
        z = self._chan_rng.standard_normal((self.n_ue, 2)) * math.sqrt(0.5)
        w = z[:, 0] + 1j * z[:, 1]
        if corr > 0.0:
            g = corr * np.array([ue.gain for ue in self.ues]) + math.sqrt(1.0 - corr * corr) * w
        else:
            g = w
        power = np.maximum(g.real * g.real + g.imag * g.imag, 1e-300)
        avg_snr = np.array([ue.avg_snr_db for ue in self.ues])
        sinr = avg_snr + 10.0 * np.log10(power)
        for n, ue in enumerate(self.ues):
            ue.gain = complex(g[n])
            s_true = float(sinr[n])
            ue.sinr_history.append(s_true)
            ue.channel = ChannelSample(n, float(power[n]), s_true, ue.sinr_history[0])
        # one decode uniform per UE per TTI keeps the decode stream schedule-independent
        self._decode_u = self._dec_rng.random(self.n_ue)

    def _estimate_rates(self):
        for ue in self.ues:
            ue.last_instantaneous_rate = estimate_instantaneous_rate(
                ue, self.table, self.config.n_rb, self.config.rb_bandwidth_hz, self.config.tti_s
            )
        self.inst_rate = np.array([ue.last_instantaneous_rate for ue in self.ues])

    def observation(self):
        return TtiObservation(self.tti, self.inst_rate.copy(), self.tracker.t_avg.copy())

    def channel_samples(self):
        return [ue.channel for ue in self.ues]

    # -- one TTI ---------------------------------------------------------
    def step(self, scheduled_ue):
        if self.tti is None:
            raise ContractViolation("step() called before reset()")
        if isinstance(scheduled_ue, (bool, np.bool_)) or not 0 <= int(scheduled_ue) < self.n_ue:
            raise ContractViolation(f"scheduled_ue {scheduled_ue!r} outside [0, {self.n_ue})")
        cfg = self.config
        k = int(scheduled_ue)
        ue = self.ues[k]
        harq = ue.harq
        retx = harq.active
        if retx:
            mcs = self.table[harq.mcs]
            tb_bits = harq.tb_size_bits
            harq.retx_count += 1
        else:
            mcs = select_mcs(ue.channel.sinr_reported_db, ue.olla_offset_db, self.table)
            tb_bits = mcs.spectral_efficiency * self._rb_bits_per_se
        p_err = bler(mcs, ue.channel.sinr_true_db, cfg.target_bler, cfg.bler_slope_db)
        ack = bool(self._decode_u[k] >= p_err)
        apply_olla(ue, ack, cfg.olla_step_up_db, cfg.olla_step_down_db, cfg.olla_limit_db)

        delivered_bits = 0.0
        if ack:
            delivered_bits = tb_bits
            harq.clear()
        elif retx and harq.retx_count >= cfg.max_harq_retx:
            harq.clear()
        elif not retx:
            if cfg.max_harq_retx > 0:
                harq.active = True
                harq.mcs = self.table.index(mcs)
                harq.tb_size_bits = tb_bits
                harq.retx_count = 0

        delivered = np.zeros(self.n_ue)
        delivered[k] = delivered_bits
        self.tracker.update(delivered)
        self.metrics.push(delivered)

        result = TtiResult(
            tti=self.tti,
            scheduled_ue=k,
            ack=ack,
            delivered_bits=delivered_bits,
            per_ue_inst_rate=self.inst_rate.copy(),
            mcs=mcs.index,
            retransmission=retx,
        )
        self.tti += 1
        self._advance_channels()
        self._estimate_rates()
        return result, self.observation()


def step_tti(env, scheduled_ue):
    return env.step(scheduled_ue)


def reset(config, episode_seed, mcs_table=None):
    """Build a fresh environment and return ``(env, initial observation)``."""
    env = SchedulingEnv(config, mcs_table)
    return env, env.reset(episode_seed)
