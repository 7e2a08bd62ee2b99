"""Conventional schedulers, throughput tracking and fairness metrics."""
import enum
import logging

import numpy as np

from .errors import ContractViolation

log = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny


class SchedulerKind(enum.Enum):
    PF = "pf"
    MAX_CI = "maxci"
    ROUND_ROBIN = "rr"
    AGENT = "agent"


class ThroughputTracker:
    """Exponentially averaged per-UE throughput T_n with window W."""

    def __init__(self, n_ue, window_w=100, epsilon_init=1.0):
        if window_w < 1:
            raise ContractViolation("window_w must be >= 1")
        if epsilon_init <= 0:
            raise ContractViolation("epsilon_init must be positive")
        self.window_w = window_w
        self.epsilon_init = epsilon_init
        self.t_avg = np.full(n_ue, float(epsilon_init))

    def update(self, delivered):
        w = self.window_w
        t = ((w - 1) / w) * self.t_avg + delivered / w
        # repeated decay underflows after ~70k idle TTIs at W=100; keep the PF metric finite
        np.maximum(t, _TINY, out=t)
        self.t_avg = t

    def copy(self):
        other = ThroughputTracker(len(self.t_avg), self.window_w, self.epsilon_init)
        other.t_avg = self.t_avg.copy()
        return other


def update_avg_throughput(tracker, delivered):
    delivered = np.asarray(delivered, dtype=float)
    if delivered.shape != tracker.t_avg.shape:
        raise ContractViolation(f"expected {tracker.t_avg.shape[0]} delivered values, got {delivered.shape}")
    if np.any(delivered < 0):
        raise ContractViolation("delivered bits must be non-negative")
    tracker.update(delivered)
    return tracker


def _argmax_lowest(values):
    # np.argmax already returns the first maximal index
    return int(np.argmax(values))


def pf_select(inst_rates, tracker):
    """argmax_n I_n / T_n, lowest index on ties."""
    inst = np.asarray(inst_rates, dtype=float)
    t_avg = tracker.t_avg if isinstance(tracker, ThroughputTracker) else np.asarray(tracker, dtype=float)
    if inst.shape != t_avg.shape:
        raise ContractViolation("inst_rates and T_n lengths differ")
    if np.any(t_avg <= 0):
        raise ContractViolation("all average throughputs must be positive")
    return _argmax_lowest(inst / t_avg)


def max_ci_select(inst_rates):
    inst = np.asarray(inst_rates, dtype=float)
    if inst.size == 0:
        raise ContractViolation("max_ci_select needs at least one UE")
    return _argmax_lowest(inst)


def round_robin_select(tti, n_ue):
    if n_ue < 1:
        raise ContractViolation("n_ue must be >= 1")
    return tti % n_ue


def jain_index(v):
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ContractViolation("Jain's index needs non-negative inputs")
    s2 = float(np.dot(v, v))
    if s2 == 0.0:
        log.warning("jain_index of an all-zero vector is undefined; returning 1.0")
        return 1.0
    return float(v.sum()) ** 2 / (v.size * s2)


def sum_log_utility(rates):
    rates = np.asarray(rates, dtype=float)
    if np.any(rates <= 0):
        raise ContractViolation("log utility needs strictly positive rates")
    return float(np.log(rates).sum())


def kelly_aggregate_change(x, x_star):
    """Sum of proportional changes (x*_n - x_n)/x_n; non-positive at a PF allocation."""
    x = np.asarray(x, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    if x.shape != x_star.shape:
        raise ContractViolation("x and x_star lengths differ")
    if np.any(x <= 0):
        raise ContractViolation("reference rates must be positive")
    return float(np.sum((x_star - x) / x))


class WindowedMetrics:
    """Moving-window per-UE throughput V_n, its sum and Jain's index."""

    def __init__(self, n_ue, window_len=200):
        if window_len < 1:
            raise ContractViolation("window_len must be >= 1")
        self.window_len = window_len
        self.per_ue_delivered = np.zeros((window_len, n_ue))
        self._sum = np.zeros(n_ue)
        self._pos = 0
        self._count = 0
        self.v_avg = np.zeros(n_ue)
        self.throughput_sum = 0.0
        self.jfi = 1.0

    def push(self, row):
        pos = self._pos
        self._sum += row - self.per_ue_delivered[pos]
        self.per_ue_delivered[pos] = row
        self._pos = (pos + 1) % self.window_len
        self._count = min(self._count + 1, self.window_len)
        # periodic exact resum bounds floating drift of the running sum
        if self._pos == 0:
            self._sum = self.per_ue_delivered.sum(axis=0)
        v = self._sum / self._count
        np.maximum(v, 0.0, out=v)
        self.v_avg = v
        self.throughput_sum = float(v.sum())
        s2 = float(np.dot(v, v))
        self.jfi = 1.0 if s2 == 0.0 else self.throughput_sum ** 2 / (v.size * s2)

    def copy(self):
        other = WindowedMetrics.__new__(WindowedMetrics)
        other.__dict__.update(self.__dict__)
        other.per_ue_delivered = self.per_ue_delivered.copy()
        other._sum = self._sum.copy()
        other.v_avg = self.v_avg.copy()
        return other


def update_window(metrics, result):
    """Push one TTI's delivered bits (a TtiResult or per-UE vector) into the window."""
    if hasattr(result, "delivered_bits"):
        row = np.zeros(metrics.per_ue_delivered.shape[1])
        row[result.scheduled_ue] = result.delivered_bits
    else:
        row = np.asarray(result, dtype=float)
    if row.shape != metrics.v_avg.shape or np.any(row < 0):
        raise ContractViolation("window row must hold one non-negative value per UE")
    metrics.push(row)
    return metrics
