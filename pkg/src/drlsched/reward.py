"""Reward schemes: weighted direct reward and the two comparison look-up tables."""
import enum
from dataclasses import dataclass

from .errors import ConfigError, ContractViolation

EPS_ABS = 1e-12


class Outcome(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


@dataclass(frozen=True)
class RewardWeights:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or (self.alpha == 0 and self.beta == 0):
            raise ConfigError(f"reward weights must be non-negative and not both zero: {self}")


@dataclass(frozen=True)
class ComparisonOutcome:
    throughput: Outcome
    jfi: Outcome


@dataclass(frozen=True)
class RewardSnapshot:
    inst_throughput: float
    window_throughput: float
    jfi: float


def direct_reward(snap, w, tp_scale):
    if tp_scale <= 0:
        raise ContractViolation("tp_scale must be positive")
    return w.alpha * (snap.inst_throughput / tp_scale) + w.beta * snap.jfi


def compare_metrics(mine, theirs, rel_tol=0.01):
    if rel_tol < 0:
        raise ContractViolation("rel_tol must be non-negative")
    if abs(mine - theirs) <= rel_tol * max(abs(mine), abs(theirs), EPS_ABS):
        return Outcome.EQUAL
    return Outcome.GREATER if mine > theirs else Outcome.LESS


def compare_snapshots(mine, theirs, rel_tol=0.01):
    return ComparisonOutcome(
        compare_metrics(mine.window_throughput, theirs.window_throughput, rel_tol),
        compare_metrics(mine.jfi, theirs.jfi, rel_tol),
    )


def dual_reward(tp_cmp, jfi_cmp, w):
    # the dual table only distinguishes ">" from "<=", so EQUAL earns nothing
    r = 0.0
    if tp_cmp == Outcome.GREATER:
        r += w.alpha
    if jfi_cmp == Outcome.GREATER:
        r += w.beta
    return r


_EXPERT_CREDIT = {Outcome.GREATER: 1.0, Outcome.EQUAL: 0.5, Outcome.LESS: 0.0}


def expert_reward(tp_cmp, jfi_cmp, w):
    # each expert cell is credit(tp)*alpha + credit(jfi)*beta, credits 1 / 0.5 / 0
    return _EXPERT_CREDIT[Outcome(tp_cmp)] * w.alpha + _EXPERT_CREDIT[Outcome(jfi_cmp)] * w.beta
