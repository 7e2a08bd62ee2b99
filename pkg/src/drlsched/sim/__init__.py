from .config import SimConfig
from .env import (
    ChannelSample,
    HarqProcess,
    SchedulingEnv,
    TtiObservation,
    TtiResult,
    UeContext,
    apply_olla,
    draw_channel,
    estimate_instantaneous_rate,
    max_rate_bits,
    reset,
    step_tti,
)
from .mcs import DEFAULT_MCS_TABLE, McsEntry, bler, decode_outcome, load_mcs_table, select_mcs
