from .config import DEFAULT_EVAL_SEEDS, DEFAULT_WEIGHTS, METHODS, RunConfig, dump_run_config, load_run_config
from .results import emit_results, plot_csv, read_results
from .rollout import (
    AgentPolicy,
    EvalRecord,
    SchedulerPolicy,
    evaluate_vs_pf,
    normalize_state,
    observe,
    run_episodes,
)
from .train import MirroredEnvPair, TrainingLog, permute_ues, run, run_direct, run_dual, run_expert
