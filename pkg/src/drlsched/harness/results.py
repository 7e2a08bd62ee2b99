"""CSV and plot emission for training logs.

The CSV files are the source of truth; plots are rendered from them.
"""
import csv
import os

from ..errors import ContractViolation

RESULT_HEADER = ("update_count", "tp_diff", "jfi_diff", "seed")


def _fmt(x):
    # repr round-trips floats exactly and is stable across runs
    return repr(float(x))


def _agent_ids(logs):
    return sorted({e.agent for lg in logs for e in lg.evals})


def result_rows(logs, agent=0):
    rows = []
    for lg in logs:
        for e in lg.evals:
            if e.agent == agent:
                rows.append((e.update_count, _fmt(e.tp_diff), _fmt(e.jfi_diff), lg.seed))
    rows.sort(key=lambda r: (r[3], r[0]))
    return rows


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def emit_results(logs, out_dir, plot=True):
    """Write result CSVs (and plots) for one or more training logs.

    Single-agent methods produce ``results.csv``; dual learning produces
    ``results_agent0.csv`` and ``results_agent1.csv``. Returns the written paths.
    """
    if not isinstance(logs, (list, tuple)):
        logs = [logs]
    if not logs or not any(lg.evals for lg in logs):
        raise ContractViolation("no evaluations to emit")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    agents = _agent_ids(logs)
    dual = any(lg.method == "dual" for lg in logs)
    for k in agents:
        name = f"results_agent{k}.csv" if dual else "results.csv"
        path = os.path.join(out_dir, name)
        _write_csv(path, RESULT_HEADER, result_rows(logs, k))
        written.append(path)

    detail = []
    for lg in logs:
        for e in lg.evals:
            for eval_seed, tp, jfi in e.per_seed:
                detail.append((lg.seed, e.agent, e.update_count, eval_seed, _fmt(tp), _fmt(jfi)))
    detail.sort(key=lambda r: r[:4])
    path = os.path.join(out_dir, "eval_detail.csv")
    _write_csv(path, ("seed", "agent", "update_count", "eval_seed", "tp_diff", "jfi_diff"), detail)
    written.append(path)

    rewards = [(lg.seed, a, u, _fmt(r)) for lg in logs for a, u, r in lg.rewards]
    rewards.sort(key=lambda r: r[:3])
    path = os.path.join(out_dir, "rewards.csv")
    _write_csv(path, ("seed", "agent", "update_count", "mean_reward"), rewards)
    written.append(path)

    if plot:
        for p in list(written[: len(agents)]):
            written.append(plot_csv(p))
    return written


def read_results(path):
    """Parse a results CSV into ``{seed: (updates, tp_diffs, jfi_diffs)}``."""
    series = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != RESULT_HEADER:
            raise ContractViolation(f"{path}: unexpected header {header}")
        for row in reader:
            u, tp, jfi, seed = int(row[0]), float(row[1]), float(row[2]), int(row[3])
            s = series.setdefault(seed, ([], [], []))
            s[0].append(u)
            s[1].append(tp)
            s[2].append(jfi)
    if not series:
        raise ContractViolation(f"{path}: no rows")
    return series


def plot_csv(csv_path, out_path=None):
    """Render tp_diff and jfi_diff against update_count, one line per seed."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series = read_results(csv_path)
    out_path = out_path or os.path.splitext(csv_path)[0] + ".png"
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    for seed, (u, tp, jfi) in sorted(series.items()):
        axes[0].plot(u, tp, label=f"seed {seed}")
        axes[1].plot(u, jfi, label=f"seed {seed}")
    for ax, name in zip(axes, ("throughput", "JFI")):
        ax.axhline(0.0, color="k", lw=0.8)
        ax.set_ylabel(f"{name} vs PF (normalized)")
        ax.grid(alpha=0.3)
    axes[1].set_xlabel("training updates")
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return out_path
