"""MCS table, MCS selection and the sigmoid BLER model."""
import csv
import math
from dataclasses import dataclass

from ..errors import ConfigError


@dataclass(frozen=True)
class McsEntry:
    index: int
    modulation_order: int
    code_rate: float
    spectral_efficiency: float
    sinr_threshold_db: float


# (modulation_order, code_rate x 1024, spectral efficiency, SINR at 10% BLER)
_CQI_ROWS = [
    (2, 78, 0.1523, -6.7),
    (2, 120, 0.2344, -4.7),
    (2, 193, 0.3770, -2.3),
    (2, 308, 0.6016, 0.2),
    (2, 449, 0.8770, 2.4),
    (2, 602, 1.1758, 4.3),
    (4, 378, 1.4766, 5.9),
    (4, 490, 1.9141, 8.1),
    (4, 616, 2.4063, 10.3),
    (6, 466, 2.7305, 11.7),
    (6, 567, 3.3223, 14.1),
    (6, 666, 3.9023, 16.3),
    (6, 772, 4.5234, 18.7),
    (6, 873, 5.1152, 21.0),
    (6, 948, 5.5547, 22.7),
]

DEFAULT_MCS_TABLE = tuple(
    McsEntry(i, m, r / 1024.0, se, thr) for i, (m, r, se, thr) in enumerate(_CQI_ROWS)
)

MCS_COLUMNS = ("index", "modulation_order", "code_rate", "spectral_efficiency", "sinr_threshold_db")


def validate_table(table):
    if not table:
        raise ConfigError("MCS table is empty")
    for prev, cur in zip(table, table[1:]):
        if cur.spectral_efficiency <= prev.spectral_efficiency:
            raise ConfigError(f"MCS {cur.index}: spectral efficiency not strictly increasing")
        if cur.sinr_threshold_db <= prev.sinr_threshold_db:
            raise ConfigError(f"MCS {cur.index}: SINR threshold not strictly increasing")
    if table[0].spectral_efficiency <= 0:
        raise ConfigError("lowest MCS must have positive spectral efficiency")
    return table


def load_mcs_table(path):
    """Read a whitespace- or comma-separated MCS table.

    Lines starting with ``#`` are ignored. A header line naming the columns is
    optional; column order must be ``index, modulation_order, code_rate,
    spectral_efficiency, sinr_threshold_db``.
    """
    entries = []
    with open(path, newline="") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ConfigError(f"{path}: no rows")
    delimiter = "," if "," in lines[0] else None
    rows = csv.reader(lines, delimiter=",") if delimiter else (ln.split() for ln in lines)
    for lineno, row in enumerate(rows, 1):
        row = [c.strip() for c in row]
        if lineno == 1 and row[0] == "index":
            continue
        if len(row) != len(MCS_COLUMNS):
            raise ConfigError(f"{path}:{lineno}: expected {len(MCS_COLUMNS)} columns, got {len(row)}")
        try:
            entries.append(McsEntry(int(row[0]), int(row[1]), float(row[2]), float(row[3]), float(row[4])))
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return validate_table(tuple(entries))


def select_mcs(sinr_reported_db, olla_offset_db, table):
    """Highest entry whose threshold is <= the effective SINR; table[0] if none."""
    effective = sinr_reported_db + olla_offset_db
    chosen = table[0]
    for entry in table:
        if entry.sinr_threshold_db <= effective:
            chosen = entry
        else:
            break
    return chosen


def bler(mcs, sinr_db, target_bler=0.1, slope_db=0.5):
    # logistic in dB, shifted so that bler == target_bler at the threshold
    shift = math.log((1.0 - target_bler) / target_bler)
    x = (sinr_db - mcs.sinr_threshold_db) / slope_db + shift
    if x > 700:
        return 0.0
    if x < -700:
        return 1.0
    return 1.0 / (1.0 + math.exp(x))


def decode_outcome(mcs, sinr_true_db, rng, target_bler=0.1, slope_db=0.5):
    """Draw ACK (True) / NACK (False). ``rng`` is a Generator or a uniform in [0, 1)."""
    u = rng if isinstance(rng, float) else rng.random()
    return u >= bler(mcs, sinr_true_db, target_bler, slope_db)
