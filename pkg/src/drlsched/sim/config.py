from dataclasses import dataclass, field, asdict

from ..errors import ConfigError


@dataclass
class SimConfig:
    n_ue: int = 5
    bandwidth_hz: float = 10e6
    n_rb: int = 50
    rb_bandwidth_hz: float = 180e3
    tti_s: float = 1e-3
    target_bler: float = 0.1
    olla_step_down_db: float = 0.9
    olla_step_up_db: float = 0.1
    olla_limit_db: float = 10.0
    feedback_delay_ttis: int = 4
    max_harq_retx: int = 3
    avg_snr_range_db: tuple = (0.0, 20.0)
    # per-TTI correlation of the complex fading gain; 0 gives i.i.d. block fading
    fading_corr: float = 0.0
    bler_slope_db: float = 0.5
    avg_window: int = 100
    epsilon_init: float = 1.0
    metrics_window: int = 200
    mcs_table_path: str = None
    seed: int = 0

    def __post_init__(self):
        self.avg_snr_range_db = tuple(float(v) for v in self.avg_snr_range_db)

    def validate(self):
        if self.n_ue < 2:
            raise ConfigError(f"n_ue must be >= 2, got {self.n_ue}")
        if not 0.0 < self.target_bler < 1.0:
            raise ConfigError(f"target_bler must be in (0, 1), got {self.target_bler}")
        ratio = self.target_bler / (1.0 - self.target_bler)
        if abs(self.olla_step_up_db - self.olla_step_down_db * ratio) > 1e-9:
            raise ConfigError(
                "olla_step_up_db must equal olla_step_down_db * target_bler / (1 - target_bler); "
                f"got up={self.olla_step_up_db}, down={self.olla_step_down_db}"
            )
        lo, hi = self.avg_snr_range_db
        if lo > hi:
            raise ConfigError(f"avg_snr_range_db is reversed: {self.avg_snr_range_db}")
        if self.n_rb < 1 or self.rb_bandwidth_hz <= 0 or self.tti_s <= 0:
            raise ConfigError("n_rb, rb_bandwidth_hz and tti_s must be positive")
        if self.n_rb * self.rb_bandwidth_hz > self.bandwidth_hz:
            raise ConfigError("n_rb * rb_bandwidth_hz exceeds the carrier bandwidth")
        if self.feedback_delay_ttis < 0 or self.max_harq_retx < 0:
            raise ConfigError("feedback_delay_ttis and max_harq_retx must be >= 0")
        if not 0.0 <= self.fading_corr < 1.0:
            raise ConfigError(f"fading_corr must be in [0, 1), got {self.fading_corr}")
        if self.bler_slope_db <= 0:
            raise ConfigError("bler_slope_db must be positive")
        if self.avg_window < 1 or self.metrics_window < 1:
            raise ConfigError("avg_window and metrics_window must be >= 1")
        if self.epsilon_init <= 0:
            raise ConfigError("epsilon_init must be positive")
        return self

    def to_dict(self):
        d = asdict(self)
        d["avg_snr_range_db"] = list(self.avg_snr_range_db)
        return d

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown sim config keys: {sorted(unknown)}")
        return cls(**d)
