"""Single-cell downlink scheduling simulator with PF baselines and a DDPG scheduler."""

__version__ = "0.1.0"
