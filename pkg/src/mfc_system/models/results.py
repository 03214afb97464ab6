"""
Result records shared by the simulators and the trainer
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class ValueEstimate:
    """Monte-Carlo estimate of a discounted value, truncated at `horizon`"""
    mean: float
    stderr: float
    rollouts: int
    horizon: int
    tail_bound: float

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "rollouts": self.rollouts,
            "horizon": self.horizon,
            "tail_bound": self.tail_bound,
        }
