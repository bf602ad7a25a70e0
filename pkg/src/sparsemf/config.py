from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence


@dataclass
class PipelineConfig:
    """Hyperparameters for one embedding run.

    Exactly one of ``samples`` (absolute sample count M) and ``multiplier``
    (M = multiplier * window * m) should be given; ``resolve_samples`` turns
    either into M once the edge count is known. ``alpha`` only feeds the
    dense reference computations; the sampler always draws path lengths
    uniformly.
    """

    window: int = 10
    samples: int | None = None
    multiplier: float | None = None
    dim: int = 128
    negative: float = 1.0
    seed: int = 0
    threads: int = 1
    weighted: bool = False
    alpha: Sequence[float] | None = None

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.negative <= 0:
            raise ValueError("negative must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.samples is not None and self.multiplier is not None:
            raise ValueError("give samples or multiplier, not both")
        if self.samples is not None and self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.multiplier is not None and self.multiplier <= 0:
            raise ValueError("multiplier must be positive")
        if self.alpha is not None:
            self.alpha = tuple(float(a) for a in self.alpha)
            if len(self.alpha) != self.window:
                raise ValueError("alpha must have one entry per window step")
            if any(a < 0 for a in self.alpha) or abs(math.fsum(self.alpha) - 1.0) > 1e-12:
                raise ValueError("alpha must be nonnegative and sum to 1")

    def resolve_samples(self, m: int) -> int:
        if self.samples is not None:
            return int(self.samples)
        if self.multiplier is not None:
            return max(1, int(round(self.multiplier * self.window * m)))
        raise ValueError("neither samples nor multiplier is set")

    def weights_alpha(self) -> tuple[float, ...]:
        if self.alpha is not None:
            return tuple(self.alpha)
        return (1.0 / self.window,) * self.window

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["alpha"] is not None:
            d["alpha"] = list(d["alpha"])
        return d
