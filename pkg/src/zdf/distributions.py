"""Output-degree and shift distributions, with inverse-CDF sampling."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

SUM_TOLERANCE = 1e-5

# numpy bit generator used for every random draw; recorded in experiment output
RNG_ALGORITHM = "numpy.PCG64"


class DistributionError(ValueError):
    pass


@dataclass(frozen=True)
class DegreeDistribution:
    """Tabulated distribution over positive degrees, ``Omega(x) = sum Omega_d x^d``."""

    degrees: tuple
    probs: tuple
    cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        validate_degrees(self.degrees, self.probs)
        cdf = np.cumsum(np.asarray(self.probs, dtype=float))
        # residual mass from rounding in published tables goes to the top degree
        cdf[-1] = 1.0
        cdf.setflags(write=False)
        object.__setattr__(self, "cdf", cdf)

    @classmethod
    def from_pairs(cls, pairs) -> "DegreeDistribution":
        pairs = list(pairs)
        return cls(tuple(int(d) for d, _ in pairs), tuple(float(p) for _, p in pairs))

    @property
    def max_degree(self) -> int:
        return self.degrees[-1]

    def mean(self) -> float:
        return float(np.dot(self.degrees, self.probs))

    def pmf(self, d: int) -> float:
        try:
            return self.probs[self.degrees.index(d)]
        except ValueError:
            return 0.0


@dataclass(frozen=True)
class ShiftDistribution:
    """Distribution of shift amounts 0..D, ``Delta(x) = sum Delta_i x^i``."""

    probs: tuple

    def __post_init__(self):
        validate_shifts(self.probs)

    @property
    def max_shift(self) -> int:
        return len(self.probs) - 1


def validate_degrees(degrees: Sequence[int], probs: Sequence[float]) -> None:
    if len(degrees) == 0:
        raise DistributionError("degree distribution has no entries")
    if len(degrees) != len(probs):
        raise DistributionError("degrees and probabilities differ in length")
    if any(d < 1 for d in degrees):
        raise DistributionError("degrees must be positive")
    if any(b <= a for a, b in zip(degrees, degrees[1:])):
        raise DistributionError("degrees must be strictly increasing")
    if any(not 0 < p <= 1 for p in probs):
        raise DistributionError("probabilities must lie in (0, 1]")
    total = sum(probs)
    if abs(total - 1) > SUM_TOLERANCE:
        raise DistributionError(f"probabilities sum to {total}, not 1")


def validate_shifts(probs: Sequence[float]) -> None:
    if len(probs) == 0:
        raise DistributionError("shift distribution has no entries")
    if any(p < 0 or p > 1 for p in probs):
        raise DistributionError("shift probabilities must lie in [0, 1]")
    total = sum(probs)
    if abs(total - 1) > SUM_TOLERANCE:
        raise DistributionError(f"shift probabilities sum to {total}, not 1")


def validate(dist) -> None:
    """Re-check the invariants of either distribution type."""
    if isinstance(dist, DegreeDistribution):
        validate_degrees(dist.degrees, dist.probs)
    elif isinstance(dist, ShiftDistribution):
        validate_shifts(dist.probs)
    else:
        raise DistributionError(f"not a distribution: {type(dist).__name__}")


def sample_degree(dist: DegreeDistribution, u: float) -> int:
    """Smallest degree whose cumulative probability exceeds ``u``."""
    if not 0 <= u < 1:
        raise ValueError(f"u must lie in [0, 1), got {u}")
    return dist.degrees[int(np.searchsorted(dist.cdf, u, side="right"))]


def sample_degrees(dist: DegreeDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    idx = np.searchsorted(dist.cdf, rng.random(size), side="right")
    return np.asarray(dist.degrees)[idx]


def normalize_shifts(raw: Sequence[int]) -> tuple:
    lo = min(raw)
    return tuple(int(s) - lo for s in raw)


def sample_shifts(dist: ShiftDistribution, d: int, rng: np.random.Generator) -> tuple:
    """Draw ``d`` i.i.d. shifts and subtract their minimum."""
    if d < 1:
        raise ValueError("degree must be at least 1")
    raw = rng.choice(len(dist.probs), size=d, p=dist.probs)
    return normalize_shifts(raw)


DEFAULT_OMEGA = DegreeDistribution.from_pairs([
    (1, 0.007969), (2, 0.493570), (3, 0.166220), (4, 0.072646), (5, 0.082558),
    (8, 0.056058), (9, 0.037229), (19, 0.055590), (65, 0.025023), (66, 0.003135),
])
DEFAULT_DELTA = ShiftDistribution((0.5, 0.5))

PRESETS = {
    "zdf-paper-omega": DEFAULT_OMEGA,
    "zdf-paper-delta": DEFAULT_DELTA,
}


def parse_pairs(text: str) -> list:
    """Parse ``key:probability`` lines; blank lines and ``#`` comments are skipped."""
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            key, prob = line.split(":")
            pairs.append((int(key), float(prob)))
        except ValueError:
            raise DistributionError(f"line {lineno}: expected 'int:float', got {line!r}") from None
    return pairs


def load_degree_distribution(path) -> DegreeDistribution:
    return DegreeDistribution.from_pairs(parse_pairs(Path(path).read_text()))


def load_shift_distribution(path) -> ShiftDistribution:
    pairs = dict(parse_pairs(Path(path).read_text()))
    if not pairs or min(pairs) < 0:
        raise DistributionError("shift amounts must be non-negative")
    return ShiftDistribution(tuple(pairs.get(i, 0.0) for i in range(max(pairs) + 1)))


def resolve(name_or_path: str, kind: str):
    """Look up a preset by name, or load a distribution file."""
    if name_or_path in PRESETS:
        dist = PRESETS[name_or_path]
    elif not Path(name_or_path).is_file():
        raise DistributionError(
            f"{name_or_path!r} is neither a preset ({', '.join(PRESETS)}) nor a file")
    elif kind == "degree":
        dist = load_degree_distribution(name_or_path)
    else:
        dist = load_shift_distribution(name_or_path)
    want = DegreeDistribution if kind == "degree" else ShiftDistribution
    if not isinstance(dist, want):
        raise DistributionError(f"{name_or_path!r} is not a {kind} distribution")
    return dist
