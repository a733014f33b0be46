"""Eavesdropper receivers: conventional symbol detection and exhaustive ML with scheme replay."""

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from src.errors import DegenerateChannelError, InfeasibleProblemError
from src.model import ChannelSet, Constellation, NoiseModel, PowerBudget, SymbolFrame
from src.schemes.base import PrecodingScheme

logger = logging.getLogger(__name__)

MAX_HYPOTHESES = 1_000_000


@dataclass(frozen=True)
class DetectionResult:
    """Detected symbol index; ``ambiguous`` flags an all-zero observation."""

    symbol_index: int
    metric: float
    ambiguous: bool = False


@dataclass(frozen=True)
class MlDetection:
    """Jointly detected symbol vector."""

    symbol_indices: tuple[int, ...]
    metric: float
    hypotheses: int


def detect_common(y: complex, constellation: Constellation) -> DetectionResult:
    """Pick the symbol whose phase sector contains y.

    Ties on a sector boundary go to the lower index.
    """
    if y == 0:
        return DetectionResult(symbol_index=0, metric=0.0, ambiguous=True)
    direction = y / abs(y)
    distances = np.abs(direction - constellation.symbols)
    index = int(np.argmin(distances))
    return DetectionResult(symbol_index=index, metric=float(distances[index]))


class SchemeReplayer:
    """Re-runs a scheme for hypothesized symbols with everything else Eve knows.

    Results are cached per hypothesis, so one replayer serves one channel-use.
    Hypotheses the scheme cannot solve map to None.
    """

    def __init__(
        self,
        scheme: PrecodingScheme,
        channels: ChannelSet,
        constellation: Constellation,
        budget: PowerBudget,
        noise: NoiseModel,
        frame: SymbolFrame,
    ):
        """Initialize with the scheme and the frame's public parameters."""
        self.scheme = scheme
        self.channels = channels
        self.constellation = constellation
        self.budget = budget
        self.noise = noise
        self.target_index = frame.target_index
        self.jamming_phase = frame.jamming_phase
        self._cache: dict[tuple[int, ...], np.ndarray | None] = {}

    def __len__(self) -> int:
        return len(self._cache)

    def __call__(self, indices: tuple[int, ...]) -> np.ndarray | None:
        if indices not in self._cache:
            frame = SymbolFrame.from_indices(indices, self.constellation, self.target_index, self.jamming_phase)
            try:
                signal = self.scheme.known_signal(self.channels, frame, self.constellation, self.budget, self.noise)
            except (InfeasibleProblemError, DegenerateChannelError) as e:
                logger.debug(f"Hypothesis {indices} not reproducible: {e}")
                signal = None
            self._cache[indices] = signal
        return self._cache[indices]


def detect_smart_ml(
    y_e: complex,
    channels: ChannelSet,
    replayer,
    constellation: Constellation,
    num_users: int,
) -> MlDetection:
    """Minimize |y_e - g_e^T x(h)|^2 over all M^K symbol hypotheses h.

    Raises:
        ValueError: If M^K exceeds MAX_HYPOTHESES
        RuntimeError: If no hypothesis can be reproduced
    """
    count = constellation.order**num_users
    if count > MAX_HYPOTHESES:
        raise ValueError(f"{count} hypotheses exceed the limit of {MAX_HYPOTHESES}")
    best_indices = None
    best_metric = np.inf
    for indices in itertools.product(range(constellation.order), repeat=num_users):
        signal = replayer(indices)
        if signal is None:
            continue
        metric = float(abs(y_e - channels.g_e @ signal) ** 2)
        if metric < best_metric:
            best_indices, best_metric = indices, metric
    if best_indices is None:
        raise RuntimeError("No symbol hypothesis could be reproduced")
    return MlDetection(symbol_indices=best_indices, metric=best_metric, hypotheses=count)
