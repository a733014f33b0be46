"""Precoding result types shared by solvers and schemes."""

from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from src.regions import Region, Thresholds


class SchemeTag(StrEnum):
    P1 = "p1"
    P2 = "p2"
    P3 = "p3"
    P4 = "p4"
    RJS = "rjs"
    RPS = "rps"


@dataclass
class PrecodingSolution:
    """Precoders W = [w_1, ..., w_K, p] and what they achieve.

    ``b`` is the stacked vector the scheme transmits with, so the transmitted
    signal is ``W @ b``. For the random schemes the last column already carries
    the jamming amplitude sqrt(P_n).
    """

    W: np.ndarray
    b: np.ndarray
    thresholds: Thresholds
    transmit_power: float
    scheme: SchemeTag
    solver_path: str
    subregion: Region | None = None
    jamming_power: float = 0.0
    gamma_e: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def num_users(self) -> int:
        return self.W.shape[1] - 1

    def transmit_signal(self) -> np.ndarray:
        """The transmitted vector x = W b."""
        return self.W @ self.b

    def information_signal(self) -> np.ndarray:
        """The symbol-bearing part sum_i w_i s_i."""
        K = self.num_users
        return self.W[:, :K] @ self.b[:K]

    def summary(self) -> dict:
        """JSON-friendly description without the precoder matrix."""
        return {
            "scheme": str(self.scheme),
            "solver_path": self.solver_path,
            "subregion": str(self.subregion) if self.subregion is not None else None,
            "transmit_power": self.transmit_power,
            "jamming_power": self.jamming_power,
            "t": self.thresholds.t,
            "t_k": list(self.thresholds.t_k) if self.thresholds.t_k is not None else None,
            "t_e": self.thresholds.t_e,
            "gamma_e": self.gamma_e,
            **{k: v for k, v in self.details.items() if isinstance(v, (int, float, str, list))},
        }
