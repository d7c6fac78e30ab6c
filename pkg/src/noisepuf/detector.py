"""PCA reconstruction-error scoring and an epsilon-greedy threshold bandit."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .metrics import ConfusionCounts


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray          # k x n, orthonormal rows
    explained_variance: np.ndarray

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.components.shape[1]

    def to_dict(self) -> dict:
        return {"k": self.k, "mean": self.mean.tolist(),
                "components": self.components.ravel().tolist(),
                "explained_variance": self.explained_variance.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        mean = np.asarray(d["mean"], float)
        comps = np.asarray(d["components"], float).reshape(int(d["k"]), len(mean))
        return cls(mean, comps, np.asarray(d["explained_variance"], float))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "PcaModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def fit_pca(features: np.ndarray, k: int) -> PcaModel:
    """Principal components of the mean-centred rows of ``features``.

    Components are ordered by descending variance; each is signed so that its
    largest-magnitude element is positive. Variances use the N - 1 divisor.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    m, n = X.shape
    if m < 2:
        raise ValueError("fit_pca needs at least 2 rows")
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k={k} must lie in [1, min(m, n)={min(m, n)}]")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    comps = vt[:k].copy()
    flip = np.sign(comps[np.arange(k), np.argmax(np.abs(comps), axis=1)])
    comps *= flip[:, None]
    return PcaModel(mean, comps, s[:k] ** 2 / (m - 1))


def choose_k(features: np.ndarray, var_target: float = 0.95, k_max: int = 8) -> int:
    """Smallest k whose components explain ``var_target`` of the variance, capped."""
    X = np.asarray(features, dtype=float)
    s = np.linalg.svd(X - X.mean(axis=0), compute_uv=False)
    var = s**2
    if var.sum() == 0:
        return 1
    frac = np.cumsum(var) / var.sum()
    k = int(np.searchsorted(frac, var_target) + 1)
    return max(1, min(k, k_max, *X.shape))


def residual(model: PcaModel, f) -> np.ndarray:
    v = np.asarray(getattr(f, "values", f), dtype=float)
    if v.shape != model.mean.shape:
        raise ValueError(f"feature length {v.shape[0]} != model length {model.mean.shape[0]}")
    c = v - model.mean
    return c - model.components.T @ (model.components @ c)


def anomaly_score(model: PcaModel, f) -> float:
    """Squared reconstruction error of ``f`` outside the principal subspace."""
    r = residual(model, f)
    return float(r @ r)


# -- threshold bandit ------------------------------------------------------------

@dataclass(frozen=True)
class RewardConfig:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")


def reward(outcome: ConfusionCounts | Mapping[str, int], cfg: RewardConfig = RewardConfig()) -> float:
    c = outcome if isinstance(outcome, ConfusionCounts) else ConfusionCounts(**outcome)
    return cfg.alpha * c.tp - cfg.beta * c.fp


@dataclass(eq=False)
class ThresholdPolicy:
    """Candidate thresholds and their running value estimates.

    Mutated in place by :func:`rl_update`; one writer per detection stream.
    """

    grid: np.ndarray
    q_values: np.ndarray
    epsilon: float = 0.1
    learning_rate: float = 0.1
    current_index: int = 0

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.q_values = np.asarray(self.q_values, dtype=float).copy()
        if self.grid.ndim != 1 or len(self.grid) < 1:
            raise ValueError("grid must be a non-empty 1-D array")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if self.q_values.shape != self.grid.shape:
            raise ValueError("q_values must match the grid")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if not 0 <= self.current_index < len(self.grid):
            raise ValueError("current_index out of range")

    @property
    def threshold(self) -> float:
        return float(self.grid[self.current_index])

    @property
    def greedy_index(self) -> int:
        return int(np.argmax(self.q_values))

    def copy(self) -> "ThresholdPolicy":
        return ThresholdPolicy(self.grid.copy(), self.q_values.copy(), self.epsilon,
                               self.learning_rate, self.current_index)

    def to_dict(self) -> dict:
        return {"grid": self.grid.tolist(), "q_values": self.q_values.tolist(),
                "epsilon": self.epsilon, "learning_rate": self.learning_rate,
                "current_index": self.current_index}

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdPolicy":
        return cls(np.asarray(d["grid"]), np.asarray(d["q_values"]), d["epsilon"],
                   d["learning_rate"], int(d["current_index"]))


def make_policy(benign_scores, n_points: int = 32, lo_pct: float = 50.0, hi_pct: float = 99.9,
                epsilon: float = 0.1, learning_rate: float = 0.1,
                start_pct: float = 99.0) -> ThresholdPolicy:
    """Evenly spaced grid between two percentiles of benign training scores.

    The policy starts on the grid point nearest the ``start_pct`` percentile.
    """
    s = np.asarray(benign_scores, dtype=float)
    lo, hi = np.percentile(s, [lo_pct, hi_pct])
    if not hi > lo:
        raise ValueError("benign scores are degenerate; cannot span a threshold grid")
    grid = np.linspace(lo, hi, n_points)
    start = int(np.argmin(np.abs(grid - np.percentile(s, start_pct))))
    return ThresholdPolicy(grid, np.zeros(n_points), epsilon, learning_rate, start)


def classify(score: float, policy: ThresholdPolicy) -> str:
    """'anomalous' iff the score is strictly above the current threshold."""
    return "anomalous" if score > policy.grid[policy.current_index] else "normal"


def rl_update(policy: ThresholdPolicy, batch_outcome: ConfusionCounts | Mapping[str, int],
              cfg: RewardConfig, rng: np.random.Generator) -> ThresholdPolicy:
    """Credit the batch reward to the active threshold, then pick the next one.

    Exploits (argmax q, ties to the lower index) with probability
    ``1 - epsilon``, otherwise picks uniformly. Draws exactly two numbers from
    ``rng`` per call so replay is insensitive to which branch ran.
    """
    r = reward(batch_outcome, cfg)
    i = policy.current_index
    policy.q_values[i] += policy.learning_rate * (r - policy.q_values[i])
    u = rng.random()
    j = int(rng.integers(len(policy.grid)))
    policy.current_index = j if u < policy.epsilon else policy.greedy_index
    return policy
