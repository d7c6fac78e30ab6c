"""Recursive two-hypothesis Bayesian filter over anomaly scores."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.integrate import trapezoid


@dataclass(frozen=True)
class LogNormal:
    mu: float       # mean of log(score)
    sigma: float    # std of log(score)

    def pdf(self, x: float) -> float:
        if x <= 0:
            return 0.0
        z = (math.log(x) - self.mu) / self.sigma
        return math.exp(-0.5 * z * z) / (x * self.sigma * math.sqrt(2 * math.pi))


@dataclass(frozen=True)
class LikelihoodModel:
    benign: LogNormal
    anomalous: LogNormal
    floor: float = 1e-6

    def __post_init__(self):
        if not self.floor > 0:
            raise ValueError("likelihood floor must be positive")

    def likelihoods(self, score: float) -> tuple[float, float]:
        """Floored ``(L_anomalous, L_benign)`` for one score."""
        return (max(self.anomalous.pdf(score), self.floor),
                max(self.benign.pdf(score), self.floor))

    def normalization_error(self, n: int = 20001) -> float:
        """Largest deviation from 1 of either density's numeric integral."""
        errs = []
        for d in (self.benign, self.anomalous):
            u = np.linspace(d.mu - 12 * d.sigma, d.mu + 12 * d.sigma, n)
            x = np.exp(u)
            y = np.array([d.pdf(v) for v in x])
            errs.append(abs(trapezoid(y, x) - 1.0))
        return float(max(errs))

    def to_dict(self) -> dict:
        return {"benign": vars(self.benign), "anomalous": vars(self.anomalous),
                "floor": self.floor}


@dataclass(frozen=True)
class BayesConfig:
    decision_threshold: float = 0.9
    forgetting: float = 0.95
    initial_prior: float = 0.01

    def __post_init__(self):
        for name in ("decision_threshold", "initial_prior"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if not 0.0 < self.forgetting <= 1.0:
            raise ValueError(f"forgetting must lie in (0, 1], got {self.forgetting}")


@dataclass(frozen=True)
class PosteriorState:
    p_anomalous: float
    prior_at_reset: float
    forgetting: float = 1.0
    frames_seen: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_anomalous <= 1.0:
            raise ValueError(f"p_anomalous must lie in [0, 1], got {self.p_anomalous}")

    @classmethod
    def initial(cls, cfg: BayesConfig) -> "PosteriorState":
        return cls(cfg.initial_prior, cfg.initial_prior, cfg.forgetting, 0)


def update(state: PosteriorState, score: float, lm: LikelihoodModel) -> PosteriorState:
    """Forget toward the reset prior, then apply Bayes' rule to one score."""
    if not math.isfinite(score):
        raise ValueError(f"score must be finite, got {score}")
    lam = state.forgetting
    prior = lam * state.p_anomalous + (1 - lam) * state.prior_at_reset
    l1, l0 = lm.likelihoods(score)
    num = prior * l1
    post = num / (num + (1 - prior) * l0)
    return replace(state, p_anomalous=min(1.0, max(0.0, post)),
                   frames_seen=state.frames_seen + 1)


def decide(state: PosteriorState, cfg: BayesConfig) -> str:
    """'alert' iff the posterior reaches the threshold (inclusive)."""
    return "alert" if state.p_anomalous >= cfg.decision_threshold else "no_alert"


def _lognormal_fit(scores, name: str) -> LogNormal:
    x = np.asarray(scores, dtype=float)
    if len(x) < 20:
        raise ValueError(f"{name}: need at least 20 scores, got {len(x)}")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ValueError(f"{name}: scores must be finite and positive")
    lx = np.log(x)
    sigma = float(lx.std())
    if sigma == 0:
        raise ValueError(f"{name}: scores have zero spread; add a small jitter before fitting")
    return LogNormal(float(lx.mean()), sigma)


def fit_likelihoods(benign_scores, attack_scores, floor: float = 1e-6) -> LikelihoodModel:
    """Log-normal density per class by log-moment matching (population std)."""
    return LikelihoodModel(_lognormal_fit(benign_scores, "benign"),
                           _lognormal_fit(attack_scores, "attack"), floor)


def write_posterior_csv(rows: Iterable[tuple], path: str | Path) -> None:
    """Rows of ``(frame_index, score, posterior, decision)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame_index", "score", "posterior", "decision"])
        for r in rows:
            w.writerow(r)
