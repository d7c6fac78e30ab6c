"""Three NIST SP 800-22 tests that stay meaningful on short bit streams:
frequency (monobit), frequency within a block, and runs."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np
from scipy.special import erfc, gammaincc

ALPHA = 0.01


def _as_bits(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64).ravel()
    if b.size == 0 or np.any((b != 0) & (b != 1)):
        raise ValueError("bitstream must be a non-empty sequence of 0/1")
    return b


def monobit(bits) -> float:
    b = _as_bits(bits)
    s_obs = abs(int(np.sum(2 * b - 1))) / sqrt(b.size)
    return float(erfc(s_obs / sqrt(2)))


def block_frequency(bits, block_size: int = 16) -> float:
    b = _as_bits(bits)
    n_blocks = b.size // block_size
    if n_blocks < 1:
        raise ValueError(f"need at least one block of {block_size} bits")
    pi = b[: n_blocks * block_size].reshape(n_blocks, block_size).mean(axis=1)
    chi2 = 4.0 * block_size * float(np.sum((pi - 0.5) ** 2))
    return float(gammaincc(n_blocks / 2.0, chi2 / 2.0))


def runs(bits) -> float:
    """Runs test; returns 0.0 when the monobit prerequisite fails."""
    b = _as_bits(bits)
    n = b.size
    pi = b.mean()
    if abs(pi - 0.5) >= 2.0 / sqrt(n):
        return 0.0
    v_obs = 1 + int(np.count_nonzero(np.diff(b)))
    num = abs(v_obs - 2.0 * n * pi * (1 - pi))
    return float(erfc(num / (2.0 * sqrt(2.0 * n) * pi * (1 - pi))))


@dataclass
class RandomnessReport:
    n_bits: int
    p_values: dict[str, float] = field(default_factory=dict)
    alpha: float = ALPHA

    def passed(self, test: str) -> bool:
        return self.p_values[test] >= self.alpha

    @property
    def overall_pass(self) -> bool:
        return all(p >= self.alpha for p in self.p_values.values())

    def to_dict(self) -> dict:
        return {"n_bits": self.n_bits, "alpha": self.alpha, "p_values": dict(self.p_values),
                "pass": {k: self.passed(k) for k in self.p_values},
                "overall_pass": self.overall_pass}


def randomness_tests(bitstream, min_len: int = 128, block_size: int = 16,
                     alpha: float = ALPHA) -> RandomnessReport:
    b = _as_bits(bitstream)
    if b.size < min_len:
        raise ValueError(f"bitstream has {b.size} bits; at least {min_len} required")
    return RandomnessReport(int(b.size), {
        "monobit": monobit(b),
        "block_frequency": block_frequency(b, block_size),
        "runs": runs(b),
    }, alpha)
