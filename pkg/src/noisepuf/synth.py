"""Synthetic wide-bandgap switching-noise generator and attack injectors.

The generator stands in for a transistor-level converter model. Each device
emits switching harmonics at ``k * f_sw`` (amplitude ``1/k``), each flanked by
a comb of odd-order modulation sidebands at ``k * f_sw +/- (2m - 1) * f_mod``.
Manufacturing spread enters through per-device harmonic gains/phases, a small
switching-frequency offset, per-line sideband gains/phases and a per-line load
coupling. Gaussian and uniform additive noise complete the trace.

Acquisition is modelled as triggered on the modulation reference, so every
trace starts at the same point of the deterministic waveform and only the
additive noise differs between repeated measurements.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Literal

import numpy as np

TraceLabel = Literal["benign", "emi_spoof", "tamper", "impersonation"]
LABELS: tuple[str, ...] = ("benign", "emi_spoof", "tamper", "impersonation")
ATTACK_KINDS: tuple[str, ...] = ("emi_spoof", "tamper", "impersonation")


@dataclass(frozen=True)
class SynthConfig:
    """Generator constants shared by every device of a fleet."""

    sample_rate: float = 1_000_000.0
    n_harmonics: int = 4
    sideband_level: float = 0.1        # sideband line amplitude relative to its carrier
    modulation_freq: float = 312.5     # Hz; lines sit at odd multiples of this
    n_sideband_pairs: int = 8
    snr_db: float = 30.0               # carrier RMS over noise RMS at load 1.0
    temp_coeff: float = 1e-3           # fractional amplitude change per degC
    ref_temperature: float = 25.0
    gaussian_fraction: float = 0.5     # share of noise variance that is Gaussian
    min_samples: int = 4096            # one default STFT window

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.n_harmonics < 1:
            raise ValueError("n_harmonics must be >= 1")
        if self.n_sideband_pairs < 0 or self.sideband_level < 0:
            raise ValueError("sideband settings must be nonnegative")
        if not 0.0 <= self.gaussian_fraction <= 1.0:
            raise ValueError("gaussian_fraction must lie in [0, 1]")

    @property
    def sideband_offsets(self) -> np.ndarray:
        """Offsets (Hz) of the sideband lines around every harmonic, ascending."""
        m = np.arange(1, self.n_sideband_pairs + 1)
        pos = (2 * m - 1) * self.modulation_freq
        return np.concatenate([-pos[::-1], pos])

    @property
    def noise_sigma(self) -> float:
        """Total additive-noise std for a unit noise_floor_gain."""
        k = np.arange(1, self.n_harmonics + 1)
        rms = np.sqrt(0.5 * np.sum(1.0 / k**2))
        return float(rms / 10 ** (self.snr_db / 20))


@dataclass(frozen=True)
class OperatingCondition:
    switching_freq: float = 100_000.0
    load_level: float = 1.0
    temperature: float = 25.0

    def __post_init__(self):
        if not self.switching_freq > 0:
            raise ValueError(f"switching_freq must be > 0, got {self.switching_freq}")
        if not 0.0 <= self.load_level <= 1.0:
            raise ValueError(f"load_level must lie in [0, 1], got {self.load_level}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "OperatingCondition":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class DeviceProfile:
    """Hidden per-device parameters. Arrays are indexed [harmonic, line]."""

    device_id: int
    seed: int
    harmonic_gains: np.ndarray
    harmonic_phase_offsets: np.ndarray
    parasitic_jitter: float
    noise_floor_gain: float
    sideband_gains: np.ndarray
    sideband_phases: np.ndarray
    sideband_load_coupling: np.ndarray

    def __post_init__(self):
        if np.any(self.harmonic_gains <= 0):
            raise ValueError("harmonic_gains must be strictly positive")

    def __eq__(self, other):
        if not isinstance(other, DeviceProfile):
            return NotImplemented
        a, b = self.to_dict(), other.to_dict()
        return a == b

    def to_dict(self) -> dict:
        return {
            "device_id": self.device_id,
            "seed": self.seed,
            "harmonic_gains": self.harmonic_gains.tolist(),
            "harmonic_phase_offsets": self.harmonic_phase_offsets.tolist(),
            "parasitic_jitter": self.parasitic_jitter,
            "noise_floor_gain": self.noise_floor_gain,
            "sideband_gains": self.sideband_gains.tolist(),
            "sideband_phases": self.sideband_phases.tolist(),
            "sideband_load_coupling": self.sideband_load_coupling.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DeviceProfile":
        arr = {k: np.asarray(v, dtype=float) for k, v in d.items()
               if isinstance(v, list)}
        return cls(device_id=int(d["device_id"]), seed=int(d["seed"]),
                   parasitic_jitter=float(d["parasitic_jitter"]),
                   noise_floor_gain=float(d["noise_floor_gain"]), **arr)


@dataclass(frozen=True, eq=False)
class NoiseTrace:
    samples: np.ndarray
    sample_rate: float
    device_id: int
    condition: OperatingCondition
    label: str = "benign"
    seed: int | None = None

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("trace samples must be finite")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def time(self) -> np.ndarray:
        return np.arange(len(self.samples)) / self.sample_rate

    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.samples**2)))


@dataclass(frozen=True, eq=False)
class AttackSpec:
    kind: str
    amplitude: float = 0.0
    freq_offset: float = 0.0
    sigma: float = 0.0
    phase: float = 0.0
    rogue_profile: DeviceProfile | None = None

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.kind == "impersonation" and self.rogue_profile is None:
            raise ValueError("impersonation needs a rogue_profile")


def make_device_profile(seed: int, variability: float, device_id: int | None = None,
                        config: SynthConfig = SynthConfig()) -> DeviceProfile:
    """Draw the hidden parameters of one virtual device.

    Harmonic gains are uniform in ``[1 - v, 1 + v]``. Sideband gains spread five
    times wider (capped at +/-0.95) since the parasitic resonances behind them
    are more layout-sensitive than the fundamental switching edges. The switching
    frequency is offset by a fraction uniform in ``+/- v * 1e-3``.
    """
    if not 0.0 < variability <= 0.5:
        raise ValueError(f"variability must lie in (0, 0.5], got {variability}")
    rng = np.random.default_rng(seed)
    K = config.n_harmonics
    L = 2 * config.n_sideband_pairs
    sb_spread = min(0.95, 5.0 * variability)
    return DeviceProfile(
        device_id=int(seed if device_id is None else device_id),
        seed=int(seed),
        harmonic_gains=rng.uniform(1 - variability, 1 + variability, K),
        harmonic_phase_offsets=rng.uniform(0.0, 2 * np.pi, K),
        parasitic_jitter=float(rng.uniform(-variability * 1e-3, variability * 1e-3)),
        noise_floor_gain=float(rng.uniform(1 - variability, 1 + variability)),
        sideband_gains=rng.uniform(1 - sb_spread, 1 + sb_spread, (K, L)),
        sideband_phases=rng.uniform(0.0, 2 * np.pi, (K, L)),
        sideband_load_coupling=rng.uniform(-1.0, 1.0, (K, L)),
    )


def highest_frequency(profile: DeviceProfile, cond: OperatingCondition,
                      config: SynthConfig) -> float:
    f0 = cond.switching_freq * (1 + abs(profile.parasitic_jitter))
    top = config.n_harmonics * f0
    if config.n_sideband_pairs and config.sideband_level > 0:
        top += config.sideband_offsets[-1]
    return top


def synthesize_samples(profile: DeviceProfile, cond: OperatingCondition, n_samples: int,
                       rng_seed: int, config: SynthConfig = SynthConfig()) -> np.ndarray:
    """Sample-count variant of :func:`synthesize_trace` returning a bare array."""
    K = config.n_harmonics
    if profile.harmonic_gains.shape != (K,):
        raise ValueError(f"profile has {profile.harmonic_gains.shape[0]} harmonics, "
                         f"config expects {K}")
    if n_samples < config.min_samples:
        raise ValueError(f"trace needs at least {config.min_samples} samples "
                         f"({config.min_samples / config.sample_rate:.6g} s), got {n_samples}")
    fs = config.sample_rate
    top = highest_frequency(profile, cond, config)
    if top >= fs / 2:
        raise ValueError(f"highest modeled frequency {top:.0f} Hz is not below "
                         f"Nyquist ({fs / 2:.0f} Hz)")

    t = np.arange(n_samples) / fs
    k = np.arange(1, K + 1)
    scale = cond.load_level * (1 + config.temp_coeff * (cond.temperature - config.ref_temperature))
    amp = scale / k
    env_const = amp * profile.harmonic_gains * np.exp(1j * profile.harmonic_phase_offsets)
    env = np.broadcast_to(env_const[:, None], (K, n_samples))

    J = config.n_sideband_pairs
    if J and config.sideband_level > 0:
        lines = (profile.sideband_gains
                 * (1 + profile.sideband_load_coupling * (cond.load_level - 1.0)))
        coef = (config.sideband_level * amp)[:, None] * lines * np.exp(1j * profile.sideband_phases)
        # odd powers of the modulation phasor, built by repeated multiplication
        base = np.exp(2j * np.pi * config.modulation_freq * t)
        step = base * base
        mod = np.empty((2 * J, n_samples), dtype=complex)
        up, down = base, base.conj()
        for m in range(J):
            mod[J + m] = up
            mod[J - 1 - m] = down
            up = up * step
            down = down * step.conj()
        env = env + coef @ mod

    z = np.exp(2j * np.pi * cond.switching_freq * (1 + profile.parasitic_jitter) * t)
    acc = np.zeros(n_samples, dtype=complex)
    for i in range(K - 1, -1, -1):      # Horner: sum_k env_k z^k
        acc = (acc + env[i]) * z
    x = acc.imag

    sigma = config.noise_sigma * profile.noise_floor_gain
    if sigma > 0:
        rng = np.random.default_rng(rng_seed)
        g = config.gaussian_fraction
        x = x + rng.normal(0.0, sigma * np.sqrt(g), n_samples)
        half = sigma * np.sqrt(3 * (1 - g))
        x = x + rng.uniform(-half, half, n_samples)
    return x


def synthesize_trace(profile: DeviceProfile, cond: OperatingCondition, duration: float,
                     rng_seed: int, config: SynthConfig = SynthConfig()) -> NoiseTrace:
    """Generate one benign trace of ``duration`` seconds."""
    n = int(round(duration * config.sample_rate))
    x = synthesize_samples(profile, cond, n, rng_seed, config)
    return NoiseTrace(x, config.sample_rate, profile.device_id, cond, "benign", int(rng_seed))


def emi_waveform(n_samples: int, sample_rate: float, freq: float, amplitude: float,
                 phase: float = 0.0) -> np.ndarray:
    t = np.arange(n_samples) / sample_rate
    return amplitude * np.sin(2 * np.pi * freq * t + phase)


def inject_emi_spoof(trace: NoiseTrace, spec: AttackSpec) -> NoiseTrace:
    """Add a sinusoid at ``f_sw + freq_offset`` scaled to the trace RMS."""
    if spec.kind != "emi_spoof":
        raise ValueError(f"inject_emi_spoof needs kind 'emi_spoof', got {spec.kind!r}")
    x = trace.samples
    if spec.amplitude > 0:
        x = x + emi_waveform(len(x), trace.sample_rate,
                             trace.condition.switching_freq + spec.freq_offset,
                             spec.amplitude * trace.rms(), spec.phase)
    return replace(trace, samples=x, label="emi_spoof")


def inject_tamper(trace: NoiseTrace, spec: AttackSpec, rng_seed: int = 0) -> NoiseTrace:
    """Add zero-mean Gaussian noise of std ``spec.sigma``."""
    if spec.kind != "tamper":
        raise ValueError(f"inject_tamper needs kind 'tamper', got {spec.kind!r}")
    x = trace.samples
    if spec.sigma > 0:
        rng = np.random.default_rng(rng_seed)
        x = x + rng.normal(0.0, spec.sigma, len(x))
    return replace(trace, samples=x, label="tamper")


# -- file export ---------------------------------------------------------------

def save_trace(trace: NoiseTrace, path: str | Path) -> Path:
    """Write ``<path>.f32`` (little-endian float32) and ``<path>.json`` sidecar."""
    path = Path(path)
    stem = path.with_suffix("") if path.suffix in (".f32", ".json") else path
    stem.parent.mkdir(parents=True, exist_ok=True)
    trace.samples.astype("<f4").tofile(stem.with_suffix(".f32"))
    meta = {
        "sample_rate": trace.sample_rate,
        "device_id": trace.device_id,
        "condition": trace.condition.to_dict(),
        "label": trace.label,
        "seed": trace.seed,
        "n_samples": len(trace.samples),
        "dtype": "float32-le",
    }
    stem.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return stem.with_suffix(".f32")


def load_trace(path: str | Path) -> NoiseTrace:
    path = Path(path)
    stem = path.with_suffix("") if path.suffix in (".f32", ".json") else path
    meta = json.loads(stem.with_suffix(".json").read_text())
    x = np.fromfile(stem.with_suffix(".f32"), dtype="<f4").astype(float)
    if len(x) != meta["n_samples"]:
        raise ValueError(f"{stem}: expected {meta['n_samples']} samples, found {len(x)}")
    return NoiseTrace(x, float(meta["sample_rate"]), int(meta["device_id"]),
                      OperatingCondition.from_dict(meta["condition"]), meta["label"],
                      meta.get("seed"))


def save_trace_csv(trace: NoiseTrace, path: str | Path) -> None:
    t = trace.time()
    np.savetxt(path, np.column_stack([t, trace.samples]), delimiter=",",
               header="time_s,sample", comments="")
