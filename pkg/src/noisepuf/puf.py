"""Noise-PUF core: calibration, quantization, CRP enrollment, authentication
and the usual PUF quality metrics."""
from __future__ import annotations

import enum
import itertools
import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._seeds import derive_seed
from .spectral import FeatureConfig, FeatureExtractor, FeatureVector, StftConfig
from .synth import DeviceProfile, OperatingCondition, SynthConfig, synthesize_samples

DB_VERSION = 1


@dataclass(frozen=True)
class PufConfig:
    theta: float = 0.0
    auth_threshold: float = 0.10

    def __post_init__(self):
        if not 0.0 <= self.auth_threshold < 0.5:
            raise ValueError(f"auth_threshold must lie in [0, 0.5), got {self.auth_threshold}")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything needed to turn a device + challenge into a feature vector."""

    synth: SynthConfig = SynthConfig()
    stft: StftConfig = StftConfig()
    features: FeatureConfig = FeatureConfig()
    puf: PufConfig = PufConfig()
    measure_samples: int = 16384

    def extractor(self, switching_freq: float) -> FeatureExtractor:
        return _extractor(self.synth.sample_rate, switching_freq, self.stft, self.features)


@lru_cache(maxsize=32)
def _extractor(fs, f_sw, stft_cfg, feat_cfg) -> FeatureExtractor:
    return FeatureExtractor(fs, f_sw, stft_cfg, feat_cfg)


@dataclass(frozen=True, eq=False)
class CalibrationStats:
    mean: np.ndarray
    std: np.ndarray
    n_samples: int

    def __post_init__(self):
        if self.mean.shape != self.std.shape:
            raise ValueError("mean and std must have the same length")
        if np.any(self.std < 0):
            raise ValueError("std must be nonnegative")

    def __len__(self) -> int:
        return len(self.mean)

    def __eq__(self, other):
        return (isinstance(other, CalibrationStats) and self.n_samples == other.n_samples
                and np.array_equal(self.mean, other.mean) and np.array_equal(self.std, other.std))


@dataclass(frozen=True)
class Challenge:
    challenge_id: str
    condition: OperatingCondition = OperatingCondition()

    def to_dict(self) -> dict:
        return {"challenge_id": self.challenge_id, "condition": self.condition.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "Challenge":
        return cls(d["challenge_id"], OperatingCondition.from_dict(d["condition"]))


def default_challenges(n: int = 5, switching_freq: float = 100_000.0,
                       temperature: float = 25.0) -> list[Challenge]:
    """``n`` challenges stepping the load down from 1.0 in 0.1 increments."""
    if not 1 <= n <= 6:
        raise ValueError("default challenge set holds 1..6 challenges")
    return [Challenge(f"C{i}", OperatingCondition(switching_freq, round(1.0 - 0.1 * i, 3),
                                                  temperature))
            for i in range(n)]


@dataclass(frozen=True, eq=False)
class PufResponse:
    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.uint8)
        if b.ndim != 1 or np.any(b > 1):
            raise ValueError("bits must be a 1-D array of 0/1")
        object.__setattr__(self, "bits", b)

    def __len__(self) -> int:
        return len(self.bits)

    def __eq__(self, other):
        return isinstance(other, PufResponse) and np.array_equal(self.bits, other.bits)

    def to_hex(self) -> str:
        return np.packbits(self.bits).tobytes().hex()

    @classmethod
    def from_hex(cls, text: str, n_bits: int) -> "PufResponse":
        raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
        return cls(np.unpackbits(raw)[:n_bits])


@dataclass(frozen=True, eq=False)
class CrpRecord:
    device_id: int
    challenge: Challenge
    calibration: CalibrationStats
    reference: PufResponse

    @property
    def key(self) -> tuple[int, str]:
        return (self.device_id, self.challenge.challenge_id)

    def __eq__(self, other):
        return isinstance(other, CrpRecord) and self.to_dict() == other.to_dict()

    def to_dict(self) -> dict:
        return {
            "device_id": self.device_id,
            "challenge": self.challenge.to_dict(),
            "calibration": {
                "mean": self.calibration.mean.tolist(),
                "std": self.calibration.std.tolist(),
                "n_samples": self.calibration.n_samples,
            },
            "reference": self.reference.to_hex(),
            "n_bits": len(self.reference),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CrpRecord":
        cal = d["calibration"]
        return cls(int(d["device_id"]), Challenge.from_dict(d["challenge"]),
                   CalibrationStats(np.asarray(cal["mean"], float), np.asarray(cal["std"], float),
                                    int(cal["n_samples"])),
                   PufResponse.from_hex(d["reference"], int(d["n_bits"])))


@dataclass
class CrpDatabase:
    """CRP store keyed by ``(device_id, challenge_id)``.

    Reads may be concurrent; :meth:`add` assumes a single writer.
    """

    records: dict[tuple[int, str], CrpRecord] = field(default_factory=dict)
    version: int = DB_VERSION
    created_at: str | None = None
    pipeline: dict | None = None

    def add(self, record: CrpRecord) -> None:
        if record.key in self.records:
            raise KeyError(f"duplicate CRP key {record.key}")
        self.records[record.key] = record

    def extend(self, records: Iterable[CrpRecord]) -> None:
        for r in records:
            self.add(r)

    def get(self, device_id: int, challenge_id: str) -> CrpRecord | None:
        return self.records.get((device_id, challenge_id))

    def device_ids(self) -> list[int]:
        return sorted({k[0] for k in self.records})

    def challenges_for(self, device_id: int) -> list[Challenge]:
        return [r.challenge for k, r in sorted(self.records.items()) if k[0] == device_id]

    def __len__(self) -> int:
        return len(self.records)

    def to_json(self) -> str:
        doc = {
            "version": self.version,
            "created_at": self.created_at,
            "pipeline": self.pipeline,
            "records": [self.records[k].to_dict() for k in sorted(self.records)],
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CrpDatabase":
        doc = json.loads(text)
        if doc.get("version") != DB_VERSION:
            raise ValueError(f"unsupported CRP database version {doc.get('version')!r}")
        db = cls(version=doc["version"], created_at=doc.get("created_at"),
                 pipeline=doc.get("pipeline"))
        db.extend(CrpRecord.from_dict(r) for r in doc["records"])
        return db

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "CrpDatabase":
        return cls.from_json(Path(path).read_text())


def _as_array(f) -> np.ndarray:
    return np.asarray(f.values if isinstance(f, FeatureVector) else f, dtype=float)


def calibrate(features: Sequence[FeatureVector | np.ndarray]) -> CalibrationStats:
    """Element-wise sample mean and standard deviation (N - 1 divisor)."""
    if len(features) < 2:
        raise ValueError(f"calibration needs at least 2 feature vectors, got {len(features)}")
    rows = [_as_array(f) for f in features]
    n = len(rows[0])
    if any(len(r) != n for r in rows):
        raise ValueError("feature vectors differ in length")
    X = np.vstack(rows)
    return CalibrationStats(X.mean(axis=0), X.std(axis=0, ddof=1), len(rows))


def quantize(f: FeatureVector | np.ndarray, cal: CalibrationStats,
             cfg: PufConfig = PufConfig()) -> PufResponse:
    """Bit i is set iff ``f_i > mu_i + theta * sigma_i`` (ties give 0)."""
    v = _as_array(f)
    if len(v) != len(cal):
        raise ValueError(f"feature length {len(v)} != calibration length {len(cal)}")
    return PufResponse((v > cal.mean + cfg.theta * cal.std).astype(np.uint8))


# -- measurement & enrollment --------------------------------------------------

def measure_features(device: DeviceProfile, challenge: Challenge, pipeline: PipelineConfig,
                     rng_seed: int) -> np.ndarray:
    """Synthesize one challenge measurement and return its feature values."""
    x = synthesize_samples(device, challenge.condition, pipeline.measure_samples, rng_seed,
                           pipeline.synth)
    return pipeline.extractor(challenge.condition.switching_freq)(x)


def measure_response(device: DeviceProfile, challenge: Challenge, record: CrpRecord,
                     pipeline: PipelineConfig, rng_seed: int) -> PufResponse:
    return quantize(measure_features(device, challenge, pipeline, rng_seed),
                    record.calibration, pipeline.puf)


def calibration_features(device: DeviceProfile, challenge: Challenge, n_calib_traces: int,
                         pipeline: PipelineConfig) -> np.ndarray:
    if n_calib_traces < 8:
        raise ValueError(f"enrollment needs n_calib_traces >= 8, got {n_calib_traces}")
    return np.vstack([
        measure_features(device, challenge, pipeline,
                         derive_seed("calib", device.seed, challenge.challenge_id, i))
        for i in range(n_calib_traces)
    ])


def enroll(device: DeviceProfile, challenges: Sequence[Challenge], n_calib_traces: int,
           pipeline: PipelineConfig = PipelineConfig(),
           baseline: Mapping[str, CalibrationStats] | None = None) -> list[CrpRecord]:
    """Enroll one device under each challenge.

    The reference response is the quantized mean calibration feature vector.
    ``baseline`` supplies the per-challenge thresholds (normally the fleet
    population statistics from :func:`enroll_fleet`). Without it, the device's
    own calibration statistics are used; with ``theta = 0`` that makes every
    reference bit 0, because the mean never exceeds itself.
    """
    records = []
    for ch in challenges:
        feats = calibration_features(device, ch, n_calib_traces, pipeline)
        cal = baseline[ch.challenge_id] if baseline is not None else calibrate(feats)
        ref = quantize(feats.mean(axis=0), cal, pipeline.puf)
        records.append(CrpRecord(device.device_id, ch, cal, ref))
    return records


def enroll_fleet(devices: Sequence[DeviceProfile], challenges: Sequence[Challenge],
                 n_calib_traces: int, pipeline: PipelineConfig = PipelineConfig()
                 ) -> tuple[CrpDatabase, dict[str, CalibrationStats]]:
    """Enroll a fleet with per-challenge population thresholds.

    Returns the database and the population statistics, which can be passed as
    ``baseline`` to :func:`enroll` for devices added later.
    """
    per_dev = {d.device_id: {ch.challenge_id: calibration_features(d, ch, n_calib_traces, pipeline)
                             for ch in challenges} for d in devices}
    return build_database(per_dev, challenges, pipeline)


def build_database(features: Mapping[int, Mapping[str, np.ndarray]],
                   challenges: Sequence[Challenge], pipeline: PipelineConfig = PipelineConfig()
                   ) -> tuple[CrpDatabase, dict[str, CalibrationStats]]:
    """Assemble a database from calibration features indexed [device][challenge]."""
    ids = [ch.challenge_id for ch in challenges]
    if len(set(ids)) != len(ids):
        raise ValueError("challenge ids must be unique")
    baseline = {cid: calibrate(list(np.vstack([features[d][cid] for d in sorted(features)])))
                for cid in ids}
    db = CrpDatabase(pipeline=pipeline_to_dict(pipeline))
    for d in sorted(features):
        for ch in challenges:
            ref = quantize(np.asarray(features[d][ch.challenge_id]).mean(axis=0),
                           baseline[ch.challenge_id], pipeline.puf)
            db.add(CrpRecord(d, ch, baseline[ch.challenge_id], ref))
    return db, baseline


def pipeline_to_dict(p: PipelineConfig) -> dict:
    return asdict(p)


def pipeline_from_dict(d: dict) -> PipelineConfig:
    return PipelineConfig(SynthConfig(**d["synth"]), StftConfig(**d["stft"]),
                          FeatureConfig(**d["features"]), PufConfig(**d["puf"]),
                          int(d["measure_samples"]))


# -- authentication --------------------------------------------------------------

class AuthDecision(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    UNKNOWN_IDENTITY = "unknown_identity"


def hamming_fraction(a: PufResponse | np.ndarray, b: PufResponse | np.ndarray) -> float:
    a = a.bits if isinstance(a, PufResponse) else np.asarray(a)
    b = b.bits if isinstance(b, PufResponse) else np.asarray(b)
    if len(a) != len(b):
        raise ValueError(f"response lengths differ ({len(a)} vs {len(b)})")
    return float(np.count_nonzero(a != b)) / len(a)


def authenticate(claimed_device_id: int, challenge: Challenge | str, response: PufResponse,
                 db: CrpDatabase, cfg: PufConfig = PufConfig()) -> AuthDecision:
    cid = challenge if isinstance(challenge, str) else challenge.challenge_id
    record = db.get(claimed_device_id, cid)
    if record is None:
        return AuthDecision.UNKNOWN_IDENTITY
    if len(response) != len(record.reference):
        raise ValueError(f"response has {len(response)} bits, reference has "
                         f"{len(record.reference)}")
    d = hamming_fraction(response, record.reference)
    return AuthDecision.ACCEPT if d <= cfg.auth_threshold else AuthDecision.REJECT


# -- metrics ---------------------------------------------------------------------

def _bits(r) -> np.ndarray:
    b = r.bits if isinstance(r, PufResponse) else np.asarray(r)
    if len(b) == 0:
        raise ValueError("empty response")
    return b


def shannon_entropy(r: PufResponse) -> float:
    """Empirical bit entropy in bits per bit."""
    b = _bits(r)
    p1 = np.count_nonzero(b) / len(b)
    h = 0.0
    for p in (p1, 1.0 - p1):
        if p > 0:
            h -= p * np.log2(p)
    return float(h)


def uniformity(r: PufResponse) -> float:
    b = _bits(r)
    return 100.0 * np.count_nonzero(b) / len(b)


def uniqueness(responses: Mapping[int, PufResponse]) -> float:
    """Mean pairwise fractional Hamming distance across devices, in percent."""
    if len(responses) < 2:
        raise ValueError("uniqueness needs at least 2 devices")
    rs = list(responses.values())
    d = [hamming_fraction(a, b) for a, b in itertools.combinations(rs, 2)]
    return 100.0 * float(np.mean(d))


def device_uniqueness(responses: Mapping[int, PufResponse]) -> dict[int, float]:
    """Per-device mean distance to every other device, in percent."""
    if len(responses) < 2:
        raise ValueError("uniqueness needs at least 2 devices")
    out = {}
    for i, ri in responses.items():
        out[i] = 100.0 * float(np.mean([hamming_fraction(ri, rj)
                                        for j, rj in responses.items() if j != i]))
    return out


def reliability(repeats: Sequence[PufResponse], reference: PufResponse) -> float:
    """100 * (1 - mean fractional distance of the repeats to the reference)."""
    if len(repeats) < 1:
        raise ValueError("reliability needs at least one repeat")
    d = [hamming_fraction(r, reference) for r in repeats]
    return 100.0 * (1.0 - float(np.mean(d)))
