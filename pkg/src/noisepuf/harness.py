"""End-to-end scenarios: enroll a fleet, measure PUF quality, stream labelled
frames through the detector and collect every metric in one result."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import bayes
from ._seeds import derive_seed
from .bayes import BayesConfig, LikelihoodModel, PosteriorState
from .detector import (PcaModel, RewardConfig, ThresholdPolicy, anomaly_score, choose_k,
                       classify, fit_pca, make_policy, rl_update)
from .metrics import ConfusionCounts, prf_metrics, roc_curve
from .puf import (AuthDecision, CrpDatabase, PipelineConfig, authenticate, default_challenges,
                  device_uniqueness, enroll_fleet, measure_response, reliability,
                  shannon_entropy, uniformity, uniqueness)
from .randomness import randomness_tests
from .spectral import FeatureExtractor
from .synth import (ATTACK_KINDS, AttackSpec, DeviceProfile, NoiseTrace, OperatingCondition,
                    inject_emi_spoof, inject_tamper, make_device_profile, synthesize_samples)

SCHEMA_VERSION = 1
WARMUP_FRAMES = 20


@dataclass(frozen=True)
class AttackMix:
    """Per-kind stream fractions and attack parameters."""

    emi_fraction: float = 0.15
    emi_amplitude: float = 0.5        # relative to benign RMS
    emi_freq_offset: float = 0.0      # Hz from f_sw
    tamper_fraction: float = 0.15
    tamper_sigma: float = 0.06        # volts
    impersonation_fraction: float = 0.15

    def __post_init__(self):
        fr = self.fractions()
        if any(v < 0 for v in fr.values()) or sum(fr.values()) > 1.0 + 1e-12:
            raise ValueError(f"attack fractions must be >= 0 and sum to <= 1, got {fr}")
        if self.emi_amplitude < 0 or self.tamper_sigma < 0:
            raise ValueError("attack amplitude and sigma must be >= 0")

    def fractions(self) -> dict[str, float]:
        return {"emi_spoof": self.emi_fraction, "tamper": self.tamper_fraction,
                "impersonation": self.impersonation_fraction}


@dataclass(frozen=True)
class DetectorConfig:
    enabled: bool = True
    bayes_enabled: bool = True
    frame_samples: int = 4096
    train_frames: int = 100           # benign PCA training frames per device
    val_benign_frames: int = 50       # held-out benign frames per device
    val_attack_frames: int = 60       # validation frames per attack kind
    var_target: float = 0.95
    k_max: int = 8
    grid_points: int = 32
    epsilon: float = 0.1
    learning_rate: float = 0.1
    rl_batch: int = 50

    def __post_init__(self):
        if self.train_frames < 2 or self.val_benign_frames < 2:
            raise ValueError("need at least 2 training and validation frames per device")
        if self.rl_batch < 1:
            raise ValueError("rl_batch must be >= 1")


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 20240611
    fleet_size: int = 10
    variability: float = 0.1
    n_challenges: int = 5
    n_calib_traces: int = 8
    reliability_repeats: int = 20
    n_frames: int = 2000
    segment_len: int = 10
    stream_load: float = 1.0
    attacks: AttackMix = AttackMix()
    detector: DetectorConfig = DetectorConfig()
    reward: RewardConfig = RewardConfig()
    bayes: BayesConfig = BayesConfig()
    pipeline: PipelineConfig = PipelineConfig()

    def __post_init__(self):
        if self.fleet_size < 2:
            raise ValueError("fleet_size must be >= 2")
        if self.n_frames < 1 or self.segment_len < 1:
            raise ValueError("n_frames and segment_len must be >= 1")
        if self.reliability_repeats < 1:
            raise ValueError("reliability_repeats must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ScenarioResult:
    """Metric bundle of one run. Plain JSON types only, so equality is exact."""

    config: dict
    seeds: dict
    puf: dict = field(default_factory=dict)
    auth: dict = field(default_factory=dict)
    detection: dict = field(default_factory=dict)
    roc: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    posterior_trace: list = field(default_factory=list)
    latency: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self, include_latency: bool = True) -> dict:
        d = asdict(self)
        if not include_latency:
            d.pop("latency")
        return d

    def to_json(self, include_latency: bool = True) -> str:
        return json.dumps(self.to_dict(include_latency), sort_keys=True, indent=1,
                          allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioResult":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {d.get('schema_version')!r}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioResult":
        return cls.from_dict(json.loads(text))


# -- fleet -------------------------------------------------------------------------

def build_fleet(cfg: ScenarioConfig) -> list[DeviceProfile]:
    return [make_device_profile(derive_seed("device", cfg.seed, i), cfg.variability, i,
                                cfg.pipeline.synth)
            for i in range(cfg.fleet_size)]


def rogue_profile(cfg: ScenarioConfig, tag) -> DeviceProfile:
    """A fresh random device that was never enrolled."""
    return make_device_profile(derive_seed("rogue", cfg.seed, tag), cfg.variability, -1,
                               cfg.pipeline.synth)


def puf_metrics(cfg: ScenarioConfig, devices, challenges, db: CrpDatabase) -> dict:
    pl = cfg.pipeline
    per_ch_uniq, per_ch_dev_uniq = {}, {}
    for ch in challenges:
        refs = {d.device_id: db.get(d.device_id, ch.challenge_id).reference for d in devices}
        per_ch_uniq[ch.challenge_id] = uniqueness(refs)
        per_ch_dev_uniq[ch.challenge_id] = device_uniqueness(refs)

    per_device = {}
    for d in devices:
        rel_by_ch, ent, unif, bits = {}, [], [], []
        for ch in challenges:
            rec = db.get(d.device_id, ch.challenge_id)
            reps = [measure_response(d, ch, rec, pl,
                                     derive_seed("repeat", cfg.seed, d.device_id,
                                                 ch.challenge_id, j))
                    for j in range(cfg.reliability_repeats)]
            rel_by_ch[ch.challenge_id] = reliability(reps, rec.reference)
            ent.append(shannon_entropy(rec.reference))
            unif.append(uniformity(rec.reference))
            bits.append(rec.reference.bits)
        stream = np.concatenate(bits)
        rnd = randomness_tests(stream, min_len=min(128, len(stream))).to_dict()
        per_device[str(d.device_id)] = {
            "reliability": float(np.mean(list(rel_by_ch.values()))),
            "reliability_by_challenge": rel_by_ch,
            "uniqueness": float(np.mean([per_ch_dev_uniq[c][d.device_id]
                                         for c in per_ch_dev_uniq])),
            "uniformity": float(np.mean(unif)),
            "entropy": float(np.mean(ent)),
            "randomness": rnd,
        }

    c0 = challenges[0].challenge_id
    fleet_bits = np.concatenate([db.get(d.device_id, c0).reference.bits for d in devices])
    rnd_fleet = (randomness_tests(fleet_bits).to_dict() if len(fleet_bits) >= 128
                 else {"n_bits": int(len(fleet_bits)), "skipped": "fewer than 128 bits"})
    return {
        "uniqueness_by_challenge": per_ch_uniq,
        "uniqueness_pooled": float(np.mean(list(per_ch_uniq.values()))),
        "reliability_min": min(v["reliability"] for v in per_device.values()),
        "per_device": per_device,
        "randomness_fleet": {"challenge_id": c0, **rnd_fleet},
    }


# -- detection pipeline ------------------------------------------------------------------

@dataclass
class FrameOutcome:
    score: float
    classified: str
    posterior: float | None
    decision: str


class DetectionPipeline:
    """Stages after acquisition: features, PCA score, threshold, Bayes filter.

    Owns the mutable policy and posterior, so one instance per stream.
    """

    def __init__(self, extractor: FeatureExtractor, models: dict[int, PcaModel],
                 scales: dict[int, float], policy: ThresholdPolicy, lm: LikelihoodModel,
                 bayes_cfg: BayesConfig, bayes_enabled: bool = True):
        self.extractor = extractor
        self.models = models
        self.scales = scales
        self.policy = policy
        self.lm = lm
        self.bayes_cfg = bayes_cfg
        self.bayes_enabled = bayes_enabled
        self.state = PosteriorState.initial(bayes_cfg)

    def score(self, device_id: int, x: np.ndarray) -> float:
        return anomaly_score(self.models[device_id], self.extractor(x)) / self.scales[device_id]

    def process(self, device_id: int, x: np.ndarray) -> FrameOutcome:
        s = self.score(device_id, x)
        label = classify(s, self.policy)
        if not self.bayes_enabled:
            return FrameOutcome(s, label, None, "alert" if label == "anomalous" else "no_alert")
        self.state = bayes.update(self.state, s, self.lm)
        return FrameOutcome(s, label, self.state.p_anomalous, bayes.decide(self.state, self.bayes_cfg))


def _frame(cfg: ScenarioConfig, device: DeviceProfile, kind: str, seed: int,
           rng: np.random.Generator, rogue: DeviceProfile | None = None) -> np.ndarray:
    """One acquired frame of the given kind, claimed by ``device``."""
    pl = cfg.pipeline
    cond = OperatingCondition(load_level=cfg.stream_load)
    n = cfg.detector.frame_samples
    src = rogue if kind == "impersonation" else device
    x = synthesize_samples(src, cond, n, seed, pl.synth)
    if kind in ("benign", "impersonation"):
        return x
    tr = NoiseTrace(x, pl.synth.sample_rate, device.device_id, cond, "benign", seed)
    a = cfg.attacks
    if kind == "emi_spoof":
        spec = AttackSpec("emi_spoof", amplitude=a.emi_amplitude, freq_offset=a.emi_freq_offset,
                          phase=float(rng.uniform(0, 2 * np.pi)))
        return inject_emi_spoof(tr, spec).samples
    spec = AttackSpec("tamper", sigma=a.tamper_sigma)
    return inject_tamper(tr, spec, derive_seed("tamper", seed)).samples


@dataclass
class TrainedDetector:
    pipeline: DetectionPipeline
    k: dict[int, int]
    baseline_threshold: float
    benign_val_scores: np.ndarray
    attack_val_scores: np.ndarray


def train_detector(cfg: ScenarioConfig, devices: list[DeviceProfile],
                   extractor: FeatureExtractor | None = None) -> TrainedDetector:
    """Fit per-device PCA on benign frames, then calibrate scores and thresholds.

    Scores are divided by each device's median held-out benign score so one
    threshold grid and one pair of likelihoods serve the whole fleet.
    """
    dc = cfg.detector
    ex = extractor or FeatureExtractor(cfg.pipeline.synth.sample_rate, 100_000.0,
                                       cfg.pipeline.stft, cfg.pipeline.features)
    rng = np.random.default_rng(derive_seed("train-rng", cfg.seed))
    models, scales, ks = {}, {}, {}
    val_scores, energies = [], []
    for d in devices:
        train = np.vstack([ex(_frame(cfg, d, "benign", derive_seed("train", cfg.seed, d.device_id, i),
                                     rng)) for i in range(dc.train_frames)])
        k = choose_k(train, dc.var_target, dc.k_max)
        models[d.device_id] = fit_pca(train, k)
        ks[d.device_id] = k
        raw = []
        for i in range(dc.val_benign_frames):
            x = _frame(cfg, d, "benign", derive_seed("val", cfg.seed, d.device_id, i), rng)
            cells = ex.raw_cells(x)
            energies.append(float(cells.sum()))
            raw.append(anomaly_score(models[d.device_id], _normalized(cells)))
        raw = np.asarray(raw)
        scales[d.device_id] = float(np.median(raw)) or 1.0
        val_scores.append(raw / scales[d.device_id])
    benign_val = np.concatenate(val_scores)

    att = []
    for kind in ATTACK_KINDS:
        for i in range(dc.val_attack_frames):
            d = devices[int(rng.integers(len(devices)))]
            seed = derive_seed("val-attack", cfg.seed, kind, i)
            rogue = rogue_profile(cfg, ("val", i)) if kind == "impersonation" else None
            x = _frame(cfg, d, kind, seed, rng, rogue)
            att.append(anomaly_score(models[d.device_id], ex(x)) / scales[d.device_id])
    attack_val = np.asarray(att)

    policy = make_policy(benign_val, dc.grid_points, epsilon=dc.epsilon,
                         learning_rate=dc.learning_rate)
    policy.q_values[:] = expected_rewards(policy.grid, benign_val, attack_val, cfg)
    policy.current_index = policy.greedy_index
    lm = bayes.fit_likelihoods(benign_val, attack_val)
    pipe = DetectionPipeline(ex, models, scales, policy, lm, cfg.bayes, dc.bayes_enabled)
    return TrainedDetector(pipe, ks, float(np.percentile(energies, 95)), benign_val, attack_val)


def expected_rewards(grid: np.ndarray, benign_scores: np.ndarray, attack_scores: np.ndarray,
                     cfg: ScenarioConfig) -> np.ndarray:
    """Mean batch reward of each threshold on validation scores at the configured mix."""
    fr = sum(cfg.attacks.fractions().values())
    tpr = (attack_scores[None, :] > grid[:, None]).mean(axis=1)
    fpr = (benign_scores[None, :] > grid[:, None]).mean(axis=1)
    n = cfg.detector.rl_batch
    return n * (cfg.reward.alpha * fr * tpr - cfg.reward.beta * (1 - fr) * fpr)


def _normalized(cells: np.ndarray) -> np.ndarray:
    tot = cells.sum()
    return cells / tot if tot > 0 else np.zeros_like(cells)


def _stream_plan(cfg: ScenarioConfig) -> list[tuple[int, str]]:
    """(device index, label) per segment."""
    rng = np.random.default_rng(derive_seed("plan", cfg.seed))
    fr = cfg.attacks.fractions()
    kinds = ["benign", *ATTACK_KINDS]
    p = np.array([1.0 - sum(fr.values()), *fr.values()])
    p = np.clip(p, 0, None)
    p /= p.sum()
    n_seg = -(-cfg.n_frames // cfg.segment_len)
    return [(int(rng.integers(cfg.fleet_size)), kinds[int(rng.choice(len(kinds), p=p))])
            for _ in range(n_seg)]


def _rate(num: int, den: int) -> float | None:
    return num / den if den else None


def _roc_json(r: dict) -> dict:
    th = [None if not np.isfinite(t) else float(t) for t in r["thresholds"]]
    return {"fpr": r["fpr"], "tpr": r["tpr"], "thresholds": th, "auc": r["auc"]}


def _detection_metrics(truth: list[str], final: list[bool], classified: list[bool],
                       baseline: list[bool]) -> dict:
    t = np.array(truth)
    pos = t != "benign"
    out = {}
    for name, pred in (("pipeline", final), ("classifier", classified), ("baseline", baseline)):
        pred = np.asarray(pred, dtype=bool)
        overall = ConfusionCounts.from_labels(pos, pred)
        per_kind = {}
        for kind in ATTACK_KINDS:
            sel = (t == "benign") | (t == kind)
            c = ConfusionCounts.from_labels(pos[sel], pred[sel])
            per_kind[kind] = {"counts": c.to_dict(), **prf_metrics(c)}
        out[name] = {"counts": overall.to_dict(), **prf_metrics(overall), "per_attack": per_kind}
    acc_p, acc_b = out["pipeline"]["accuracy"], out["baseline"]["accuracy"]
    out["accuracy_gain_over_baseline"] = (acc_p - acc_b) if acc_p is not None else None
    return out


def _latency_summary(durations_us: np.ndarray, bins: int = 50) -> dict:
    d = np.asarray(durations_us, dtype=float)
    post = d[WARMUP_FRAMES:] if len(d) > WARMUP_FRAMES else d
    counts, edges = np.histogram(post, bins=bins)
    return {
        "unit": "us",
        "warmup": min(WARMUP_FRAMES, len(d)),
        "n_measured": int(len(post)),
        "p50": float(np.percentile(post, 50)),
        "p90": float(np.percentile(post, 90)),
        "p99": float(np.percentile(post, 99)),
        "per_frame": d.tolist(),
        "histogram": {"edges": edges.tolist(), "counts": counts.tolist()},
    }


def run_scenario(cfg: ScenarioConfig = ScenarioConfig(), progress: Callable[[str], None] | None = None
                 ) -> ScenarioResult:
    """Enroll, measure PUF quality, then stream labelled frames through the detector."""
    say = progress or (lambda _msg: None)
    pl = cfg.pipeline
    devices = build_fleet(cfg)
    challenges = default_challenges(cfg.n_challenges)
    say("enrolling fleet")
    try:
        db, _ = enroll_fleet(devices, challenges, cfg.n_calib_traces, pl)
    except ValueError as e:
        raise ValueError(f"enrollment failed: {e}") from e
    say("measuring PUF quality")
    puf = puf_metrics(cfg, devices, challenges, db)

    result = ScenarioResult(
        config=cfg.to_dict(),
        seeds={"master": cfg.seed, "devices": [d.seed for d in devices]},
        puf=puf,
    )

    det = None
    if cfg.detector.enabled:
        say("training detector")
        det = train_detector(cfg, devices)
        result.model = {
            "k": {str(i): k for i, k in det.k.items()},
            "score_scale": {str(i): s for i, s in det.pipeline.scales.items()},
            "baseline_threshold": det.baseline_threshold,
            "likelihoods": det.pipeline.lm.to_dict(),
        }

    say("streaming frames")
    plan = _stream_plan(cfg)
    rng = np.random.default_rng(derive_seed("stream-rng", cfg.seed))
    auth_rows = []
    truth, scores, posts, final, classified, baseline, energy, lat = [], [], [], [], [], [], [], []
    trace = []
    batch_truth, batch_pred = [], []
    frame = 0
    for seg, (dev_idx, kind) in enumerate(plan):
        dev = devices[dev_idx]
        rogue = rogue_profile(cfg, seg) if kind == "impersonation" else None
        ch = challenges[seg % len(challenges)]
        presenter = rogue if rogue is not None else dev
        rec = db.get(dev.device_id, ch.challenge_id)
        resp = measure_response(presenter, ch, rec, pl, derive_seed("auth", cfg.seed, seg))
        verdict = authenticate(dev.device_id, ch, resp, db, pl.puf)
        auth_rows.append((kind == "impersonation", verdict))
        if det is None:
            continue
        for _ in range(cfg.segment_len):
            if frame >= cfg.n_frames:
                break
            x = _frame(cfg, dev, kind, derive_seed("frame", cfg.seed, frame), rng, rogue)
            t0 = time.perf_counter_ns()
            out = det.pipeline.process(dev.device_id, x)
            lat.append((time.perf_counter_ns() - t0) / 1e3)
            e = float(det.pipeline.extractor.raw_cells(x).sum())
            truth.append(kind)
            scores.append(out.score)
            posts.append(out.posterior)
            final.append(out.decision == "alert")
            classified.append(out.classified == "anomalous")
            baseline.append(e > det.baseline_threshold)
            energy.append(e)
            trace.append([frame, out.score, out.posterior, out.decision])
            batch_truth.append(kind != "benign")
            batch_pred.append(out.classified == "anomalous")
            frame += 1
            if len(batch_truth) == cfg.detector.rl_batch:
                rl_update(det.pipeline.policy, ConfusionCounts.from_labels(batch_truth, batch_pred),
                          cfg.reward, rng)
                batch_truth, batch_pred = [], []

    genuine = [v for imp, v in auth_rows if not imp]
    rogue_v = [v for imp, v in auth_rows if imp]
    result.auth = {
        "genuine_attempts": len(genuine),
        "genuine_accept_rate": _rate(sum(v is AuthDecision.ACCEPT for v in genuine), len(genuine)),
        "impersonation_attempts": len(rogue_v),
        "impersonation_reject_rate": _rate(sum(v is AuthDecision.REJECT for v in rogue_v),
                                           len(rogue_v)),
    }

    if det is not None:
        result.detection = _detection_metrics(truth, final, classified, baseline)
        result.detection["bayes_enabled"] = cfg.detector.bayes_enabled
        result.detection["n_frames"] = len(truth)
        result.detection["label_counts"] = {k: truth.count(k) for k in ("benign", *ATTACK_KINDS)}
        y = [t != "benign" for t in truth]
        if any(y) and not all(y):
            primary = posts if cfg.detector.bayes_enabled else scores
            result.roc = {
                "source": "posterior" if cfg.detector.bayes_enabled else "score",
                **_roc_json(roc_curve(primary, y)),
                "score_auc": roc_curve(scores, y)["auc"],
                "baseline_auc": roc_curve(energy, y)["auc"],
            }
        result.model["final_policy"] = det.pipeline.policy.to_dict()
        result.posterior_trace = trace
        result.latency = _latency_summary(np.asarray(lat))
    return result


# -- authentication trials -----------------------------------------------------------

def auth_trials(cfg: ScenarioConfig, n_genuine: int = 1000, n_rogue: int = 1000,
                db: CrpDatabase | None = None) -> dict:
    """Independent genuine and impersonation attempts, cycling through challenges."""
    devices = build_fleet(cfg)
    challenges = default_challenges(cfg.n_challenges)
    if db is None:
        db, _ = enroll_fleet(devices, challenges, cfg.n_calib_traces, cfg.pipeline)
    pl = cfg.pipeline
    counts = {"genuine_accept": 0, "rogue_reject": 0}
    for i in range(n_genuine):
        d = devices[i % len(devices)]
        ch = challenges[(i // len(devices)) % len(challenges)]
        r = measure_response(d, ch, db.get(d.device_id, ch.challenge_id), pl,
                             derive_seed("trial-genuine", cfg.seed, i))
        counts["genuine_accept"] += authenticate(d.device_id, ch, r, db, pl.puf) is AuthDecision.ACCEPT
    for i in range(n_rogue):
        d = devices[i % len(devices)]
        ch = challenges[(i // len(devices)) % len(challenges)]
        rogue = rogue_profile(cfg, ("trial", i))
        r = measure_response(rogue, ch, db.get(d.device_id, ch.challenge_id), pl,
                             derive_seed("trial-rogue", cfg.seed, i))
        counts["rogue_reject"] += authenticate(d.device_id, ch, r, db, pl.puf) is AuthDecision.REJECT
    return {
        "n_genuine": n_genuine, "n_rogue": n_rogue,
        "genuine_accept_rate": _rate(counts["genuine_accept"], n_genuine),
        "impersonation_reject_rate": _rate(counts["rogue_reject"], n_rogue),
    }


# -- latency benchmark -------------------------------------------------------------------

def latency_bench(cfg: ScenarioConfig = ScenarioConfig(), n_frames: int = 500,
                  detector: TrainedDetector | None = None, bins: int = 50) -> dict:
    """Wall-clock time per frame of the post-acquisition stages.

    Frames are synthesized up front so acquisition is excluded. The first
    ``WARMUP_FRAMES`` timings are dropped from the statistics. An empty stage
    timed through the same loop gives the harness overhead.
    """
    if n_frames < 100:
        raise ValueError(f"latency_bench needs n_frames >= 100, got {n_frames}")
    devices = build_fleet(cfg)
    if detector is None:
        ex = FeatureExtractor(cfg.pipeline.synth.sample_rate, 100_000.0, cfg.pipeline.stft,
                              cfg.pipeline.features)
        detector = train_detector(cfg, devices, ex)
    pipe = detector.pipeline
    rng = np.random.default_rng(derive_seed("bench-rng", cfg.seed))
    frames = [(devices[i % len(devices)].device_id,
               _frame(cfg, devices[i % len(devices)], "benign",
                      derive_seed("bench", cfg.seed, i), rng))
              for i in range(n_frames)]

    def timed(fn) -> np.ndarray:
        out = np.empty(n_frames)
        clock = time.perf_counter_ns
        for i, (dev_id, x) in enumerate(frames):
            t0 = clock()
            fn(dev_id, x)
            out[i] = (clock() - t0) / 1e3
        return out

    full = timed(pipe.process)
    empty = timed(lambda _d, _x: None)
    summary = _latency_summary(full, bins)
    overhead = float(np.median(empty[WARMUP_FRAMES:]))
    summary.update({
        "n_frames": n_frames,
        "overhead_median": overhead,
        "overhead_fraction": overhead / summary["p50"] if summary["p50"] > 0 else None,
        "budget_us": 800.0,
        "p90_within_budget": summary["p90"] < 800.0,
        "fft_len": cfg.pipeline.stft.fft_len,
    })
    return summary


# -- reports ---------------------------------------------------------------------------

def emit_report(result: ScenarioResult, path: str | Path) -> dict[str, Path]:
    """Write ``report.json`` plus ROC, latency-histogram and posterior CSVs."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = {"report": out / "report.json", "roc": out / "roc.csv",
                 "latency_histogram": out / "latency_histogram.csv",
                 "posterior_trace": out / "posterior_trace.csv"}
        files["report"].write_text(result.to_json())
        with open(files["roc"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["fpr", "tpr", "threshold"])
            roc = result.roc
            for row in zip(roc.get("fpr", []), roc.get("tpr", []), roc.get("thresholds", [])):
                w.writerow(["" if v is None else repr(v) for v in row])
        with open(files["latency_histogram"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_lo_us", "bin_hi_us", "count"])
            h = result.latency.get("histogram", {"edges": [], "counts": []})
            for lo, hi, c in zip(h["edges"][:-1], h["edges"][1:], h["counts"]):
                w.writerow([repr(lo), repr(hi), c])
        bayes.write_posterior_csv(
            ([i, repr(s), "" if p is None else repr(p), d] for i, s, p, d in result.posterior_trace),
            files["posterior_trace"])
    except OSError as e:
        raise OSError(f"cannot write report to {out}: {e}") from e
    return files


def load_report(path: str | Path) -> ScenarioResult:
    p = Path(path)
    if p.is_dir():
        p = p / "report.json"
    return ScenarioResult.from_json(p.read_text())
