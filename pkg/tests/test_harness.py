from __future__ import annotations

import csv
from dataclasses import replace

import numpy as np
import pytest

from noisepuf.harness import (WARMUP_FRAMES, AttackMix, DetectorConfig, ScenarioConfig,
                              ScenarioResult, build_fleet, emit_report, latency_bench,
                              load_report, run_scenario, train_detector)
from noisepuf.metrics import ConfusionCounts, prf_metrics
from noisepuf.spectral import StftConfig


def test_config_invariants():
    with pytest.raises(ValueError):
        ScenarioConfig(fleet_size=1)
    with pytest.raises(ValueError):
        AttackMix(emi_fraction=0.5, tamper_fraction=0.4, impersonation_fraction=0.2)


def test_benign_only_stream(small_cfg):
    cfg = replace(small_cfg, attacks=AttackMix(0.0, 0.5, 0.0, 0.0, 0.06, 0.0))
    r = run_scenario(cfg)
    d = r.detection["pipeline"]
    c = d["counts"]
    assert c["tp"] == c["fn"] == 0
    assert d["recall"] is None and d["fnr"] is None
    assert d["fpr"] == c["fp"] / r.detection["n_frames"]
    assert r.roc == {}
    assert r.auth["impersonation_attempts"] == 0


def test_deterministic(small_cfg):
    a, b = run_scenario(small_cfg), run_scenario(small_cfg)
    assert a.to_json(include_latency=False) == b.to_json(include_latency=False)


def test_metric_consistency(default_result):
    d = default_result.detection
    for name in ("pipeline", "classifier", "baseline"):
        c = ConfusionCounts(**d[name]["counts"])
        assert d[name]["accuracy"] == (c.tp + c.tn) / c.total
        assert {k: d[name][k] for k in prf_metrics(c)} == prf_metrics(c)
        for m in d[name]["per_attack"].values():
            for k in ("precision", "recall", "f1"):
                assert m[k] is None or 0.0 <= m[k] <= 1.0
    assert 0.0 <= default_result.roc["auc"] <= 1.0
    assert all(v > 0 for v in default_result.latency["per_frame"])


def test_roc_shape(default_result):
    roc = default_result.roc
    assert (roc["fpr"][0], roc["tpr"][0]) == (0.0, 0.0)
    assert (roc["fpr"][-1], roc["tpr"][-1]) == (1.0, 1.0)
    assert all(np.diff(roc["fpr"]) >= 0) and all(np.diff(roc["tpr"]) >= 0)


def test_seeds_echoed(default_result):
    cfg = ScenarioConfig()
    assert default_result.seeds["master"] == cfg.seed
    assert default_result.seeds["devices"] == [d.seed for d in build_fleet(cfg)]
    assert default_result.config == cfg.to_dict()


def test_rerun_from_echoed_config(small_cfg):
    from noisepuf.config import RunConfig, from_mapping
    first = run_scenario(small_cfg)
    cfg = from_mapping(RunConfig, {"scenario": first.config}).scenario
    assert cfg == small_cfg
    assert run_scenario(cfg).to_json(False) == first.to_json(False)


def test_report_files(default_result, tmp_path):
    files = emit_report(default_result, tmp_path / "rep")
    back = load_report(tmp_path / "rep")
    assert back == default_result
    assert ScenarioResult.from_json(files["report"].read_text()) == default_result

    with open(files["roc"]) as fh:
        rows = list(csv.reader(fh))[1:]
    n_unique = len({row[2] for row in default_result.posterior_trace})
    assert len(rows) == n_unique + 2

    with open(files["latency_histogram"]) as fh:
        counts = [int(r[2]) for r in list(csv.reader(fh))[1:]]
    n = default_result.detection["n_frames"]
    assert sum(counts) == n - WARMUP_FRAMES
    raw = np.asarray(default_result.latency["per_frame"][WARMUP_FRAMES:])
    edges = default_result.latency["histogram"]["edges"]
    assert counts == np.histogram(raw, bins=edges)[0].tolist()

    with open(files["posterior_trace"]) as fh:
        lines = list(csv.reader(fh))
    assert lines[0] == ["frame_index", "score", "posterior", "decision"]
    assert len(lines) == n + 1


def test_report_io_error(default_result, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match=str(blocker)):
        emit_report(default_result, blocker / "sub")


def test_disable_bayes(small_cfg):
    cfg = replace(small_cfg, detector=replace(small_cfg.detector, bayes_enabled=False))
    r = run_scenario(cfg)
    assert r.detection["bayes_enabled"] is False
    assert all(row[2] is None for row in r.posterior_trace)
    assert r.detection["pipeline"]["counts"] == r.detection["classifier"]["counts"]
    assert r.roc["source"] == "score"


def test_auth_runs_without_detector(small_cfg):
    cfg = replace(small_cfg, detector=replace(small_cfg.detector, enabled=False))
    r = run_scenario(cfg)
    assert r.detection == {} and r.latency == {}
    assert r.auth["genuine_attempts"] + r.auth["impersonation_attempts"] == 20
    if r.auth["impersonation_attempts"]:
        assert r.auth["impersonation_reject_rate"] == 1.0


@pytest.fixture(scope="module")
def bench_det():
    cfg = ScenarioConfig(fleet_size=3, detector=DetectorConfig(train_frames=40, val_benign_frames=20,
                                                               val_attack_frames=20))
    return cfg, train_detector(cfg, build_fleet(cfg))


def test_latency_bench_contract(bench_det):
    cfg, det = bench_det
    rep = latency_bench(cfg, 150, det)
    assert rep["n_measured"] == 150 - WARMUP_FRAMES
    assert sum(rep["histogram"]["counts"]) == 150 - WARMUP_FRAMES
    assert rep["p50"] <= rep["p90"] <= rep["p99"]
    assert rep["overhead_fraction"] < 0.05
    with pytest.raises(ValueError, match="100"):
        latency_bench(cfg, 99, det)


def test_latency_grows_with_fft_len():
    med = {}
    for n in (4096, 8192):
        cfg = ScenarioConfig(fleet_size=2, pipeline=replace(ScenarioConfig().pipeline,
                                                            stft=StftConfig(fft_len=n)),
                             detector=DetectorConfig(train_frames=30, val_benign_frames=20,
                                                     val_attack_frames=20))
        med[n] = latency_bench(cfg, 200)["p50"]
    assert med[8192] >= med[4096]
