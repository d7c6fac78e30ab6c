"""Acceptance criteria 1-9, one test each, at their stated tolerances.

Each test prints a ``[PASS]`` or ``[FAIL]`` line and asserts on the same
condition. The lines are collected and repeated in the terminal summary.
Run directly with ``python tests/test_acceptance.py`` for a pytest run of
this module alone.
"""
from __future__ import annotations

import time

import numpy as np
import pytest

import conftest
from noisepuf.bayes import PosteriorState, update
from noisepuf.detector import fit_pca
from noisepuf.harness import (ScenarioConfig, auth_trials, build_fleet, latency_bench,
                              puf_metrics, run_scenario)
from noisepuf.metrics import roc_curve
from noisepuf.puf import CalibrationStats, PufConfig, default_challenges, enroll_fleet, quantize
from noisepuf.spectral import StftConfig, stft_samples


def record(n: int, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    return ok


@pytest.fixture(scope="module")
def puf_run():
    """PUF enrollment and metrics alone, timed separately from detection."""
    cfg = ScenarioConfig()
    t0 = time.perf_counter()
    devices = build_fleet(cfg)
    challenges = default_challenges(cfg.n_challenges)
    db, _ = enroll_fleet(devices, challenges, cfg.n_calib_traces, cfg.pipeline)
    m = puf_metrics(cfg, devices, challenges, db)
    return m, time.perf_counter() - t0, db


def test_c1_uniqueness(puf_run, default_result):
    m, secs, _ = puf_run
    u = m["uniqueness_pooled"]
    assert m == default_result.puf
    ok = 45.0 <= u <= 55.0 and secs < 30
    per_ch = ", ".join(f"{k}={v:.1f}" for k, v in m["uniqueness_by_challenge"].items())
    assert record(1, ok, f"uniqueness {u:.2f}% in [45, 55] ({per_ch}); {secs:.1f} s < 30 s")


def test_c2_reliability(puf_run):
    m, secs, _ = puf_run
    assert ScenarioConfig().reliability_repeats == 20
    rel = {k: v["reliability"] for k, v in m["per_device"].items()}
    worst_ch = min(min(v["reliability_by_challenge"].values()) for v in m["per_device"].values())
    ok = len(rel) == 10 and min(rel.values()) >= 95.0 and secs < 60
    assert record(2, ok, f"worst device reliability {min(rel.values()):.2f}% >= 95 over 10 devices "
                         f"x 20 repeats (worst single challenge {worst_ch:.2f}%); {secs:.1f} s < 60 s")


def test_c3_randomness(default_result):
    rf = default_result.puf["randomness_fleet"]
    p = rf["p_values"]
    ok = rf["n_bits"] >= 640 and rf["pass"]["monobit"] and rf["pass"]["block_frequency"]
    assert record(3, ok, f"{rf['n_bits']} bits: monobit p={p['monobit']:.3f}, block-frequency "
                         f"p={p['block_frequency']:.3f} at alpha 0.01 (runs p={p['runs']:.3f}, "
                         f"not gated)")


def test_c4_detection(default_result):
    auc = default_result.roc["auc"]
    per = default_result.detection["pipeline"]["per_attack"]
    f1 = {k: v["f1"] for k, v in per.items()}
    secs = conftest.TIMINGS.get("default_scenario", 0.0)
    ok = (auc >= 0.93 and set(f1) == {"emi_spoof", "tamper", "impersonation"}
          and all(v is not None and v >= 0.90 for v in f1.values()) and secs < 300)
    detail = ", ".join(f"{k}={v:.4f}" for k, v in f1.items())
    assert record(4, ok, f"AUC {auc:.4f} >= 0.93; F1 {detail} >= 0.90; scenario {secs:.1f} s < 300 s")


def test_c5_baseline(default_result):
    d = default_result.detection
    gain = d["accuracy_gain_over_baseline"]
    ok = gain >= 0.05
    assert record(5, ok, f"pipeline accuracy {d['pipeline']['accuracy']:.4f} vs baseline "
                         f"{d['baseline']['accuracy']:.4f}, gain {100 * gain:.1f} pp >= 5 pp")


def test_c6_latency(default_result):
    t0 = time.perf_counter()
    bench = latency_bench(ScenarioConfig(), 500)
    secs = time.perf_counter() - t0
    stream_p90 = default_result.latency["p90"]
    ok = bench["p90"] < 800.0 and stream_p90 < 800.0 and secs < 120
    assert record(6, ok, f"bench p90 {bench['p90']:.0f} us, in-stream p90 {stream_p90:.0f} us "
                         f"< 800 us; bench {secs:.1f} s < 120 s")


def test_c7_impersonation(puf_run):
    _, _, db = puf_run
    r = auth_trials(ScenarioConfig(), 1000, 1000, db=db)
    assert PufConfig().auth_threshold == 0.10
    ok = r["impersonation_reject_rate"] >= 0.99 and r["genuine_accept_rate"] >= 0.99
    assert record(7, ok, f"rogue rejected {r['impersonation_reject_rate']:.3f}, genuine accepted "
                         f"{r['genuine_accept_rate']:.3f} over 1000 + 1000 attempts (>= 0.99)")


def _stft_oracle():
    rng = np.random.default_rng(0)
    x = rng.normal(size=256)
    cfg = StftConfig(window_len=64, hop=32, fft_len=64)
    spec = stft_samples(x, 1000.0, cfg)
    w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(64) / 64)
    worst = 0.0
    for f, start in enumerate(range(0, 256 - 64 + 1, 32)):
        seg = x[start:start + 64] * w
        for k in range(33):
            ref = abs(sum(seg[n] * np.exp(-2j * np.pi * k * n / 64) for n in range(64)))
            worst = max(worst, abs(spec.magnitudes[f, k] - ref) / max(ref, 1e-300))
    return worst


def _pca_oracle():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 8)) @ rng.normal(size=(8, 8))
    m = fit_pca(X, 8)
    evals, evecs = np.linalg.eigh(np.cov(X, rowvar=False))
    order = np.argsort(evals)[::-1]
    err = np.max(np.abs(m.explained_variance - evals[order]))
    vec = max(abs(abs(m.components[i] @ evecs[:, j]) - 1) for i, j in enumerate(order))
    return max(err, vec)


def _auc_oracle():
    rng = np.random.default_rng(2)
    s = rng.integers(0, 20, 300).astype(float)
    y = rng.integers(0, 2, 300)
    pos, neg = s[y == 1], s[y == 0]
    ref = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg) / (len(pos) * len(neg))
    return roc_curve(s, y)["auc"] == ref


def _quantize_oracle():
    rng = np.random.default_rng(3)
    ok = True
    for theta in (0.0, 0.5, -1.0):
        f = rng.normal(size=64)
        mu, sd = rng.normal(size=64), rng.uniform(0, 1, 64)
        mu[:8] = f[:8]
        sd[:8] = 0.0
        bits = quantize(f, CalibrationStats(mu, sd, 8), PufConfig(theta=theta)).bits
        ok &= bits.tolist() == [int(f[i] > mu[i] + theta * sd[i]) for i in range(64)]
    return ok


class _Fixed:
    def __init__(self, l1, l0):
        self.l1, self.l0 = l1, l0

    def likelihoods(self, score):
        return self.l1, self.l0


def _bayes_oracle():
    worst = 0.0
    for p, lam, r, l1, l0 in ((0.5, 1.0, 0.01, 0.9, 0.1), (0.6, 0.8, 0.05, 0.3, 0.7),
                              (0.01, 0.95, 0.01, 2.5, 0.02)):
        prior = lam * p + (1 - lam) * r
        ref = prior * l1 / (prior * l1 + (1 - prior) * l0)
        got = update(PosteriorState(p, r, lam), 1.0, _Fixed(l1, l0)).p_anomalous
        worst = max(worst, abs(got - ref))
    return worst


def test_c8_oracles():
    stft_err, pca_err = _stft_oracle(), _pca_oracle()
    auc_ok, q_ok, bayes_err = _auc_oracle(), _quantize_oracle(), _bayes_oracle()
    ok = stft_err < 1e-9 and pca_err < 1e-8 and auc_ok and q_ok and bayes_err < 1e-12
    assert record(8, ok, f"STFT rel err {stft_err:.1e} < 1e-9, PCA {pca_err:.1e} < 1e-8, "
                         f"AUC exact={auc_ok}, quantize exact={q_ok}, posterior {bayes_err:.1e} < 1e-12")


def test_c9_determinism(default_result):
    from noisepuf.config import RunConfig, from_mapping
    cfg = from_mapping(RunConfig, {"scenario": default_result.config}).scenario
    assert cfg.seed == default_result.seeds["master"]
    again = run_scenario(cfg)
    a, b = default_result.to_json(include_latency=False), again.to_json(include_latency=False)
    ok = a == b
    assert record(9, ok, f"rerun from echoed config reproduces {len(a)} report bytes "
                         f"(latency excluded): identical={ok}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
