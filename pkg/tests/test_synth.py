from __future__ import annotations

import itertools
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noisepuf.spectral import stft_samples
from noisepuf.synth import (AttackSpec, NoiseTrace, OperatingCondition, SynthConfig,
                            inject_emi_spoof, inject_tamper, load_trace, make_device_profile,
                            save_trace, synthesize_samples, synthesize_trace)

FS = 1e6


def quiet(seed=7, config=SynthConfig()):
    return replace(make_device_profile(seed, 0.1, config=config), noise_floor_gain=0.0)


def band_power(x, lo, hi):
    s = stft_samples(x, FS)
    sel = (s.freqs >= lo) & (s.freqs <= hi)
    return float(np.sum(s.mean_magnitude()[sel] ** 2))


class TestProfiles:
    def test_deterministic(self):
        assert make_device_profile(7, 0.1) == make_device_profile(7, 0.1)

    def test_seed_sensitive(self):
        a, b = make_device_profile(7, 0.1), make_device_profile(8, 0.1)
        assert not np.array_equal(a.harmonic_gains, b.harmonic_gains)

    def test_fleet_pairwise_distinct(self):
        fleet = [make_device_profile(s, 0.1) for s in range(10)]
        pairs = list(itertools.combinations(fleet, 2))
        assert len(pairs) == 45
        assert all(a != b for a, b in pairs)

    @pytest.mark.parametrize("v", [0.0, -0.1, 0.51, 1.0])
    def test_rejects_variability(self, v):
        with pytest.raises(ValueError, match="variability"):
            make_device_profile(1, v)

    @given(st.integers(0, 2**64 - 1), st.floats(1e-3, 0.5))
    @settings(max_examples=50, deadline=None)
    def test_gain_range(self, seed, v):
        p = make_device_profile(seed, v)
        assert np.all(p.harmonic_gains > 0)
        assert np.all(p.harmonic_gains >= 1 - v) and np.all(p.harmonic_gains <= 1 + v)

    def test_dict_roundtrip(self):
        p = make_device_profile(99, 0.2)
        assert type(p).from_dict(p.to_dict()) == p


class TestSynthesis:
    def test_single_tone_peak(self):
        cfg = SynthConfig(n_harmonics=1, n_sideband_pairs=0)
        p = quiet(config=cfg)
        x = synthesize_samples(p, OperatingCondition(), 4096, 0, cfg)
        s = stft_samples(x, FS)
        assert int(np.argmax(s.mean_magnitude())) == round(100_000 / s.bin_hz)

    def test_deterministic(self):
        p = make_device_profile(3, 0.1)
        a = synthesize_trace(p, OperatingCondition(), 0.01, 42)
        b = synthesize_trace(p, OperatingCondition(), 0.01, 42)
        assert np.array_equal(a.samples, b.samples)

    def test_noise_depends_on_rng_seed(self):
        p = make_device_profile(3, 0.1)
        a = synthesize_samples(p, OperatingCondition(), 4096, 1)
        b = synthesize_samples(p, OperatingCondition(), 4096, 2)
        assert not np.array_equal(a, b)

    def test_too_short_names_minimum(self):
        with pytest.raises(ValueError, match="at least 4096 samples"):
            synthesize_trace(make_device_profile(1, 0.1), OperatingCondition(), 0.001, 0)

    def test_load_scales_fundamental_band_power(self):
        p = quiet()
        hi = synthesize_samples(p, OperatingCondition(load_level=1.0), 65536, 0)
        lo = synthesize_samples(p, OperatingCondition(load_level=0.5), 65536, 0)
        ratio = band_power(hi, 95e3, 105e3) / band_power(lo, 95e3, 105e3)
        assert ratio == pytest.approx(4.0, rel=0.02)

    def test_temperature_scales_amplitude(self):
        p = quiet()
        a = synthesize_samples(p, OperatingCondition(temperature=25.0), 4096, 0)
        b = synthesize_samples(p, OperatingCondition(temperature=125.0), 4096, 0)
        np.testing.assert_allclose(b, 1.1 * a, atol=1e-12)

    def test_nyquist_guard(self):
        cfg = SynthConfig(n_harmonics=5)
        p = make_device_profile(1, 0.1, config=cfg)
        with pytest.raises(ValueError, match="Nyquist"):
            synthesize_samples(p, OperatingCondition(), 4096, 0, cfg)

    def test_no_energy_above_top_line(self):
        p = quiet()
        x = synthesize_samples(p, OperatingCondition(), 16384, 0)
        s = stft_samples(x, FS)
        m = s.mean_magnitude()
        assert m[s.freqs > 420e3].max() < 1e-3 * m.max()

    def test_noise_sigma(self):
        cfg = SynthConfig(n_harmonics=1, n_sideband_pairs=0)
        p = make_device_profile(5, 0.1, config=cfg)
        p = replace(p, harmonic_gains=np.array([1e-9]), noise_floor_gain=1.0)
        x = synthesize_samples(p, OperatingCondition(), 200_000, 3, cfg)
        assert x.std() == pytest.approx(cfg.noise_sigma, rel=0.01)

    def test_nonfinite_trace_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            NoiseTrace(np.array([0.0, np.nan]), FS, 0, OperatingCondition())

    def test_condition_validation(self):
        with pytest.raises(ValueError):
            OperatingCondition(load_level=1.5)
        with pytest.raises(ValueError):
            OperatingCondition(switching_freq=0.0)


class TestAttacks:
    def setup_method(self):
        self.trace = synthesize_trace(make_device_profile(7, 0.1), OperatingCondition(), 0.016384, 5)

    def test_emi_zero_amplitude(self):
        out = inject_emi_spoof(self.trace, AttackSpec("emi_spoof", amplitude=0.0))
        assert np.array_equal(out.samples, self.trace.samples)
        assert out.label == "emi_spoof"

    def test_emi_in_phase_raises_fundamental(self):
        p = make_device_profile(7, 0.1)
        spec = AttackSpec("emi_spoof", amplitude=0.5, phase=float(p.harmonic_phase_offsets[0]))
        out = inject_emi_spoof(self.trace, spec)
        b = round(100_000 / (FS / 4096))
        before = stft_samples(self.trace.samples, FS).mean_magnitude()[b]
        after = stft_samples(out.samples, FS).mean_magnitude()[b]
        assert after > before

    def test_emi_offset_creates_peak_at_102k(self):
        out = inject_emi_spoof(self.trace, AttackSpec("emi_spoof", amplitude=0.5, freq_offset=2000))
        s0, s1 = stft_samples(self.trace.samples, FS), stft_samples(out.samples, FS)
        sel = (s0.freqs >= 95e3) & (s0.freqs <= 105e3)
        diff = s1.mean_magnitude()[sel] - s0.mean_magnitude()[sel]
        peak = s0.freqs[sel][np.argmax(diff)]
        assert abs(peak - 102_000) <= s0.bin_hz / 2
        i = int(np.argmax(diff))
        m = s1.mean_magnitude()[sel]
        assert m[i] > m[i - 1] and m[i] > m[i + 1]

    def test_wrong_kind(self):
        with pytest.raises(ValueError, match="emi_spoof"):
            inject_emi_spoof(self.trace, AttackSpec("tamper", sigma=0.1))
        with pytest.raises(ValueError, match="tamper"):
            inject_tamper(self.trace, AttackSpec("emi_spoof"))

    def test_tamper_zero_sigma(self):
        out = inject_tamper(self.trace, AttackSpec("tamper", sigma=0.0))
        assert np.array_equal(out.samples, self.trace.samples)
        assert out.label == "tamper"

    def test_tamper_variance_and_mean(self):
        tr = synthesize_trace(make_device_profile(7, 0.1), OperatingCondition(), 0.2, 11)
        s = 0.1
        out = inject_tamper(tr, AttackSpec("tamper", sigma=s), rng_seed=4)
        added = np.var(out.samples) - np.var(tr.samples)
        assert added == pytest.approx(s**2, rel=0.10)
        assert abs(out.samples.mean() - tr.samples.mean()) <= 3 * s / np.sqrt(len(tr))

    def test_attack_spec_validation(self):
        with pytest.raises(ValueError):
            AttackSpec("emi_spoof", amplitude=-1)
        with pytest.raises(ValueError):
            AttackSpec("tamper", sigma=-0.1)
        with pytest.raises(ValueError):
            AttackSpec("impersonation")
        with pytest.raises(ValueError):
            AttackSpec("replay")


def test_trace_file_roundtrip(tmp_path):
    tr = synthesize_trace(make_device_profile(2, 0.1), OperatingCondition(load_level=0.7), 0.005, 9)
    save_trace(tr, tmp_path / "t")
    back = load_trace(tmp_path / "t.f32")
    np.testing.assert_array_equal(back.samples, tr.samples.astype("<f4").astype(float))
    assert (back.device_id, back.condition, back.label, back.seed) == (2, tr.condition, "benign", 9)
    assert back.sample_rate == FS
