"""STFT magnitude spectrograms and harmonic-band feature vectors."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .synth import NoiseTrace


@dataclass(frozen=True)
class StftConfig:
    window_kind: str = "hann"
    window_len: int = 4096
    hop: int = 2048
    fft_len: int = 4096

    def __post_init__(self):
        if self.window_kind not in ("hann", "rect"):
            raise ValueError(f"window_kind must be 'hann' or 'rect', got {self.window_kind!r}")
        if not 1 <= self.hop <= self.window_len <= self.fft_len:
            raise ValueError("need 1 <= hop <= window_len <= fft_len")
        if self.fft_len & (self.fft_len - 1):
            raise ValueError(f"fft_len must be a power of two, got {self.fft_len}")


@lru_cache(maxsize=16)
def _window(kind: str, n: int) -> np.ndarray:
    if kind == "rect":
        w = np.ones(n)
    else:
        # periodic Hann, the DFT-even form
        w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    w.setflags(write=False)
    return w


def window(cfg: StftConfig) -> np.ndarray:
    return _window(cfg.window_kind, cfg.window_len)


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Magnitudes ``|DFT(frame * window)|``, shape ``[frame, bin]``, one-sided.

    No scaling is applied. ``meta`` carries the window sums needed to convert:
    a bin-centred sinusoid of amplitude ``A`` reads ``A * window_sum / 2``, and
    ``sum_k |X_k|^2 = fft_len * sum_n |x_n w_n|^2`` over the two-sided spectrum.
    """

    magnitudes: np.ndarray
    bin_hz: float
    frame_times: np.ndarray
    sample_rate: float
    fft_len: int
    meta: dict = field(default_factory=dict)

    @property
    def n_bins(self) -> int:
        return self.magnitudes.shape[1]

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_hz

    def mean_magnitude(self) -> np.ndarray:
        return self.magnitudes.mean(axis=0)


def stft_samples(x: np.ndarray, sample_rate: float, cfg: StftConfig = StftConfig()) -> Spectrogram:
    x = np.asarray(x, dtype=float)
    if len(x) < cfg.window_len:
        raise ValueError(f"trace has {len(x)} samples, STFT needs at least {cfg.window_len}")
    w = window(cfg)
    frames = np.lib.stride_tricks.sliding_window_view(x, cfg.window_len)[::cfg.hop]
    mags = np.abs(np.fft.rfft(frames * w, n=cfg.fft_len, axis=1))
    starts = np.arange(len(frames)) * cfg.hop
    meta = {
        "scaling": "unnormalized |DFT|",
        "window": cfg.window_kind,
        "window_sum": float(w.sum()),
        "window_energy": float(np.sum(w * w)),
        "window_len": cfg.window_len,
        "hop": cfg.hop,
    }
    return Spectrogram(mags, sample_rate / cfg.fft_len,
                       (starts + cfg.window_len / 2) / sample_rate,
                       float(sample_rate), cfg.fft_len, meta)


def stft(trace: NoiseTrace, cfg: StftConfig = StftConfig()) -> Spectrogram:
    """STFT of a trace; frame times are window centres in seconds."""
    return stft_samples(trace.samples, trace.sample_rate, cfg)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    band_centers: np.ndarray

    def __len__(self) -> int:
        return len(self.values)


def band_cells(bin_hz: float, n_bins: int, harmonics: Sequence[float], half_width: float,
               n_per_band: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bin ranges of the feature cells.

    Each band ``[h - half_width, h + half_width]`` is cut into ``n_per_band``
    equal-width cells. A cell takes the bins whose centre frequency falls inside
    it (the last cell is closed on the right); a cell narrower than one bin
    borrows the bin nearest its centre.

    Returns ``(start, stop, centers)``: half-open bin index ranges and the cell
    centre frequencies.
    """
    if n_per_band < 1:
        raise ValueError("n_per_band must be >= 1")
    nyq = (n_bins - 1) * bin_hz
    starts, stops, centers = [], [], []
    eps = 1e-9
    for h in harmonics:
        lo, hi = h - half_width, h + half_width
        if lo < 0 or hi > nyq + eps * bin_hz:
            raise ValueError(f"band for harmonic {h:g} Hz ([{lo:g}, {hi:g}] Hz) lies outside "
                             f"the spectrogram range [0, {nyq:g}] Hz")
        edges = np.linspace(lo, hi, n_per_band + 1)
        for i in range(n_per_band):
            a = int(np.ceil(edges[i] / bin_hz - eps))
            if i == n_per_band - 1:
                b = int(np.floor(edges[i + 1] / bin_hz + eps)) + 1
            else:
                b = int(np.ceil(edges[i + 1] / bin_hz - eps))
            c = 0.5 * (edges[i] + edges[i + 1])
            if b <= a:
                a = int(np.clip(round(c / bin_hz), 0, n_bins - 1))
                b = a + 1
            starts.append(a)
            stops.append(min(b, n_bins))
            centers.append(c)
    return np.array(starts), np.array(stops), np.array(centers)


def _cell_means(mean_mag: np.ndarray, start: np.ndarray, stop: np.ndarray) -> np.ndarray:
    cs = np.concatenate([[0.0], np.cumsum(mean_mag)])
    return (cs[stop] - cs[start]) / (stop - start)


def normalize(values: np.ndarray) -> np.ndarray:
    total = values.sum()
    if total <= 0:
        return np.zeros_like(values)
    return values / total


def extract_features(spec: Spectrogram, harmonics: Sequence[float], half_width: float,
                     n_per_band: int) -> FeatureVector:
    """Time-averaged, sum-normalized band amplitudes around each harmonic.

    Cells are averaged rather than point-sampled, so a line anywhere in a
    cell contributes to it. All-zero input gives an all-zero vector.
    """
    start, stop, centers = band_cells(spec.bin_hz, spec.n_bins, harmonics, half_width, n_per_band)
    raw = _cell_means(spec.mean_magnitude(), start, stop)
    return FeatureVector(normalize(raw), centers)


@dataclass(frozen=True)
class FeatureConfig:
    n_bands: int = 4               # harmonics 1..n_bands of the switching frequency
    half_width: float = 5000.0
    n_per_band: int = 16

    def harmonics(self, switching_freq: float) -> list[float]:
        return [k * switching_freq for k in range(1, self.n_bands + 1)]

    @property
    def n_features(self) -> int:
        return self.n_bands * self.n_per_band


class FeatureExtractor:
    """Precomputed STFT + feature path for repeated frames of equal length.

    Holds only read-only arrays after construction, so one instance can be
    shared between threads.
    """

    def __init__(self, sample_rate: float, switching_freq: float,
                 stft_cfg: StftConfig = StftConfig(), feat_cfg: FeatureConfig = FeatureConfig()):
        self.sample_rate = float(sample_rate)
        self.stft_cfg = stft_cfg
        self.feat_cfg = feat_cfg
        self._w = window(stft_cfg)
        n_bins = stft_cfg.fft_len // 2 + 1
        self.start, self.stop, self.centers = band_cells(
            sample_rate / stft_cfg.fft_len, n_bins, feat_cfg.harmonics(switching_freq),
            feat_cfg.half_width, feat_cfg.n_per_band)
        self._count = (self.stop - self.start).astype(float)

    def raw_cells(self, x: np.ndarray) -> np.ndarray:
        """Un-normalized cell means of the time-averaged magnitude spectrum."""
        cfg = self.stft_cfg
        if len(x) < cfg.window_len:
            raise ValueError(f"frame has {len(x)} samples, STFT needs at least {cfg.window_len}")
        if len(x) == cfg.window_len:
            mag = np.abs(np.fft.rfft(x * self._w, n=cfg.fft_len))
        else:
            frames = np.lib.stride_tricks.sliding_window_view(x, cfg.window_len)[::cfg.hop]
            mag = np.abs(np.fft.rfft(frames * self._w, n=cfg.fft_len, axis=1)).mean(axis=0)
        cs = np.concatenate([[0.0], np.cumsum(mag)])
        return (cs[self.stop] - cs[self.start]) / self._count

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return normalize(self.raw_cells(x))

    def features(self, x: np.ndarray) -> FeatureVector:
        return FeatureVector(self(x), self.centers)


def save_spectrogram_csv(spec: Spectrogram, path: str | Path) -> None:
    """CSV grid (rows = frames, columns = bins) behind a one-line JSON header."""
    header = {"bin_hz": spec.bin_hz, "frame_times": spec.frame_times.tolist(),
              "sample_rate": spec.sample_rate, "fft_len": spec.fft_len, **spec.meta}
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        np.savetxt(fh, spec.magnitudes, delimiter=",", fmt="%.9g")


def load_spectrogram_csv(path: str | Path) -> Spectrogram:
    with open(path) as fh:
        header = json.loads(fh.readline()[2:])
        mags = np.loadtxt(fh, delimiter=",", ndmin=2)
    meta = {k: v for k, v in header.items()
            if k not in ("bin_hz", "frame_times", "sample_rate", "fft_len")}
    return Spectrogram(mags, header["bin_hz"], np.asarray(header["frame_times"]),
                       header["sample_rate"], header["fft_len"], meta)
