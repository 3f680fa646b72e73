"""Training signals, per-antenna delay lines, and noisy system outputs."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import MimoChannel

__all__ = [
    "GENERATOR_KINDS",
    "Regressor",
    "NoiseModel",
    "TrainingGenerator",
    "ofdm_time_samples",
    "push_regressor",
    "snr_to_variance",
    "variance_to_snr",
    "system_output",
]

GENERATOR_KINDS = ("gaussian", "bpsk", "ofdm")


@dataclass(frozen=True, eq=False)
class Regressor:
    """Stacked delay-line vector of training samples.

    For each transmit antenna, ``stacked`` holds that antenna's most recent
    ``length`` samples, newest first; antenna blocks are concatenated in
    transmit order, so the full vector has ``nt_count * length`` entries.
    """

    stacked: np.ndarray
    nt_count: int
    length: int

    def __post_init__(self):
        stacked = np.asarray(self.stacked, dtype=np.float64)
        if stacked.shape != (self.nt_count * self.length,):
            raise ValueError(
                f"stacked must have {self.nt_count * self.length} entries, "
                f"got shape {stacked.shape}"
            )
        object.__setattr__(self, "stacked", stacked)

    @classmethod
    def zeros(cls, nt_count: int, length: int) -> "Regressor":
        """Cold-start delay line, all entries zero."""
        return cls(np.zeros(nt_count * length), nt_count, length)


def push_regressor(state: Regressor, new_samples) -> Regressor:
    """Shift one new sample per antenna into the delay line.

    Per antenna block the newest sample lands at offset 0 and the oldest
    one is discarded; everything else moves by one position.
    """
    samples = np.asarray(new_samples, dtype=np.float64)
    if samples.shape != (state.nt_count,):
        raise ValueError(
            f"expected {state.nt_count} samples (one per transmit antenna), "
            f"got shape {samples.shape}"
        )
    blocks = state.stacked.reshape(state.nt_count, state.length)
    shifted = np.empty_like(blocks)
    shifted[:, 0] = samples
    shifted[:, 1:] = blocks[:, :-1]
    return Regressor(shifted.reshape(-1), state.nt_count, state.length)


def ofdm_time_samples(freq_symbols) -> np.ndarray:
    """Unitary inverse DFT of one block of frequency-domain symbols.

    The 1/sqrt(C) scaling preserves total power (Parseval), so unit-power
    frequency symbols yield unit average power in the time domain.
    """
    symbols = np.asarray(freq_symbols, dtype=np.complex128)
    if symbols.ndim != 1 or symbols.size == 0:
        raise ValueError("freq_symbols must be a non-empty 1-D vector")
    return np.fft.ifft(symbols) * math.sqrt(symbols.size)


class TrainingGenerator:
    """Draws one real training sample per transmit antenna per call.

    Kinds:

    * ``gaussian`` -- zero-mean unit-power normal samples (default).
    * ``bpsk``     -- equiprobable +/-1.
    * ``ofdm``     -- real parts of unitary-IDFT time samples of random
      unit-modulus QPSK subcarrier symbols, consumed sequentially one
      block at a time.
    """

    def __init__(self, kind: str, nt_count: int, rng: np.random.Generator, subcarriers: int = 64):
        if kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown training generator {kind!r}; expected one of {GENERATOR_KINDS}")
        if nt_count < 1:
            raise ValueError("nt_count must be at least 1")
        if subcarriers < 1:
            raise ValueError("subcarriers must be at least 1")
        self.kind = kind
        self.nt_count = nt_count
        self.subcarriers = subcarriers
        self._rng = rng
        self._block = None
        self._cursor = 0

    def next(self) -> np.ndarray:
        """One new sample per transmit antenna, shape ``(nt_count,)``."""
        rng = self._rng
        if self.kind == "gaussian":
            return rng.standard_normal(self.nt_count)
        if self.kind == "bpsk":
            return rng.integers(0, 2, self.nt_count) * 2.0 - 1.0
        if self._block is None or self._cursor >= self.subcarriers:
            self._refill()
        column = self._block[:, self._cursor]
        self._cursor += 1
        return column

    def _refill(self):
        c = self.subcarriers
        re = self._rng.integers(0, 2, (self.nt_count, c)) * 2.0 - 1.0
        im = self._rng.integers(0, 2, (self.nt_count, c)) * 2.0 - 1.0
        symbols = (re + 1j * im) / math.sqrt(2.0)
        block = np.stack([ofdm_time_samples(symbols[i]) for i in range(self.nt_count)])
        self._block = block.real
        self._cursor = 0


def snr_to_variance(snr_db: float, signal_power: float = 1.0) -> float:
    """Noise power for a given SNR in dB; ``inf`` maps to the noiseless 0."""
    return signal_power / 10.0 ** (snr_db / 10.0)


def variance_to_snr(variance: float, signal_power: float = 1.0) -> float:
    """Inverse of :func:`snr_to_variance`."""
    return 10.0 * math.log10(signal_power / variance)


@dataclass(eq=False)
class NoiseModel:
    """Additive white Gaussian observation noise of fixed power.

    ``variance == 0`` is accepted as the noiseless limit (SNR -> inf).
    """

    variance: float
    rng: np.random.Generator

    def __post_init__(self):
        if self.variance < 0 or not math.isfinite(self.variance):
            raise ValueError(f"variance must be finite and nonnegative, got {self.variance}")
        self._std = math.sqrt(self.variance)

    def sample(self, count: int) -> np.ndarray:
        return self.rng.normal(0.0, self._std, count)


def system_output(channel: MimoChannel, x: Regressor, noise: NoiseModel) -> np.ndarray:
    """Noisy received sample per antenna: ``y = row_matrix @ x + z``."""
    if x.nt_count != channel.nt_count or x.length != channel.tap_count:
        raise ValueError(
            f"regressor layout ({x.nt_count} x {x.length}) does not match "
            f"channel ({channel.nt_count} x {channel.tap_count})"
        )
    return channel.row_matrix @ x.stacked + noise.sample(channel.nr_count)
