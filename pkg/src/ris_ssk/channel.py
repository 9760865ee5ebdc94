"""Fading channel and receiver-noise sampling with reproducible substreams.

All randomness in the simulator flows through counter-based Philox streams
keyed by (seed, trial index, purpose), so a given trial produces identical
draws no matter how many trials run around it or how work is split across
processes.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

_SQRT2 = np.sqrt(2.0)

# Small fixed codes for the purposes the simulator itself uses; arbitrary
# purpose strings fall back to a crc32-derived code.
_PURPOSE_CODES = {
    "channel": 0,
    "data": 1,
    "sdr": 2,
    "oracle": 3,
}

_TRIAL_LIMIT = 1 << 48


def _purpose_code(purpose: str | int) -> int:
    if isinstance(purpose, int):
        code = purpose
    else:
        code = _PURPOSE_CODES.get(purpose)
        if code is None:
            code = zlib.crc32(purpose.encode()) & 0xFFFF
    if not 0 <= code < (1 << 16):
        raise ValueError(f"purpose code out of range: {code}")
    return code


def _philox_key(seed: int, trial: int, purpose: str | int) -> np.ndarray:
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    if not 0 <= trial < _TRIAL_LIMIT:
        raise ValueError(f"trial index must be in [0, 2^48), got {trial}")
    key = np.empty(2, dtype=np.uint64)
    key[0] = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    key[1] = (np.uint64(trial) << np.uint64(16)) | np.uint64(_purpose_code(purpose))
    return key


def substream(seed: int, trial: int, purpose: str | int = "channel") -> np.random.Generator:
    """Independent random stream for one (seed, trial, purpose) triple.

    The same triple always yields a bit-identical stream, which makes every
    Monte Carlo trial reproducible in isolation and under any parallel
    execution order.
    """
    return np.random.Generator(np.random.Philox(key=_philox_key(seed, trial, purpose)))


class StreamBank:
    """Reusable generator that re-keys itself per trial.

    Produces streams bit-identical to :func:`substream` while skipping the
    per-trial generator construction cost.  Not safe to share across
    threads or processes; create one per worker and purpose.
    """

    def __init__(self, seed: int, purpose: str | int):
        self._bg = np.random.Philox(key=_philox_key(seed, 0, purpose))
        self._gen = np.random.Generator(self._bg)
        self._state = self._bg.state
        self._purpose = np.uint64(_purpose_code(purpose))
        self._seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)

    def trial(self, trial: int) -> np.random.Generator:
        """Return the shared generator re-keyed to the given trial index."""
        if not 0 <= trial < _TRIAL_LIMIT:
            raise ValueError(f"trial index must be in [0, 2^48), got {trial}")
        st = self._state
        st["state"]["counter"][:] = 0
        st["state"]["key"][0] = self._seed
        st["state"]["key"][1] = (np.uint64(trial) << np.uint64(16)) | self._purpose
        st["buffer_pos"] = 4
        self._bg.state = st
        return self._gen


@dataclass(frozen=True)
class NoiseModel:
    """Complex AWGN at the destination with variance ``n0`` per sample.

    ``n0 = 0`` is the degenerate noiseless mode.  The transmit SNR is the
    reciprocal of the noise variance.
    """

    n0: float

    def __post_init__(self):
        if self.n0 < 0:
            raise ValueError("noise variance must be nonnegative")

    @property
    def rho(self) -> float:
        """Linear transmit SNR (inf in noiseless mode)."""
        return np.inf if self.n0 == 0 else 1.0 / self.n0

    @classmethod
    def from_snr_db(cls, snr_db: float) -> "NoiseModel":
        return cls(n0=10.0 ** (-snr_db / 10.0))

    @classmethod
    def from_rho(cls, rho: float) -> "NoiseModel":
        if rho <= 0:
            raise ValueError("linear SNR must be positive")
        return cls(n0=1.0 / rho)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the reflected link: G is source-to-surface (N x Nt),
    f is surface-to-destination (N,), and d is an optional direct
    source-to-destination link (Nt,) used only by the direct-link baseline."""

    G: np.ndarray
    f: np.ndarray
    d: np.ndarray | None = None

    def __post_init__(self):
        if self.G.ndim != 2:
            raise ValueError("G must be a 2-D matrix")
        if self.f.ndim != 1 or self.f.shape[0] != self.G.shape[0]:
            raise ValueError("f must be a vector with one entry per reflecting element")
        if self.d is not None and self.d.shape != (self.G.shape[1],):
            raise ValueError("d must have one entry per transmit antenna")

    @property
    def n(self) -> int:
        return self.G.shape[0]

    @property
    def nt(self) -> int:
        return self.G.shape[1]


def sample_channel(
    n: int,
    nt: int,
    rng: np.random.Generator,
    with_direct: bool = False,
) -> ChannelRealization:
    """Draw one i.i.d. unit-variance complex Gaussian channel realization.

    Each entry of G and f (and d when requested) is circularly symmetric
    with zero mean and unit variance, split evenly between the real and
    imaginary parts.
    """
    if n < 1 or nt < 1:
        raise ValueError("channel dimensions must be at least 1")
    size = n * nt + n + (nt if with_direct else 0)
    z = rng.standard_normal(2 * size)
    zc = (z[0::2] + 1j * z[1::2]) / _SQRT2
    G = zc[: n * nt].reshape(n, nt)
    f = zc[n * nt : n * nt + n]
    d = zc[n * nt + n :] if with_direct else None
    return ChannelRealization(G=G, f=f, d=d)


def sample_awgn(noise: NoiseModel, rng: np.random.Generator) -> complex:
    """One zero-mean complex Gaussian noise sample with variance ``n0``."""
    if noise.n0 == 0:
        return 0j
    z = rng.standard_normal(2)
    return complex(z[0], z[1]) * np.sqrt(noise.n0 / 2.0)


def effective_gain(ch: ChannelRealization, phi, l: int) -> complex:
    """Cascaded scalar channel seen from antenna ``l`` (1-based).

    Computes sum_i f_i * g_il * phi_i for unit-modulus reflection
    coefficients ``phi`` (a complex array or any object exposing ``.phi``).
    """
    coeff = np.asarray(getattr(phi, "phi", phi))
    if coeff.shape != (ch.n,):
        raise ValueError("reflection vector length must match the element count")
    if not 1 <= l <= ch.nt:
        raise IndexError(f"antenna index {l} out of range 1..{ch.nt}")
    return complex(np.sum(ch.f * coeff * ch.G[:, l - 1]))


def all_effective_gains(ch: ChannelRealization, phi) -> np.ndarray:
    """Cascaded gains for every transmit antenna at once (length Nt)."""
    coeff = np.asarray(getattr(phi, "phi", phi))
    if coeff.shape != (ch.n,):
        raise ValueError("reflection vector length must match the element count")
    return (ch.f * coeff) @ ch.G
