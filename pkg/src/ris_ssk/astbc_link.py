"""Two-slot orthogonal phase coding across two halves of the surface.

The surface is split into two sub-surfaces of N/2 elements.  Their common
phase offsets over two time slots form an orthogonal 2x2 code carrying two
PSK symbols of surface-originated data, while the source keeps signalling
its antenna index.  Both the exhaustive joint detector and the combining
based fast detector are provided; the fast antenna metric is the true
per-antenna ML cost scaled by that antenna's channel gain, so the two can
disagree (measured, not assumed, by the validation suite).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, NoiseModel, sample_awgn
from .pb_link import encode_ssk

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class AstbcFrame:
    """One two-slot transmission: antenna index plus two PSK phases."""

    l: int
    alpha1: float
    alpha2: float
    bits_src: tuple[int, ...]
    bits_ris: tuple[int, ...]


@dataclass(frozen=True)
class EquivalentChannel:
    """Per-antenna sub-surface sums h1, h2 and combined gain |h1|^2+|h2|^2."""

    h1: complex
    h2: complex

    @property
    def gain(self) -> float:
        return abs(self.h1) ** 2 + abs(self.h2) ** 2


def psk_phases(m: int) -> np.ndarray:
    """The M-ary phase alphabet {0, 2pi/M, ..., 2pi(M-1)/M}."""
    if m < 2 or m & (m - 1):
        raise ValueError("PSK order must be a power of two >= 2")
    return _TWO_PI * np.arange(m) / m


def phase_index(alpha: float, m: int) -> int:
    """Index k of a phase from the M-ary alphabet (alpha = 2 pi k / M)."""
    return int(round(alpha * m / _TWO_PI)) % m


def encode_ris_bits(bits, m: int) -> tuple[float, float]:
    """Split the surface bits in half and map each half to a PSK phase.

    The first log2(M) bits choose sub-surface #1's phase, the rest choose
    sub-surface #2's, each by natural binary value (MSB first).
    """
    bits = tuple(int(b) for b in bits)
    bps = int(np.log2(m))
    if 2**bps != m:
        raise ValueError("PSK order must be a power of two")
    if len(bits) != 2 * bps:
        raise ValueError(f"expected {2 * bps} bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("bits must be 0 or 1")
    k1 = k2 = 0
    for b in bits[:bps]:
        k1 = (k1 << 1) | b
    for b in bits[bps:]:
        k2 = (k2 << 1) | b
    return _TWO_PI * k1 / m, _TWO_PI * k2 / m


def decode_ris_phases(alpha1: float, alpha2: float, m: int) -> tuple[int, ...]:
    """Bit label (MSB first) of a detected phase pair."""
    bps = int(np.log2(m))
    k1, k2 = phase_index(alpha1, m), phase_index(alpha2, m)
    out = []
    for k in (k1, k2):
        out.extend((k >> (bps - 1 - i)) & 1 for i in range(bps))
    return tuple(out)


def make_frame(src_bits, ris_bits, m: int) -> AstbcFrame:
    """Assemble a frame from source bits (antenna) and surface bits (phases)."""
    sym = encode_ssk(src_bits)
    alpha1, alpha2 = encode_ris_bits(ris_bits, m)
    return AstbcFrame(
        l=sym.l,
        alpha1=alpha1,
        alpha2=alpha2,
        bits_src=sym.bits,
        bits_ris=tuple(int(b) for b in ris_bits),
    )


def code_matrix(alpha1: float, alpha2: float) -> np.ndarray:
    """The 2x2 orthogonal code matrix; C^H C = 2 I for every phase pair."""
    return np.array(
        [
            [np.exp(1j * alpha1), np.exp(1j * alpha2)],
            [-np.exp(-1j * alpha2), np.exp(-1j * alpha1)],
        ]
    )


def sub_surface_channels(ch: ChannelRealization) -> tuple[np.ndarray, np.ndarray]:
    """Sub-surface sums h1, h2 for every antenna at once (each length Nt)."""
    if ch.n % 2:
        raise ValueError("element count must be even for two sub-surfaces")
    half = ch.n // 2
    h1 = ch.f[:half] @ ch.G[:half, :]
    h2 = ch.f[half:] @ ch.G[half:, :]
    return h1, h2


def equivalent_channel(ch: ChannelRealization, l: int) -> EquivalentChannel:
    if not 1 <= l <= ch.nt:
        raise IndexError(f"antenna index {l} out of range 1..{ch.nt}")
    h1, h2 = sub_surface_channels(ch)
    return EquivalentChannel(h1=complex(h1[l - 1]), h2=complex(h2[l - 1]))


def transmit_astbc(
    ch: ChannelRealization,
    frame: AstbcFrame,
    noise: NoiseModel,
    rng: np.random.Generator,
) -> tuple[complex, complex]:
    """Two received slots.

    Slot 1 applies (alpha1, alpha2) to the sub-surfaces; slot 2 applies
    (pi - alpha2, -alpha1), which realizes the orthogonal code on the
    equivalent two-path channel.
    """
    eq = equivalent_channel(ch, frame.l)
    w1 = sample_awgn(noise, rng)
    w2 = sample_awgn(noise, rng)
    a1, a2 = np.exp(1j * frame.alpha1), np.exp(1j * frame.alpha2)
    y1 = a1 * eq.h1 + a2 * eq.h2 + w1
    y2 = -np.conj(a2) * eq.h1 + np.conj(a1) * eq.h2 + w2
    return y1, y2


def combine(y1: complex, y2: complex, eq: EquivalentChannel) -> tuple[complex, complex]:
    """Orthogonal-code combining; noiseless outputs are gain * e^{j alpha}."""
    r1 = y1 * np.conj(eq.h1) + np.conj(y2) * eq.h2
    r2 = y1 * np.conj(eq.h2) - np.conj(y2) * eq.h1
    return r1, r2


def optimal_costs(
    y1: complex, y2: complex, ch: ChannelRealization, m: int
) -> np.ndarray:
    """Residual ||y - C h_l||^2 for every (l, k1, k2) hypothesis.

    Shape (Nt, M, M), indexed by 0-based antenna and phase indices.
    """
    h1, h2 = sub_surface_channels(ch)
    psk = np.exp(1j * psk_phases(m))
    a1 = psk[None, :, None]
    a2 = psk[None, None, :]
    s1 = y1 - (a1 * h1[:, None, None] + a2 * h2[:, None, None])
    s2 = y2 - (-np.conj(a2) * h1[:, None, None] + np.conj(a1) * h2[:, None, None])
    return np.abs(s1) ** 2 + np.abs(s2) ** 2


def detect_astbc_optimal(
    y1: complex, y2: complex, ch: ChannelRealization, m: int
) -> tuple[int, float, float]:
    """Exhaustive joint ML over all Nt * M^2 hypotheses.

    Ties resolve to the lexicographically smallest (l, alpha1, alpha2).
    """
    cost = optimal_costs(y1, y2, ch, m)
    flat = int(np.argmin(cost))
    l0, k1, k2 = np.unravel_index(flat, cost.shape)
    alphas = psk_phases(m)
    return int(l0) + 1, float(alphas[k1]), float(alphas[k2])


def fast_antenna_metrics(
    y1: complex, y2: complex, ch: ChannelRealization, m: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Combining-based per-antenna metric D and the inner phase decisions.

    For each antenna, combines the two slots, searches each PSK alphabet
    separately (2M metric evaluations per antenna instead of M^2), and
    accumulates the two residuals.  A zero-gain antenna degenerates to
    D = |r1|^2 + |r2|^2.
    """
    h1, h2 = sub_surface_channels(ch)
    psk = np.exp(1j * psk_phases(m))
    r1 = y1 * np.conj(h1) + np.conj(y2) * h2
    r2 = y1 * np.conj(h2) - np.conj(y2) * h1
    gain = np.abs(h1) ** 2 + np.abs(h2) ** 2
    d1 = np.abs(r1[:, None] - gain[:, None] * psk[None, :]) ** 2
    d2 = np.abs(r2[:, None] - gain[:, None] * psk[None, :]) ** 2
    k1 = d1.argmin(axis=1)
    k2 = d2.argmin(axis=1)
    ar = np.arange(ch.nt)
    return d1[ar, k1] + d2[ar, k2], k1, k2


def detect_astbc_fast(
    y1: complex, y2: complex, ch: ChannelRealization, m: int
) -> tuple[int, float, float]:
    """Low-complexity detector: argmin of the combining metric, then the
    two inner phase decisions at the chosen antenna."""
    D, k1, k2 = fast_antenna_metrics(y1, y2, ch, m)
    l0 = int(np.argmin(D))
    alphas = psk_phases(m)
    return l0 + 1, float(alphas[k1[l0]]), float(alphas[k2[l0]])
