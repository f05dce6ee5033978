"""OFDM system model: dimensions, shaping windows, basic pulses and bands.

Sample index 0 of every symbol is the first guard sample; the receiver
window is the ``n_carriers`` samples starting at ``guard_len``.  All
carrier pulses are phase-referenced to the start of that window, so a
plain DFT of the receiver window recovers the modulating values with no
residual rotation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

WINDOW_KINDS = ("rectangular", "raised_cosine")

# Endpoints closer than this are considered the same frequency when
# normalizing band intervals.
_FREQ_TOL = 1e-12


@dataclass(frozen=True)
class OfdmConfig:
    """Dimensions of the multicarrier system.

    n_carriers     -- IDFT size N (number of carrier slots)
    guard_len      -- guard-interval samples prepended to each symbol
    rolloff_len    -- smoothed samples at each end of the shaping window
                      (0 means a plain rectangular window)
    sample_rate_hz -- sampling frequency, only used to express normalized
                      frequencies in Hz for reports
    """

    n_carriers: int
    guard_len: int
    rolloff_len: int = 0
    sample_rate_hz: float = 1.0

    def __post_init__(self):
        if self.n_carriers < 1:
            raise ValidationError("n_carriers must be a positive integer")
        if self.guard_len < 0:
            raise ValidationError("guard_len must be non-negative")
        if self.rolloff_len < 0:
            raise ValidationError("rolloff_len must be non-negative")
        if self.rolloff_len > 0 and self.rolloff_len >= self.guard_len:
            raise ValidationError(
                "rolloff_len must be smaller than guard_len so the receiver "
                "window avoids the smoothed samples"
            )
        if self.sample_rate_hz <= 0:
            raise ValidationError("sample_rate_hz must be positive")

    @property
    def symbol_period(self) -> int:
        """Samples between the starts of consecutive symbols."""
        return self.n_carriers + self.guard_len

    @property
    def pulse_len(self) -> int:
        """Length of one windowed symbol (symbol period plus one roll-off)."""
        return self.symbol_period + self.rolloff_len

    def carrier_frequency(self, k) -> np.ndarray:
        """Normalized frequency of carrier ``k``, wrapped into (-1/2, 1/2]."""
        f = np.asarray(k, dtype=float) / self.n_carriers
        w = f - np.floor(f + 0.5)
        w = np.where(w == -0.5, 0.5, w)
        return w if w.ndim else float(w)


@dataclass(frozen=True)
class ShapingWindow:
    """Real, non-negative shaping window g(n) of length ``pulse_len``."""

    samples: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in WINDOW_KINDS:
            raise ValidationError(f"unknown window kind {self.kind!r}")
        s = np.asarray(self.samples, dtype=float)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return len(self.samples)


def build_shaping_window(config: OfdmConfig, kind: str = "raised_cosine") -> ShapingWindow:
    """Build the shaping window for one symbol.

    The rectangular kind requires ``rolloff_len == 0``.  The raised-cosine
    kind is flat 1 between the two roll-off regions and uses the ramp
    g(n) = (1 - cos(pi (n+1) / (beta+1))) / 2 for n in {0..beta-1}, time
    mirrored at the tail.  With this ramp no sample is exactly 0 or 1 and
    g(n) + g(n + symbol_period) = 1 over the overlap of consecutive
    symbols.
    """
    beta = config.rolloff_len
    length = config.pulse_len
    if kind == "rectangular":
        if beta != 0:
            raise ValidationError("rectangular window requires rolloff_len == 0")
        return ShapingWindow(np.ones(length), kind)
    if kind != "raised_cosine":
        raise ValidationError(f"unknown window kind {kind!r}")
    g = np.ones(length)
    if beta > 0:
        n = np.arange(beta)
        ramp = 0.5 * (1.0 - np.cos(np.pi * (n + 1) / (beta + 1)))
        g[:beta] = ramp
        g[length - beta:] = ramp[::-1]
    return ShapingWindow(g, kind)


def basic_pulse(config: OfdmConfig, window: ShapingWindow, k: int) -> np.ndarray:
    """Waveform of carrier ``k``: the shaping window modulated to k/N.

    The DFT of the receiver window of this pulse is N at bin k and zero at
    every other bin, regardless of the window kind (the window is 1 over
    the receiver samples).
    """
    if not 0 <= k < config.n_carriers:
        raise ValidationError(f"carrier index {k} outside [0, {config.n_carriers})")
    if len(window) != config.pulse_len:
        raise ValidationError("window length does not match config.pulse_len")
    n = np.arange(config.pulse_len)
    phase = np.exp(2j * np.pi * k * (n - config.guard_len) / config.n_carriers)
    return window.samples * phase


def cyclic_extend_and_window(config: OfdmConfig, window: ShapingWindow,
                             core: np.ndarray) -> np.ndarray:
    """Cyclically extend an N-sample core at both ends and apply the window.

    Output sample n equals g(n) * core((n - guard_len) mod N): the last
    ``guard_len`` core samples are repeated at the front and the first
    ``rolloff_len`` ones at the back.
    """
    core = np.asarray(core)
    if core.shape != (config.n_carriers,):
        raise ValidationError(
            f"core must have length {config.n_carriers}, got {core.shape}"
        )
    if len(window) != config.pulse_len:
        raise ValidationError("window length does not match config.pulse_len")
    idx = (np.arange(config.pulse_len) - config.guard_len) % config.n_carriers
    return window.samples * core[idx]


def validate_guard(config: OfdmConfig, channel_len: int) -> bool:
    """True iff a channel of ``channel_len`` taps fits in the effective prefix.

    Windowing consumes ``rolloff_len`` samples of the guard interval, so
    the usable cyclic prefix is guard_len - rolloff_len.
    """
    return channel_len < config.guard_len - config.rolloff_len


def _wrap_interval(lo: float, width: float):
    """Wrap interval [lo, lo+width] into (-1/2, 1/2], splitting if needed."""
    lo_w = lo - np.floor(lo + 0.5)  # in [-1/2, 1/2)
    hi_w = lo_w + width
    if hi_w <= 0.5 + _FREQ_TOL:
        return [(lo_w, min(hi_w, 0.5))]
    return [(lo_w, 0.5), (-0.5, hi_w - 1.0)]


@dataclass(frozen=True)
class BandSet:
    """Union of normalized-frequency intervals inside (-1/2, 1/2].

    Intervals are normalized on construction: wrapped into one period,
    split at +1/2 when they cross it, sorted, and merged where they
    overlap.  Intervals that merely touch at an endpoint are kept
    distinct (the union's measure and every integral over it are
    unaffected).
    """

    intervals: tuple = field(default=())

    def __post_init__(self):
        raw = [(float(lo), float(hi)) for lo, hi in self.intervals]
        if not raw:
            raise ValidationError("band must contain at least one interval")
        pieces = []
        for lo, hi in raw:
            width = hi - lo
            if width <= _FREQ_TOL:
                raise ValidationError(f"interval ({lo}, {hi}) has no measure")
            if width > 1.0 + _FREQ_TOL:
                raise ValidationError(f"interval ({lo}, {hi}) wider than one period")
            pieces.extend(_wrap_interval(lo, min(width, 1.0)))
        pieces.sort()
        merged = [pieces[0]]
        for lo, hi in pieces[1:]:
            plo, phi = merged[-1]
            if lo < phi - _FREQ_TOL:  # genuine overlap
                merged[-1] = (plo, max(phi, hi))
            else:
                merged.append((lo, hi))
        total = sum(hi - lo for lo, hi in merged)
        if total > 1.0 + 1e-9:
            raise ValidationError("band intervals cover more than one period")
        object.__setattr__(self, "intervals", tuple(merged))

    @property
    def measure(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    def contains(self, f: np.ndarray) -> np.ndarray:
        """Boolean mask of frequencies inside the band (endpoints included)."""
        f = np.asarray(f, dtype=float)
        mask = np.zeros(f.shape, dtype=bool)
        for lo, hi in self.intervals:
            mask |= (f >= lo - _FREQ_TOL) & (f <= hi + _FREQ_TOL)
        return mask


def band_from_carriers(config: OfdmConfig, carrier_ranges,
                       guard_fraction: float = 0.5) -> BandSet:
    """Map inclusive carrier-index ranges onto a normalized-frequency band.

    Each range (a, b) becomes the interval
    [(a - guard_fraction)/N, (b + guard_fraction)/N], wrapped into
    (-1/2, 1/2].  A range with a > b wraps through carrier N-1 to 0.  The
    default half-carrier guard keeps interval endpoints off the carrier
    frequencies themselves.
    """
    ranges = list(carrier_ranges)
    if not ranges:
        raise ValidationError("carrier_ranges must not be empty")
    n = config.n_carriers
    intervals = []
    for a, b in ranges:
        a, b = int(a), int(b)
        if not (0 <= a < n and 0 <= b < n):
            raise ValidationError(f"carrier range ({a}, {b}) outside [0, {n})")
        span = b - a if a <= b else b + n - a
        lo = (a - guard_fraction) / n
        width = (span + 2.0 * guard_fraction) / n
        intervals.append((lo, lo + width))
    return BandSet(tuple(intervals))
