"""Symbol-train responses assembled from step responses, and additive noise."""

from __future__ import annotations

import numpy as np
from scipy.signal import oaconvolve

from .downconvert import ComplexBaseband
from .library import SAMPLES_PER_SYMBOL, StepResponseLibrary, carrier_cycles
from .symbols import SymbolSequence

TAIL_SYMBOLS = 8


def synthesize_response(lib: StepResponseLibrary, sym: SymbolSequence, symbol_rate: float,
                        tail_symbols: int = TAIL_SYMBOLS, scale: float = 1.0) -> ComplexBaseband:
    """Baseband response to the symbol train, by superposition of step responses.

    Symbol ``n`` starts at ``n / symbol_rate``; at each boundary the new symbol's
    step is added and the previous one's removed. The output runs from the
    library origin at 16 samples per symbol and extends ``tail_symbols`` past
    the last boundary.
    """
    carrier_cycles(lib.f_c, symbol_rate)
    lib = lib.at_rate(symbol_rate)
    sps = SAMPLES_PER_SYMBOL
    N = sym.n_symbols
    n_out = sps * (N + 1 + tail_symbols)
    P = lib.phases.size
    d = np.zeros((P, n_out))
    a, phi = sym.amplitudes, sym.phases
    for n in range(1, N + 1):
        m = sps * n
        p, s = lib.lookup(phi[n])
        d[p, m] += a[n] * s
        if a[n - 1] != 0.0:
            p, s = lib.lookup(phi[n - 1])
            d[p, m] -= a[n - 1] * s
    final = lib.final_values
    out = np.zeros(n_out, dtype=complex)
    for p in range(P):
        if not np.any(d[p]):
            continue
        transient = lib.responses[p] - final[p]
        out += final[p] * np.cumsum(d[p])
        out += oaconvolve(d[p], transient)[:n_out]
    return ComplexBaseband(1.0 / (sps * symbol_rate), scale * out, lib.f_c, lib.t_origin)


def add_awgn(bb: ComplexBaseband, noise_density: float, seed) -> ComplexBaseband:
    """Independent circular Gaussian noise of variance ``noise_density * fs`` per sample."""
    if noise_density < 0:
        raise ValueError("noise_density must be non-negative")
    if noise_density == 0:
        return bb
    rng = np.random.default_rng(seed)
    sigma = np.sqrt(noise_density * bb.sample_rate / 2)
    n = sigma * (rng.standard_normal(bb.samples.size) + 1j * rng.standard_normal(bb.samples.size))
    return ComplexBaseband(bb.dt, bb.samples + n, bb.f_c, bb.t_start)


def symbol_region(bb: ComplexBaseband, n_symbols: int, sps: int = SAMPLES_PER_SYMBOL):
    """Samples spanning symbols ``1..N`` (origin at the idle ``a_0`` interval)."""
    return bb.samples[sps:sps * (n_symbols + 1)]


def signal_power(bb: ComplexBaseband, n_symbols: int) -> float:
    return float(np.mean(np.abs(symbol_region(bb, n_symbols)) ** 2))


def snr_db(bb: ComplexBaseband, n_symbols: int, noise_density: float, symbol_rate: float) -> float:
    """Symbol-energy to noise-density ratio ``P / (N0 R)`` in dB."""
    return float(10 * np.log10(signal_power(bb, n_symbols) / (noise_density * symbol_rate)))


def calibrate_noise_density(bb: ComplexBaseband, n_symbols: int, symbol_rate: float,
                            snr_target_db: float = 30.0) -> float:
    """``N0`` giving ``snr_target_db`` for the reference response ``bb``."""
    return signal_power(bb, n_symbols) / (symbol_rate * 10 ** (snr_target_db / 10))


def energy_scale(symbol_rate: float, reference_rate: float) -> float:
    """Field amplitude that keeps energy per symbol fixed as the rate changes."""
    return float(np.sqrt(symbol_rate / reference_rate))
