"""One received, equalized symbol stream: synthesis, noise, training, scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import clone

from .equalizer import LinearEqualizer
from .library import SAMPLES_PER_SYMBOL, StepResponseLibrary
from .metrics import evm
from .symbols import SymbolSequence
from .synthesis import add_awgn, snr_db, synthesize_response

# symbols excluded from scoring while the equalizer's window fills
SCORING_PREFIX = 64


@dataclass(frozen=True)
class LinkResult:
    symbol_rate: float
    evm_percent: float
    snr_db: float
    tx: np.ndarray
    rx: np.ndarray
    eq: np.ndarray
    equalizer: LinearEqualizer


def noise_seeds(seed: int, *key: int, n: int) -> list:
    ss = np.random.SeedSequence([int(seed), *map(int, key)])
    return [int(s) for s in ss.generate_state(n, dtype=np.uint64)]


def run_link(lib: StepResponseLibrary, sym: SymbolSequence, symbol_rate: float,
             noise_density: float, seed: int, scale: float = 1.0,
             equalizer: LinearEqualizer | None = None, key=()) -> LinkResult:
    """Equalize the response to ``sym`` and score it on a fresh noise realisation.

    The equalizer trains on one independent noisy instance per epoch; with
    ``noise_density == 0`` all epochs see the same clean record. Received
    points ``rx`` are the last sample of each symbol interval, scaled by the
    least-squares complex gain onto the transmitted points.
    """
    sps = SAMPLES_PER_SYMBOL
    eq = LinearEqualizer() if equalizer is None else clone(equalizer)
    N = sym.n_symbols
    clean = synthesize_response(lib, sym, symbol_rate, scale=scale)
    n_train = eq.max_epochs if noise_density > 0 else 1
    seeds = noise_seeds(seed, *key, n=n_train + 1)
    X = np.array([add_awgn(clean, noise_density, s).samples[sps:] for s in seeds[:n_train]])
    eq.fit(X, sym.symbols)
    test = add_awgn(clean, noise_density, seeds[-1]).samples[sps:]
    y = eq.predict(test, N)
    raw = test[sps - 1:sps * N:sps]
    g = np.vdot(raw, sym.symbols) / np.vdot(raw, raw)
    score = evm(y[SCORING_PREFIX:], sym.symbols[SCORING_PREFIX:])
    snr = snr_db(clean, N, noise_density, symbol_rate) if noise_density > 0 else np.inf
    return LinkResult(symbol_rate, score, snr, sym.symbols, g * raw, y, eq)
