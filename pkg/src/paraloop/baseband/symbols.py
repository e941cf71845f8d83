"""PRBS-driven, Gray-labelled 16QAM symbol sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._validation import check_int

# x^23 + x^18 + 1
PRBS23_TAPS = (23, 18)
# Gray labelling per axis: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
_GRAY_LEVELS = {(0, 0): -3, (0, 1): -1, (1, 1): 1, (1, 0): 3}
QAM16_SCALE = 1 / np.sqrt(10)  # unit mean symbol energy


def prbs_bits(seed: int, n: int, taps=PRBS23_TAPS) -> np.ndarray:
    """``n`` bits of the maximal-length LFSR ``x^a + x^b + 1``, state drawn from ``seed``."""
    a, b = taps
    period = (1 << a) - 1
    state = int(np.random.SeedSequence(int(seed)).generate_state(1, dtype=np.uint64)[0])
    state = state % period + 1
    reg = [(state >> i) & 1 for i in range(a)]
    out = np.empty(n + a, dtype=np.uint8)
    out[:a] = reg
    for k in range(a, n + a):
        out[k] = out[k - a] ^ out[k - a + (a - b)]
    return out[a:]


def map_16qam(bits) -> np.ndarray:
    """Four bits per symbol: first pair picks I, second pair picks Q. Odd-integer grid."""
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1, 4)
    lut = np.zeros((2, 2))
    for (b0, b1), level in _GRAY_LEVELS.items():
        lut[b0, b1] = level
    return lut[bits[:, 0], bits[:, 1]] + 1j * lut[bits[:, 2], bits[:, 3]]


def constellation_points(constellation: str = "16QAM", scale: float = QAM16_SCALE) -> np.ndarray:
    if constellation.upper() != "16QAM":
        raise ValueError(f"unsupported constellation {constellation!r}")
    levels = np.array([-3, -1, 1, 3])
    return scale * (levels[:, None] + 1j * levels[None, :]).ravel()


@dataclass(frozen=True)
class SymbolSequence:
    """Symbols ``s_1..s_N`` with the idle ``a_0 = 0`` prepended.

    ``amplitudes``, ``phases`` and ``times`` have ``N + 1`` entries and
    ``times[n] = n * symbol_period``.
    """

    symbols: np.ndarray
    bits: np.ndarray
    seed: int
    constellation: str = "16QAM"
    symbol_period: float = 1.0

    @property
    def n_symbols(self) -> int:
        return self.symbols.size

    def __len__(self):
        return self.n_symbols

    @property
    def amplitudes(self) -> np.ndarray:
        return np.concatenate(([0.0], np.abs(self.symbols)))

    @property
    def phases(self) -> np.ndarray:
        return np.concatenate(([0.0], np.mod(np.angle(self.symbols), 2 * np.pi)))

    @property
    def times(self) -> np.ndarray:
        return self.symbol_period * np.arange(self.n_symbols + 1)

    def with_rate(self, symbol_rate: float) -> "SymbolSequence":
        return SymbolSequence(self.symbols, self.bits, self.seed, self.constellation,
                              1.0 / symbol_rate)

    def rotated(self, angle: float) -> "SymbolSequence":
        return SymbolSequence(self.symbols * np.exp(1j * angle), self.bits, self.seed,
                              self.constellation, self.symbol_period)

    def head(self, n: int) -> "SymbolSequence":
        return SymbolSequence(self.symbols[:n], self.bits[:4 * n], self.seed,
                              self.constellation, self.symbol_period)


def prbs_symbols(seed: int, N: int, constellation: str = "16QAM",
                 symbol_rate: float | None = None) -> SymbolSequence:
    N = check_int("N", N)
    if constellation.upper() != "16QAM":
        raise ValueError(f"unsupported constellation {constellation!r}")
    bits = prbs_bits(seed, 4 * N)
    symbols = QAM16_SCALE * map_16qam(bits)
    period = 1.0 if symbol_rate is None else 1.0 / symbol_rate
    return SymbolSequence(symbols, bits, int(seed), "16QAM", period)
