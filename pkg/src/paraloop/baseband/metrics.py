"""Error vector magnitude."""

from __future__ import annotations

import numpy as np

from .._validation import check_same_length


def evm(equalized, reference) -> float:
    """RMS error vector magnitude in percent, normalised to the reference RMS."""
    eq, ref = check_same_length(equalized, reference)
    num = np.mean(np.abs(eq - ref) ** 2)
    den = np.mean(np.abs(ref) ** 2)
    if den == 0:
        raise ValueError("reference symbols have zero power")
    return float(100 * np.sqrt(num / den))


def evm_from_snr(snr_db: float) -> float:
    """EVM of an ideal receiver limited only by white noise: ``10^(-SNR/20)``."""
    return float(100 * 10 ** (-snr_db / 20))
