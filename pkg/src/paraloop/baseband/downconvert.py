"""Complex-envelope extraction: mix, low-pass, resample."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal
from sklearn.base import BaseEstimator, TransformerMixin

from .._validation import check_positive, check_signal
from ..errors import ConfigError

STOPBAND_DB = 80.0
MAX_TAPS = 1 << 18


@dataclass(frozen=True)
class ComplexBaseband:
    dt: float
    samples: np.ndarray
    f_c: float
    t_start: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("baseband samples must be finite")

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.samples.size)

    def __len__(self):
        return self.samples.size

    def resample(self, fs_out: float, padtype: str = "constant") -> "ComplexBaseband":
        """Rational-rate change with ``resample_poly``'s default anti-alias filter.

        ``padtype="edge"`` suits records that hold their final value.
        """
        ratio = rational_ratio(fs_out, self.sample_rate)
        if ratio == 1:
            return self
        y = signal.resample_poly(self.samples, ratio.numerator, ratio.denominator,
                                 padtype=padtype)
        return ComplexBaseband(1.0 / fs_out, y, self.f_c, self.t_start)

    def __mul__(self, k):
        return ComplexBaseband(self.dt, self.samples * k, self.f_c, self.t_start)

    __rmul__ = __mul__


def rational_ratio(fs_out: float, fs_in: float, max_den: int = 1 << 20) -> Fraction:
    ratio = Fraction(fs_out / fs_in).limit_denominator(max_den)
    if ratio <= 0 or abs(float(ratio) * fs_in - fs_out) > 1e-6 * fs_out:
        raise ConfigError(f"no rational resampling ratio for {fs_in:.6g} -> {fs_out:.6g} Hz")
    return ratio


def design_lowpass(fs: float, cutoff: float, stop: float, atten_db: float = STOPBAND_DB):
    """Kaiser-window linear-phase FIR with unit DC gain and an odd tap count."""
    if not 0 < cutoff < stop < fs / 2:
        raise ConfigError("low-pass edges must satisfy 0 < cutoff < stop < fs/2")
    numtaps, beta = signal.kaiserord(atten_db, (stop - cutoff) / (fs / 2))
    numtaps |= 1
    if numtaps > MAX_TAPS:
        raise ConfigError(f"low-pass needs {numtaps} taps; widen the transition band")
    return signal.firwin(numtaps, 0.5 * (cutoff + stop), window=("kaiser", beta), fs=fs)


class Downconverter(TransformerMixin, BaseEstimator):
    """Multiply by ``2 exp(-j 2 pi f_c t)``, low-pass and resample to ``fs_out``.

    The filter passes up to ``cutoff`` and reaches full attenuation at ``f_c``,
    so the image at ``-2 f_c`` and the pump products around it are removed.
    Its delay is compensated: output sample ``m`` sits at ``t_start + m / fs_out``.

    Parameters
    ----------
    f_c : float
        Carrier frequency in hertz.
    fs_in, fs_out : float
        Input and output sample rates in hertz.
    cutoff : float, optional
        Passband edge; defaults to the output Nyquist frequency.
    atten_db : float
        Stopband attenuation.
    """

    def __init__(self, f_c=100e6, fs_in=51.2e9, fs_out=160e6, cutoff=None,
                 atten_db=STOPBAND_DB):
        self.f_c = f_c
        self.fs_in = fs_in
        self.fs_out = fs_out
        self.cutoff = cutoff
        self.atten_db = atten_db

    def fit(self, X=None, y=None):
        check_positive(f_c=self.f_c, fs_in=self.fs_in, fs_out=self.fs_out)
        if self.fs_in <= 4 * self.f_c:
            raise ConfigError("input sample rate must exceed 4 f_c")
        cutoff = 0.5 * self.fs_out if self.cutoff is None else self.cutoff
        if cutoff >= self.f_c:
            raise ConfigError("filter transition band overlaps the signal bandwidth")
        self.ratio_ = rational_ratio(self.fs_out, self.fs_in)
        up = self.ratio_.numerator
        self.taps_ = design_lowpass(self.fs_in * up, cutoff, self.f_c, self.atten_db)
        self.cutoff_ = cutoff
        return self

    @property
    def settling_time(self) -> float:
        """Half the filter span: output this close to a record edge is distorted."""
        if not hasattr(self, "taps_"):
            self.fit()
        return 0.5 * self.taps_.size / (self.fs_in * self.ratio_.numerator)

    def transform(self, X, t_start: float = 0.0):
        """``X``: real samples, 1-D or one record per row, uniformly spaced from ``t_start``."""
        if not hasattr(self, "taps_"):
            self.fit()
        X = check_signal(X, allow_2d=True)
        t = t_start + np.arange(X.shape[-1]) / self.fs_in
        lo = 2.0 * np.exp(-2j * np.pi * self.f_c * t)
        return signal.resample_poly(X * lo, self.ratio_.numerator, self.ratio_.denominator,
                                    axis=-1, window=self.taps_)


def downconvert(w, f_c: float, fs_out: float, cutoff: float | None = None,
                duration: float | None = None) -> ComplexBaseband:
    """Complex baseband of waveform ``w`` at ``fs_out`` samples per second.

    With ``duration`` the output is cut to that span from the start, which
    should end at least one filter settling time before the record does.
    """
    dc = Downconverter(f_c=f_c, fs_in=w.sample_rate, fs_out=fs_out, cutoff=cutoff).fit()
    y = dc.transform(w.samples, t_start=w.t_start)
    if duration is not None:
        y = y[:int(round(duration * fs_out))]
    return ComplexBaseband(1.0 / fs_out, y, f_c, w.t_start)


def edge_guard(f_c: float, fs_in: float, fs_out: float) -> float:
    """Extra record length that keeps filter edge effects out of a ``downconvert`` span."""
    return 2 * Downconverter(f_c=f_c, fs_in=fs_in, fs_out=fs_out).settling_time + 8 / fs_out
