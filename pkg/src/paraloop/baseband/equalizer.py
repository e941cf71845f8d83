"""Fractionally spaced linear equalizer trained by normalised LMS."""

from __future__ import annotations

import numba
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .._validation import check_int, check_positive, check_signal
from ..errors import ConfigError, EqualizerDivergenceError
from .metrics import evm

N_TAPS = 128
DECIMATION = 16


@numba.njit(cache=True)
def _nlms_epoch(w, x, d, starts, mu, eps):
    n_taps = w.size
    err = np.empty(d.size)
    for k in range(d.size):
        s = starts[k]
        y = 0j
        norm = eps
        for i in range(n_taps):
            u = x[s + i]
            y += w[i] * u
            norm += u.real * u.real + u.imag * u.imag
        e = d[k] - y
        err[k] = e.real * e.real + e.imag * e.imag
        g = mu * e / norm
        for i in range(n_taps):
            w[i] += g * np.conj(x[s + i])
    return err


@numba.njit(cache=True)
def _apply(w, x, starts):
    n_taps = w.size
    out = np.empty(starts.size, dtype=np.complex128)
    for k in range(starts.size):
        s = starts[k]
        y = 0j
        for i in range(n_taps):
            y += w[i] * x[s + i]
        out[k] = y
    return out


class LinearEqualizer(BaseEstimator):
    """Decimating FIR equalizer with data-aided NLMS training.

    Symbol ``k`` of ``y`` is estimated from the ``n_taps`` input samples ending at
    ``offset + decimation * (k + delay + 1) - 1``; samples before the start of
    the record count as zero. ``fit`` takes one record or a stack of records
    (one per row, e.g. independent noise realisations); epoch ``e`` trains on
    row ``e mod n_rows``.

    Parameters
    ----------
    n_taps, decimation, delay : int
        Filter length, input samples per symbol, and decision delay in symbols.
    step_size : float
        Initial NLMS step; it decays by ``step_decay`` each epoch to ``min_step``.
    max_epochs : int
        Training passes over the sequence.
    tol : float
        Convergence when the mean-square error over the last ``window`` symbols
        of an epoch changes by less than this fraction from the previous epoch.
    offset : int
        Input index of the first symbol's first sample.

    Attributes
    ----------
    coef_ : ndarray of complex, shape (n_taps,)
    mse_history_ : ndarray, windowed mean-square error after each epoch
    error_history_ : ndarray, per-symbol squared a-priori error, all epochs
    n_epochs_ : int
    converged_ : bool
    """

    def __init__(self, n_taps=N_TAPS, decimation=DECIMATION, delay=4, step_size=0.5,
                 step_decay=0.8, min_step=0.01, max_epochs=50, tol=1e-4, window=256,
                 offset=0):
        self.n_taps = n_taps
        self.decimation = decimation
        self.delay = delay
        self.step_size = step_size
        self.step_decay = step_decay
        self.min_step = min_step
        self.max_epochs = max_epochs
        self.tol = tol
        self.window = window
        self.offset = offset

    def _check_params(self):
        check_int("n_taps", self.n_taps)
        check_int("decimation", self.decimation)
        check_int("delay", self.delay, minimum=0)
        check_int("max_epochs", self.max_epochs)
        check_int("window", self.window)
        check_int("offset", self.offset, minimum=0)
        check_positive(step_size=self.step_size, min_step=self.min_step, tol=self.tol,
                       step_decay=self.step_decay)
        if self.step_size >= 2:
            raise ConfigError("NLMS step size must be below 2")

    def _starts(self, n_samples, n_symbols):
        k = np.arange(n_symbols)
        end = self.offset + self.decimation * (k + self.delay + 1) - 1
        if n_symbols and end[-1] >= n_samples:
            raise ValueError(
                f"{n_symbols} symbols need {end[-1] + 1} samples, record has {n_samples}")
        # shifted by n_taps for the zero padding in _pad
        return (end + 1).astype(np.int64)

    def _pad(self, x):
        return np.concatenate((np.zeros(self.n_taps, dtype=complex), x.astype(complex)))

    def max_symbols(self, n_samples):
        return max(0, (n_samples - self.offset) // self.decimation - self.delay)

    def fit(self, X, y):
        self._check_params()
        X = check_signal(X, allow_2d=True)
        X = np.atleast_2d(X)
        y = check_signal(y).astype(complex)
        starts = self._starts(X.shape[1], y.size)
        records = [self._pad(row) for row in X]
        w = np.zeros(self.n_taps, dtype=complex)
        history, errors = [], []
        mu = float(self.step_size)
        converged = False
        win = min(self.window, y.size)
        for epoch in range(self.max_epochs):
            err = _nlms_epoch(w, records[epoch % len(records)], y, starts, mu, 1e-30)
            if not np.all(np.isfinite(err)):
                raise EqualizerDivergenceError(f"NLMS diverged in epoch {epoch}")
            errors.append(err)
            mse = float(err[-win:].mean())
            if history and mse > 10 * history[0] and mse > 10 * np.mean(np.abs(y) ** 2):
                raise EqualizerDivergenceError(
                    f"training error rose from {history[0]:.3g} to {mse:.3g}")
            if history and abs(mse - history[-1]) <= self.tol * max(history[-1], 1e-300):
                history.append(mse)
                converged = True
                break
            history.append(mse)
            mu = max(mu * self.step_decay, self.min_step)
        self.coef_ = w
        self.mse_history_ = np.array(history)
        self.error_history_ = np.concatenate(errors)
        self.n_epochs_ = len(history)
        self.converged_ = converged
        return self

    def predict(self, X, n_symbols=None):
        check_is_fitted(self, "coef_")
        X = check_signal(X)
        n = self.max_symbols(X.size) if n_symbols is None else int(n_symbols)
        return _apply(self.coef_, self._pad(X), self._starts(X.size, n))

    def score(self, X, y):
        """``1 - (EVM / 100)^2``: fraction of symbol energy not in the error."""
        y = np.asarray(y)
        return 1.0 - (evm(self.predict(X, y.size), y) / 100) ** 2

    def regressors(self, X, n_symbols):
        """Input windows as rows, in tap order, for direct least-squares checks."""
        x = self._pad(check_signal(X))
        starts = self._starts(np.asarray(X).size, n_symbols)
        return np.stack([x[s:s + self.n_taps] for s in starts])
