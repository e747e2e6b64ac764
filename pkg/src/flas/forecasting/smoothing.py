"""Finite differences and Savitzky-Golay smoothing."""

from functools import lru_cache

import numpy as np

from ..errors import BadWindow, TooShort


def first_derivative(series, dt=1.0):
    """Central differences in the interior, one-sided differences at the ends."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise TooShort("need at least two points to differentiate")
    d = np.empty_like(x)
    d[1:-1] = (x[2:] - x[:-2]) / (2.0 * dt)
    d[0] = (x[1] - x[0]) / dt
    d[-1] = (x[-1] - x[-2]) / dt
    return d


def _check_window(window, degree):
    if window < 1 or window % 2 == 0:
        raise BadWindow(f"window must be a positive odd count, got {window}")
    if degree < 0 or window < degree + 1:
        raise BadWindow(f"window {window} too small for degree {degree}")


@lru_cache(maxsize=256)
def _fit_weights(offsets, degree):
    """Weights w with w @ y = value at offset 0 of the LS polynomial through (offsets, y)."""
    x = np.asarray(offsets, dtype=float)
    deg = min(degree, x.size - 1)
    vander = np.vander(x, deg + 1, increasing=True)
    # row 0 of the pseudo-inverse gives the constant term, i.e. the value at x=0
    w = np.linalg.pinv(vander)[0]
    w.setflags(write=False)
    return w


def savgol_coeffs(window, degree):
    """Centre-point weights of the window/degree filter, in window order."""
    _check_window(window, degree)
    half = window // 2
    return _fit_weights(tuple(range(-half, half + 1)), degree).copy()


def savgol_filter(series, window=11, degree=2):
    """Savitzky-Golay smoothing.

    Interior points take the value at the window centre of the least-squares
    polynomial.  Near the ends the window is truncated to the available data,
    the polynomial is refitted on what remains and evaluated at the point
    itself.
    """
    _check_window(window, degree)
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < window:
        raise TooShort(f"series of length {n} shorter than window {window}")
    half = window // 2
    out = np.empty(n)
    w = _fit_weights(tuple(range(-half, half + 1)), degree)
    if n >= window:
        out[half:n - half] = np.correlate(x, w, mode="valid")
    for i in range(min(half, n)):
        lo, hi = 0, min(n, i + half + 1)
        out[i] = _fit_weights(tuple(range(lo - i, hi - i)), degree) @ x[lo:hi]
    for i in range(max(n - half, half), n):
        lo, hi = max(0, i - half), n
        out[i] = _fit_weights(tuple(range(lo - i, hi - i)), degree) @ x[lo:hi]
    return out


def running_median(series, width=5):
    """Centred running median; the window shrinks symmetrically-free at the ends.

    Runs shorter than ``width // 2 + 1`` samples are removed entirely, which is
    what makes it useful ahead of differentiation: a one-tick excursion has no
    derivative left to smooth.
    """
    if width < 1 or width % 2 == 0:
        raise BadWindow(f"median width must be a positive odd count, got {width}")
    x = np.asarray(series, dtype=float)
    if width == 1 or x.size == 0:
        return x.copy()
    half = width // 2
    padded = np.pad(x, half, mode="edge")
    view = np.lib.stride_tricks.sliding_window_view(padded, width)
    out = np.median(view, axis=1)
    # near the ends use only real samples rather than replicated edge values
    for i in list(range(min(half, x.size))) + list(range(max(x.size - half, half), x.size)):
        out[i] = np.median(x[max(0, i - half):i + half + 1])
    return out


def settle_lag(window, median_width=1):
    """Ticks between a raw sample and the last smoothed derivative it fully determines.

    A smoothed derivative at index i depends on raw samples up to
    i + median_half + half + 1 (optional median, half window, and one for the
    central difference).
    """
    return median_width // 2 + window // 2 + 1


def settled_trend(series, dt=1.0, window=11, degree=2, median_width=1):
    """Smoothed derivative restricted to points free of edge effects.

    Returns ``(first_index, values)`` where ``values[j]`` belongs to raw index
    ``first_index + j``.  Points whose median, difference or smoothing window
    would reach past either end of ``series`` are dropped.
    """
    lag = settle_lag(window, median_width)
    x = np.asarray(series, dtype=float)
    if x.size < 2 * lag + 1:
        raise TooShort(f"need at least {2 * lag + 1} points, got {x.size}")
    if median_width > 1:
        x = running_median(x, median_width)
    s = savgol_filter(first_derivative(x, dt), window, degree)
    return lag, s[lag:x.size - lag]
