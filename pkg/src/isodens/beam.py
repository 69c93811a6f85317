"""Rank-one flux and background model.

Both the flux and the background counts factor as (pixel profile) x
(spectrum): ``Phi = outer(v, phi)`` and ``B = outer(v, b(theta))``. The
profile ``v`` is normalized to average 1 over pixels, and the background
spectrum is a log-linear expansion ``b(theta) = exp(theta @ P)`` over a
small polynomial-in-log basis ``P`` with unit-norm rows.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateScanError


@dataclass(frozen=True)
class BackgroundBasis:
    """Unit-row basis for log-background spectra.

    Row n is ``(log(k*delta + k0)) ** n / a_n`` over TOA bins
    ``k = 0..n_toa-1`` with ``delta = (e - 1/e) / (n_toa - 1)`` and
    ``k0 = 1/e``, so the log argument sweeps [1/e, e] and row 0 is the
    constant ``1/sqrt(n_toa)``.
    """

    p_matrix: np.ndarray
    n_b: int
    delta: float
    k0: float
    a_norms: np.ndarray

    @classmethod
    def build(cls, n_b, n_toa):
        if n_b < 1 or n_toa < 2:
            raise ValueError("need n_b >= 1 and n_toa >= 2")
        delta = (np.e - np.exp(-1.0)) / (n_toa - 1)
        k0 = np.exp(-1.0)
        logs = np.log(np.arange(n_toa) * delta + k0)
        raw = logs[None, :] ** np.arange(n_b)[:, None]
        a_norms = np.linalg.norm(raw, axis=1)
        return cls(p_matrix=raw / a_norms[:, None], n_b=n_b, delta=delta, k0=k0, a_norms=a_norms)

    @property
    def n_toa(self):
        return self.p_matrix.shape[1]


def background_spectrum(basis, theta):
    """Strictly positive background spectrum ``exp(theta @ P)``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (basis.n_b,):
        raise ValueError(f"theta must have length {basis.n_b}, got {theta.shape}")
    return np.exp(theta @ basis.p_matrix)


def estimate_pixel_profile(y_open):
    """Pixel beam profile from an open-beam scan.

    Averages the columns of the scan and rescales so the profile sums to
    the number of pixels (average value 1). Invariant under global
    rescaling of the scan.

    Raises:
        DegenerateScanError: the scan contains no counts at all.
    """
    y_open = np.asarray(y_open, dtype=float)
    row_tot = y_open.sum(axis=1)
    total = row_tot.sum()
    if total <= 0:
        raise DegenerateScanError("open-beam scan has no counts; cannot estimate beam profile")
    return y_open.shape[0] * row_tot / total


def expected_open_counts(v, phi, b):
    """Expected open-beam stack ``outer(v, phi + b)``."""
    v = np.asarray(v, dtype=float)
    phi = np.asarray(phi, dtype=float)
    b = np.asarray(b, dtype=float)
    if phi.shape != b.shape:
        raise ValueError("flux and background spectra must share a length")
    return np.outer(v, phi + b)


@dataclass(frozen=True)
class FluxBackgroundParams:
    """Ground-truth style beam parameters (profile, flux, background).

    Invariants: profile sums to the pixel count (average 1) and both the
    profile and flux spectrum are nonnegative.
    """

    v: np.ndarray
    phi: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        theta = np.asarray(self.theta, dtype=float)
        if np.any(v < 0) or np.any(phi < 0):
            raise ValueError("pixel profile and flux must be nonnegative")
        if abs(v.sum() - v.size) > 1e-12 * max(v.size, 1):
            raise ValueError("pixel profile must sum to the number of pixels")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "theta", theta)

    @property
    def n_pixels(self):
        return self.v.size
