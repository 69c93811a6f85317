"""Deterministic forward maps from densities to expected counts.

The chain is Beer-Lambert attenuation through the cross-section
dictionary, pulse blur into the arrival-time domain, modulation by the
flux, and an additive scaled background:

    expected sample counts = a1 * [Phi (.) (exp(-Z D) R) + a2 * B]

with dose ratio ``a1`` and background ratio ``a2``. Region-averaged
versions of the same map (over an uncovered region and a uniformly dense
region) drive the nuisance-parameter fit.
"""

from dataclasses import dataclass

import numpy as np

from .beam import background_spectrum

# exp() underflows gracefully below roughly -745; clamp a bit above.
_EXP_FLOOR = -700.0


@dataclass(frozen=True)
class ScanScalars:
    """Dose ratio, background ratio, and region-balance weight."""

    alpha1: float
    alpha2: float
    beta: float = 1.0

    def __post_init__(self):
        if not self.alpha1 > 0:
            raise ValueError("alpha1 must be positive")
        if self.alpha2 < 0 or self.beta < 0:
            raise ValueError("alpha2 and beta must be nonnegative")


@dataclass(frozen=True)
class RegionMasks:
    """Pixel index sets for the open-beam and uniformly dense regions.

    ``omega_0`` (possibly empty) marks pixels the sample never covers;
    ``omega_z`` (required) marks pixels of constant areal density. The
    associated weight vectors place ``1/|region|`` on members.
    """

    omega_z: np.ndarray
    omega_0: np.ndarray = None

    def __post_init__(self):
        oz = np.unique(np.asarray(self.omega_z, dtype=int))
        if oz.size == 0:
            raise ValueError("uniformly dense region must not be empty")
        o0 = None if self.omega_0 is None else np.unique(np.asarray(self.omega_0, dtype=int))
        if o0 is not None and o0.size == 0:
            o0 = None
        if o0 is not None and np.intersect1d(oz, o0).size:
            raise ValueError("regions must be disjoint")
        object.__setattr__(self, "omega_z", oz)
        object.__setattr__(self, "omega_0", o0)

    @property
    def has_open_region(self):
        return self.omega_0 is not None


def mask_from_rect(image_shape, x0, y0, x1, y1):
    """Pixel indices of the inclusive rectangle [x0,x1] x [y0,y1].

    ``x`` indexes columns and ``y`` rows of the detector image; pixels
    are flattened row-major.
    """
    rows, cols = image_shape
    if not (0 <= x0 <= x1 < cols and 0 <= y0 <= y1 < rows):
        raise ValueError(f"rectangle {x0},{y0},{x1},{y1} outside {rows}x{cols} image")
    rr, cc = np.meshgrid(np.arange(y0, y1 + 1), np.arange(x0, x1 + 1), indexing="ij")
    return (rr * cols + cc).ravel()


def attenuation(z_rows, d_matrix):
    """``exp(-Z D)`` with the exponent floored against overflow."""
    z_rows = np.asarray(z_rows, dtype=float)
    expo = -(z_rows @ d_matrix)
    np.clip(expo, _EXP_FLOOR, None, out=expo)
    return np.exp(expo, out=expo)


def transmission_spectrum(z, xs, res, workers=None):
    """Blurred transmission through areal densities ``z`` (mol/cm²).

    Values lie in (0, 1]; a zero sample transmits everything exactly.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("areal densities must be nonnegative")
    if not z.any():
        return np.ones(res.grid.n_toa)
    return res.apply(attenuation(z[None, :], xs.d_matrix)[0], workers=workers)


def expected_sample_counts(Z, v, phi, b, alpha1, alpha2, xs, res, workers=None):
    """Expected counts stack for a sample with areal densities ``Z``.

    Args:
        Z: (n_pixels, n_isotopes) areal densities, mol/cm².
        v, phi, b: pixel profile and the flux/background spectra.
        alpha1, alpha2: dose and background ratios.

    Returns:
        (n_pixels, n_toa) expected counts.
    """
    Z = np.asarray(Z, dtype=float)
    if np.any(Z < 0):
        raise ValueError("areal densities must be nonnegative")
    v = np.asarray(v, dtype=float)
    if Z.shape[0] != v.size:
        raise ValueError(f"{Z.shape[0]} density rows but {v.size} profile pixels")
    blurred = res.apply_rows(attenuation(Z, xs.d_matrix), workers=workers)
    return alpha1 * v[:, None] * (blurred * np.asarray(phi)[None, :] + alpha2 * np.asarray(b)[None, :])


def forward_counts(Z, params, scalars, xs, res, basis, workers=None):
    """Expected sample counts from bundled beam parameters and scalars."""
    b = background_spectrum(basis, params.theta)
    return expected_sample_counts(
        Z, params.v, params.phi, b, scalars.alpha1, scalars.alpha2, xs, res, workers=workers
    )


def open_beam_average(y_open, v):
    """Profile-normalized column average of the open-beam scan."""
    y_open = np.asarray(y_open, dtype=float)
    denom = np.sum(v)
    if denom <= 0:
        raise ValueError("profile sums to zero")
    return y_open.sum(axis=0) / denom


def region_average(y, v, member_indices):
    """Profile-normalized average spectrum over a pixel region.

    Computes ``(w @ Y) / (w @ v)`` where w places equal weight on member
    pixels; the profile factor cancels exactly for rank-one stacks.
    """
    idx = np.asarray(member_indices, dtype=int)
    if idx.size == 0:
        raise ValueError("region is empty")
    y = np.asarray(y, dtype=float)
    denom = np.sum(np.asarray(v, dtype=float)[idx])
    if denom <= 0:
        raise ValueError("profile mass in region is zero")
    return y[idx].sum(axis=0) / denom


def fitted_sample_average(z, alpha1, alpha2, b, y_o_bar, xs, res, workers=None):
    """Model for the dense-region average: a1[(y_o - b) (.) q(z) + a2 b]."""
    q = transmission_spectrum(z, xs, res, workers=workers)
    return alpha1 * ((y_o_bar - b) * q + alpha2 * b)


def fitted_open_average(alpha1, alpha2, b, y_o_bar):
    """Model at 100% transmission: a1[y_o + (a2 - 1) b]."""
    return alpha1 * (y_o_bar + (alpha2 - 1.0) * b)


def effective_background(alpha1, alpha2, b):
    """Model at 0% transmission: a1 a2 b."""
    return alpha1 * alpha2 * b
