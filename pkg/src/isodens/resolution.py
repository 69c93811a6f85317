"""Pulse-shape blur: the TOF -> TOA resolution operator.

The emission pulse of a moderated neutron source has finite,
energy-dependent duration, so a neutron with an exact time-of-flight is
detected over a range of arrival times. The operator built here maps a
spectrum on the length-N_F TOF grid to the length-N_A TOA grid as a
weighted sum of K causal convolutions: kernel k is the pulse shape at an
anchor TOF bin, and diagonal blending weights interpolate between
anchors. The weights sum to one at every TOA bin and each kernel sums to
one, which makes every column of the composite operator sum to one
(an all-ones TOF spectrum passes through unchanged).
"""

import csv
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy import stats

from .errors import GridTooShortError, TableFormatError
from .grids import TofGrid, tof_times, tof_to_energy

# Dense materialization is a test oracle only; refuse silly sizes.
_DENSE_LIMIT = 400


@dataclass(frozen=True)
class PulseKernelSpec:
    """Analytic emission-pulse family with an energy-dependent scale.

    The shape is a gamma density (shape ``shape``, scale ``tau``) in the
    emission delay, discretized by bin mass. The scale follows
    ``tau(E) = tau0_s * (E / eref_ev) ** -energy_exponent`` so lower
    energies (longer TOF) blur more when ``energy_exponent > 0``.

    ``tau0_s = 0`` degenerates to a single-bin (delta) kernel.
    """

    family: str = "gamma"
    shape: float = 2.0
    tau0_s: float = 0.0
    energy_exponent: float = 0.5
    eref_ev: float = 1.0
    epsilon_trunc: float = 1e-6

    def __post_init__(self):
        if self.family != "gamma":
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.shape <= 0 or self.tau0_s < 0 or self.eref_ev <= 0:
            raise ValueError("kernel parameters out of range")
        if not 0 < self.epsilon_trunc < 1:
            raise ValueError("epsilon_trunc must lie in (0, 1)")

    def scale_at(self, energy_ev):
        return self.tau0_s * (energy_ev / self.eref_ev) ** (-self.energy_exponent)

    def discretize(self, energy_ev, delta_t_s):
        """Bin-mass kernel at the given energy: nonnegative, sums to 1."""
        tau = self.scale_at(energy_ev)
        if tau == 0:
            return np.array([1.0])
        dist = stats.gamma(self.shape, scale=tau)
        support_s = dist.ppf(1.0 - self.epsilon_trunc)
        n_lags = max(1, int(np.ceil(support_s / delta_t_s)))
        edges = delta_t_s * np.arange(n_lags + 1)
        mass = np.diff(dist.cdf(edges))
        return mass / mass.sum()


def _anchor_indices(n_tof, k_components):
    if k_components == 1:
        return np.array([(n_tof - 1) // 2])
    k = np.arange(k_components)
    anchors = (k * (n_tof - 1)) // (k_components - 1)
    if np.any(np.diff(anchors) <= 0):
        raise ValueError(f"grid too small for {k_components} distinct anchors")
    return anchors


def _hat_weights(anchors, grid):
    """Piecewise-linear blending weights over TOA bins; rows sum to 1."""
    x = grid.offset_i0 + np.arange(grid.n_toa, dtype=float)
    k_components = anchors.size
    w = np.empty((k_components, grid.n_toa))
    for k in range(k_components):
        if k_components == 1:
            w[k] = 1.0
            continue
        nodes, vals = [float(anchors[k])], [1.0]
        if k > 0:
            nodes.insert(0, float(anchors[k - 1]))
            vals.insert(0, 0.0)
        if k < k_components - 1:
            nodes.append(float(anchors[k + 1]))
            vals.append(0.0)
        w[k] = np.interp(x, nodes, vals)
    return w


class ResolutionOperator:
    """K-kernel blur from the TOF grid to the TOA grid.

    Attributes:
        grid: TofGrid shared with the rest of the pipeline.
        kernels: list of K causal kernels (each sums to 1).
        weights: (K, n_toa) blending weights, columns summing to 1.
        anchor_indices: TOF bin index each kernel is anchored at.
    """

    def __init__(self, grid, kernels, weights, anchor_indices):
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(kernels), grid.n_toa):
            raise ValueError("weights must be (n_kernels, n_toa)")
        if np.any(weights < 0) or np.any(weights > 1):
            raise ValueError("weights must lie in [0, 1]")
        colsum = weights.sum(axis=0)
        if np.max(np.abs(colsum - 1.0)) > 1e-12:
            raise ValueError("blending weights must sum to 1 at every TOA bin")
        supports = [len(r) for r in kernels]
        if max(supports) - 1 > grid.offset_i0:
            raise GridTooShortError(
                f"kernel support {max(supports) - 1} bins exceeds grid offset "
                f"{grid.offset_i0}; rebuild the grid with offset_i0 >= {max(supports) - 1}",
                min_offset=max(supports) - 1,
            )
        for k, r in enumerate(kernels):
            r = np.asarray(r, dtype=float)
            if np.any(r < 0) or abs(r.sum() - 1.0) > 1e-9:
                raise ValueError(f"kernel {k} must be nonnegative and sum to 1")
        self.grid = grid
        self.kernels = [np.asarray(r, dtype=float) / np.sum(r) for r in kernels]
        self.weights = weights
        self.anchor_indices = np.asarray(anchor_indices, dtype=int)
        self._max_support = max(supports)
        self._nfft_fwd = scipy.fft.next_fast_len(grid.n_tof + self._max_support - 1)
        self._nfft_adj = scipy.fft.next_fast_len(grid.n_toa + self._max_support - 1)
        self._kern_fwd = [scipy.fft.rfft(r, self._nfft_fwd) for r in self.kernels]
        self._kern_adj = [scipy.fft.rfft(r[::-1], self._nfft_adj) for r in self.kernels]

    @property
    def n_kernels(self):
        return len(self.kernels)

    def apply(self, spectrum_tof, workers=None):
        """Blur one length-N_F TOF spectrum into a length-N_A TOA spectrum."""
        return self.apply_rows(np.asarray(spectrum_tof)[None, :], workers=workers)[0]

    def apply_rows(self, spectra, workers=None):
        """Row-wise blur of an (n_rows, N_F) stack; returns (n_rows, N_A)."""
        spectra = np.asarray(spectra, dtype=float)
        if spectra.ndim != 2 or spectra.shape[1] != self.grid.n_tof:
            raise ValueError(f"expected (n, {self.grid.n_tof}) input, got {spectra.shape}")
        i0, n_toa = self.grid.offset_i0, self.grid.n_toa
        workers = workers or -1
        freq = scipy.fft.rfft(spectra, self._nfft_fwd, axis=1, workers=workers)
        out = np.zeros((spectra.shape[0], n_toa))
        for w, kf in zip(self.weights, self._kern_fwd):
            conv = scipy.fft.irfft(freq * kf, self._nfft_fwd, axis=1, workers=workers)
            out += w * conv[:, i0 : i0 + n_toa]
        return out

    def apply_transpose(self, g, workers=None):
        """Adjoint applied to one length-N_A vector; returns length N_F."""
        return self.apply_rows_transpose(np.asarray(g)[None, :], workers=workers)[0]

    def apply_rows_transpose(self, g_rows, workers=None):
        """Adjoint applied row-wise to an (n_rows, N_A) stack."""
        g_rows = np.asarray(g_rows, dtype=float)
        if g_rows.ndim != 2 or g_rows.shape[1] != self.grid.n_toa:
            raise ValueError(f"expected (n, {self.grid.n_toa}) input, got {g_rows.shape}")
        i0, n_tof = self.grid.offset_i0, self.grid.n_tof
        workers = workers or -1
        out = np.zeros((g_rows.shape[0], n_tof))
        for w, r, ka in zip(self.weights, self.kernels, self._kern_adj):
            h = g_rows * w
            conv = scipy.fft.irfft(
                scipy.fft.rfft(h, self._nfft_adj, axis=1, workers=workers) * ka,
                self._nfft_adj,
                axis=1,
                workers=workers,
            )
            lo = r.size - 1 - i0
            dst = max(0, -lo)
            src = max(lo, 0)
            n_take = n_tof - dst
            out[:, dst : dst + n_take] += conv[:, src : src + n_take]
        return out

    def to_dense(self):
        """Materialize the (N_F, N_A) matrix. Test oracle for small grids."""
        if self.grid.n_tof > _DENSE_LIMIT:
            raise ValueError(f"dense materialization limited to n_tof <= {_DENSE_LIMIT}")
        i0 = self.grid.offset_i0
        dense = np.zeros((self.grid.n_tof, self.grid.n_toa))
        for w, r in zip(self.weights, self.kernels):
            for j in range(self.grid.n_toa):
                for lag in range(r.size):
                    i = j + i0 - lag
                    if 0 <= i < self.grid.n_tof:
                        dense[i, j] += r[lag] * w[j]
        return dense


def build_resolution(grid, path, spec, k_components=5):
    """Build the blur operator for a grid, flight path, and pulse family.

    Kernel k is the pulse shape at the energy of anchor TOF bin
    ``floor(k * (N_F - 1) / (K - 1))`` (grid midpoint when K = 1),
    discretized on the grid spacing, truncated to mass
    ``1 - epsilon_trunc`` and renormalized.

    Raises:
        GridTooShortError: some kernel needs more leading TOF bins than
            ``grid.offset_i0`` provides; the error reports the minimum.
    """
    if k_components < 1:
        raise ValueError("need at least one kernel")
    anchors = _anchor_indices(grid.n_tof, k_components)
    times = tof_times(grid)
    kernels = [spec.discretize(tof_to_energy(path, times[a]), grid.delta_t_s) for a in anchors]
    need = max(len(r) for r in kernels) - 1
    if need > grid.offset_i0:
        raise GridTooShortError(
            f"pulse kernels span {need} bins but grid offset_i0 is {grid.offset_i0}; "
            f"use offset_i0 >= {need}",
            min_offset=need,
        )
    return ResolutionOperator(grid, kernels, _hat_weights(anchors, grid), anchors)


def auto_offset(delta_t_s, t0_s, n_toa, path, spec, k_components=5, max_rounds=8):
    """Smallest grid offset that covers the kernel support everywhere.

    Anchors move as the offset grows, so iterate until the requirement
    stabilizes (the longest kernel sits at the late-TOF end, which is
    pinned by the measured window, so this converges in a round or two).
    """
    i0 = 0
    for _ in range(max_rounds):
        grid = TofGrid(delta_t_s=delta_t_s, t0_s=t0_s, n_toa=n_toa, offset_i0=i0)
        anchors = _anchor_indices(grid.n_tof, k_components)
        times = tof_times(grid)
        need = 0
        for a in anchors:
            kern = spec.discretize(tof_to_energy(path, times[a]), delta_t_s)
            need = max(need, kern.size - 1)
        if need <= i0:
            return i0
        i0 = need
    raise ValueError("kernel support did not stabilize; check pulse parameters")


def read_kernel_csv(path_csv, grid):
    """Load user-supplied kernels: CSV rows ``anchor_index,lag_bins,value``.

    Anchors become the blending nodes in sorted order; each kernel must
    sum to 1 within 1e-6 (renormalized exactly afterwards).
    """
    by_anchor = {}
    with open(path_csv, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                anchor, lag, value = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError) as exc:
                raise TableFormatError(f"{path_csv}: bad kernel row at line {lineno}") from exc
            if lag < 0 or value < 0:
                raise TableFormatError(f"{path_csv}: negative lag or value at line {lineno}")
            if not 0 <= anchor < grid.n_tof:
                raise TableFormatError(f"{path_csv}: anchor {anchor} outside TOF grid at line {lineno}")
            by_anchor.setdefault(anchor, {})[lag] = value
    if not by_anchor:
        raise TableFormatError(f"{path_csv}: no kernel rows")
    anchors = np.array(sorted(by_anchor))
    kernels = []
    for a in anchors:
        lags = by_anchor[a]
        r = np.zeros(max(lags) + 1)
        for lag, value in lags.items():
            r[lag] = value
        if abs(r.sum() - 1.0) > 1e-6:
            raise TableFormatError(f"{path_csv}: kernel at anchor {a} sums to {r.sum():g}, not 1")
        kernels.append(r / r.sum())
    return anchors, kernels


def build_resolution_from_file(grid, path_csv):
    """Blur operator from a kernel CSV (see :func:`read_kernel_csv`)."""
    anchors, kernels = read_kernel_csv(path_csv, grid)
    return ResolutionOperator(grid, kernels, _hat_weights(anchors, grid), anchors)
