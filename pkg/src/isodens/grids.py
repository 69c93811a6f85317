"""Time-of-flight grids, flight-path geometry, and energy conversions.

Pulsed-beam measurements bin neutron detections on a uniform time axis.
Two closely related grids appear throughout: the time-of-arrival (TOA)
grid of the detector, and a longer time-of-flight (TOF) grid extended
backwards by ``offset_i0`` bins so that every neutron that can blur into
a measured bin has a home bin of its own.
"""

from dataclasses import dataclass, field

import numpy as np

# Neutron mass expressed in eV s²/m² (via E = mc²); fixed by convention.
NEUTRON_MASS_EV_S2_M2 = 1.045e-8


@dataclass(frozen=True)
class FlightPath:
    """Source-to-detector geometry.

    Args:
        length_m: Flight path length in meters.
        neutron_mass: Fixed constant ``NEUTRON_MASS_EV_S2_M2``; present as
            a field for transparency but not configurable.
    """

    length_m: float
    neutron_mass: float = field(default=NEUTRON_MASS_EV_S2_M2)

    def __post_init__(self):
        if not self.length_m > 0:
            raise ValueError(f"flight path length must be positive, got {self.length_m}")
        if self.neutron_mass != NEUTRON_MASS_EV_S2_M2:
            raise ValueError("neutron_mass is a fixed constant and cannot be overridden")


def tof_to_energy(path, t_s):
    """Kinetic energy (eV) of a neutron with time-of-flight ``t_s`` seconds.

    E = m/2 (L/t)², strictly decreasing in t.
    """
    t = np.asarray(t_s, dtype=float)
    if np.any(t <= 0):
        raise ValueError("time of flight must be positive")
    e = 0.5 * path.neutron_mass * (path.length_m / t) ** 2
    return float(e) if np.isscalar(t_s) else e


def energy_to_tof(path, e_ev):
    """Time-of-flight (s) of a neutron with kinetic energy ``e_ev`` eV.

    Exact inverse of :func:`tof_to_energy`: t = L sqrt(m / 2E).
    """
    e = np.asarray(e_ev, dtype=float)
    if np.any(e <= 0):
        raise ValueError("energy must be positive")
    t = path.length_m * np.sqrt(0.5 * path.neutron_mass / e)
    return float(t) if np.isscalar(e_ev) else t


@dataclass(frozen=True)
class TofGrid:
    """Uniform TOA/TOF binning.

    TOA bin j sits at ``j*delta_t_s + t0_s`` for ``j = 0..n_toa-1``; TOF
    bin i sits at ``(i - offset_i0)*delta_t_s + t0_s`` for
    ``i = 0..n_tof-1``, i.e. the TOF grid starts ``offset_i0`` bins
    earlier and ``tof_times[offset_i0 + j] == toa_times[j]``.

    Args:
        delta_t_s: Bin width in seconds.
        t0_s: Time of the first measured (TOA) bin, seconds.
        n_toa: Number of measured bins.
        offset_i0: Nonnegative number of extra leading TOF bins.
    """

    delta_t_s: float
    t0_s: float
    n_toa: int
    offset_i0: int = 0

    def __post_init__(self):
        if not self.delta_t_s > 0:
            raise ValueError("bin width must be positive")
        if not self.t0_s > 0:
            raise ValueError("first bin time must be positive")
        if self.n_toa < 1:
            raise ValueError("need at least one measured bin")
        if self.offset_i0 < 0 or int(self.offset_i0) != self.offset_i0:
            raise ValueError("offset_i0 must be a nonnegative integer")
        if self.t0_s - self.offset_i0 * self.delta_t_s <= 0:
            raise ValueError(
                "TOF grid extends to nonpositive times; reduce offset_i0 or increase t0_s"
            )

    @property
    def n_tof(self):
        return self.n_toa + self.offset_i0


def toa_times(grid):
    """Vector of the ``n_toa`` measured bin times in seconds."""
    return grid.t0_s + grid.delta_t_s * np.arange(grid.n_toa)


def tof_times(grid):
    """Vector of the ``n_tof`` time-of-flight bin times in seconds."""
    return grid.t0_s + grid.delta_t_s * (np.arange(grid.n_tof) - grid.offset_i0)


def tof_energies(grid, path):
    """Neutron energies (eV) at each TOF bin; strictly decreasing."""
    return tof_to_energy(path, tof_times(grid))
