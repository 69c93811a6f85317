"""Cross-section tables, resampling onto the TOF grid, and preconditioning.

Per-isotope cross sections arrive as tabulated (energy, value) pairs in
cm²/mol. They are resampled onto the energies of the analysis TOF grid
to form the dictionary matrix ``D`` (isotopes x TOF bins). Resonance
cross sections span orders of magnitude, so resampling interpolates
log-log, falling back to linear interpolation on segments that touch a
zero sample.
"""

import csv
import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import EnergyRangeError, SingularPreconditionerError, TableFormatError
from .grids import tof_energies


@dataclass(frozen=True)
class IsotopeTable:
    """Validated raw table of (energy_eV, cross section cm²/mol) samples."""

    energy_ev: np.ndarray
    xs_cm2_mol: np.ndarray


def load_isotope_table(pairs):
    """Validate tabulated (energy_eV, cross_section) pairs.

    Args:
        pairs: Iterable of (energy, value) rows, or a 2-column array.

    Returns:
        IsotopeTable with float arrays.

    Raises:
        TableFormatError: fewer than 2 rows, non-increasing energies, or
            negative/non-finite values; the message names the bad row.
    """
    arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise TableFormatError("expected two columns (energy_eV, xs_cm2_per_mol)")
    if arr.shape[0] < 2:
        raise TableFormatError(f"need at least 2 rows, got {arr.shape[0]}")
    e, s = arr[:, 0], arr[:, 1]
    if not np.all(np.isfinite(arr)):
        row = int(np.argwhere(~np.isfinite(arr).all(axis=1))[0])
        raise TableFormatError(f"non-finite entry at row {row}")
    bad = np.nonzero(np.diff(e) <= 0)[0]
    if bad.size:
        raise TableFormatError(
            f"energies must be strictly increasing; violated at row {int(bad[0]) + 1} "
            f"(E={e[bad[0] + 1]:g} after E={e[bad[0]]:g})"
        )
    neg = np.nonzero(s < 0)[0]
    if neg.size:
        raise TableFormatError(f"negative cross section at row {int(neg[0])} ({s[neg[0]]:g})")
    if np.any(e <= 0):
        row = int(np.nonzero(e <= 0)[0][0])
        raise TableFormatError(f"nonpositive energy at row {row}")
    return IsotopeTable(energy_ev=e.copy(), xs_cm2_mol=s.copy())


def read_xs_csv(path):
    """Read a per-isotope CSV with header ``energy_eV,xs_cm2_per_mol``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["energy_eV", "xs_cm2_per_mol"]:
            raise TableFormatError(f"{path}: expected header 'energy_eV,xs_cm2_per_mol'")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise TableFormatError(f"{path}: bad row at line {lineno}: {row}") from exc
    return load_isotope_table(rows)


def resample_to_grid(table, grid, path):
    """Resample a cross-section table onto the TOF grid energies.

    Interpolation is linear in (log E, log σ); any segment with a zero
    endpoint is interpolated linearly in (E, σ) instead. Values at table
    nodes are reproduced exactly.

    Returns:
        One dictionary row of length ``grid.n_tof`` (ordered by TOF bin,
        i.e. decreasing energy).

    Raises:
        EnergyRangeError: a grid energy falls outside the table range;
            the message lists the offending TOF bin.
    """
    e_grid = tof_energies(grid, path)
    e_tab, s_tab = table.energy_ev, table.xs_cm2_mol
    out_of_range = (e_grid < e_tab[0]) | (e_grid > e_tab[-1])
    if np.any(out_of_range):
        bins = np.nonzero(out_of_range)[0]
        raise EnergyRangeError(
            f"grid energies outside table range [{e_tab[0]:g}, {e_tab[-1]:g}] eV "
            f"at TOF bins {bins[:8].tolist()}{'...' if bins.size > 8 else ''}"
        )
    # Bracketing segment for every grid energy; exact hits use the
    # segment to their left (both rules reproduce node values exactly).
    idx = np.clip(np.searchsorted(e_tab, e_grid, side="left") - 1, 0, e_tab.size - 2)
    exact = e_grid == e_tab[np.clip(idx + 1, 0, e_tab.size - 1)]
    e0, e1 = e_tab[idx], e_tab[idx + 1]
    s0, s1 = s_tab[idx], s_tab[idx + 1]
    w = (e_grid - e0) / (e1 - e0)
    linear = s0 + w * (s1 - s0)
    with np.errstate(divide="ignore", invalid="ignore"):
        wlog = (np.log(e_grid) - np.log(e0)) / (np.log(e1) - np.log(e0))
        loglog = np.exp(np.log(s0) + wlog * (np.log(s1) - np.log(s0)))
    use_log = (s0 > 0) & (s1 > 0)
    row = np.where(use_log, loglog, linear)
    row = np.where(exact, s_tab[np.clip(idx + 1, 0, e_tab.size - 1)], row)
    row[e_grid == e_tab[idx]] = s_tab[idx][e_grid == e_tab[idx]]
    return row


@dataclass(frozen=True)
class CrossSectionDict:
    """Isotope-labeled dictionary matrix on the TOF grid.

    Attributes:
        isotopes: N_m labels.
        d_matrix: N_m x N_F array, cm²/mol, finite and nonnegative.
        grid: The TofGrid the columns live on.
    """

    isotopes: tuple
    d_matrix: np.ndarray
    grid: object

    def __post_init__(self):
        d = np.asarray(self.d_matrix, dtype=float)
        if d.ndim != 2 or d.shape[0] != len(self.isotopes):
            raise ValueError("d_matrix must be (n_isotopes, n_tof)")
        if d.shape[1] != self.grid.n_tof:
            raise ValueError(f"d_matrix has {d.shape[1]} columns, grid has {self.grid.n_tof} TOF bins")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("cross sections must be finite and nonnegative")
        if np.any(~(d > 0).any(axis=1)):
            raise ValueError("every isotope row needs at least one positive cross section")
        object.__setattr__(self, "d_matrix", d)
        object.__setattr__(self, "isotopes", tuple(self.isotopes))

    @property
    def n_isotopes(self):
        return len(self.isotopes)

    @classmethod
    def from_tables(cls, labeled_tables, grid, path):
        """Build the dictionary from {label: IsotopeTable} on a grid."""
        labels = list(labeled_tables)
        rows = [resample_to_grid(labeled_tables[lab], grid, path) for lab in labels]
        return cls(isotopes=tuple(labels), d_matrix=np.vstack(rows), grid=grid)

    def fingerprint(self):
        """Hex digest identifying labels, grid, and matrix contents."""
        h = hashlib.sha256()
        h.update(",".join(self.isotopes).encode())
        g = self.grid
        h.update(f"{g.delta_t_s!r},{g.t0_s!r},{g.n_toa},{g.offset_i0}".encode())
        h.update(np.ascontiguousarray(self.d_matrix).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class Preconditioner:
    """Diagonal row-norm scaling of the dictionary.

    ``c_diag[m]`` is the Euclidean norm of dictionary row m; dividing
    rows by it gives a unit-row dictionary so the optimizer sees
    comparable gradient scales across isotopes.
    """

    c_diag: np.ndarray


def precondition(xs):
    """Return (Preconditioner, unit-row dictionary matrix).

    The original matrix is recoverable as ``c_diag[:, None] * d_tilde``.

    Raises:
        SingularPreconditionerError: some row has zero norm.
    """
    norms = np.linalg.norm(xs.d_matrix, axis=1)
    if np.any(norms <= 0):
        bad = xs.isotopes[int(np.argmin(norms))]
        raise SingularPreconditionerError(f"zero-norm dictionary row for isotope {bad!r}")
    return Preconditioner(c_diag=norms), xs.d_matrix / norms[:, None]


def unprecondition_density(z_tilde, pre):
    """Map densities from the unit-row frame back to physical units.

    The preconditioned variable is ``z_tilde = c_diag * z`` (so that
    ``z_tilde @ d_tilde == z @ D``); this inverts that scaling. Works on
    a single length-N_m vector or an (n, N_m) stack of rows.
    """
    zt = np.asarray(z_tilde, dtype=float)
    c = pre.c_diag
    if zt.shape[-1] != c.size:
        raise ValueError(f"last axis {zt.shape[-1]} does not match {c.size} isotopes")
    return zt / c
