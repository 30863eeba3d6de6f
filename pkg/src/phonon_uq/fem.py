"""Bloch-periodic plane-strain FEM dispersion for pixelated unit cells.

Each pixel is one 4-node bilinear quadrilateral element (2x2 Gauss, unit
thickness). The quasi-periodic displacement ansatz is handled in the
periodic-envelope gauge: opposite cell boundaries are identified node-for-
node, and the wavevector enters the element strain operator instead of the
boundary coupling. This keeps the mass matrix real, symmetric positive
definite and independent of k, while the stiffness is complex Hermitian
positive semidefinite with exactly the two rigid-translation zero modes
at k = 0. DOF count is 2 * resolution**2 (two displacement components per
unique node).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import UnitCellBitmap
from .materials import MaterialPair
from .rng import substream

# Dense generalized eigensolver up to this many DOFs (resolution 12);
# ARPACK shift-invert is faster above and mandatory past resolution 24.
# Both paths agree to ~1e-8 relative on the eigenvalue scale.
DENSE_MAX_DOF = 2 * 12 * 12

_THICKNESS = 1.0
_GAUSS_1D = (-1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0))
# columns of the isotropic plane-strain constitutive split C = lam*CL + G*CG
_C_LAM = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
_C_G = np.diag([2.0, 2.0, 1.0])


class SolverError(RuntimeError):
    """Eigensolver failure, annotated with problem size and wavevector."""


@dataclass(frozen=True)
class WaveVector:
    kx: float
    ky: float

    def __post_init__(self):
        object.__setattr__(self, "kx", float(self.kx))
        object.__setattr__(self, "ky", float(self.ky))
        if not (np.isfinite(self.kx) and np.isfinite(self.ky)):
            raise ValueError(f"wavevector components must be finite, got ({self.kx}, {self.ky})")


@dataclass(frozen=True)
class UnitCellSpec:
    """Geometry + phase materials + physical cell size."""

    bitmap: UnitCellBitmap
    materials: MaterialPair
    lattice_constant: float

    def __post_init__(self):
        object.__setattr__(self, "lattice_constant", float(self.lattice_constant))
        if not self.lattice_constant > 0:
            raise ValueError(f"lattice_constant must be positive, got {self.lattice_constant}")


@dataclass(frozen=True)
class AssembledOperators:
    """Stiffness at one wavevector (complex Hermitian) and the shared real SPD mass."""

    K: sp.csr_matrix
    M: sp.csr_matrix
    dof_count: int


@dataclass(frozen=True, eq=False)
class DispersionResult:
    """Eigenfrequencies in Hz over an ordered k-path, bands ascending per row."""

    kpath: tuple[WaveVector, ...]
    arclength: np.ndarray
    frequencies: np.ndarray

    def __post_init__(self):
        freq = np.asarray(self.frequencies, dtype=float)
        if freq.ndim != 2 or freq.shape[0] != len(self.kpath):
            raise ValueError(f"frequency matrix shape {freq.shape} does not match path length {len(self.kpath)}")
        if len(self.arclength) != len(self.kpath):
            raise ValueError("arclength length must match path length")
        if np.any(freq < 0):
            raise ValueError("frequencies must be nonnegative")
        if np.any(np.diff(freq, axis=1) < 0):
            raise ValueError("bands must be ascending within each k-point")
        object.__setattr__(self, "frequencies", freq)
        object.__setattr__(self, "arclength", np.asarray(self.arclength, dtype=float))

    @property
    def n_bands(self) -> int:
        return self.frequencies.shape[1]

    def __eq__(self, other):
        if not isinstance(other, DispersionResult):
            return NotImplemented
        return (
            self.kpath == other.kpath
            and np.array_equal(self.arclength, other.arclength)
            and np.array_equal(self.frequencies, other.frequencies)
        )


def _shape_tables():
    """Shape values and reference-square gradients at the 2x2 Gauss points."""
    pts = [(xi, eta) for eta in _GAUSS_1D for xi in _GAUSS_1D]
    N = np.empty((4, 4))
    dNdxi = np.empty((4, 4))
    dNdeta = np.empty((4, 4))
    for g, (xi, eta) in enumerate(pts):
        N[g] = 0.25 * np.array(
            [(1 - xi) * (1 - eta), (1 + xi) * (1 - eta), (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)]
        )
        dNdxi[g] = 0.25 * np.array([-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)])
        dNdeta[g] = 0.25 * np.array([-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)])
    return N, dNdxi, dNdeta


_SHAPE_N, _SHAPE_DXI, _SHAPE_DETA = _shape_tables()


def _element_matrices(h: float, kx: float, ky: float):
    """Per-element 8x8 blocks: stiffness factors for (lam, G) and unit-density mass."""
    detJ = h * h / 4.0
    A_lam = np.zeros((8, 8), dtype=complex)
    A_G = np.zeros((8, 8), dtype=complex)
    M_unit = np.zeros((8, 8))
    for g in range(4):
        n = _SHAPE_N[g]
        dNdx = _SHAPE_DXI[g] * (2.0 / h)
        dNdy = _SHAPE_DETA[g] * (2.0 / h)
        bx = dNdx + 1j * kx * n
        by = dNdy + 1j * ky * n
        B = np.zeros((3, 8), dtype=complex)
        B[0, 0::2] = bx
        B[1, 1::2] = by
        B[2, 0::2] = by
        B[2, 1::2] = bx
        BH = B.conj().T
        A_lam += detJ * (BH @ _C_LAM @ B)
        A_G += detJ * (BH @ _C_G @ B)
        Nbar = np.zeros((2, 8))
        Nbar[0, 0::2] = n
        Nbar[1, 1::2] = n
        M_unit += detJ * (Nbar.T @ Nbar)
    return _THICKNESS * A_lam, _THICKNESS * A_G, _THICKNESS * M_unit


def _element_dof_table(resolution: int) -> np.ndarray:
    """(n_pixels, 8) global DOF ids; pixel (row r, col c) spans nodes with x=c, y=r."""
    N = resolution
    cols, rows = np.meshgrid(np.arange(N), np.arange(N))
    i, j = cols.ravel(), rows.ravel()
    ip, jp = (i + 1) % N, (j + 1) % N
    n0 = j * N + i
    n1 = j * N + ip
    n2 = jp * N + ip
    n3 = jp * N + i
    nodes = np.stack([n0, n1, n2, n3], axis=1)
    dofs = np.empty((N * N, 8), dtype=np.int64)
    dofs[:, 0::2] = 2 * nodes
    dofs[:, 1::2] = 2 * nodes + 1
    return dofs


def assemble_operators(cell: UnitCellSpec, k: WaveVector) -> AssembledOperators:
    """Assemble the Bloch stiffness at k and the (k-independent) consistent mass."""
    res = cell.bitmap.resolution
    h = cell.lattice_constant / res
    A_lam, A_G, M_unit = _element_matrices(h, k.kx, k.ky)
    dofs = _element_dof_table(res)
    n_dof = 2 * res * res

    hard = cell.bitmap.cells.ravel().astype(bool)
    soft_m, hard_m = cell.materials.soft, cell.materials.hard
    lam_p = np.where(hard, hard_m.lam, soft_m.lam)
    G_p = np.where(hard, hard_m.G, soft_m.G)
    rho_p = np.where(hard, hard_m.rho, soft_m.rho)

    rows = np.repeat(dofs, 8, axis=1).ravel()
    cols = np.tile(dofs, (1, 8)).ravel()
    k_data = (lam_p[:, None, None] * A_lam + G_p[:, None, None] * A_G).ravel()
    m_data = (rho_p[:, None, None] * M_unit).ravel()

    K = sp.coo_matrix((k_data, (rows, cols)), shape=(n_dof, n_dof)).tocsr()
    M = sp.coo_matrix((m_data, (rows, cols)), shape=(n_dof, n_dof)).tocsr()
    return AssembledOperators(K=K, M=M, dof_count=n_dof)


def _eigensolver_method(dof_count: int, n_bands: int, method: str) -> str:
    if method not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown eigensolver method {method!r}")
    if method == "auto":
        return "dense" if dof_count <= DENSE_MAX_DOF else "iterative"
    return method


def solve_bands(
    ops: AssembledOperators,
    n_bands: int,
    method: str = "auto",
    return_vectors: bool = False,
):
    """Lowest ``n_bands`` eigenfrequencies in Hz (ascending), optionally with modes.

    ``method='dense'`` uses a LAPACK generalized Hermitian solve,
    ``'iterative'`` ARPACK shift-invert with a fixed start vector (results
    are deterministic); ``'auto'`` picks dense up to ``DENSE_MAX_DOF``.
    """
    if not 1 <= n_bands <= ops.dof_count:
        raise ValueError(f"n_bands must lie in [1, {ops.dof_count}], got {n_bands}")
    chosen = _eigensolver_method(ops.dof_count, n_bands, method)
    if chosen == "iterative" and n_bands >= ops.dof_count - 1:
        chosen = "dense"  # ARPACK needs k < n - 1
    try:
        if chosen == "dense":
            Kd = ops.K.toarray()
            Md = ops.M.toarray()
            if return_vectors:
                w, v = sla.eigh(Kd, Md, subset_by_index=(0, n_bands - 1))
            else:
                w = sla.eigh(Kd, Md, subset_by_index=(0, n_bands - 1), eigvals_only=True)
                v = None
        else:
            Kc = ops.K.tocsc()
            Mc = ops.M.tocsc().astype(complex)
            sigma = -1e-3 * float(np.real(ops.K.diagonal()).sum() / ops.M.diagonal().sum())
            v0 = substream(0xB10C).standard_normal(ops.dof_count)
            out = spla.eigsh(
                Kc, k=n_bands, M=Mc, sigma=sigma, which="LM", v0=v0, tol=0,
                return_eigenvectors=return_vectors,
            )
            if return_vectors:
                w, v = out
            else:
                w, v = out, None
            order = np.argsort(w)
            w = w[order]
            if v is not None:
                v = v[:, order]
    except (sla.LinAlgError, spla.ArpackError, np.linalg.LinAlgError) as exc:
        raise SolverError(f"eigensolver failed for {ops.dof_count}-DOF problem: {exc}") from exc

    w = np.asarray(w, dtype=float)
    scale = float(np.abs(w).max(initial=0.0))
    if np.any(w < -1e-6 * scale):
        raise SolverError(
            f"negative eigenvalue {w.min():g} beyond tolerance for {ops.dof_count}-DOF problem"
        )
    w = np.where(w < 0, 0.0, w)  # clamp roundoff negatives
    freqs = np.sqrt(w) / (2.0 * np.pi)
    if return_vectors:
        return freqs, v
    return freqs


def ibz_path(n_per_segment: int, a: float) -> list[WaveVector]:
    """Piecewise-linear sweep of the square-lattice IBZ corners.

    Gamma (0,0) -> X (pi/a, 0) -> M (pi/a, pi/a) -> Gamma, ``n_per_segment``
    points per leg with shared corners counted once: 3n - 2 points total.
    """
    if n_per_segment < 2:
        raise ValueError(f"n_per_segment must be >= 2, got {n_per_segment}")
    corners = [(0.0, 0.0), (np.pi / a, 0.0), (np.pi / a, np.pi / a), (0.0, 0.0)]
    pts: list[WaveVector] = []
    for (x0, y0), (x1, y1) in zip(corners[:-1], corners[1:]):
        ts = np.linspace(0.0, 1.0, n_per_segment)
        if pts:
            ts = ts[1:]
        pts.extend(WaveVector(x0 + t * (x1 - x0), y0 + t * (y1 - y0)) for t in ts)
    return pts


def path_arclength(path) -> np.ndarray:
    ks = np.array([(k.kx, k.ky) for k in path])
    seg = np.linalg.norm(np.diff(ks, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def dispersion(
    cell: UnitCellSpec,
    path,
    n_bands: int = 10,
    method: str = "auto",
) -> DispersionResult:
    """Assemble and solve at every point of a k-path."""
    path = list(path)
    if not path:
        raise ValueError("k-path must be nonempty")
    freqs = np.empty((len(path), n_bands))
    for idx, k in enumerate(path):
        ops = assemble_operators(cell, k)
        try:
            freqs[idx] = solve_bands(ops, n_bands, method=method)
        except SolverError as exc:
            raise SolverError(f"k-point {idx} ({k.kx:g}, {k.ky:g}): {exc}") from exc
    return DispersionResult(kpath=tuple(path), arclength=path_arclength(path), frequencies=freqs)


def write_dispersion_csv(result: DispersionResult, path) -> None:
    """Columns: k_index, arclength, kx, ky, band_1..band_n (Hz, full precision)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["k_index", "arclength", "kx", "ky"]
            + [f"band_{b + 1}" for b in range(result.n_bands)]
        )
        for i, k in enumerate(result.kpath):
            writer.writerow(
                [i, repr(float(result.arclength[i])), repr(k.kx), repr(k.ky)]
                + [repr(float(f)) for f in result.frequencies[i]]
            )


def read_dispersion_csv(path) -> DispersionResult:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n_bands = len(header) - 4
        kpath, arcs, freqs = [], [], []
        for row in reader:
            kpath.append(WaveVector(float(row[2]), float(row[3])))
            arcs.append(float(row[1]))
            freqs.append([float(v) for v in row[4:]])
    return DispersionResult(kpath=tuple(kpath), arclength=np.array(arcs), frequencies=np.array(freqs))
