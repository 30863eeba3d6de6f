import numpy as np
import pytest

from phonon_uq.bandgap import extract_gaps
from phonon_uq.designs import get_design
from phonon_uq.fem import (
    DispersionResult,
    UnitCellSpec,
    WaveVector,
    assemble_operators,
    dispersion,
    ibz_path,
    read_dispersion_csv,
    solve_bands,
    write_dispersion_csv,
)
from phonon_uq.geometry import UnitCellBitmap, scale_bitmap
from phonon_uq.materials import default_material_pair
from phonon_uq.rng import substream

A = 0.1
MATS = default_material_pair()


def homogeneous_cell(resolution, hard=False):
    cells = np.full((resolution, resolution), 1 if hard else 0, dtype=np.uint8)
    return UnitCellSpec(UnitCellBitmap(cells), MATS, A)


def random_cell(rng, resolution):
    cells = rng.integers(0, 2, (resolution, resolution)).astype(np.uint8)
    return UnitCellSpec(UnitCellBitmap(cells), MATS, A)


class TestAssembly:
    def test_dof_count(self):
        ops = assemble_operators(homogeneous_cell(5), WaveVector(0, 0))
        assert ops.dof_count == 2 * 25
        assert ops.K.shape == (50, 50)

    def test_rigid_modes_at_gamma(self):
        ops = assemble_operators(homogeneous_cell(2), WaveVector(0.0, 0.0))
        w = np.linalg.eigvalsh(ops.K.toarray())
        assert (np.abs(w) < 1e-9 * w[-1]).sum() == 2

    def test_hermiticity_and_psd_100_random(self):
        rng = substream(2024)
        for _ in range(100):
            res = int(rng.integers(2, 9))
            k = WaveVector(float(rng.uniform(-np.pi / A, np.pi / A)),
                           float(rng.uniform(-np.pi / A, np.pi / A)))
            ops = assemble_operators(random_cell(rng, res), k)
            K = ops.K.toarray()
            assert np.linalg.norm(K - K.conj().T) <= 1e-10 * np.linalg.norm(K)
            w = np.linalg.eigvalsh(K)
            assert w[0] >= -1e-9 * w[-1]

    def test_mass_conservation(self):
        rng = substream(7)
        cell = random_cell(rng, 6)
        ops = assemble_operators(cell, WaveVector(3.0, -11.0))
        M = ops.M.toarray()
        assert not np.iscomplexobj(M)
        h = A / 6
        rho = np.where(cell.bitmap.cells == 1, MATS.hard.rho, MATS.soft.rho)
        total_mass = float((rho * h * h).sum())  # unit thickness
        assert abs(M.sum() / 2.0 - total_mass) <= 1e-9 * total_mass
        assert (M.sum(axis=1) > 0).all()

    def test_mass_spd_and_k_independent(self):
        cell = homogeneous_cell(4)
        m1 = assemble_operators(cell, WaveVector(0, 0)).M.toarray()
        m2 = assemble_operators(cell, WaveVector(5.0, 9.0)).M.toarray()
        assert np.array_equal(m1, m2)
        assert np.linalg.eigvalsh(m1)[0] > 0


class TestSolveBands:
    def test_phase_velocities_match_analytic(self):
        # lowest two branches of the homogeneous soft cell at small |k|
        cell = homogeneous_cell(32)
        kmag = 0.05 * np.pi / A
        ops = assemble_operators(cell, WaveVector(kmag, 0.0))
        f = solve_bands(ops, 2, method="iterative")
        v_shear = 2 * np.pi * f[0] / kmag
        v_long = 2 * np.pi * f[1] / kmag
        assert abs(v_shear / MATS.soft.shear_wave_speed - 1) < 0.02
        assert abs(v_long / MATS.soft.longitudinal_wave_speed - 1) < 0.02

    def test_gamma_point_null_space(self):
        cell = homogeneous_cell(16)
        f = solve_bands(assemble_operators(cell, WaveVector(0, 0)), 3)
        assert f[0] < 1e-6 * f[2]
        assert f[1] < 1e-6 * f[2]

    def test_sorted_ascending(self):
        rng = substream(3)
        ops = assemble_operators(random_cell(rng, 6), WaveVector(8.0, 2.0))
        for method in ("dense", "iterative"):
            f = solve_bands(ops, 12, method=method)
            assert (np.diff(f) >= 0).all()

    def test_dense_iterative_agree(self):
        # identical results at 1e-8 relative on the eigenvalue scale
        cell = UnitCellSpec(scale_bitmap(get_design("cross8"), 2), MATS, A)
        for k in (WaveVector(0, 0), WaveVector(np.pi / A, 0), WaveVector(17.0, -5.0)):
            ops = assemble_operators(cell, k)
            wd = (2 * np.pi * solve_bands(ops, 10, method="dense")) ** 2
            wi = (2 * np.pi * solve_bands(ops, 10, method="iterative")) ** 2
            assert np.abs(wd - wi).max() <= 1e-8 * wd.max()

    def test_eigenvector_residuals(self):
        rng = substream(11)
        cell = random_cell(rng, 6)
        ops = assemble_operators(cell, WaveVector(9.0, 4.0))
        freqs, vecs = solve_bands(ops, 6, return_vectors=True)
        K = ops.K.toarray()
        M = ops.M.toarray()
        k_norm = np.linalg.norm(K, 2)
        for j, f in enumerate(freqs):
            u = vecs[:, j]
            resid = np.linalg.norm(K @ u - (2 * np.pi * f) ** 2 * (M @ u))
            assert resid <= 1e-6 * k_norm * np.linalg.norm(u)

    def test_n_bands_validation(self):
        ops = assemble_operators(homogeneous_cell(2), WaveVector(0, 0))
        with pytest.raises(ValueError, match="n_bands"):
            solve_bands(ops, 9)


class TestScalingProperties:
    def test_modulus_scaling_scales_frequencies(self):
        from phonon_uq.materials import ElasticMaterial, MaterialPair

        s = 3.0
        scaled = MaterialPair(
            soft=ElasticMaterial.from_EN(MATS.soft.E * s**2, MATS.soft.nu, MATS.soft.rho),
            hard=ElasticMaterial.from_EN(MATS.hard.E * s**2, MATS.hard.nu, MATS.hard.rho),
        )
        rng = substream(5)
        cells = rng.integers(0, 2, (5, 5)).astype(np.uint8)
        k = WaveVector(12.0, -7.0)
        f1 = solve_bands(assemble_operators(UnitCellSpec(UnitCellBitmap(cells), MATS, A), k), 6)
        f2 = solve_bands(assemble_operators(UnitCellSpec(UnitCellBitmap(cells), scaled, A), k), 6)
        assert np.abs(f2 - s * f1).max() <= 1e-8 * (s * f1).max()

    def test_lattice_doubling_halves_frequencies(self):
        rng = substream(6)
        cells = rng.integers(0, 2, (5, 5)).astype(np.uint8)
        bitmap = UnitCellBitmap(cells)
        path1 = ibz_path(4, A)
        path2 = ibz_path(4, 2 * A)
        d1 = dispersion(UnitCellSpec(bitmap, MATS, A), path1, 6)
        d2 = dispersion(UnitCellSpec(bitmap, MATS, 2 * A), path2, 6)
        assert np.abs(d2.frequencies - d1.frequencies / 2).max() <= 1e-8 * d1.frequencies.max()


class TestIbzPath:
    def test_corner_only_path(self):
        path = ibz_path(2, A)
        assert len(path) == 4
        assert path[0] == WaveVector(0, 0)
        assert path[1] == WaveVector(np.pi / A, 0)
        assert path[2] == WaveVector(np.pi / A, np.pi / A)
        assert path[3] == WaveVector(0, 0)

    def test_point_count(self):
        assert len(ibz_path(16, A)) == 46

    def test_brillouin_zone_bounds(self):
        for k in ibz_path(16, A):
            assert abs(k.kx) <= np.pi / A + 1e-12
            assert abs(k.ky) <= np.pi / A + 1e-12

    def test_rejects_short_segments(self):
        with pytest.raises(ValueError):
            ibz_path(1, A)


class TestDispersion:
    def test_shape_contract(self):
        path = ibz_path(3, A)
        result = dispersion(homogeneous_cell(4), path, 5)
        assert result.frequencies.shape == (len(path), 5)
        assert (np.diff(result.frequencies, axis=1) >= 0).all()

    def test_homogeneous_has_no_gap(self):
        result = dispersion(homogeneous_cell(8), ibz_path(8, A), 6)
        assert extract_gaps(result) == []

    def test_design_cell_has_gap_at_40px(self):
        # two-phase cell with the published phase contrast: a bandgap is expected
        cell = UnitCellSpec(scale_bitmap(get_design("cross8"), 5), MATS, A)
        result = dispersion(cell, ibz_path(8, A), 10)
        assert len(extract_gaps(result)) >= 1

    def test_csv_round_trip(self, tmp_path):
        result = dispersion(homogeneous_cell(3), ibz_path(3, A), 4)
        path = tmp_path / "bands.csv"
        write_dispersion_csv(result, path)
        back = read_dispersion_csv(path)
        assert back == result

    def test_empty_path_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            dispersion(homogeneous_cell(3), [], 4)

    def test_result_invariants(self):
        with pytest.raises(ValueError, match="ascending"):
            DispersionResult(
                kpath=(WaveVector(0, 0),),
                arclength=np.array([0.0]),
                frequencies=np.array([[2.0, 1.0]]),
            )
        with pytest.raises(ValueError, match="nonnegative"):
            DispersionResult(
                kpath=(WaveVector(0, 0),),
                arclength=np.array([0.0]),
                frequencies=np.array([[-1.0, 1.0]]),
            )
