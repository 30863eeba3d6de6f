import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phonon_uq.bandgap import (
    BandGap,
    GapPolicy,
    extract_gaps,
    gap_outputs,
    primary_gap,
    read_gap_csv,
    write_gap_csv,
)
from phonon_uq.fem import DispersionResult, WaveVector


def synthetic(freqs):
    freqs = np.asarray(freqs, dtype=float)
    kpath = tuple(WaveVector(float(i), 0.0) for i in range(freqs.shape[0]))
    return DispersionResult(kpath=kpath, arclength=np.arange(freqs.shape[0], dtype=float),
                            frequencies=freqs)


def brute_force_gaps(freqs):
    """Oracle: direct min/max over the synthetic band table."""
    freqs = np.asarray(freqs, dtype=float)
    out = []
    for n in range(freqs.shape[1] - 1):
        bottom = freqs[:, n].max()
        top = freqs[:, n + 1].min()
        if top > bottom:
            out.append((n + 1, bottom, top))
    return out


band_tables = st.integers(2, 5).flatmap(
    lambda nb: st.integers(1, 6).flatmap(
        lambda nk: st.lists(
            st.lists(st.floats(0, 100, allow_nan=False), min_size=nb, max_size=nb).map(sorted),
            min_size=nk, max_size=nk,
        )
    )
)


class TestExtractGaps:
    def test_constant_bands(self):
        gaps = extract_gaps(synthetic([[2.0, 4.0], [2.0, 4.0]]))
        assert len(gaps) == 1
        g = gaps[0]
        assert (g.below_band, g.bottom, g.top, g.size, g.center) == (1, 2.0, 4.0, 2.0, 3.0)

    def test_overlap_kills_gap(self):
        assert extract_gaps(synthetic([[1.0, 4.0], [5.0, 7.0]])) == []

    def test_two_separated_gaps_in_index_order(self):
        # band 1 touches band 2 (no gap); gaps sit below bands 2 and 3
        table = [[1.0, 3.0, 6.0, 10.0], [3.0, 3.5, 7.0, 9.5]]
        gaps = extract_gaps(synthetic(table))
        assert [(g.below_band, g.bottom, g.top) for g in gaps] == brute_force_gaps(table)
        assert [g.below_band for g in gaps] == [2, 3]

    @given(band_tables)
    @settings(max_examples=80, deadline=None)
    def test_matches_brute_force(self, table):
        gaps = extract_gaps(synthetic(table))
        assert [(g.below_band, g.bottom, g.top) for g in gaps] == brute_force_gaps(table)

    @given(band_tables, st.randoms(use_true_random=False))
    @settings(max_examples=50, deadline=None)
    def test_invariant_to_kpoint_permutation(self, table, rnd):
        shuffled = list(table)
        rnd.shuffle(shuffled)
        assert extract_gaps(synthetic(table)) == extract_gaps(synthetic(shuffled))

    @given(band_tables, band_tables)
    @settings(max_examples=50, deadline=None)
    def test_appending_kpoints_only_shrinks_gaps(self, table_a, table_b):
        if len(np.asarray(table_a).T) != len(np.asarray(table_b).T):
            return  # need equal band counts to stack
        gaps_a = {g.below_band: g for g in extract_gaps(synthetic(table_a))}
        combined = extract_gaps(synthetic(list(table_a) + list(table_b)))
        for g in combined:
            assert g.below_band in gaps_a
            parent = gaps_a[g.below_band]
            assert g.size <= parent.size + 1e-12
            assert g.bottom >= parent.bottom - 1e-12
            assert g.top <= parent.top + 1e-12

    def test_needs_two_bands(self):
        with pytest.raises(ValueError, match="2 bands"):
            extract_gaps(synthetic([[1.0], [2.0]]))


class TestPrimaryGap:
    def gaps(self, spec):
        return [BandGap(below_band=n, bottom=b, top=t) for n, b, t in spec]

    def test_largest_policy(self):
        gaps = self.gaps([(1, 0.0, 2.0), (3, 10.0, 17.0)])
        assert primary_gap(gaps, GapPolicy("largest")).below_band == 3

    def test_empty_list_absent(self):
        assert primary_gap([], GapPolicy("largest")) is None

    def test_tie_breaks_to_lowest_band(self):
        gaps = self.gaps([(2, 0.0, 3.0), (5, 10.0, 13.0)])
        assert primary_gap(gaps, GapPolicy("largest")).below_band == 2

    def test_first_policy(self):
        gaps = self.gaps([(4, 0.0, 1.0), (2, 5.0, 9.0)])
        assert primary_gap(gaps, GapPolicy("first")).below_band == 2

    def test_between_bands_policy(self):
        gaps = self.gaps([(2, 0.0, 1.0), (4, 5.0, 9.0)])
        assert primary_gap(gaps, GapPolicy("between_bands", band=4)).below_band == 4
        assert primary_gap(gaps, GapPolicy("between_bands", band=3)) is None

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            GapPolicy("between_bands")
        with pytest.raises(ValueError):
            GapPolicy("widest")


class TestBandGapType:
    def test_center_and_size_recompute_exactly(self):
        g = BandGap(below_band=1, bottom=3.25, top=7.75)
        assert g.size == 7.75 - 3.25
        assert g.center == (7.75 + 3.25) / 2

    def test_degenerate_gap_rejected(self):
        with pytest.raises(ValueError):
            BandGap(below_band=1, bottom=5.0, top=5.0)

    def test_gap_outputs_sentinel(self):
        assert np.isnan(gap_outputs(None)).all()
        out = gap_outputs(BandGap(below_band=2, bottom=1.0, top=2.0))
        assert out.tolist() == [1.0, 1.5]


class TestGapCsv:
    def test_round_trip_with_sentinels(self, tmp_path):
        gaps = [BandGap(1, 2.0, 4.5), None, BandGap(3, 7.25, 9.0)]
        path = tmp_path / "gaps.csv"
        write_gap_csv(gaps, path)
        back = read_gap_csv(path)
        assert back == gaps
        header = path.read_text().splitlines()[0]
        assert header == "sample_index,gap_size_hz,gap_bottom_hz,gap_top_hz,gap_center_hz,below_band"
