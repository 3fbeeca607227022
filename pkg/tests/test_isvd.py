import numpy as np
import pytest

from isvd_gpm.isvd import (
    absorb_block,
    estimate_memory,
    finalize,
    init_stream,
    isvd,
    residual_spectrum,
    significant_basis_direct,
    singular_value_scale,
    split_columns,
    theoretical_saving_rate,
)
from isvd_gpm.linalg import SignificantBasis, ThresholdMode, principal_angles


def max_angle(a, b):
    assert a.k == b.k
    ang = principal_angles(a.basis, b.basis)
    return float(ang.max()) if ang.size else 0.0


class TestStream:
    def test_init_empty(self):
        st = init_stream(4, 0.98)
        assert st.dim_d == 4 and st.basis.k == 0 and st.blocks_absorbed == 0

    def test_init_seeded(self):
        st = init_stream(4, 0.98, SignificantBasis.from_columns(np.eye(4)))
        assert st.basis.k == 4

    def test_init_seed_mismatch(self):
        with pytest.raises(ValueError):
            init_stream(4, 0.98, SignificantBasis.from_columns(np.eye(3)))

    def test_rank_one_stream(self):
        e1 = np.array([1.0, 0.0, 0.0])
        st = absorb_block(init_stream(3, 0.98), np.column_stack([2 * e1, 5 * e1]))
        assert st.basis.k == 1
        np.testing.assert_allclose(np.abs(st.basis.basis[:, 0]), e1)
        assert st.blocks_absorbed == 1

    def test_orthogonal_growth(self):
        seed = SignificantBasis.from_columns(np.eye(3)[:, :1])
        st = absorb_block(init_stream(3, 1.0, seed), np.column_stack([[0, 3.0, 0], [0, -1.0, 0]]))
        assert st.basis.k == 2
        assert max_angle(st.basis, SignificantBasis.from_columns(np.eye(3)[:, :2])) <= 1e-12

    def test_row_mismatch(self):
        with pytest.raises(ValueError):
            absorb_block(init_stream(3, 0.9), np.ones((4, 2)))

    def test_zero_block_keeps_basis(self):
        st = absorb_block(init_stream(3, 0.9), np.eye(3)[:, :1])
        st2 = absorb_block(st, np.zeros((3, 5)))
        assert st2.basis is st.basis
        assert st2.blocks_absorbed == 2

    def test_finalize(self):
        assert finalize(init_stream(5, 0.9)).k == 0
        st = absorb_block(init_stream(5, 1.0), np.eye(5))
        assert finalize(st).k == 5
        assert finalize(st) is st.basis
        # state stays usable
        absorb_block(st, np.ones((5, 1)))

    def test_blocks_vs_whole_at_full_retention(self):
        m = np.random.default_rng(11).standard_normal((16, 400))
        streamed = isvd(m, 1.0, 4).basis
        direct = significant_basis_direct(m, 1.0)
        assert max_angle(streamed, direct) <= 1e-6

    def test_single_block_matches_direct(self):
        rng = np.random.default_rng(5)
        for seed in range(10):
            m = rng.standard_normal((12, 80)) * (np.arange(12, 0, -1)[:, None] ** 2)
            a = isvd(m, 0.9, 1).basis
            b = significant_basis_direct(m, 0.9)
            assert a.k == b.k
            assert max_angle(a, b) <= 1e-8

    def test_peak_monotone(self):
        rng = np.random.default_rng(2)
        st = init_stream(8, 0.95)
        prev = 0
        for width in [50, 10, 30, 5]:
            st = absorb_block(st, rng.standard_normal((8, width)))
            assert st.peak_aux_scalars >= prev
            prev = st.peak_aux_scalars

    def test_split_uneven(self):
        parts = split_columns(np.zeros((2, 10)), 3)
        assert [p.shape[1] for p in parts] == [4, 4, 2]

    def test_singular_value_hook_tracks_direct(self):
        # carrying U*S keeps the prefix Gram matrix up to the truncated tail
        rng = np.random.default_rng(9)
        m = (rng.standard_normal((20, 20)) * np.geomspace(10, 0.01, 20)) @ rng.standard_normal((20, 600))
        direct = significant_basis_direct(m, 0.99)
        hooked = isvd(m, 0.99, 6, scale=singular_value_scale).basis
        assert abs(hooked.k - direct.k) <= 1
        k = min(hooked.k, direct.k)
        assert principal_angles(hooked.basis[:, :k - 1], direct.basis[:, :k]).max() <= 1e-2

    def test_literal_mode_threaded_through(self):
        st = absorb_block(init_stream(2, 0.9, mode=ThresholdMode.ALGORITHM1_LITERAL), np.diag([2.0, 1.0]))
        assert st.basis.k == 1


class TestResidualSpectrum:
    def test_full_span(self):
        m = np.random.default_rng(0).standard_normal((6, 30))
        r = residual_spectrum(m, significant_basis_direct(m, 1.0))
        assert r.max() <= 1e-8

    def test_empty_basis(self):
        m = np.random.default_rng(0).standard_normal((6, 30))
        np.testing.assert_allclose(residual_spectrum(m, SignificantBasis.empty(6)), 1.0)

    def test_zero_column_is_finite(self):
        m = np.zeros((3, 2))
        m[0, 0] = 1
        r = residual_spectrum(m, SignificantBasis.empty(3))
        np.testing.assert_array_equal(r, [1.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            residual_spectrum(np.ones((3, 3)), SignificantBasis.empty(4))

    def test_degradation_trend_over_blocks(self):
        # mean residual at gamma 0.98 should not improve as the stream is cut finer
        from isvd_gpm.bench import bench_matrix
        means = {n: [] for n in (1, 4, 16)}
        for seed in range(20):
            m = bench_matrix(32, 800, seed)
            for n in means:
                means[n].append(residual_spectrum(m, isvd(m, 0.98, n).basis).mean())
        avg = {n: np.mean(v) for n, v in means.items()}
        assert avg[1] <= avg[4] + 1e-3
        assert avg[4] <= avg[16] + 1e-3


class TestMemory:
    def test_hand_case(self):
        est = estimate_memory(4, 100, 2, 4)
        assert est.svd_scalars == 400 + 16 + 10000 + 4
        assert est.isvd_scalars == 216 + 16 + 2916 + 4
        assert est.saving_rate == pytest.approx(1 - 3152 / 10420)
        assert est.saving_rate == pytest.approx(0.6975, abs=5e-5)

    def test_no_split(self):
        # one block with an empty carried basis is the plain SVD
        assert estimate_memory(64, 1000, 1, 0).saving_rate == 0.0
        assert abs(estimate_memory(64, 1000, 1, 64).saving_rate) < 0.15

    def test_ten_blocks_near_asymptote(self):
        est = estimate_memory(128, 5000, 10, 25)
        assert theoretical_saving_rate(10) == pytest.approx(0.99)
        assert abs(est.saving_rate - 0.99) < 0.01

    def test_preconditions(self):
        with pytest.raises(ValueError):
            estimate_memory(4, 100, 0, 1)
        with pytest.raises(ValueError):
            estimate_memory(4, 3, 5, 1)
        with pytest.raises(ValueError):
            estimate_memory(4, 100, 2, 5)

    def test_peak_within_model(self):
        m = np.random.default_rng(3).standard_normal((32, 2000))
        for n in (1, 2, 5, 10, 40):
            st = isvd(m, 0.98, n)
            est = estimate_memory(32, 2000, n, st.max_k)
            assert st.peak_aux_scalars <= 1.25 * est.isvd_scalars
