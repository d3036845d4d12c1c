import numpy as np
import pytest

from isacimg.errors import DimMismatch, InconsistentBlockDims, SingularPilots
from isacimg.estimation import (
    cancel_los,
    estimate_channel,
    stack_measurements,
    unstack_measurements,
)
from isacimg.forward import make_pilots, simulate_received, true_channel
from isacimg.propagation import AntennaArray, CarrierSet, assemble_channel
from isacimg.scene import FineCloud, build_grid


class TestEstimateChannel:
    def test_noiseless_exact_inversion(self):
        rng = np.random.default_rng(0)
        h = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        pilots = make_pilots(4, 9, seed=1)
        y = h @ pilots.s
        h_hat = estimate_channel(y, pilots.s)
        assert np.max(np.abs(h_hat - h)) <= 1e-12 * np.max(np.abs(h))

    def test_matched_filter_closed_form_square_pilots(self):
        rng = np.random.default_rng(2)
        pilots = make_pilots(5, 5, seed=3)
        y = rng.standard_normal((2, 5)) + 1j * rng.standard_normal((2, 5))
        h_hat = estimate_channel(y, pilots.s)
        closed = y @ pilots.s.conj().T / 5.0
        assert np.allclose(h_hat, closed, rtol=1e-12, atol=1e-14)

    def test_noise_only_variance(self):
        # LS noise propagation: per-entry variance sigma^2 / T, 5% over 1e4 trials
        t_len = 8
        sigma2 = 0.5
        pilots = make_pilots(2, t_len, seed=4)
        rng = np.random.default_rng(5)
        trials = 10_000
        noise = np.sqrt(sigma2 / 2.0) * (
            rng.standard_normal((trials, 3, t_len)) + 1j * rng.standard_normal((trials, 3, t_len))
        )
        pinv = pilots.s.conj().T @ np.linalg.inv(pilots.s @ pilots.s.conj().T)
        estimates = noise @ pinv
        measured = np.mean(np.abs(estimates) ** 2)
        assert measured == pytest.approx(sigma2 / t_len, rel=0.05)

    def test_error_variance_shrinks_as_one_over_t(self):
        sigma2 = 1.0
        n_tx = 4
        rng = np.random.default_rng(6)
        variances = {}
        for t_len in (n_tx, 2 * n_tx, 4 * n_tx):
            pilots = make_pilots(n_tx, t_len, seed=7)
            noise = np.sqrt(sigma2 / 2.0) * (
                rng.standard_normal((4000, 2, t_len)) + 1j * rng.standard_normal((4000, 2, t_len))
            )
            pinv = pilots.s.conj().T @ np.linalg.inv(pilots.s @ pilots.s.conj().T)
            variances[t_len] = np.mean(np.abs(noise @ pinv) ** 2)
        assert variances[2 * n_tx] == pytest.approx(variances[n_tx] / 2.0, rel=0.1)
        assert variances[4 * n_tx] == pytest.approx(variances[n_tx] / 4.0, rel=0.1)

    def test_singular_pilots_rejected(self):
        s = np.ones((2, 4), dtype=complex)  # identical rows
        y = np.zeros((1, 4), dtype=complex)
        with pytest.raises(SingularPilots):
            estimate_channel(y, s)


class TestCancelLos:
    def test_exact_cancellation(self):
        rng = np.random.default_rng(8)
        h = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert np.all(cancel_los(h, h) == 0)

    def test_zero_los_identity(self):
        rng = np.random.default_rng(9)
        h = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
        assert np.array_equal(cancel_los(h, np.zeros_like(h)), h)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            cancel_los(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_noiseless_pipeline_recovers_nlos(self):
        grid = build_grid(0.4, 0.4, 0.2, 0.2)
        arrays = AntennaArray([[-0.8, 0.1], [-0.8, 0.3]], [[1.2, 0.0], [1.2, 0.4]])
        carriers = CarrierSet(30e9, 2, 1e8)
        channels = assemble_channel(grid, arrays, carriers, model="conventional")
        rng = np.random.default_rng(10)
        cloud = FineCloud(
            points=rng.uniform(0.05, 0.35, (12, 2)), weights=rng.uniform(0.1, 1.0, 12), subdivision=1
        )
        h_nlos = true_channel(cloud, arrays, carriers)
        pilots = make_pilots(2, 6, seed=11)
        rec = simulate_received(h_nlos, channels.h_los, pilots, None, seed=12)
        for k in range(carriers.count):
            residual = cancel_los(estimate_channel(rec.y[k], pilots.s), channels.h_los[k])
            assert np.max(np.abs(residual - h_nlos[k])) <= 1e-10 * np.max(np.abs(h_nlos[k]))


class TestStacking:
    def test_single_block(self):
        vec = stack_measurements([np.array([[3.0 + 1j]])])
        assert vec.h.shape == (1,)
        assert vec.h[0] == 3.0 + 1j

    def test_dimension_law(self):
        rng = np.random.default_rng(13)
        blocks = [rng.standard_normal((10, 10)) + 0j for _ in range(4)]
        vec = stack_measurements(blocks)
        assert vec.h.shape == (400,)

    def test_round_trip(self):
        rng = np.random.default_rng(14)
        blocks = [rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5)) for _ in range(2)]
        vec = stack_measurements(blocks)
        back = unstack_measurements(vec)
        for original, restored in zip(blocks, back):
            assert np.array_equal(original, restored)

    def test_ordering_matches_operator_rows(self):
        # stacked entry (k, t, r) must line up with A's row ordering
        from isacimg.propagation import stacked_row_index

        k_total, n_rx, n_tx = 2, 3, 2
        blocks = [
            np.arange(n_rx * n_tx).reshape(n_rx, n_tx) * (k + 1.0) for k in range(k_total)
        ]
        vec = stack_measurements(blocks)
        for k in range(k_total):
            for t in range(n_tx):
                for r in range(n_rx):
                    m = stacked_row_index(k, t, r, n_tx, n_rx)
                    assert vec.h[m] == blocks[k][r, t]

    def test_inconsistent_blocks_rejected(self):
        with pytest.raises(InconsistentBlockDims):
            stack_measurements([np.zeros((2, 2)), np.zeros((2, 3))])
        with pytest.raises(InconsistentBlockDims):
            stack_measurements([])

    def test_noiseless_factorized_consistency(self):
        # when Y is generated from the factorized model, stacking returns A x
        grid = build_grid(0.6, 0.6, 0.2, 0.2)
        arrays = AntennaArray([[-0.9, 0.1], [-0.9, 0.5]], [[1.5, 0.0], [1.5, 0.6]])
        carriers = CarrierSet(30e9, 3, 1e8)
        channels = assemble_channel(grid, arrays, carriers, model="integral")
        rng = np.random.default_rng(15)
        x = np.zeros(grid.n_pixels)
        x[rng.choice(grid.n_pixels, 3, replace=False)] = rng.uniform(0.3, 1.0, 3)
        predicted = channels.a @ x
        h_blocks = [
            predicted[k * 4 : (k + 1) * 4].reshape((2, 2), order="F") for k in range(3)
        ]
        pilots = make_pilots(2, 6, seed=16)
        rec = simulate_received(
            np.stack(h_blocks), np.zeros((3, 2, 2), dtype=complex), pilots, None, seed=17
        )
        stacked = stack_measurements(
            [estimate_channel(rec.y[k], pilots.s) for k in range(3)]
        )
        assert np.max(np.abs(stacked.h - predicted)) <= 1e-10 * np.max(np.abs(predicted))
