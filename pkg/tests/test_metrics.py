import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from flowbench.editor import AncSchedule, EditConfig, constant_sga_schedule, dynaedit
from flowbench.errors import TooFewFramesError, TraceTooShortError
from flowbench.harness.scenarios import trajectory_jump
from flowbench.metrics import (
    MetricReport,
    correlation_trace,
    default_window,
    energy_distance,
    jitter_energy,
    late_half_dispersion,
    lowfreq_alignment,
    moving_average,
)
from flowbench.tensorcore import LatentField, gaussian, stream_for


def field(rows):
    return LatentField(np.array(rows, dtype=np.float64))


class TestJitterEnergy:
    def test_constant_field_is_zero(self):
        assert jitter_energy(field([[1.0, 2.0]] * 5)) == 0.0

    def test_linear_trajectory_is_zero(self):
        f = np.arange(6)[:, None] * np.array([0.5, -1.0])
        assert jitter_energy(LatentField(f + 3.0)) == 0.0

    def test_analytic_three_frames(self):
        assert jitter_energy(field([[0.0], [1.0], [0.0]])) == pytest.approx(4.0)

    def test_too_few_frames(self):
        with pytest.raises(TooFewFramesError):
            jitter_energy(field([[0.0], [1.0]]))

    @given(st.integers(0, 5000), st.floats(-50.0, 50.0))
    @settings(max_examples=30, deadline=None)
    def test_static_offset_invariance(self, seed, offset):
        z = gaussian(stream_for(seed, "j"), (6, 3))
        shifted = LatentField(z.data + offset)
        assert jitter_energy(shifted) == pytest.approx(jitter_energy(z), rel=1e-9, abs=1e-12)

    def test_white_noise_level(self):
        # E second difference of white noise has variance 6 sigma^2 per dim.
        z = gaussian(stream_for(1, "wn"), (2000, 50))
        assert jitter_energy(z) == pytest.approx(6.0, rel=0.02)


class TestLowfreqAlignment:
    def test_self_alignment_is_zero(self):
        z = gaussian(stream_for(2), (8, 3))
        assert lowfreq_alignment(z, z, 3) == 0.0

    def test_full_window_is_global_mean_distance(self):
        z = gaussian(stream_for(3), (6, 2))
        x = gaussian(stream_for(4), (6, 2))
        expected_diff = z.data.mean(axis=0) - x.data.mean(axis=0)
        got = lowfreq_alignment(z, x, 6)
        assert got == pytest.approx(float(np.linalg.norm(expected_diff)), rel=1e-12)

    def test_window_validation(self):
        z = gaussian(stream_for(5), (4, 2))
        with pytest.raises(ValueError):
            moving_average(z, 0)
        with pytest.raises(ValueError):
            moving_average(z, 5)

    @pytest.mark.parametrize("frames", [8, 9])
    def test_alternating_perturbation_parity_residue(self, frames):
        # A +-eps alternating perturbation smoothed by the full window leaves
        # |sum of alternating signs| / T = (T mod 2) * eps / T per frame.
        eps = 0.3
        x = gaussian(stream_for(6, frames), (frames, 1))
        signs = np.array([(-1.0) ** k for k in range(frames)])[:, None]
        z = LatentField(x.data + eps * signs)
        got = lowfreq_alignment(z, x, frames)
        expected = (frames % 2) * eps / frames
        assert got == pytest.approx(expected, abs=1e-12)

    def test_default_window(self):
        assert default_window(16) == 4
        assert default_window(8) == 3
        assert default_window(2) == 2


class TestEnergyDistance:
    def test_identical_multisets_give_zero(self):
        pts = [gaussian(stream_for(k, "ed"), (2, 2)) for k in range(5)]
        assert energy_distance(pts, list(pts)) == pytest.approx(0.0, abs=1e-12)

    def test_two_point_masses(self):
        a = field([[0.0, 0.0]])
        b = field([[3.0, 4.0]])
        assert energy_distance([a], [b]) == pytest.approx(10.0)  # 2 * 5

    def test_symmetry(self):
        xs = [gaussian(stream_for(k, "a"), (1, 2)) for k in range(6)]
        ys = [gaussian(stream_for(k, "b"), (1, 2)) for k in range(4)]
        assert energy_distance(xs, ys) == pytest.approx(energy_distance(ys, xs), rel=1e-12)

    def test_gaussian_shift_against_quadrature(self):
        # X ~ N(0,1), Y ~ N(2,1): the three expectations reduce to folded
        # normal means, integrated numerically as the independent oracle.
        def folded_mean(shift, var):
            scale = math.sqrt(var)
            return quad(
                lambda u: abs(u) * norm.pdf(u, loc=shift, scale=scale), -40, 40, limit=200
            )[0]

        expected = 2 * folded_mean(2.0, 2.0) - folded_mean(0.0, 2.0) - folded_mean(0.0, 2.0)
        n = 10_000
        xs = stream_for(7, "x").normals(n)
        ys = stream_for(8, "y").normals(n) + 2.0
        a = [field([[v]]) for v in xs[:2000]]
        b = [field([[v]]) for v in ys[:2000]]
        got = energy_distance(a, b)
        assert got == pytest.approx(expected, rel=0.05)

    def test_subsampled_mode(self):
        xs = [gaussian(stream_for(k, "s1"), (1, 2)) for k in range(200)]
        ys = [gaussian(stream_for(k, "s2"), (1, 2)) for k in range(200)]
        full = energy_distance(xs, ys)
        sub = energy_distance(xs, ys, max_pairs=20_000, stream=stream_for(1, "pairs"))
        assert sub == pytest.approx(full, abs=0.05)
        with pytest.raises(ValueError):
            energy_distance(xs, ys, max_pairs=10)

    def test_empty_sets_rejected(self):
        with pytest.raises(ValueError):
            energy_distance([], [field([[1.0]])])


class TestCorrelationTrace:
    def run_trace(self, kind, steps=24, seed=0):
        scn = trajectory_jump()
        model = scn.model()
        x_src = scn.source_field(seed)
        cs, ct = scn.conditions(x_src)
        cfg = EditConfig(
            steps=steps, cfg_src=2.5, cfg_tar=4.5, tau=0.01,
            anc_schedule=AncSchedule(kind), seed=seed,
        )
        _, trace = dynaedit(model, x_src, cs, ct, cfg)
        return trace

    def test_constant_noise_has_unit_correlation(self):
        trace = self.run_trace("constant")
        noise_corr, _ = correlation_trace(trace)
        assert np.allclose(noise_corr, 1.0, atol=1e-12)

    def test_iid_noise_decorrelates(self):
        trace = self.run_trace("iid")
        noise_corr, _ = correlation_trace(trace)
        bound = 3.0 / math.sqrt(16 * 2)
        assert abs(noise_corr.mean()) < bound

    def test_markov_increasing_follows_schedule_law(self):
        trace = self.run_trace("markov_increasing", steps=30)
        noise_corr, _ = correlation_trace(trace)
        bound = 3.0 / math.sqrt(16 * 2)  # generous at this small field size
        for record, corr in zip(trace.records[1:], noise_corr):
            assert abs(corr - math.sqrt(record.anc_a)) < max(bound, 0.6)

    def test_lengths_and_short_trace(self):
        trace = self.run_trace("iid", steps=10)
        noise_corr, velocity_corr = correlation_trace(trace)
        assert len(noise_corr) == len(velocity_corr) == 9
        from flowbench.editor import EditTrace

        with pytest.raises(TraceTooShortError):
            correlation_trace(EditTrace(records=trace.records[:1]))

    def test_late_half_dispersion(self):
        assert late_half_dispersion(np.array([0.0, 0.0, 1.0, 1.0])) == pytest.approx(0.0)
        assert math.isnan(late_half_dispersion(np.array([np.nan, np.nan])))


class TestMetricReport:
    def test_validation(self):
        report = MetricReport(jitter=0.1, lowfreq_alignment=0.2, target_distance=0.3)
        assert report.noise_corr.size == 0
        with pytest.raises(ValueError):
            MetricReport(jitter=-0.1, lowfreq_alignment=0.0, target_distance=0.0)
        with pytest.raises(ValueError):
            MetricReport(jitter=math.nan, lowfreq_alignment=0.0, target_distance=0.0)
