import math

import numpy as np
import pytest
import sympy
from scipy.stats import norm

from flowbench.errors import DegenerateConditionError, UnknownConditionError
from flowbench.flowmodel import (
    Condition,
    ConditionedMixture,
    FlowModel,
    GaussianComponent,
    VelocityQuery,
    condition_on_first_frame,
    posterior_x0_mean,
    single_condition_model,
    time_grid,
)
from flowbench.tensorcore import LatentField, stream_for


def mixture(label, means, var, weights=None):
    means = [np.asarray(m, dtype=np.float64) for m in means]
    weights = weights or [1.0 / len(means)] * len(means)
    comps = [GaussianComponent(w, LatentField(m), var) for w, m in zip(weights, means)]
    return ConditionedMixture(label, comps)


def std_normal_mixture(frames=1, dim=1):
    return mixture("prior", [np.zeros((frames, dim))], 1.0)


class TestMixtureConstruction:
    def test_weights_must_sum_to_one(self):
        mean = LatentField(np.zeros((1, 1)))
        with pytest.raises(ValueError):
            ConditionedMixture("m", [GaussianComponent(0.5, mean, 1.0)])

    def test_variance_floor_applied(self):
        comp = GaussianComponent(1.0, LatentField(np.zeros((1, 2))), 0.0)
        assert np.all(comp.var >= 1e-8)

    def test_draw_moments(self):
        mix = mixture("m", [np.full((1, 1), 2.0)], 0.25)
        draws = np.array([mix.draw(stream_for(s, "d")).flat[0] for s in range(4000)])
        assert draws.mean() == pytest.approx(2.0, abs=0.05)
        assert draws.var() == pytest.approx(0.25, abs=0.03)

    def test_draw_respects_weights(self):
        mix = mixture("m", [np.full((1, 1), -8.0), np.full((1, 1), 8.0)], 0.1, [0.25, 0.75])
        draws = np.array([mix.draw(stream_for(s, "w")).flat[0] for s in range(2000)])
        assert np.mean(draws > 0) == pytest.approx(0.75, abs=0.035)


class TestFirstFrameConditioning:
    def test_conditioning_at_the_mode(self):
        mean = np.array([[1.0, -1.0], [0.5, 0.5]])
        mix = mixture("m", [mean], 0.3)
        out = condition_on_first_frame(mix, mean[0])
        comp = out.components[0]
        assert np.array_equal(comp.mean.frame(0), mean[0])
        assert np.all(comp.var[0] == 1e-8)
        assert np.array_equal(comp.mean.frame(1), mean[1])
        assert np.all(comp.var[1] == pytest.approx(0.3))
        assert comp.weight == pytest.approx(1.0)

    def test_density_ratio_reweighting(self):
        # Two unit-variance components with frame-0 means -1 and +1; observing
        # f=+1 reweights by the Gaussian density ratio, i.e. sigmoid(2).
        means = [np.array([[-1.0], [0.0]]), np.array([[1.0], [0.0]])]
        mix = mixture("m", means, 1.0)
        out = condition_on_first_frame(mix, np.array([1.0]))
        d_minus = norm.pdf(1.0, loc=-1.0, scale=1.0)
        d_plus = norm.pdf(1.0, loc=1.0, scale=1.0)
        expected = d_plus / (d_plus + d_minus)
        got = {c.mean.frame(1)[0]: c.weight for c in out.components}
        assert out.components[1].weight == pytest.approx(expected, rel=1e-12)
        assert sum(c.weight for c in out.components) == pytest.approx(1.0, abs=1e-12)

    def test_symmetric_frame_keeps_weights(self):
        # Components share the frame-0 marginal, so any f has ratio 1.
        means = [np.array([[0.0], [3.0]]), np.array([[0.0], [-3.0]])]
        mix = mixture("m", means, 0.5, weights=[0.3, 0.7])
        out = condition_on_first_frame(mix, np.array([0.7]))
        assert [c.weight for c in out.components] == pytest.approx([0.3, 0.7], rel=1e-12)

    def test_impossible_frame_raises(self):
        mix = mixture("m", [np.zeros((2, 1))], 1e-8)
        with pytest.raises(DegenerateConditionError):
            condition_on_first_frame(mix, np.array([1e200]))

    def test_wrong_length_rejected(self):
        mix = mixture("m", [np.zeros((2, 3))], 1.0)
        with pytest.raises(ValueError):
            condition_on_first_frame(mix, np.zeros(2))


class TestPosteriorMean:
    def test_pure_noise_limit_gives_prior_mean(self):
        means = [np.full((1, 2), -1.0), np.full((1, 2), 3.0)]
        mix = mixture("m", means, 0.5, weights=[0.25, 0.75])
        post = posterior_x0_mean(mix, LatentField(np.zeros((1, 2))), 1.0)
        expected = 0.25 * -1.0 + 0.75 * 3.0
        assert post.flat == pytest.approx([expected, expected], rel=1e-12)

    def test_standard_normal_scalar_formula(self):
        # For N(0,1) data the posterior mean is (1-t)/((1-t)^2 + t^2) * x;
        # at t=0.5 the coefficient is exactly 1.
        mix = std_normal_mixture()
        for t, x in [(0.5, 2.0), (0.25, 1.3), (0.9, -0.7)]:
            coeff = (1 - t) / ((1 - t) ** 2 + t**2)
            post = posterior_x0_mean(mix, LatentField(np.array([[x]])), t)
            assert post.flat[0] == pytest.approx(coeff * x, rel=1e-12)

    def test_monte_carlo_rejection_oracle(self):
        # Brute-force check: condition on an interpolant ball around x.
        means = [np.array([[-1.0, 0.5]]), np.array([[1.2, -0.8]])]
        mix = mixture("m", means, 0.4, weights=[0.35, 0.65])
        t, x = 0.6, np.array([0.3, -0.2])
        draws = 1_000_000
        stream = stream_for(2024, "mc")
        comp_pick = stream.uniforms(draws) < 0.35
        z0 = stream.normals(2 * draws).reshape(draws, 2) * math.sqrt(0.4)
        z0 += np.where(comp_pick[:, None], means[0][0], means[1][0])
        z1 = stream.normals(2 * draws).reshape(draws, 2)
        xt = (1 - t) * z0 + t * z1
        dist = np.linalg.norm(xt - x, axis=1)
        radius = np.partition(dist, 20_000)[20_000]
        keep = dist <= radius
        mc_mean = z0[keep].mean(axis=0)
        mc_se = z0[keep].std(axis=0) / math.sqrt(keep.sum())
        post = posterior_x0_mean(mix, LatentField(x.reshape(1, 2)), t)
        assert np.all(np.abs(post.flat - mc_mean) < 3 * mc_se)


class TestVelocity:
    def build_model(self):
        model = FlowModel()
        model.register(mixture("a", [np.full((1, 2), -1.0)], 0.25))
        model.register(mixture("b", [np.full((1, 2), 2.0)], 0.5))
        return model

    def test_unknown_condition(self):
        model = self.build_model()
        q = VelocityQuery(LatentField(np.zeros((1, 2))), 0.5, Condition("nope"))
        with pytest.raises(UnknownConditionError):
            model.velocity(q)

    def test_query_validation(self):
        x = LatentField(np.zeros((1, 2)))
        with pytest.raises(ValueError):
            VelocityQuery(x, 0.0, Condition("a"))
        with pytest.raises(ValueError):
            VelocityQuery(x, 0.5, Condition("a"), cfg_scale=-1.0)

    def test_consistency_identity(self):
        # velocity == (x - posterior_x0_mean) / t, by construction; tripwire.
        model = self.build_model()
        mix = model.mixture("a")
        for seed in range(5):
            x = LatentField(stream_for(seed, "x").normals(2).reshape(1, 2))
            t = 0.1 + 0.8 * stream_for(seed, "t").uniforms(1)[0]
            v = model.velocity(VelocityQuery(x, t, Condition("a")))
            expected = (x.flat - posterior_x0_mean(mix, x, t).flat) / t
            assert np.allclose(v.flat, expected, atol=1e-12)

    def test_single_component_symbolic_oracle(self):
        # Independent derivation of the affine velocity for N(mu, s2) data via
        # the joint-Gaussian conditional mean, evaluated symbolically.
        x_s, t_s, mu_s, s2_s = sympy.symbols("x t mu s2", positive=False)
        denom = (1 - t_s) ** 2 * s2_s + t_s**2
        post = mu_s + (1 - t_s) * s2_s / denom * (x_s - (1 - t_s) * mu_s)
        vel = (x_s - post) / t_s
        vel_fn = sympy.lambdify((x_s, t_s, mu_s, s2_s), sympy.simplify(vel))
        mu, s2 = 1.7, 0.3
        model = single_condition_model(mixture("g", [np.full((1, 1), mu)], s2))
        for t in (0.15, 0.5, 0.95):
            for x in (-2.0, 0.0, 1.3):
                v = model.velocity(VelocityQuery(LatentField(np.array([[x]])), t, Condition("g")))
                assert v.flat[0] == pytest.approx(vel_fn(x, t, mu, s2), rel=1e-10)

    def test_cfg_identity_and_null(self):
        model = self.build_model()
        x = LatentField(np.array([[0.4, -0.3]]))
        t = 0.7
        v_plain = model.velocity(VelocityQuery(x, t, Condition("a")))
        v_one = model.velocity(VelocityQuery(x, t, Condition("a"), cfg_scale=1.0))
        assert np.array_equal(v_plain.data, v_one.data)
        # cfg 0 equals the velocity of the equal-prior union mixture,
        # recomputed here from an explicitly constructed union.
        union = ConditionedMixture(
            "u",
            [
                GaussianComponent(0.5 * c.weight, c.mean, c.var)
                for lbl in ("a", "b")
                for c in model.mixture(lbl).components
            ],
        )
        expected = (x.flat - posterior_x0_mean(union, x, t).flat) / t
        v_zero = model.velocity(VelocityQuery(x, t, Condition("a"), cfg_scale=0.0))
        assert np.allclose(v_zero.flat, expected, atol=1e-12)

    def test_cfg_linearity(self):
        model = self.build_model()
        x = LatentField(np.array([[0.9, 0.1]]))
        t = 0.4
        v = {
            g: model.velocity(VelocityQuery(x, t, Condition("b"), cfg_scale=g)).flat
            for g in (0.0, 1.0, 2.0)
        }
        assert np.allclose(v[2.0] - v[1.0], v[1.0] - v[0.0], atol=1e-12)


class TestTimeGrid:
    def test_uniform_grid(self):
        grid = time_grid(4)
        assert grid[1:] == pytest.approx([0.25, 0.5, 0.75, 1.0])
        assert grid[0] == 1e-3

    def test_shift_keeps_endpoints_and_monotonicity(self):
        grid = time_grid(10, shift=3.0)
        assert grid[-1] == pytest.approx(1.0)
        assert np.all(np.diff(grid) > 0)
        # shift=3 pushes interior points toward t=1
        assert grid[5] > time_grid(10)[5]

    def test_invalid_steps(self):
        with pytest.raises(ValueError):
            time_grid(0)


class TestSampling:
    def test_single_component_moments(self):
        mix = mixture("g", [np.full((1, 2), 1.5)], 0.09)
        model = single_condition_model(mix)
        pts = np.array(
            [model.sample(Condition("g"), 100, stream_for(s, "smp")).flat for s in range(1000)]
        )
        stderr = 0.3 / math.sqrt(1000)
        assert np.all(np.abs(pts.mean(axis=0) - 1.5) < 4 * stderr)
        assert np.all(np.abs(pts.var(axis=0) - 0.09) < 0.09 * 0.1)

    def test_data_equals_prior_is_a_distributional_fixed_point(self):
        # The interpolant of two independent standard normals pinches the
        # variance in the middle, so the velocity is x*(2t-1)/((1-t)^2+t^2):
        # zero at t=1/2 and at the origin, and the endpoint law is N(0, I).
        model = single_condition_model(std_normal_mixture(1, 2))
        x = LatentField(np.array([[0.7, -1.1]]))
        v_mid = model.velocity(VelocityQuery(x, 0.5, Condition("prior")))
        assert np.allclose(v_mid.flat, 0.0, atol=1e-12)
        origin = LatentField(np.zeros((1, 2)))
        for t in (0.2, 0.8):
            v0 = model.velocity(VelocityQuery(origin, t, Condition("prior")))
            assert np.allclose(v0.flat, 0.0, atol=1e-12)
        pts = np.array(
            [model.sample(Condition("prior"), 100, stream_for(s, "pr")).flat for s in range(800)]
        )
        assert np.all(np.abs(pts.mean(axis=0)) < 0.12)
        assert np.all(np.abs(pts.var(axis=0) - 1.0) < 0.12)

    def test_first_frame_conditioning_pins_sampled_frame(self):
        mix = mixture("m", [np.array([[0.5, -0.5], [2.0, 1.0]])], 0.4)
        model = single_condition_model(mix)
        f = np.array([1.3, -0.2])
        cond = Condition("m", first_frame=f)
        errs = {}
        for steps in (10, 100):
            pts = [model.sample(cond, steps, stream_for(s, f"ff{steps}")) for s in range(40)]
            errs[steps] = np.mean([np.abs(p.frame(0) - f).mean() for p in pts])
        assert errs[100] < errs[10]
        assert errs[100] < 0.02

    def test_hook_and_fast_path_agree(self):
        mix = mixture("g", [np.full((2, 2), 0.3)], 0.2)
        model = single_condition_model(mix)
        a = model.sample(Condition("g"), 30, stream_for(4, "h"))
        b = model.sample(Condition("g"), 30, stream_for(4, "h"), on_step=lambda *_: None)
        assert np.array_equal(a.data, b.data)
