"""Tune criterion 2 kept-count, criterion 5 instances, criterion 10 robustness."""
import math
import numpy as np
import flowbench as fb
from flowbench.editor import dynaedit, velocity_difference, noisy_source, noisy_target, sga_aggregate
from flowbench.flowmodel import posterior_x0_mean
from flowbench.harness.scenarios import get_scenario
from flowbench.metrics import energy_distance, lowfreq_alignment, default_window
from flowbench.tensorcore import stream_for, gaussian, LatentField

# --- criterion 2: kept-count sweep ---
means = [np.array([[-1.2, 0.6]]), np.array([[1.0, -0.8]])]
variances = [np.array([[0.3, 0.5]]), np.array([[0.4, 0.25]])]
weights = [0.4, 0.6]
mix = fb.ConditionedMixture(
    "m", [fb.GaussianComponent(w, fb.LatentField(m), v)
          for w, m, v in zip(weights, means, variances)])
draws = 10_000_000
ps = stream_for(501, "oracle-pool")
pick = ps.uniforms(draws) < weights[0]
x0 = ps.normals(2 * draws).reshape(draws, 2)
x0 *= np.where(pick[:, None], np.sqrt(variances[0][0]), np.sqrt(variances[1][0]))
x0 += np.where(pick[:, None], means[0][0], means[1][0])
x1 = ps.normals(2 * draws).reshape(draws, 2)
for kept in (2000, 5000):
    probe = stream_for(502, "oracle-probes")
    worst = 0.0
    for _ in range(50):
        t = 0.2 + 0.7 * probe.uniforms(1)[0]
        x = (1 - t) * mix.draw(probe).flat + t * probe.normals(2)
        xt = (1 - t) * x0 + t * x1
        dist = np.linalg.norm(xt - x, axis=1)
        keep = dist <= np.partition(dist, kept)[kept]
        mc_mean = x0[keep].mean(axis=0)
        mc_se = x0[keep].std(axis=0) / math.sqrt(keep.sum())
        analytic = posterior_x0_mean(mix, fb.LatentField(x.reshape(1, 2)), t).flat
        worst = max(worst, float(np.max(np.abs(analytic - mc_mean) / mc_se)))
    print(f"C2 kept={kept}: worst ratio {worst:.2f}")
del x0, x1

# --- criterion 5: realistic aggregation instances ---
scn = get_scenario("trajectory-jump")
model = scn.model()
worst_u = 0.0
for seed in range(10):
    x_src = scn.source_field(seed)
    cs, ct = scn.conditions(x_src)
    z_edit = LatentField(x_src.data + 0.3 * gaussian(stream_for(seed, "drift"), x_src.shape).data)
    t = 0.5
    vels = []
    for j in range(5):
        w = gaussian(stream_for(seed, "acc5w", j), x_src.shape)
        zs = noisy_source(x_src, w, t)
        zt = noisy_target(z_edit, zs, x_src)
        vels.append(velocity_difference(model, zt, zs, t, cs, ct, 2.5, 4.5))
    vbar6, _, sims = sga_aggregate(z_edit, vels, t, x_src, tau=1e6)
    mean = np.mean([v.flat for v in vels], axis=0)
    worst_u = max(worst_u, float(np.max(np.abs(vbar6.flat - mean))))
print(f"C5 realistic instances: |tau=1e6 - mean| worst {worst_u:.2e}  sims spread ~ "
      f"{np.ptp(sims):.2e}")

# --- criterion 10: robustness across sources and steps ---
for steps in (6, 8):
    results = []
    for src_seed in range(6):
        x_src = scn.source_field(src_seed)
        cs, ct = scn.conditions(x_src)
        w = default_window(scn.frames)
        ends = {"N": [], "N1": []}
        la = {"N": [], "N1": []}
        for s in range(40):
            for label, n_max in (("N", steps), ("N1", steps - 1)):
                cfg = fb.EditConfig(steps=steps, n_max=n_max, cfg_src=2.5, cfg_tar=4.5,
                                    tau=0.01, seed=s)
                z, _ = dynaedit(model, x_src, cs, ct, cfg)
                ends[label].append(z)
                la[label].append(lowfreq_alignment(z, x_src, w))
        mixt = model.mixture_for(ct)
        targets = [mixt.draw(stream_for(9000 + k, "nt", src_seed)) for k in range(100)]
        edN = energy_distance(ends["N"], targets)
        edN1 = energy_distance(ends["N1"], targets)
        results.append((edN < edN1, np.mean(la["N"]) > np.mean(la["N1"]), edN, edN1))
    ok_ed = sum(r[0] for r in results)
    ok_la = sum(r[1] for r in results)
    print(f"C10 steps={steps}: ED ordering holds {ok_ed}/6 sources, LF {ok_la}/6; "
          f"margins {[f'{r[2]:.3f}<{r[3]:.3f}' if r[0] else f'{r[2]:.3f}>{r[3]:.3f}' for r in results]}")
