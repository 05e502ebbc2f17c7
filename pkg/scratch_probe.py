"""Probe: how noise-sensitive is the edit velocity, and what does the endpoint look like?"""
import numpy as np
import flowbench as fb
from flowbench.editor import dynaedit, noisy_source, noisy_target, velocity_difference
from flowbench.metrics import jitter_energy
from scratch_jitter2 import build, T

model = build()
x_src = model.mixture("straight").draw(fb.stream_for(3, "scn", "src"))
ff = x_src.frame(0)
cs, ct = fb.Condition("straight", ff), fb.Condition("jump", ff)
cfg = fb.EditConfig(steps=50, cfg_src=2.5, cfg_tar=4.5, tau=0.01, anc_schedule=fb.AncSchedule("iid"))

z, tr = dynaedit(model, x_src, cs, ct, cfg)
print("endpoint y:", np.round(z.data[:, 1], 3))
print("x_src y   :", np.round(x_src.data[:, 1], 3))
print("jitter", jitter_energy(z))

# velocity noise sensitivity at a few times, from the actual mid-run state
for t_probe in (0.5, 0.3, 0.2, 0.1, 0.05):
    # rebuild a state by running until t > t_probe
    n_stop = int(round(t_probe * 50))
    zz = x_src
    cfg2 = cfg.updated(seed=11)
    # quick manual loop mirroring dynaedit-iid with n=1 slots
    grid = fb.time_grid(50)
    for i in range(50, n_stop, -1):
        w = fb.gaussian(fb.stream_for(11, "edit-noise", 0, i), x_src.shape)
        zs = noisy_source(x_src, w, float(grid[i]))
        zt = noisy_target(zz, zs, x_src)
        vd = velocity_difference(model, zt, zs, float(grid[i]), cs, ct, 2.5, 4.5)
        zz = fb.axpy(float(grid[i - 1]) - float(grid[i]), vd, zz)
    vs = []
    for k in range(30):
        w = fb.gaussian(fb.stream_for(999 + k, "probe"), x_src.shape)
        zs = noisy_source(x_src, w, t_probe)
        zt = noisy_target(zz, zs, x_src)
        vd = velocity_difference(model, zt, zs, t_probe, cs, ct, 2.5, 4.5)
        vs.append(vd.flat)
    vs = np.array(vs)
    print(f"t={t_probe:4.2f}  |mean V|={np.linalg.norm(vs.mean(0)):7.3f}  "
          f"std across noise={np.linalg.norm(vs.std(0)):7.3f}")
