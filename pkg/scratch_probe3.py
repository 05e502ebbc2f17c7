"""What drives the deterministic jitter floor: source noise, patterns, or dynamics?"""
import numpy as np
import flowbench as fb
from flowbench.editor import dynaedit, noisy_source, noisy_target, velocity_difference
from flowbench.metrics import jitter_energy
from scratch_jitter2 import build, T

f = np.arange(T)
src_line = fb.LatentField(np.stack([f * 0.3, np.zeros(T)], axis=1))

for amp in (0.25, 0.0):
    model = build(amp=amp)
    for src_kind in ("clean", "noisy"):
        for kind in ("iid", "markov_increasing"):
            js = []
            for s in range(12):
                if src_kind == "clean":
                    x_src = src_line
                else:
                    x_src = model.mixture("straight").draw(fb.stream_for(s, "scn", "src"))
                ff = x_src.frame(0)
                cs, ct = fb.Condition("straight", ff), fb.Condition("jump", ff)
                cfg = fb.EditConfig(steps=50, cfg_src=2.5, cfg_tar=4.5, tau=0.01,
                                    anc_schedule=fb.AncSchedule(kind), seed=s)
                z, _ = dynaedit(model, x_src, cs, ct, cfg)
                js.append(jitter_energy(z))
            print(f"amp={amp}  src={src_kind:5s}  {kind:18s}  jitter {np.mean(js):.4f} +- {np.std(js):.4f}")

# expectation path (brute force per-step average over 512 fresh draws)
model = build()
x_src = src_line
ff = x_src.frame(0)
cs, ct = fb.Condition("straight", ff), fb.Condition("jump", ff)
grid = fb.time_grid(50)
z = x_src
rng = fb.stream_for(777, "bf")
for i in range(50, 0, -1):
    t = float(grid[i])
    acc = np.zeros(x_src.flat.shape)
    M = 512
    for k in range(M):
        w = fb.gaussian(rng.child(i, k), x_src.shape)
        zs = noisy_source(x_src, w, t)
        zt = noisy_target(z, zs, x_src)
        acc += velocity_difference(model, zt, zs, t, cs, ct, 2.5, 4.5).flat
    vbar = fb.LatentField.from_flat(acc / M, T, 2)
    z = fb.axpy(float(grid[i - 1]) - t, vbar, z)
print("expectation-path jitter:", jitter_energy(z))
print("expectation-path y:", np.round(z.data[:, 1], 3))
