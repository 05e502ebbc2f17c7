"""Hedge-component design: crisp arc modes plus a broad low-weight slop mode."""
import numpy as np
import flowbench as fb
from flowbench.editor import dynaedit
from flowbench.metrics import jitter_energy

T, STEP = 16, 0.3
f = np.arange(T)
u = f / (T - 1)


def build(sigma_src, sigma_crisp, sigma_slop, w_slop, heights=(1.5, 2.5)):
    src_mean = np.stack([f * STEP, np.zeros(T)], axis=1)
    model = fb.FlowModel()
    model.register(fb.ConditionedMixture(
        "straight", [fb.GaussianComponent(1.0, fb.LatentField(src_mean), sigma_src**2)]))
    comps = []
    w_crisp = (1.0 - w_slop) / len(heights)
    for h in heights:
        arc = np.stack([f * STEP, h * 4 * u * (1 - u)], axis=1)
        comps.append(fb.GaussianComponent(w_crisp, fb.LatentField(arc), sigma_crisp**2))
    mid = np.mean(heights)
    slop = np.stack([f * STEP, mid * 4 * u * (1 - u)], axis=1)
    comps.append(fb.GaussianComponent(w_slop, fb.LatentField(slop), sigma_slop**2))
    model.register(fb.ConditionedMixture("jump", comps))
    return model


for s_src, s_crisp, s_slop, w_slop in [
    (0.05, 0.03, 0.6, 0.1),
    (0.05, 0.03, 0.6, 0.25),
    (0.1, 0.05, 0.8, 0.2),
    (0.05, 0.05, 1.0, 0.15),
]:
    model = build(s_src, s_crisp, s_slop, w_slop)
    out = {}
    for kind in ("iid", "markov_increasing"):
        js = []
        for s in range(20):
            x_src = model.mixture("straight").draw(fb.stream_for(s, "scn", "src"))
            ff = x_src.frame(0)
            cs, ct = fb.Condition("straight", ff), fb.Condition("jump", ff)
            cfg = fb.EditConfig(steps=50, cfg_src=2.5, cfg_tar=4.5, tau=0.01,
                                anc_schedule=fb.AncSchedule(kind), seed=s)
            z, _ = dynaedit(model, x_src, cs, ct, cfg)
            js.append(jitter_energy(z))
        out[kind] = np.array(js)
    iid, mi = out["iid"], out["markov_increasing"]
    print(f"src={s_src} crisp={s_crisp} slop={s_slop}@{w_slop}: "
          f"iid {iid.mean():.4f}  mi {mi.mean():.4f}  iid>mi {int((iid > mi).sum())}/20")
