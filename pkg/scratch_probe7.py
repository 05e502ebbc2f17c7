"""Sweep the few-step ambiguity regime for a robust iid > markov_increasing gap."""
import numpy as np
import flowbench as fb
from flowbench.editor import dynaedit
from flowbench.metrics import jitter_energy

T, STEP = 16, 0.3
f = np.arange(T)


def build(sigma_src, sigma_tar, centers, height, width=1.5):
    src_mean = np.stack([f * STEP, np.zeros(T)], axis=1)
    model = fb.FlowModel()
    model.register(fb.ConditionedMixture(
        "straight", [fb.GaussianComponent(1.0, fb.LatentField(src_mean), sigma_src**2)]))
    comps = []
    for c in centers:
        bump = height * np.exp(-0.5 * ((f - c) / width) ** 2)
        comps.append(fb.GaussianComponent(
            1.0 / len(centers), fb.LatentField(np.stack([f * STEP, bump], axis=1)), sigma_tar**2))
    model.register(fb.ConditionedMixture("jump", comps))
    return model


def arms(model, steps, gs, gt, n_seeds=24):
    out = {}
    for kind in ("iid", "markov_increasing"):
        js = []
        for s in range(n_seeds):
            x_src = model.mixture("straight").draw(fb.stream_for(s, "scn", "src"))
            ff = x_src.frame(0)
            cs, ct = fb.Condition("straight", ff), fb.Condition("jump", ff)
            cfg = fb.EditConfig(steps=steps, cfg_src=gs, cfg_tar=gt, tau=0.01,
                                anc_schedule=fb.AncSchedule(kind), seed=s)
            z, _ = dynaedit(model, x_src, cs, ct, cfg)
            js.append(jitter_energy(z))
        out[kind] = np.array(js)
    return out


for steps in (6, 8, 10):
    for s_tar in (0.08, 0.1, 0.15):
        for height in (1.2, 2.0):
            for gs, gt in ((2.5, 4.5), (4.5, 8.5)):
                model = build(0.05, s_tar, (3.0, 7.5, 12.0), height)
                out = arms(model, steps, gs, gt)
                iid, mi = out["iid"], out["markov_increasing"]
                wins = int((iid > mi).sum())
                flag = " <<<" if wins >= 17 else ""
                print(f"steps={steps:2d} s_tar={s_tar:.2f} h={height} cfg=({gs},{gt}): "
                      f"iid {iid.mean():.4f} mi {mi.mean():.4f} wins {wins}/24{flag}")
