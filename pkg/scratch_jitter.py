"""Which variance geometry makes iid-noise editing jitterier than ANC editing?"""
import numpy as np
import flowbench as fb
from flowbench.editor import dynaedit
from flowbench.metrics import jitter_energy

T, D, STEP = 16, 2, 0.3


def build(sigma_src, sigma_tar, heights):
    f = np.arange(T)
    u = f / (T - 1)
    src_mean = np.stack([f * STEP, np.zeros(T)], axis=1)
    model = fb.FlowModel()
    model.register(fb.ConditionedMixture(
        "straight", [fb.GaussianComponent(1.0, fb.LatentField(src_mean), sigma_src**2)]))
    comps = []
    for h in heights:
        arc = np.stack([f * STEP, h * 4 * u * (1 - u)], axis=1)
        comps.append(fb.GaussianComponent(1.0 / len(heights), fb.LatentField(arc), sigma_tar**2))
    model.register(fb.ConditionedMixture("jump", comps))
    return model


def arms(model, n_seeds=16, steps=50):
    cfg = fb.EditConfig(steps=steps, cfg_src=2.5, cfg_tar=4.5, tau=0.01)
    j = {"iid": [], "anc": []}
    for s in range(n_seeds):
        x_src = model.mixture("straight").draw(fb.stream_for(s, "scn", "src"))
        ff = x_src.frame(0)
        cs, ct = fb.Condition("straight", ff), fb.Condition("jump", ff)
        for name, sched in (("iid", fb.AncSchedule("iid")), ("anc", fb.AncSchedule("markov_increasing"))):
            z, _ = dynaedit(model, x_src, cs, ct, cfg.updated(seed=s, anc_schedule=sched))
            j[name].append(jitter_energy(z))
    return {k: np.array(v) for k, v in j.items()}


for sigma_src, sigma_tar, heights, label in [
    (0.25, 0.05, (1.5, 2.5), "src noisy -> tar crisp"),
    (0.05, 0.2, (1.5, 2.5), "src crisp -> tar noisy"),
    (0.1, 0.1, (1.5, 2.5), "equal sigma"),
    (0.3, 0.05, (1.2, 1.8, 2.4, 3.0), "very noisy src, 4 crisp modes"),
]:
    model = build(sigma_src, sigma_tar, heights)
    res = arms(model)
    wins = int((res["iid"] > res["anc"]).sum())
    # clean levels for reference
    clean_src = 6 * sigma_src**2
    clean_tar = 6 * sigma_tar**2
    print(f"{label:35s} iid {res['iid'].mean():.4f}  anc {res['anc'].mean():.4f}  "
          f"iid>anc {wins}/16   clean src {clean_src:.3f} tar {clean_tar:.3f}")
