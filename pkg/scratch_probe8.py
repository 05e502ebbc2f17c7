"""Finalist verification: trajectory-jump = timed-arc mixture; criteria 7, 9, 10."""
import numpy as np
import scipy.stats as st
import flowbench as fb
from flowbench.editor import dynaedit
from flowbench.metrics import (jitter_energy, correlation_trace, late_half_dispersion,
                               lowfreq_alignment, default_window, energy_distance)

T, STEP = 16, 0.3
f = np.arange(T)


def build(sigma_src=0.05, sigma_tar=0.15, centers=(3.0, 7.5, 12.0), height=2.0, width=1.5):
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


def conds(model, s):
    x_src = model.mixture("straight").draw(fb.stream_for(s, "scn", "src"))
    ff = x_src.frame(0)
    return x_src, fb.Condition("straight", ff), fb.Condition("jump", ff)


model = build()

# C7 finalists at 40 seeds
for steps, h_note in ((6, ""), (10, "")):
    out = {}
    for kind in ("iid", "markov_increasing"):
        js = []
        for s in range(40):
            x_src, cs, ct = conds(model, s)
            cfg = fb.EditConfig(steps=steps, cfg_src=4.5, cfg_tar=8.5, tau=0.01,
                                anc_schedule=fb.AncSchedule(kind), seed=s)
            z, _ = dynaedit(model, x_src, cs, ct, cfg)
            js.append(jitter_energy(z))
        out[kind] = np.array(js)
    iid, mi = out["iid"], out["markov_increasing"]
    wins = int((iid > mi).sum())
    p = st.binomtest(wins, 40, alternative="greater").pvalue
    print(f"C7 steps={steps}: iid {iid.mean():.4f} mi {mi.mean():.4f} wins {wins}/40 p={p:.2e}")

# C9 on the same scenario at steps=50 and 24 seeds, both CFG pairs
for gs, gt in ((2.5, 4.5), (4.5, 8.5)):
    disp = {}
    for kind in ("markov_increasing", "markov_decreasing"):
        ds = []
        for s in range(24):
            x_src, cs, ct = conds(model, s)
            cfg = fb.EditConfig(steps=50, cfg_src=gs, cfg_tar=gt, tau=0.01,
                                anc_schedule=fb.AncSchedule(kind), seed=s)
            _, tr = dynaedit(model, x_src, cs, ct, cfg)
            ds.append(late_half_dispersion(correlation_trace(tr)[1]))
        disp[kind] = np.array(ds)
    inc, dec = disp["markov_increasing"], disp["markov_decreasing"]
    wins = int((inc < dec).sum())
    print(f"C9 cfg=({gs},{gt}): inc {np.nanmean(inc):.4f} dec {np.nanmean(dec):.4f} inc<dec {wins}/24")

# C10 at steps=8, cfg (2.5,4.5), fixed source, 100 seeds
NS = 8
x_src, cs, ct = conds(model, 123)
w = default_window(T)
endN, endN1 = [], []
for s in range(100):
    zN, _ = dynaedit(model, x_src, cs, ct, fb.EditConfig(steps=NS, cfg_src=2.5, cfg_tar=4.5, tau=0.01, seed=s))
    zN1, _ = dynaedit(model, x_src, cs, ct, fb.EditConfig(steps=NS, n_max=NS - 1, cfg_src=2.5, cfg_tar=4.5, tau=0.01, seed=s))
    endN.append(zN); endN1.append(zN1)
targets = [model.mixture_for(ct).draw(fb.stream_for(5000 + s, "t")) for s in range(200)]
edN, edN1 = energy_distance(endN, targets), energy_distance(endN1, targets)
laN = np.mean([lowfreq_alignment(z, x_src, w) for z in endN])
laN1 = np.mean([lowfreq_alignment(z, x_src, w) for z in endN1])
print(f"C10 steps={NS}: ED N={edN:.4f} N-1={edN1:.4f} (want N<N-1); LF N={laN:.4f} N-1={laN1:.4f} (want N>N-1)")
