"""Does hard selection over fresh candidate sets defeat the blur and create jitter?"""
import numpy as np
import flowbench as fb
from flowbench.editor import dynaedit, constant_sga_schedule
from flowbench.metrics import jitter_energy
from scratch_jitter2 import build

for amp, s_src, s_tar in [(0.0, 0.1, 0.08), (0.0, 0.1, 0.2), (0.25, 0.1, 0.08), (0.0, 0.05, 0.05)]:
    model = build(sigma_src=s_src, sigma_tar=s_tar, amp=amp)
    for nsga, tau in ((5, 0.01), (5, 1.0)):
        out = {}
        for kind in ("iid", "markov_increasing"):
            js = []
            for s in range(16):
                x_src = model.mixture("straight").draw(fb.stream_for(s, "scn", "src"))
                ff = x_src.frame(0)
                cs, ct = fb.Condition("straight", ff), fb.Condition("jump", ff)
                cfg = fb.EditConfig(steps=50, cfg_src=2.5, cfg_tar=4.5, tau=tau,
                                    n_sga_schedule=constant_sga_schedule(50, nsga),
                                    anc_schedule=fb.AncSchedule(kind), seed=s)
                z, _ = dynaedit(model, x_src, cs, ct, cfg)
                js.append(jitter_energy(z))
            out[kind] = np.array(js)
        iid, mi = out["iid"], out["markov_increasing"]
        print(f"amp={amp} s=({s_src},{s_tar}) nsga={nsga} tau={tau}: "
              f"iid {iid.mean():.4f}  mi {mi.mean():.4f}  iid>mi {int((iid > mi).sum())}/16")
