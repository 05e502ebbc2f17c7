"""Isolate: is excess jitter deterministic (CFG overshoot) or noise-driven?"""
import numpy as np
import flowbench as fb
from flowbench.editor import dynaedit
from flowbench.metrics import jitter_energy
from scratch_jitter2 import build

model = build()

for gs, gt in [(2.5, 4.5), (1.0, 1.0)]:
    out = {}
    for kind in ("iid", "constant", "markov_increasing"):
        js = []
        for s in range(16):
            x_src = model.mixture("straight").draw(fb.stream_for(s, "scn", "src"))
            ff = x_src.frame(0)
            cs, ct = fb.Condition("straight", ff), fb.Condition("jump", ff)
            cfg = fb.EditConfig(steps=50, cfg_src=gs, cfg_tar=gt, tau=0.01,
                                anc_schedule=fb.AncSchedule(kind), seed=s)
            z, _ = dynaedit(model, x_src, cs, ct, cfg)
            js.append(jitter_energy(z))
        out[kind] = np.array(js)
    iid, const, mi = out["iid"], out["constant"], out["markov_increasing"]
    print(f"cfg=({gs},{gt}): iid {iid.mean():.4f}  const {const.mean():.4f}  "
          f"markov_inc {mi.mean():.4f} | iid>const {int((iid>const).sum())}/16  "
          f"iid>mi {int((iid>mi).sum())}/16")
