"""C10: find a steps/cfg combo where the nmax expressivity ordering is robust, pooled over sources."""
import numpy as np
import flowbench as fb
from flowbench.editor import dynaedit
from flowbench.harness.scenarios import get_scenario
from flowbench.metrics import energy_distance, lowfreq_alignment, default_window
from flowbench.tensorcore import stream_for

scn = get_scenario("trajectory-jump")
model = scn.model()
w = default_window(scn.frames)

for steps in (3, 4, 5):
    for gs, gt in ((2.5, 4.5), (4.5, 8.5)):
        ends = {"N": [], "N1": []}
        la = {"N": [], "N1": []}
        targets = []
        for src_seed in range(5):
            x_src = scn.source_field(src_seed)
            cs, ct = scn.conditions(x_src)
            mixt = model.mixture_for(ct)
            targets += [mixt.draw(stream_for(9000 + k, "nt", src_seed)) for k in range(40)]
            for s in range(20):
                for label, n_max in (("N", steps), ("N1", steps - 1)):
                    cfg = fb.EditConfig(steps=steps, n_max=n_max, cfg_src=gs, cfg_tar=gt,
                                        tau=0.01, seed=s)
                    z, _ = dynaedit(model, x_src, cs, ct, cfg)
                    ends[label].append(z)
                    la[label].append(lowfreq_alignment(z, x_src, w))
        edN = energy_distance(ends["N"], targets)
        edN1 = energy_distance(ends["N1"], targets)
        laN, laN1 = np.mean(la["N"]), np.mean(la["N1"])
        print(f"steps={steps} cfg=({gs},{gt}): ED {edN:.3f} vs {edN1:.3f} "
              f"({'OK' if edN < edN1 else 'BAD'})  LF {laN:.3f} vs {laN1:.3f} "
              f"({'OK' if laN > laN1 else 'BAD'})")
