"""Scratch calibration: verify the directional phenomena before freezing scenarios."""
import numpy as np
import flowbench as fb
from flowbench.editor import dynaedit, flowedit, constant_sga_schedule
from flowbench.metrics import jitter_energy, lowfreq_alignment, correlation_trace, late_half_dispersion, default_window, energy_distance

T, D = 16, 2
STEP = 0.3


def traj_jump(sigma_src=0.05, sigma_tar=0.2, heights=(1.5, 2.5)):
    f = np.arange(T)
    u = f / (T - 1)
    src_mean = np.stack([f * STEP, np.zeros(T)], axis=1)
    comps_src = [fb.GaussianComponent(1.0, fb.LatentField(src_mean), sigma_src**2)]
    comps_tar = []
    for h in heights:
        arc = np.stack([f * STEP, h * 4 * u * (1 - u)], axis=1)
        comps_tar.append(fb.GaussianComponent(1.0 / len(heights), fb.LatentField(arc), sigma_tar**2))
    model = fb.FlowModel()
    model.register(fb.ConditionedMixture("straight", comps_src))
    model.register(fb.ConditionedMixture("jump", comps_tar))
    return model


def run_pair(model, seeds, cfg_a, cfg_b, method_a, method_b, ff_cond=True):
    mix = model.mixture("straight")
    rows = []
    for s in seeds:
        x_src = mix.draw(fb.stream_for(s, "scenario", "src"))
        ff = x_src.frame(0) if ff_cond else None
        cs = fb.Condition("straight", ff)
        ct = fb.Condition("jump", ff)
        za, tra = method_a(model, x_src, cs, ct, cfg_a.updated(seed=s))
        zb, trb = method_b(model, x_src, cs, ct, cfg_b.updated(seed=s))
        rows.append((x_src, za, tra, zb, trb))
    return rows


# --- Criterion 7: jitter iid vs markov_increasing (both dynaedit defaults) ---
model = traj_jump()
cfg = fb.EditConfig(steps=50, cfg_src=2.5, cfg_tar=4.5, tau=0.01)
cfg_iid = cfg.updated(anc_schedule=fb.AncSchedule("iid"))
rows = run_pair(model, range(24), cfg_iid, cfg, dynaedit, dynaedit)
j_iid = np.array([jitter_energy(r[1]) for r in rows])
j_anc = np.array([jitter_energy(r[3]) for r in rows])
wins = int((j_iid > j_anc).sum())
print(f"C7 jitter: iid mean {j_iid.mean():.4f}  anc mean {j_anc.mean():.4f}  iid>anc in {wins}/24")

# --- Criterion 9: schedule late-half velocity dispersion ---
cfg_dec = cfg.updated(anc_schedule=fb.AncSchedule("markov_decreasing"))
rows9 = run_pair(model, range(24), cfg, cfg_dec, dynaedit, dynaedit)
d_inc = np.array([late_half_dispersion(correlation_trace(r[2])[1]) for r in rows9])
d_dec = np.array([late_half_dispersion(correlation_trace(r[4])[1]) for r in rows9])
print(f"C9 dispersion: inc mean {np.nanmean(d_inc):.4f}  dec mean {np.nanmean(d_dec):.4f}  inc<dec in {int((d_inc < d_dec).sum())}/24")

# --- Criterion 10: n_max N vs N-1 expressivity tradeoff ---
NSTEP = 16
cfgN = fb.EditConfig(steps=NSTEP, cfg_src=2.5, cfg_tar=4.5, tau=0.01)
cfgN1 = cfgN.updated(n_max=NSTEP - 1)
x_src = model.mixture("straight").draw(fb.stream_for(123, "scenario", "src"))
ff = x_src.frame(0)
cs, ct = fb.Condition("straight", ff), fb.Condition("jump", ff)
endN, endN1 = [], []
for s in range(100):
    zN, _ = dynaedit(model, x_src, cs, ct, cfgN.updated(seed=s))
    zN1, _ = dynaedit(model, x_src, cs, ct, cfgN1.updated(seed=s))
    endN.append(zN); endN1.append(zN1)
targets = [model.mixture_for(ct).draw(fb.stream_for(1000 + s, "t")) for s in range(200)]
edN = energy_distance(endN, targets)
edN1 = energy_distance(endN1, targets)
w = default_window(T)
laN = np.mean([lowfreq_alignment(z, x_src, w) for z in endN])
laN1 = np.mean([lowfreq_alignment(z, x_src, w) for z in endN1])
print(f"C10: energy dist N={edN:.4f} N-1={edN1:.4f} (want N < N-1); lowfreq N={laN:.4f} N-1={laN1:.4f} (want N > N-1)")

# --- Criterion 8: two-object SGA vs averaging ---
def two_object(sigma_a_src=0.08, sigma_a_tar=0.2, sigma_b=0.1, slope=0.15, arc_h=2.2):
    f = np.arange(T); u = f / (T - 1)
    a_straight = np.stack([f * STEP, np.zeros(T)], axis=1)
    a_arc = np.stack([f * STEP, arc_h * 4 * u * (1 - u)], axis=1)
    b1 = np.stack([np.zeros(T), slope * f], axis=1)
    b2 = np.stack([np.zeros(T), -slope * f], axis=1)
    def comp(a_mean, b_mean, sa):
        mean = np.concatenate([a_mean, b_mean], axis=1)
        var = np.concatenate([np.full((T, 2), sa**2), np.full((T, 2), sigma_b**2)], axis=1)
        return mean, var
    src = []
    for bm in (b1, b2):
        m, v = comp(a_straight, bm, sigma_a_src)
        src.append(fb.GaussianComponent(0.5, fb.LatentField(m), v))
    tar = []
    for bm in (b1, b2):
        m, v = comp(a_arc, bm, sigma_a_tar)
        tar.append(fb.GaussianComponent(0.5, fb.LatentField(m), v))
    model = fb.FlowModel()
    model.register(fb.ConditionedMixture("calm", src))
    model.register(fb.ConditionedMixture("jumpy", tar))
    return model

m2 = two_object()
cfg8 = fb.EditConfig(steps=50, cfg_src=2.5, cfg_tar=4.5, tau=0.01)
w2 = default_window(T)
wins8, la_s, la_f = 0, [], []
for s in range(24):
    x_src = m2.mixture("calm").draw(fb.stream_for(s, "scenario", "src"))
    ff = x_src.frame(0)
    cs, ct = fb.Condition("calm", ff), fb.Condition("jumpy", ff)
    zs, _ = dynaedit(m2, x_src, cs, ct, cfg8.updated(seed=s))
    zf, _ = flowedit(m2, x_src, cs, ct, cfg8.updated(seed=s))
    a_s = lowfreq_alignment(zs.block(2, 4), x_src.block(2, 4), w2)
    a_f = lowfreq_alignment(zf.block(2, 4), x_src.block(2, 4), w2)
    la_s.append(a_s); la_f.append(a_f)
    wins8 += a_s < a_f
print(f"C8 B-align: sga mean {np.mean(la_s):.4f}  avg mean {np.mean(la_f):.4f}  sga<avg in {wins8}/24")
