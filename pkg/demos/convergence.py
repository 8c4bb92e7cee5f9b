"""Outer-iteration trace of the alternating optimization for a few phase initializations."""

from irs_outage.ao import AoConfig, run_ao
from irs_outage.channels import PARTIAL, ScenarioConfig, generate_channels, paper_uncertainty

cfg = ScenarioConfig(m=8, scenario=PARTIAL, seed=3)
ch = generate_channels(cfg)
unc = paper_uncertainty(ch, PARTIAL, cfg.delta_g)

for seed in range(3):
    design, trace = run_ao(ch, unc, cfg, AoConfig(seed=seed))
    path = " -> ".join(f"{r['obj_dbm']:.2f}" for r in trace.rows)
    state = "converged" if trace.converged else f"stopped ({trace.note})"
    print(f"start {seed}: {path} dBm, {state}")
