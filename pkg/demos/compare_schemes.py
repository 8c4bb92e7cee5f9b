"""Transmit power of every scheme on one channel realization, both CSI error models."""

import numpy as np

from irs_outage.ao import AoConfig, InfeasibleError, run_ao
from irs_outage.benchmarks import no_irs_design, optimized_mrt, random_irs_design, random_mrt, random_phases
from irs_outage.channels import FULL, PARTIAL, ScenarioConfig, generate_channels, paper_uncertainty, substream
from irs_outage.metrics import empirical_outage


def dbm(p):
    return 10 * np.log10(p) + 30


def main(seed=0):
    for scenario in (PARTIAL, FULL):
        cfg = ScenarioConfig(scenario=scenario, seed=seed)
        ch = generate_channels(cfg)
        unc = paper_uncertainty(ch, scenario, cfg.delta_g, cfg.delta_h)
        phi0 = random_phases(cfg.m, substream(seed, "phases", 0))
        ao = AoConfig()
        proposed, trace = run_ao(ch, unc, cfg, ao, phi0=phi0)
        print(f"[{scenario}] proposed: {dbm(proposed.power):.2f} dBm after {len(trace.rows) - 1} outer iterations, "
              f"AN fraction {proposed.an_fraction:.3f}")
        for k in range(cfg.k):
            est = empirical_outage(proposed, ch, unc, k, cfg.beta, cfg.sigma_e2, 20000, substream(seed, "demo", k))
            print(f"    Eve {k + 1}: empirical outage {est.rate:.4f} (Wilson-95 upper {est.wilson_hi:.4f})")
        benches = {"random_irs": lambda: random_irs_design(ch, unc, cfg, phi0, ao),
                   "optimized_mrt": lambda: optimized_mrt(ch, unc, cfg, proposed.phi),
                   "random_mrt": lambda: random_mrt(ch, unc, cfg, phi0),
                   "no_irs": lambda: no_irs_design(ch, cfg, ao)}
        for name, make in benches.items():
            try:
                print(f"    {name:>13}: {dbm(make().power):.2f} dBm")
            except InfeasibleError as exc:
                print(f"    {name:>13}: infeasible ({exc})")


if __name__ == "__main__":
    main()
