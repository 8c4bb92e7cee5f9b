"""How conservative is the Bernstein-type certificate?  Tighten rho and compare with sampled outage."""

import numpy as np

from irs_outage.ao import AoConfig, run_ao
from irs_outage.channels import PARTIAL, ScenarioConfig, generate_channels, paper_uncertainty, substream
from irs_outage.metrics import empirical_outage

for rho in (0.2, 0.1, 0.05, 0.01):
    cfg = ScenarioConfig(rho=rho, seed=1)
    ch = generate_channels(cfg)
    unc = paper_uncertainty(ch, PARTIAL, 0.05)
    design, _ = run_ao(ch, unc, cfg, AoConfig())
    rates = [empirical_outage(design, ch, unc, k, cfg.beta, cfg.sigma_e2, 50000, substream(1, "mc", k)).rate
             for k in range(cfg.k)]
    print(f"rho {rho:5.2f}: power {10 * np.log10(design.power) + 30:6.2f} dBm, "
          f"empirical outage {', '.join(f'{r:.4f}' for r in rates)}")
