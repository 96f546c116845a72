"""
Power against near-unit-root alternatives
=========================================

Rejection rates of both bootstrap tests as the root at 1 moves inside the
unit circle, (1 - (1 - rho) L) y_t = e_t.  Every rho reuses the same
random numbers, so the curve moves smoothly.

"""

from hegyboot import BlockBootConfig, IidBootConfig
from hegyboot.sim_lab import BootstrapProcedure, DgpSpec, power_curve

grid = [0.0, 0.01, 0.02, 0.04]
template = DgpSpec("plus1", nuisance=False, noise="iid", T=120, seed=11)

tests = {
    "iid-aug": BootstrapProcedure("iid-aug", "1", IidBootConfig(B=199)),
    "block-unaug": BootstrapProcedure("block-unaug", "1", BlockBootConfig(B=199)),
}

# %%
# Each point is 100 replications; the bar length is the rate.

for name, proc in tests.items():
    print(name)
    for res in power_curve(template, proc, N=100, rho_grid=grid):
        bar = "#" * round(40 * res.rejection_rate)
        print(f"  rho={res.dgp.rho:5.3f}  {res.rejection_rate:5.3f} +- {res.se:5.3f}  {bar}")
