"""
Trading sparsity against fit
============================

The weight on the l1 penalty decides how many entries of ``U`` survive.
Sweeping it shows the price paid in covariance mismatch for each entry
removed.
"""

# %%
from covsteer.config import bundled_config, load_config
from covsteer.experiment import run_lambda_sweep

cfg = load_config(bundled_config("five_state"))
rows, files = run_lambda_sweep(cfg, jobs=4)

# %%
# With no penalty every entry is used. As the weight grows entries drop out
# and the attainable KL value rises.

print(f"{'lambda':>6} {'nnz':>4} {'J':>8} {'||U||_1':>8}")
for r in rows:
    print(f"{r.lam:6.1f} {r.nnz:4d} {r.j:8.4f} {r.l1_norm:8.4f}")

# %%
# The same table, as the CLI would write it:

print(files["sweep.csv"].splitlines()[0])
