"""
Accuracy and rate against SNR
=============================

A reduced Monte Carlo sweep at the default operating point (36 x 144 array,
6 and 8 RF chains, four paths, 244 channel uses). The CSV written here is what
``sase run --sweep snr`` produces.
"""

import tempfile
from pathlib import Path

from sase.harness import ExperimentConfig, emit, run_sweep

config = ExperimentConfig(sweep="snr", trials=40, seed=42)
result = run_sweep(config)

print(" SNR   eta     eta_c   eta_r   rate   perfect-CSI")
for row in result.rows:
    print(
        f"{row.sweep_var:5.0f}  {row.eta_mean:.3f}  {row.eta_c_mean:.3f}  {row.eta_r_mean:.3f}"
        f"  {row.rate_mean:5.1f}  {row.rate_perfect_csi:5.1f}"
    )

###############################################################################
# The same rows as CSV.

out = Path(tempfile.gettempdir()) / "sase_snr_demo.csv"
emit(result, "csv", out)
print(out.read_text().splitlines()[0])
print(f"{len(result.rows)} rows in {result.wall_time:.1f} s")
