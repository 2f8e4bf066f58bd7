"""
Rounds as the topology grows
============================

Doubling the number of MEC nodes spreads the same data more thinly. The
distributed method's communication rounds should grow much more slowly than
the node count. Writes plot-ready CSV next to this script.
"""

from pathlib import Path

from mectrust import SweepSpec, desk_config, render_report, run_sweep
from mectrust.harness import aggregate_csv

spec = SweepSpec("node_count", [10, 20, 40], repeats=3, methods=["proposed", "local"])
reports = run_sweep(spec, desk_config())

print(render_report(reports, "markdown"))

out = Path(__file__).with_name("node_count_sweep.csv")
out.write_text(aggregate_csv(reports))
print("aggregated rows written to", out)
