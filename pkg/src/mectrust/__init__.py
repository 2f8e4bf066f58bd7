"""Context-aware trust bootstrapping across MEC topologies by graph-regularized ADMM."""

from .admm import AdmmConfig, BootstrapResult, IterationTrace, bootstrap, run_admm, u_update, w_update, z_update
from .baselines import train_global, train_local
from .dataprep import PartitionManifest, Schema, build_partition
from .harness import RunReport, SweepSpec, desk_config, evaluate, render_report, run_experiment, run_sweep
from .model import SvmParams, TrustModel, classify, local_objective, score
from .svm import ConvergenceError
from .topology import MecEdge, MecNode, MecTopology, generate_topology, neighbors

__version__ = "0.1.0"
