"""Persistent homology of MLP weight snapshots and homological convergence.

Pipeline per snapshot: :func:`build_graph` -> :func:`build_flag_complex` ->
:func:`compute_persistence` -> :func:`clean` -> vectorization. Consecutive
snapshots are compared by :func:`analyze_run`.
"""

from .diagrams import (
    CleanDiagram,
    HeatImage,
    LandscapeLayers,
    SilhouetteCurve,
    bottleneck,
    clean,
    heat,
    heat_at,
    landscape,
    silhouette,
    tent,
    vector_distance,
    wasserstein,
)
from .errors import CapacityExceeded, TopoError
from .flag_complex import FilteredCell, FilteredComplex, boundary, build_flag_complex, cells_at
from .graph import FilteredDigraph, NormalizationParams, build_graph, normalize_weight
from .monitor import (
    ConvergenceReport,
    PipelineConfig,
    analyze_run,
    analyze_states,
    minmax_normalize,
    pearson,
    resample_to,
)
from .persistence import BettiProfile, PersistenceDiagram, betti_at, brute_force_betti, compute_persistence
from .snapshot_io import (
    LayerWeights,
    MetricSeries,
    NetworkState,
    read_metrics,
    read_snapshot,
    write_metrics,
    write_snapshot,
)

__version__ = "0.1.0"
