"""First-passage percolation on Cayley graphs: exact word metrics, seeded
random environments, Monte Carlo concentration estimates, and limit-shape
diagnostics, with a deterministic experiment CLI (``fpp``)."""

from .errors import (BudgetError, ConfigError, DiagnosticError, FpplabError,
                     HypothesisError)
from .groups import (GroupSpec, WordBall, abelianize, ball_table, center_growth,
                     commutator, dilate, embed_heisenberg, encode, decode,
                     gauge_distance, heisenberg, homogeneous_gauge, identity,
                     integer_lattice, invert, multiply, power, product,
                     regular_tree, word_ball, word_distance)
from .weights import (DistributionSpec, EdgeKey, WeightAssignment, edge_weight,
                      mix64, replica_seed, shifted_exponential, two_point,
                      uniform, validate_distribution)
from .engine import (FppBall, PassageTimeResult, fpp_ball, passage_time,
                     tree_passage_time)
from .stats import (ConcentrationFit, FluctuationScan, MeanDistanceEstimate,
                    MidpointReport, SubdivisionReport, TreeSearchReport,
                    VarianceScan, concentration_tail, dyadic_subdivision,
                    estimate_mean_distance, fluctuation_scan, mean_ratio_bound,
                    midpoint_search, tree_fluctuation_search, variance_scan)
from .shapes import (DirectionalNormEstimate, GhCheckReport, HausdorffReport,
                     PointCloud, ShapeScanReport, directional_norm,
                     gh_approximation_check, hausdorff, l1_ball_compare,
                     rescaled_fpp_ball_cloud, rescaled_word_ball_cloud,
                     shape_cauchy_scan)

__version__ = "0.1.0"
