"""AB off-lattice protein folding: model, optimizer, harness, analysis."""

from .analysis import (ArchiveEntry, SolutionArchive, cluster_solutions,
                       load_best_known, mirror, superposed_rmsd)
from .errors import (AbfoldError, ConfigError, DataError, DimensionError,
                     GeometryError, InvalidResidueError)
from .harness import (ExperimentSummary, fit_exponential, make_subsequences,
                      run_experiment, summarize)
from .localmove import (Chain, LocalMoveProposal, MoveOutcome,
                        angles_from_positions, commit_move, delta_energy,
                        move_geometry)
from .model import (Conformation, Sequence, builtin_sequences,
                    compute_positions, energy, get_sequence, interaction,
                    kd_transform, reported_energy)
from .optimizer import (Individual, OptimizerConfig, OptimizerState,
                        RunRecord, default_params, init_population, run,
                        wrap_angle)

__version__ = "0.1.0"
