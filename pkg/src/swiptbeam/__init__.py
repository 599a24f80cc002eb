"""Robust secrecy-energy-efficient beamforming for multi-user downlinks
with wireless power transfer under bounded channel uncertainty.

Core layers: system model and channel sampling, S-procedure robust
constraint assembly, a complex-Hermitian cone-program backend, the
two-stage design search with its rate-maximizing and fixed-direction
variants, and a seeded experiment harness with a CLI.
"""

from .algorithm import (AlgoReport, SearchTrace, StageOneResult,
                        StageOneSolver, find_t_max, power_min_at_t,
                        rank_one_recovery, search_see, solve_sdp_tsbaj,
                        solve_srm, verify_design)
from .baselines import (BASELINE_KINDS, DirectionSet, mrt_zfbf_directions,
                        power_alloc_at_t, solve_baseline, zfbf_directions)
from .channel import (ChannelDataset, PerturbationSample, Scenario,
                      load_channel_dataset, pathloss_db, pathloss_lin,
                      sample_ball, sample_channels, save_channel_dataset)
from .config import default_config, load_config, parse_config_text
from .errors import (ConfigError, DegenerateBeam, DimensionError, DomainError,
                     InfeasibleAtAnyT)
from .experiments import (ALGO_IDS, ExperimentSpec, SweepResult, emit_csv,
                          emit_plot_script, load_design, run_sweep,
                          save_design, validate_design)
from .model import (ChannelSet, EhModelParams, SystemConfig, TransmitDesign,
                    harvested_power, leakage_rate, nonlinear_eh_threshold,
                    rate_lue, relative_gap, secrecy_rate, see, sinr_eve,
                    sinr_lue, total_power)
from .robust import (LinearIneq, LmiBlock, build_eh_lmi, build_leakage_lmi,
                     build_proportional_ineq, robust_eh_oracle,
                     robust_leakage_oracle, theta)
from .sdp import (ConicProgram, ConicSolution, MatrixVar, ScalarVar,
                  SolverOptions, assemble_power_min, embed_hermitian,
                  extract_hermitian, lower_program, scaled_problem_data,
                  solve, solve_lowered)

__version__ = "1.0.0"
