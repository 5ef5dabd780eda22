"""Topological scores of periodicity and quasiperiodicity in videos."""
from .embed import (FrameCoords, PointCloud, WindowPlan, dog_filter, normalize_cloud, plan_window,
                    sliding_window, svd_frame_reduce)
from .metric import cloud_distances, delay_distance, pairwise_sq_dist
from .periodest import (PeriodEstimate, diffusion_1d, estimate_period, estimate_video_period,
                        normalized_autocorr)
from .ph import PersistenceDiagrams, enclosing_radius, mp, rips_persistence
from .pipeline import PipelineConfig, run_auroc_experiment, run_pipeline
from .plots import export_diagram_svg
from .rank import PreferenceSet, Ranking, auroc, hodge_aggregate, kendall_tau
from .scores import (RecurrenceReport, cd_lattice_score, frequency_score,
                     modified_periodicity_score, periodicity_score, quasiperiodicity_score)
from .tensorio import (NoiseSpec, SynthSpec, VideoTensor, apply_noise, load_tensor, load_video,
                       save_tensor, synthesize)

__version__ = "0.1.0"
