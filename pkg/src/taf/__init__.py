"""Temporal accumulative features (TAF) for isolated sign recognition from skeletons."""
from .colorize import Linear, Subunit, TafTensor, accumulate_baseline, accumulate_hue, accumulate_sequential, read_taf, write_taf
from .errors import DataError, NumericError, ParameterError, TafError
from .heatmap import render_stack, sequence_heatmaps
from .keyframes import FixedLength, VariableLength, density_peak_cluster, detect_entropy_dc, detect_hs_dc, detect_hs_heuristic
from .pipeline import PipelineConfig, extract_corpus, extract_video, load_dataset
from .skeleton_io import SkeletonSequence, parse_sequence, project_to_grid, write_sequence
from .static_subunits import append_static, build_static_channels, load_masks

__version__ = "0.1.0"
