"""Motion-field quality metrics for frame-interpolated video.

Flow-based metrics (EPE, temporal smoothness, vector-median EPE,
smoothness dissimilarity, divergence), motion-weighted PSNR/SSIM, and
logistic-fit correlation against subjective scores.
"""
from vfiqa._backend import available as available_backends
from vfiqa._backend import name as backend_name
from vfiqa._backend import set_backend, use_backend
from vfiqa.correlation import (
    DegenerateInputError,
    EvalReport,
    LogisticParams,
    evaluate_metric,
    fit_logistic,
    krcc,
    logistic,
    plcc,
    rmse,
    srcc,
)
from vfiqa.flow_io import FlowFormatError, MotionField, load_flo, read_flo, save_flo, write_flo
from vfiqa.image import cap_psnr, motion_weight, psnr, ssim, weighted_metric
from vfiqa.media_io import (
    Frame,
    VideoFormatError,
    VideoSequence,
    open_video,
    read_raw_yuv420,
    read_y4m,
    write_raw_yuv420,
    write_y4m,
)
from vfiqa.motion import BlockMatchingEstimator, EstimatorConfig, estimate_flow
from vfiqa.pipeline import MetricConfig, MetricReport, benchmark, score_sequences
from vfiqa.spatial import VmConfig, div_metric, divergence_map, smoothness_dissimilarity, vector_median_filter, vm_epe
from vfiqa.temporal import epe, epe_map, epe_weight_map, temporal_smoothness, temporal_smoothness_map

__version__ = "0.1.0"
