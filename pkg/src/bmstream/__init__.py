"""bmstream: stream-based block matching with a block-wise reference matcher,
two-step collaborative denoising, classical baselines and a throughput model."""

from .baselines import FilterParams, bilateral_filter, gaussian_smooth
from .bm3d import (
    AggregationBuffers,
    Bm3dParams,
    collaborative_hard,
    collaborative_wiener,
    denoise,
    hard_step,
    run_pipeline,
    transform_3d_forward,
    transform_3d_inverse,
    wiener_step,
)
from .config import default_bm3d_params, default_match_params
from .geometry import Region
from .imaging import (
    ImagePlane,
    RgbImage,
    add_wagn,
    load_image,
    make_ramp_image,
    psnr,
    rgb_to_luma,
    save_image,
)
from .match_oracle import (
    MatchEntry,
    MatchParams,
    MatchTable,
    PatchStack,
    find_matches_block,
    gather_stack,
    patch_distance,
)
from .match_stream import (
    Offset,
    SumTable,
    diff_stream,
    find_matches_stream,
    half_plane_offsets,
    overlap_region,
    pick_n_best,
    plan_workers,
    sliding_block_sum,
    stride_filter,
)
from .perf_model import HwConfig, estimate_buffer_bytes, estimate_match_time

__version__ = "0.1.0"
