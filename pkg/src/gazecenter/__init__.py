"""Object center-bias analysis of fixation datasets.

Builds object center-bias maps from annotated object polygons, blends them
with bottom-up saliency as ``(1 - beta) * S + beta * O`` and scores the
result against human fixations with NSS.
"""

from .dataset import (
    DatasetStats,
    FixationSet,
    ImageAnnotation,
    ObjectAnnotation,
    dataset_stats,
    load_annotations,
    load_fixations,
    read_map,
    save_annotations,
    write_map,
)
from .errors import GazeCenterError
from .evaluation import (
    DEFAULT_BETAS,
    ComparisonResult,
    SweepResult,
    compare_models,
    sample_fixations,
    sweep_beta,
    sweep_maps,
)
from .geometry import (
    PixelSet,
    Point,
    Polygon,
    RingPartition,
    center_of_mass,
    rasterize_polygon,
    ring_partition,
)
from .maps import (
    CombinedMap,
    WeightScheme,
    build_fixation_map,
    build_object_map,
    combine,
    smooth_map,
)
from .metrics import (
    RingProfile,
    TestResult,
    nss,
    paired_t_test,
    ring_fixation_profile,
    ring_saliency_profile,
)
from .saliency import SaliencySource, builtin_saliency, load_external_saliency

__version__ = "0.1.0"
