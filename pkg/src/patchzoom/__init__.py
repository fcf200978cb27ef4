"""patchzoom: example-based single-image super-resolution.

Low-resolution patches retrieve approximate nearest neighbors through a
multi-table Cauchy-projection hash index; their high-resolution counterparts
are combined with sum-to-one least-squares weights; iterative back-projection
through an approximate cross bilateral filter restores consistency with the
observed image.
"""

from .bench import BenchReport, BenchRow, bench_run, exhaustive_knn, unsharp
from .config import SrConfig
from .errors import FormatError
from .imageops import (
    PatchGrid,
    bicubic_stretch,
    bicubic_upsample,
    box_mean,
    box_mean_image,
    downsample,
    extract_patches,
    gaussian_blur,
    gaussian_kernel,
    gradient_features,
    integral_image,
    load_image,
    load_rgb,
    mse,
    psnr,
    save_image,
    save_rgb,
)
from .lle import reconstruct_hr, solve_weights
from .lsh import (
    CauchyHash,
    HashTable,
    LshIndex,
    QueryResult,
    build_index,
    hash_one,
    load_index,
    query,
    sample_cauchy,
    save_index,
    table_entropy,
    tune_r,
)
from .pipeline import (
    SrModel,
    SrResult,
    approx_cross_bilateral,
    assemble_image,
    deblur,
    error_image,
    infer_patch,
    naive_bilateral,
    stretch,
    super_resolve,
)
from .synth import texture_image
from .training import PatchDb, SampleSpec, build_db, load_db, make_pair, sample_subimages, save_db

__version__ = "0.1.0"
