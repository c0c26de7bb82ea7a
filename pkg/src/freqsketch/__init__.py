"""Composable weighted-sampling sketches, estimators, and overhead calculus."""

from .core import (
    FreqFn,
    FrequencyVector,
    HashSource,
    ZipfModel,
    aggregate,
    apply_fn,
    gen_zipf,
    zipf_fit,
)
from .samplers import (
    BottomKSketch,
    SamplerConfig,
    SampleRecord,
    WeightedSample,
    exact_wr_variance,
    sample_with_replacement,
    sketch_frequencies,
)
from .advice import AdviceMap, AdviceParams, AdviceSketch, advice_noise
from .estimation import (
    AdviceSpec,
    BottomKSpec,
    DomainQuery,
    ErrorReport,
    WithReplacementSpec,
    benchmark_bound,
    estimate_query,
    estimate_rank_distribution,
    evaluate_nrmse,
)
from .overhead import (
    OverheadReport,
    certify_emulation,
    concave_sublinear_probs,
    expected_overhead,
    harmonic_number,
    heavy_hitter_phi,
    lq_lp_overhead,
    max_overhead,
    near_uniform_bound,
    overhead_report,
    pps_probs,
    subzipf_bound,
    universal_emulation_overhead,
    universal_estimation_overhead,
    worst_case_bound,
)

__version__ = "0.1.0"
