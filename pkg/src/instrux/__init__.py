"""instrux: build, measure and evaluate multi-variant instruction datasets."""

__version__ = "0.1.0"

from .tasks import (  # noqa: F401
    ExampleCase,
    Instance,
    InstructionFamily,
    TaskCard,
    parse_family_file,
    parse_task_file,
    serialize_prompt,
    validate_family,
)
from .augment import AugmentConfig, Lexicon, generate_variants, synonym_substitute  # noqa: F401
from .metrics import (  # noqa: F401
    DatasetStats,
    FamilyStats,
    SimilarityBackend,
    dataset_statistics,
    edit_distance,
    family_sts_stats,
    length_diversity,
    sts_score,
    word_dissimilarity_stats,
)
from .mixtures import (  # noqa: F401
    Mixture,
    MixtureItem,
    SplitSpec,
    build_crosstask_mixture,
    build_eval_mixture,
    build_mvi_mixture,
    build_multitask_mixture,
    build_si_mixture,
    sample_fraction,
    split_instances,
)
from .scoring import PredictionSet, ScoreReport, lcs_length, rouge_l, score_predictions, tokenize  # noqa: F401
from .analysis import (  # noqa: F401
    EquivalenceInput,
    PerformanceCurve,
    Saturation,
    instruction_worth,
    interpolate_fraction,
    perturb,
    robustness_gap,
    variant_contribution_series,
)
from .baseline import RetrievalIndex, fit, predict, run_experiment  # noqa: F401
