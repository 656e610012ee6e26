from .subsets import (
    SampleSubset,
    class_subset,
    load_kept_ids,
    nmax_for_ratio,
    pseudo_uniform,
    rand_all,
    rand_pos,
    round_half_up,
    save_kept_ids,
)
from .batches import ShuffledBatchSource, UniformBatchSource, create_batch_source, uniform_batches

__all__ = [
    "SampleSubset",
    "ShuffledBatchSource",
    "UniformBatchSource",
    "class_subset",
    "create_batch_source",
    "load_kept_ids",
    "nmax_for_ratio",
    "pseudo_uniform",
    "rand_all",
    "rand_pos",
    "round_half_up",
    "save_kept_ids",
    "uniform_batches",
]
