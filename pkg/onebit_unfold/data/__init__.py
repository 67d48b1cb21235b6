from onebit_unfold.data.generators import (
    Dataset,
    gen_dataset,
    gen_noise,
    gen_sensing_matrix,
    gen_sparse_signal,
    regenerate_sensing_matrix,
    toeplitz_covariance,
)
from onebit_unfold.data.loaders import dataset_digest, load_dataset, save_dataset

__all__ = [
    "Dataset",
    "dataset_digest",
    "gen_dataset",
    "gen_noise",
    "gen_sensing_matrix",
    "gen_sparse_signal",
    "load_dataset",
    "regenerate_sensing_matrix",
    "save_dataset",
    "toeplitz_covariance",
]
