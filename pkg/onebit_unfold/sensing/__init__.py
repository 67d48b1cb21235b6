from onebit_unfold.sensing.model import (
    BihtConfig,
    MeasurementSet,
    biht_iterate,
    biht_update,
    consistency_objective,
    hard_threshold,
    quantize_one_bit,
    sign_pm1,
)

__all__ = [
    "BihtConfig",
    "MeasurementSet",
    "biht_iterate",
    "biht_update",
    "consistency_objective",
    "hard_threshold",
    "quantize_one_bit",
    "sign_pm1",
]
