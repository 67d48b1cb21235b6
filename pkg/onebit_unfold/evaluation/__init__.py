from onebit_unfold.evaluation.experiments import (
    METHOD_BIHT,
    METHOD_UNFOLDED,
    LayerwiseEvaluation,
    evaluate_model,
    layerwise_experiment,
    run_realization,
    single_model_result,
    sparsity_sweep,
)
from onebit_unfold.evaluation.metrics import batch_nmse, nmse
from onebit_unfold.evaluation.reporting import (
    render_svg_chart,
    write_experiment,
    write_mean_csv,
    write_raw_csv,
    write_svg_chart,
)

__all__ = [
    "LayerwiseEvaluation",
    "METHOD_BIHT",
    "METHOD_UNFOLDED",
    "batch_nmse",
    "evaluate_model",
    "layerwise_experiment",
    "nmse",
    "render_svg_chart",
    "run_realization",
    "single_model_result",
    "sparsity_sweep",
    "write_experiment",
    "write_mean_csv",
    "write_raw_csv",
    "write_svg_chart",
]
