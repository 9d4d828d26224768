"""Multi-label wireless interference identification, from synthesized IQ bursts to TPR reports."""
__version__ = "0.1.0"

from .dataset import (
    Dataset,
    DatasetRecord,
    GenConfig,
    SirMode,
    add_awgn,
    combine_multi_label,
    generate_multi_label,
    generate_scenario,
    generate_single_label,
    load_dataset,
    save_dataset,
    split_train_val,
)
from .evaluation import (
    TprReport,
    apply_threshold,
    emit_report,
    evaluate,
    single_label_comparison,
    tpr_by_interferer_count,
    tpr_per_class,
)
from .features import dft_128, to_feature_matrix
from .signals import Technology, class_catalog, class_spec, frequency_shift, measure_power, synthesize_burst

__all__ = [
    "Dataset",
    "DatasetRecord",
    "GenConfig",
    "SirMode",
    "Technology",
    "TprReport",
    "add_awgn",
    "apply_threshold",
    "class_catalog",
    "class_spec",
    "combine_multi_label",
    "dft_128",
    "emit_report",
    "evaluate",
    "frequency_shift",
    "generate_multi_label",
    "generate_scenario",
    "generate_single_label",
    "load_dataset",
    "measure_power",
    "save_dataset",
    "single_label_comparison",
    "split_train_val",
    "synthesize_burst",
    "to_feature_matrix",
    "tpr_by_interferer_count",
    "tpr_per_class",
]
