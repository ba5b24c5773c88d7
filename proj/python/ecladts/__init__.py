from ._core import (
    ConceptReport,
    Dataset,
    DimensionError,
    InputError,
    Model,
    NumericalError,
    UsageError,
    ValidationError,
    extract,
    generate,
    input_gradients,
    load_concept_report,
    load_csv,
    load_dataset,
    sample_dst,
    train,
    validate,
    wrapper_g,
)

__all__ = [
    "ConceptReport",
    "Dataset",
    "DimensionError",
    "InputError",
    "Model",
    "NumericalError",
    "UsageError",
    "ValidationError",
    "extract",
    "generate",
    "input_gradients",
    "load_concept_report",
    "load_csv",
    "load_dataset",
    "sample_dst",
    "train",
    "validate",
    "wrapper_g",
]
