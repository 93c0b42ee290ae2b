"""Typed datasets: schemas, loading, validation, splitting, discretization, encoding."""
from .dataset import CompositeDataset, Dataset
from .io import (
    Layout,
    default_layout,
    load_composite,
    load_dataset,
    load_layout,
    load_metadata,
    load_schema,
    save_json,
    write_composite,
    write_dataset,
)
from .schema import Categorical, Censored, Continuous, Feature, Integer, Metadata, Pattern, Schema
from .transforms import (
    DiscretizationMap,
    EncodingMap,
    FeatureBins,
    ValidationReport,
    Violation,
    discretize,
    encode,
    quantile_edges,
    split,
    validate,
)

__all__ = [
    "Categorical", "Censored", "CompositeDataset", "Continuous", "Dataset", "DiscretizationMap",
    "EncodingMap", "Feature", "FeatureBins", "Integer", "Layout", "Metadata", "Pattern", "Schema",
    "ValidationReport", "Violation", "default_layout", "discretize", "encode", "load_composite",
    "load_dataset", "load_layout", "load_metadata", "load_schema", "quantile_edges", "save_json",
    "split", "validate", "write_composite", "write_dataset",
]
