"""Generator plugins and the uniform fit/generate contract."""
from . import bayesnet, survival, temporal  # noqa: F401  (registers the plugins)
from .base import (
    Condition,
    GeneratorModel,
    Plugin,
    PluginDescriptor,
    concat_rows,
    enforce_domain,
    fit,
    generate,
    get_plugin,
    list_plugins,
    load_model,
    modality,
    register,
    save_model,
)
from .bayesnet import DEMOGRAPHIC_PARITY, FTU, BayesNet, budget_split, debias_edges, network_of
from .fairness import augmentation_counts, balance_generate, domain_augment
from .survival import calibrate_km, calibration_map, censoring_glm, event_probability
from .temporal import (
    fit_composite,
    fit_irregular,
    fit_regular_ar,
    generate_composite,
    generate_irregular,
    generate_regular,
)

__all__ = [
    "BayesNet", "Condition", "DEMOGRAPHIC_PARITY", "FTU", "GeneratorModel", "Plugin", "PluginDescriptor",
    "augmentation_counts", "balance_generate", "budget_split", "calibrate_km", "calibration_map",
    "censoring_glm", "concat_rows", "debias_edges", "domain_augment", "enforce_domain", "event_probability",
    "fit", "fit_composite", "fit_irregular", "fit_regular_ar", "generate", "generate_composite",
    "generate_irregular", "generate_regular", "get_plugin", "list_plugins", "load_model", "modality",
    "network_of", "register", "save_model",
]
