"""Desk-scale lab for hierarchical abnormal-traffic detection in SDNs.

The package simulates an OpenFlow-style data plane under SYN-flood load,
locates suspicious switches from per-port flow/PacketIn ratios, extracts
48 statistical features per bidirectional flow, classifies them with a
multi-branch wavelet + CNN + LSTM model, and derives time-limited blocking
rules for the offending ports.
"""

from .classifier import (
    ClassifierConfig,
    MultiFrequencyClassifier,
    build_model,
    cross_validate,
    load_model,
    predict_model,
    predict_proba_model,
    save_model,
    train_model,
)
from .flows import FEATURE_NAMES, FeatureVector, FlowRecord, assemble_flows, extract_features
from .metrics import ConfusionMatrix, binary_metrics, confusion, multiclass_accuracy, per_class_recall
from .mitigation import HandlingRule, apply_rules, derive_rules, expire_rules
from .portwatch import (
    PortRatioDetector,
    PortWindowStats,
    RatioPair,
    Thresholds,
    Verdict,
    calibrate_thresholds,
    compute_ratios,
    judge,
)
from .preprocess import (
    Dataset,
    MinMaxNormalizer,
    NormalizationStats,
    apply_normalization,
    clean,
    kfold,
    load_feature_csv,
    normalize,
    split,
)
from .records import PacketRecord, read_packet_records, write_packet_records
from .simnet import (
    AttackSpec,
    HostSpec,
    SimOptions,
    Simulation,
    SwitchSpec,
    Topology,
    default_topology,
    emit_packet_records,
)
from .wavelets import BranchSet, WaveletBranches, WaveletFilters, decompose, filter_bank

__version__ = "0.1.0"

__all__ = [
    "AttackSpec",
    "BranchSet",
    "ClassifierConfig",
    "ConfusionMatrix",
    "Dataset",
    "FEATURE_NAMES",
    "FeatureVector",
    "FlowRecord",
    "HandlingRule",
    "HostSpec",
    "MinMaxNormalizer",
    "MultiFrequencyClassifier",
    "NormalizationStats",
    "PacketRecord",
    "PortRatioDetector",
    "PortWindowStats",
    "RatioPair",
    "SimOptions",
    "Simulation",
    "SwitchSpec",
    "Thresholds",
    "Topology",
    "Verdict",
    "WaveletBranches",
    "WaveletFilters",
    "apply_normalization",
    "apply_rules",
    "assemble_flows",
    "binary_metrics",
    "build_model",
    "calibrate_thresholds",
    "clean",
    "compute_ratios",
    "confusion",
    "cross_validate",
    "decompose",
    "default_topology",
    "derive_rules",
    "emit_packet_records",
    "expire_rules",
    "extract_features",
    "filter_bank",
    "judge",
    "kfold",
    "load_feature_csv",
    "load_model",
    "multiclass_accuracy",
    "normalize",
    "per_class_recall",
    "predict_model",
    "predict_proba_model",
    "read_packet_records",
    "save_model",
    "split",
    "train_model",
    "write_packet_records",
]
