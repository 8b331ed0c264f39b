from . import ops, simp
from ._base import BaseLayer, LayerCache
from ._checkpoint import load_checkpoint, save_checkpoint
from ._dataset import (
    Dataset,
    DatasetMeta,
    Provenance,
    Sample,
    gen_input_image,
    generate_dataset,
    load_dataset,
    pack_tensors,
    sample_name,
    sample_seed,
    volfrac_sweep,
    write_dataset,
)
from ._errors import (
    CheckpointError,
    DatasetError,
    ImageFormatError,
    ShapeError,
    SolverError,
    TopoCnnError,
    TrainingDivergedError,
)
from ._layers import Activation, DenseParams, LayerKind, LayerSpec, ReshapeParams
from ._metrics import (
    EvalRecord,
    EvalSummary,
    c_err,
    compliance_error,
    evaluate_model,
    summarize,
    v_err,
    write_report,
    write_triptych,
)
from ._network import ActivationCache, Model, build_model
from ._optim import AdamState, adam_step
from ._pgm import read_image, read_pgm, read_png, write_pgm
from ._training import TrainConfig, TrainingLog, mse_loss, train

__version__ = "0.1.0"

__all__ = [
    "BaseLayer",
    "LayerCache",
    "LayerKind",
    "LayerSpec",
    "Activation",
    "DenseParams",
    "ReshapeParams",
    "Model",
    "ActivationCache",
    "build_model",
    "AdamState",
    "adam_step",
    "TrainConfig",
    "TrainingLog",
    "mse_loss",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "Dataset",
    "DatasetMeta",
    "Provenance",
    "Sample",
    "gen_input_image",
    "generate_dataset",
    "load_dataset",
    "write_dataset",
    "pack_tensors",
    "sample_name",
    "sample_seed",
    "volfrac_sweep",
    "read_image",
    "read_pgm",
    "read_png",
    "write_pgm",
    "EvalRecord",
    "EvalSummary",
    "v_err",
    "c_err",
    "compliance_error",
    "evaluate_model",
    "summarize",
    "write_report",
    "write_triptych",
    "TopoCnnError",
    "ShapeError",
    "SolverError",
    "TrainingDivergedError",
    "CheckpointError",
    "DatasetError",
    "ImageFormatError",
    "ops",
    "simp",
]
