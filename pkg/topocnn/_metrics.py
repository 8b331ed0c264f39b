"""Module containing the volume and compliance errors of surrogate predictions"""

import csv
import logging
from os import PathLike
from pathlib import Path
from typing import Annotated, Protocol

import numpy as np
from pydantic import BaseModel, Field

from ._dataset import Dataset, gen_input_image, sample_name, sample_seed
from ._pgm import write_pgm
from .simp import ProblemSpec, evaluate_compliance, optimize

_logger = logging.getLogger(__name__)

REPORT_COLUMNS = ("vf", "v_err", "c_err", "c_opt", "c_cnn")


class Predictor(Protocol):
    def predict(self, input: np.ndarray) -> np.ndarray: ...


class EvalRecord(BaseModel):
    """The errors of one predicted design, both in percent"""

    volfrac: float
    v_err: float
    c_err: float
    c_opt: Annotated[float, Field(gt=0)]
    c_cnn: float
    model_tag: str = ""
    problem_tag: str = ""


class EvalSummary(BaseModel):
    count: int
    mean_v_err: float
    max_v_err: float
    mean_c_err: float
    max_c_err: float
    passed: bool
    failed_volfracs: list[float] = []


def v_err(pred_field: np.ndarray, target_volfrac: float) -> float:
    """The volume error ``|V_f - mean(pred)| / V_f * 100``

    Raises:
        ValueError: target_volfrac is not positive or pred leaves [0, 1]
    """
    if target_volfrac <= 0:
        raise ValueError(f"target volume fraction must be positive, got {target_volfrac}")
    pred_field = np.asarray(pred_field, dtype=np.float64)
    if pred_field.min() < 0 or pred_field.max() > 1:
        raise ValueError("predicted densities must lie in [0, 1]")
    return abs(target_volfrac - float(pred_field.mean())) / target_volfrac * 100


def compliance_error(c_opt: float, c_cnn: float) -> float:
    """``|C_opt - C_cnn| / C_opt * 100``"""
    if c_opt <= 0:
        raise ValueError(f"optimal compliance must be positive, got {c_opt}")
    return abs(c_opt - c_cnn) / c_opt * 100


def c_err(pred_field: np.ndarray, spec: ProblemSpec, c_opt: float) -> float:
    """The compliance error of a predicted field against the solver optimum

    The prediction is evaluated as-is, without thresholding.

    Raises:
        SolverError: the FE solve of the predicted field failed
    """
    return compliance_error(c_opt, evaluate_compliance(pred_field, spec))


def evaluate_model(
    model: Predictor | None,
    dataset: Dataset | None,
    spec_family: ProblemSpec,
    volfracs: list[float],
    seed: int = 0,
    model_tag: str = "",
    triptych_dir: str | PathLike | None = None,
) -> list[EvalRecord]:
    """Compares the model's designs with the solver's at every volume fraction

    A volume fraction found in the dataset reuses its input image and
    target; any other gets a synthesized input (seeded like the generated
    datasets) and a fresh solver run.

    Args:
        model: anything with ``predict`` on (1, ny, nx, 1) tensors; None
            evaluates the solver targets themselves
        dataset: the dataset to look samples up in, if any
        spec_family: the problem; its volume fraction is replaced per evaluation
        volfracs: the volume fractions to evaluate
        seed: the run seed synthesized inputs derive from
        model_tag: a label for the records
        triptych_dir: if given, an input | prediction | target PGM is written
            there per volume fraction

    Returns:
        one record per volume fraction, in the given order
    """
    records = []
    for volfrac in volfracs:
        spec = spec_family.with_volfrac(volfrac)
        sample = dataset.find(volfrac) if dataset is not None else None
        if sample is not None and sample.input_image.shape == (spec.ny, spec.nx):
            input_image, target = sample.input_image, sample.target_image
            c_opt = evaluate_compliance(target, spec)
        else:
            input_image = gen_input_image(volfrac, spec.nx, spec.ny, sample_seed(seed, volfrac))
            result = optimize(spec)
            target, c_opt = result.density, result.compliance

        if model is None:
            pred = target
        else:
            pred = model.predict(input_image[np.newaxis, :, :, np.newaxis])[0, :, :, 0]
        c_cnn = evaluate_compliance(pred, spec)
        record = EvalRecord(
            volfrac=volfrac,
            v_err=v_err(pred, volfrac),
            c_err=compliance_error(c_opt, c_cnn),
            c_opt=c_opt,
            c_cnn=c_cnn,
            model_tag=model_tag,
            problem_tag=spec.tag,
        )
        records.append(record)
        _logger.info(
            "vf %.4f: V_err %.4g%%, C_err %.4g%%", volfrac, record.v_err, record.c_err
        )
        if triptych_dir is not None:
            Path(triptych_dir).mkdir(parents=True, exist_ok=True)
            write_triptych(
                input_image, pred, target, Path(triptych_dir) / f"{sample_name(volfrac)}.pgm"
            )
    return records


def write_report(records: list[EvalRecord], path: str | PathLike):
    """Writes the records as CSV with the columns vf,v_err,c_err,c_opt,c_cnn"""
    with open(path, "w", newline="") as file:
        writer = csv.writer(file)
        writer.writerow(REPORT_COLUMNS)
        for r in records:
            writer.writerow([r.volfrac, r.v_err, r.c_err, r.c_opt, r.c_cnn])


def summarize(
    records: list[EvalRecord],
    max_verr: float | None = None,
    max_cerr: float | None = None,
) -> EvalSummary:
    """Aggregates the records and checks them against optional bounds

    A record fails if its V_err exceeds max_verr or its C_err exceeds max_cerr.
    """
    if not records:
        raise ValueError("no records to summarize")
    v = np.array([r.v_err for r in records])
    c = np.array([r.c_err for r in records])
    failed = [
        r.volfrac
        for r in records
        if (max_verr is not None and r.v_err > max_verr)
        or (max_cerr is not None and r.c_err > max_cerr)
    ]
    return EvalSummary(
        count=len(records),
        mean_v_err=float(v.mean()),
        max_v_err=float(v.max()),
        mean_c_err=float(c.mean()),
        max_c_err=float(c.max()),
        passed=not failed,
        failed_volfracs=failed,
    )


def write_triptych(
    input_image: np.ndarray,
    prediction: np.ndarray,
    target: np.ndarray,
    path: str | PathLike,
    gap: int = 2,
):
    """Writes input, prediction and target side by side, separated by void columns"""
    spacer = np.zeros((input_image.shape[0], gap))
    write_pgm(
        np.hstack([input_image, spacer, np.clip(prediction, 0, 1), spacer, target]), path
    )
