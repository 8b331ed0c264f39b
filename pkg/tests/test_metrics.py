import csv

import numpy as np
import pytest

from topocnn import (
    EvalRecord,
    c_err,
    compliance_error,
    evaluate_model,
    read_pgm,
    summarize,
    v_err,
    write_report,
    write_triptych,
)
from topocnn.simp import Preset, optimize, preset

from .conftest import SMALL_MAXIT, SMALL_SIDE
from .utils import load_fixture

_REFERENCE = load_fixture("reference_errors.json")


class _Uniform:
    """A predictor answering every input with its own mean density"""

    def predict(self, input: np.ndarray) -> np.ndarray:
        return np.full_like(input, input.mean())


@pytest.fixture(scope="module")
def small_optimum():
    """A converged-enough 20x20 cantilever design and its problem"""
    spec = preset(Preset.CANTILEVER_END_LOAD, SMALL_SIDE, SMALL_SIDE, 0.4, maxit=SMALL_MAXIT)
    yield spec, optimize(spec)


def test_volume_error():
    """V_err is the relative deviation of the mean density in percent"""
    assert v_err(np.full((4, 4), 0.25), 0.25) == 0.0
    assert v_err(np.full((4, 4), 0.24), 0.25) == pytest.approx(4.0)
    assert v_err(np.full((4, 4), 0.30), 0.25) == pytest.approx(20.0)


@pytest.mark.parametrize("volfrac", [0.0, -0.5])
def test_volume_error_needs_positive_target(volfrac):
    """V_err is undefined for a non-positive target"""
    with pytest.raises(ValueError):
        v_err(np.zeros((2, 2)), volfrac)


def test_volume_error_rejects_out_of_range_prediction():
    """Predicted densities must lie in [0, 1]"""
    with pytest.raises(ValueError):
        v_err(np.full((2, 2), 1.5), 0.5)


def test_compliance_error_of_the_optimum_is_zero(small_optimum):
    """The solver's own design has zero compliance error"""
    spec, result = small_optimum

    assert c_err(result.density, spec, result.compliance) == 0.0


def test_compliance_error_of_uniform_field_is_positive(small_optimum):
    """A uniform field of the right volume is worse than the optimum"""
    spec, result = small_optimum

    error = c_err(np.full((SMALL_SIDE, SMALL_SIDE), 0.4), spec, result.compliance)

    assert error > 0


def test_compliance_error_ignores_load_scale(small_optimum, rng):
    """Scaling every load scales both compliances alike, leaving C_err unchanged"""
    spec, result = small_optimum
    field = rng.random((SMALL_SIDE, SMALL_SIDE))
    scaled = spec.with_load_scale(3.0)

    assert c_err(field, scaled, 9 * result.compliance) == pytest.approx(
        c_err(field, spec, result.compliance), rel=1e-9
    )


def test_compliance_error_needs_positive_optimum():
    """C_err is undefined for a non-positive optimal compliance"""
    with pytest.raises(ValueError):
        compliance_error(0.0, 1.0)


def test_echoed_targets_have_zero_compliance_error(small_dataset, small_dataset_dir):
    """Evaluating the dataset targets themselves gives C_err = 0 everywhere"""
    family = preset(Preset.CANTILEVER_END_LOAD, SMALL_SIDE, SMALL_SIDE, 0.3, maxit=SMALL_MAXIT)

    records = evaluate_model(None, small_dataset, family, [0.3, 0.5, 0.6])

    assert [r.volfrac for r in records] == [0.3, 0.5, 0.6]
    assert all(r.c_err == 0.0 for r in records)
    assert all(r.v_err < 0.1 for r in records)
    assert all(r.problem_tag == "cantilever-end-20x20" for r in records)


def test_evaluate_unknown_volfrac_runs_the_solver(small_dataset):
    """Volume fractions missing from the dataset are solved on the fly"""
    family = preset(Preset.CANTILEVER_END_LOAD, SMALL_SIDE, SMALL_SIDE, 0.3, maxit=SMALL_MAXIT)

    records = evaluate_model(None, small_dataset, family, [0.45])

    assert records[0].c_err == 0.0
    assert records[0].c_opt == optimize(family.with_volfrac(0.45)).compliance


def test_evaluate_model_with_predictor(small_dataset, tmp_path):
    """A uniform predictor gets positive errors, a report and triptychs"""
    family = preset(Preset.CANTILEVER_END_LOAD, SMALL_SIDE, SMALL_SIDE, 0.3, maxit=SMALL_MAXIT)
    report = tmp_path / "report.csv"

    records = evaluate_model(
        _Uniform(), small_dataset, family, [0.3, 0.4], model_tag="uniform", triptych_dir=tmp_path
    )
    write_report(records, report)

    rows = list(csv.reader(report.open()))
    assert rows[0] == ["vf", "v_err", "c_err", "c_opt", "c_cnn"]
    assert len(rows) == 3
    assert all(r.c_err > 0 for r in records)
    assert all(r.model_tag == "uniform" for r in records)
    triptych = read_pgm(tmp_path / "vf_3000.pgm")
    assert triptych.shape == (SMALL_SIDE, 3 * SMALL_SIDE + 4)


def test_triptych_layout(tmp_path):
    """Input, prediction and target sit side by side with void gaps"""
    path = tmp_path / "t.pgm"

    write_triptych(np.ones((2, 3)), np.full((2, 3), 1.7), np.zeros((2, 3)), path, gap=1)
    image = read_pgm(path)

    assert image.shape == (2, 11)
    assert image[:, :3].tolist() == [[1.0] * 3] * 2
    assert image[:, 3].tolist() == [0.0, 0.0]
    assert image[:, 4:7].tolist() == [[1.0] * 3] * 2


def test_summarize_checks_thresholds():
    """Records over either bound fail the summary"""
    records = [
        EvalRecord(volfrac=0.3, v_err=1.0, c_err=2.0, c_opt=10.0, c_cnn=10.2),
        EvalRecord(volfrac=0.5, v_err=6.0, c_err=1.0, c_opt=5.0, c_cnn=5.05),
    ]

    summary = summarize(records, max_verr=5.0, max_cerr=10.0)

    assert summary.count == 2
    assert summary.mean_v_err == pytest.approx(3.5)
    assert summary.max_c_err == 2.0
    assert not summary.passed
    assert summary.failed_volfracs == [0.5]
    assert summarize(records).passed
    with pytest.raises(ValueError):
        summarize([])


def test_reference_tables_are_complete():
    """The comparison tables cover seven volume fractions each"""
    adaptive = _REFERENCE["cantilever-center-adaptive"]

    assert len(_REFERENCE["mid-load"]["rows"]) == 7
    assert len(_REFERENCE["cantilever-end"]["rows"]) == 7
    assert adaptive["adaptive_n"] == [0, 1000, 2000, 4000, 8000, 12000]
    assert all(len(row["v_err"]) == len(row["c_err"]) == 6 for row in adaptive["rows"])
