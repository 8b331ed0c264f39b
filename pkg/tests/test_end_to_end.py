import math
import os

import numpy as np
import pytest

from topocnn import (
    AdamState,
    TrainConfig,
    build_model,
    evaluate_model,
    generate_dataset,
    load_checkpoint,
    load_dataset,
    save_checkpoint,
    summarize,
    train,
    write_dataset,
)
from topocnn.simp import Preset, preset

from .conftest import SMALL_MAXIT, SMALL_SIDE, TINY_WIDTHS

_DESK_SIDE = 40
_DESK_WIDTHS = (8, 16, 32)


def _train_and_save(dataset, path, epochs=5):
    model = build_model(0, SMALL_SIDE, TINY_WIDTHS, seed=0)
    adam = AdamState.create(model.parameters())
    log = train(model, dataset, TrainConfig(epochs=epochs, batch_size=2, seed=0), adam)
    save_checkpoint(model, path, adam)
    return log


def test_pipeline_is_deterministic(small_dataset, tmp_path):
    """Identical seeds give bitwise identical checkpoints"""
    first, second = tmp_path / "a.ckpt", tmp_path / "b.ckpt"

    log_a = _train_and_save(small_dataset, first)
    log_b = _train_and_save(small_dataset, second)

    assert log_a.losses == log_b.losses
    assert first.read_bytes() == second.read_bytes()


def test_generate_train_evaluate(small_dataset, small_dataset_dir, tmp_path):
    """A dataset goes from disk through training and a checkpoint into an evaluation"""
    dataset = load_dataset(small_dataset_dir)
    path = tmp_path / "model.ckpt"
    _train_and_save(dataset, path, epochs=3)
    model, _ = load_checkpoint(path)
    family = preset(Preset.CANTILEVER_END_LOAD, SMALL_SIDE, SMALL_SIDE, 0.3, maxit=SMALL_MAXIT)
    volfracs = [s.volfrac for s in dataset.samples]

    records = evaluate_model(model, dataset, family, volfracs, model_tag="tiny")

    assert [r.volfrac for r in records] == volfracs
    assert all(np.isfinite(r.v_err) and np.isfinite(r.c_err) for r in records)
    assert all(r.c_opt > 0 for r in records)


@pytest.mark.slow
def test_full_scale_forward():
    """The 100x100 network with 168,606,465 parameters runs a forward pass"""
    model = build_model()

    out, cache = model.forward(np.random.default_rng(0).random((1, 100, 100, 1)))

    assert out.shape == (1, 100, 100, 1)
    assert [c.input.shape[1:] for c in cache[1:]] == model.output_shapes()[:-1]
    assert sum(p.size for p in model.parameters()) == 168_606_465


@pytest.mark.slow
def test_full_sweep_generation(tmp_path):
    """The default mid-load sweep yields 95 pairs whose targets meet their volumes"""
    ds = generate_dataset(Preset.MID_LOAD, 100, 100, workers=os.cpu_count() or 1)
    write_dataset(ds, tmp_path)

    assert len(ds) == 95
    assert len(list((tmp_path / "input_data").iterdir())) == 95
    for sample in ds.samples:
        assert abs(sample.target_image.mean() - sample.volfrac) <= 1e-3
        solid = math.floor(sample.volfrac * 100 * 100 + 0.5)
        assert sample.input_image.sum() == solid


@pytest.fixture(scope="module")
def desk_dataset():
    """24 optimized 40x40 end-loaded cantilevers between V* = 0.05 and 0.95"""
    yield generate_dataset(
        Preset.CANTILEVER_END_LOAD,
        _DESK_SIDE,
        _DESK_SIDE,
        vf_start=0.05,
        vf_end=0.95,
        vf_step=0.039,
        seed=0,
        workers=os.cpu_count() or 1,
    )


@pytest.mark.slow
@pytest.mark.parametrize("adaptive_n", [0, 64, 128])
def test_desk_scale_training(desk_dataset, adaptive_n):
    """Training for 300 epochs cuts the loss to a tenth, with or without the adaptive layer"""
    model = build_model(adaptive_n, _DESK_SIDE, _DESK_WIDTHS, seed=0)

    log = train(model, desk_dataset, TrainConfig(epochs=300, batch_size=8, seed=0))

    assert len(desk_dataset) == 24
    assert log.final_loss <= 0.1 * log.initial_loss
    if adaptive_n:
        return

    family = preset(Preset.CANTILEVER_END_LOAD, _DESK_SIDE, _DESK_SIDE, 0.5)
    volfracs = [s.volfrac for s in desk_dataset.samples[2::5]]
    summary = summarize(
        evaluate_model(model, desk_dataset, family, volfracs), max_verr=5.0, max_cerr=10.0
    )
    assert summary.count == 5
    assert summary.passed, summary
