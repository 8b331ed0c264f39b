import struct

import numpy as np
import pytest

from topocnn import (
    AdamState,
    CheckpointError,
    TrainConfig,
    build_model,
    load_checkpoint,
    save_checkpoint,
    train,
)

from .conftest import SMALL_SIDE, TINY_WIDTHS
from .utils import expected_parameter_count


@pytest.fixture
def trained(tiny_model, rng):
    """A tiny model and the Adam state after a few updates"""
    x = rng.random((2, SMALL_SIDE, SMALL_SIDE, 1))
    target = rng.random((2, SMALL_SIDE, SMALL_SIDE, 1))
    adam = AdamState.create(tiny_model.parameters(), lr=2e-3)
    train(tiny_model, (x, target), TrainConfig(epochs=3, batch_size=2), adam)
    yield tiny_model, adam


def test_round_trip(trained, tmp_path):
    """Loading restores the layers and the float32-rounded parameters and moments"""
    model, adam = trained
    path = tmp_path / "model.ckpt"

    save_checkpoint(model, path, adam)
    loaded, loaded_adam = load_checkpoint(path)

    assert loaded.layers == model.layers
    assert loaded.input_shape == model.input_shape
    assert loaded.adaptive_n == model.adaptive_n
    for got, want in zip(loaded.parameters(), model.parameters()):
        np.testing.assert_array_equal(got, want.astype(np.float32))
    assert loaded_adam.step == adam.step == 3
    assert loaded_adam.lr == 2e-3
    for got, want in zip(loaded_adam.m + loaded_adam.v, adam.m + adam.v):
        np.testing.assert_array_equal(got, want.astype(np.float32))


def test_resave_is_byte_identical(trained, tmp_path):
    """save(load(save(model))) reproduces the same bytes"""
    model, adam = trained
    first, second = tmp_path / "a.ckpt", tmp_path / "b.ckpt"

    save_checkpoint(model, first, adam)
    loaded, loaded_adam = load_checkpoint(first)
    save_checkpoint(loaded, second, loaded_adam)

    assert first.read_bytes() == second.read_bytes()


def test_loaded_model_predicts_like_rounded_original(trained, tmp_path, rng):
    """Predictions of a loaded model equal those of the float32-rounded original"""
    model, _ = trained
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, path)
    rounded = build_model(0, SMALL_SIDE, TINY_WIDTHS, materialize=False)
    rounded.initialize()
    rounded.set_parameters([p.astype(np.float32).astype(np.float64) for p in model.parameters()])
    x = rng.random((2, SMALL_SIDE, SMALL_SIDE, 1))

    loaded, adam = load_checkpoint(path)

    assert adam is None
    np.testing.assert_array_equal(loaded.predict(x), rounded.predict(x))


def test_header_records_parameter_count(tiny_model, tmp_path):
    """The header's parameter count equals the analytic count of the layers"""
    path = tmp_path / "model.ckpt"
    save_checkpoint(tiny_model, path)

    header = struct.unpack_from("<4sIII3IQB", path.read_bytes())

    assert header[0] == b"PTOC"
    assert header[1] == 1
    assert header[7] == 1269 == expected_parameter_count(SMALL_SIDE, TINY_WIDTHS)


def test_adaptive_model_round_trip(tmp_path):
    """The adaptive width survives a round trip"""
    model = build_model(4, SMALL_SIDE, TINY_WIDTHS, seed=1)
    path = tmp_path / "adaptive.ckpt"

    save_checkpoint(model, path)
    loaded, _ = load_checkpoint(path)

    assert loaded.adaptive_n == 4
    assert loaded.output_shapes() == model.output_shapes()


def _corrupt(path, offset: int, data: bytes):
    raw = bytearray(path.read_bytes())
    raw[offset : offset + len(data)] = data
    path.write_bytes(bytes(raw))


def test_flipped_byte_is_detected(tiny_model, tmp_path):
    """A single corrupted parameter byte fails the checksum"""
    path = tmp_path / "model.ckpt"
    save_checkpoint(tiny_model, path)
    middle = len(path.read_bytes()) // 2
    _corrupt(path, middle, bytes([path.read_bytes()[middle] ^ 0xFF]))

    with pytest.raises(CheckpointError, match="checksum"):
        load_checkpoint(path)


def test_bad_magic_is_detected(tiny_model, tmp_path):
    """A file that does not start with the magic is refused"""
    path = tmp_path / "model.ckpt"
    save_checkpoint(tiny_model, path)
    _corrupt(path, 0, b"NOPE")

    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_unsupported_version_is_detected(tiny_model, tmp_path):
    """Another format version is refused before anything else is parsed"""
    path = tmp_path / "model.ckpt"
    save_checkpoint(tiny_model, path)
    _corrupt(path, 4, struct.pack("<I", 2))

    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)


@pytest.mark.parametrize("keep", [0, 10, 100, -1])
def test_truncated_file_is_detected(tiny_model, tmp_path, keep):
    """Truncated checkpoints raise CheckpointError"""
    path = tmp_path / "model.ckpt"
    save_checkpoint(tiny_model, path)
    path.write_bytes(path.read_bytes()[:keep])

    with pytest.raises(CheckpointError):
        load_checkpoint(path)
