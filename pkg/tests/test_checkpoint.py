import numpy as np
import pytest

from metavit.vit.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from metavit.vit.model import ViTConfig, ViTModel, forward


@pytest.mark.parametrize("cfg", [ViTConfig.tiny(), ViTConfig.desk(num_layers=3, dropout=0.25)])
def test_roundtrip(tmp_path, cfg, rng):
    model = ViTModel.initialize(cfg, rng, std=0.3)
    path = tmp_path / "m.svit"
    save_checkpoint(model, path)
    back = load_checkpoint(path)
    assert back == model and back.config == cfg
    imgs = rng.random((2, cfg.image_size, cfg.image_size, 1))
    assert np.array_equal(forward(imgs, back), forward(imgs, model))


def test_header_layout(tmp_path, rng):
    path = tmp_path / "m.svit"
    save_checkpoint(ViTModel.initialize(ViTConfig.tiny(), rng), path)
    raw = path.read_bytes()
    assert raw[:4] == b"SVIT" and int.from_bytes(raw[4:6], "little") == 1
    assert int.from_bytes(raw[6:10], "little") == 8  # image_size


def test_errors(tmp_path, rng):
    path = tmp_path / "m.svit"
    save_checkpoint(ViTModel.initialize(ViTConfig.tiny(), rng), path)
    raw = path.read_bytes()
    for blob in (b"NOPE" + raw[4:], raw[:20], raw[:-8], raw[:4] + b"\x07\x00" + raw[6:]):
        path.write_bytes(blob)
        with pytest.raises(CheckpointError):
            load_checkpoint(path)
