import numpy as np
import pytest

from errdet.data import LabeledSentence, build_vocab
from errdet.errors import ParseError
from errdet.model import ModelConfig, forward, init_model
from errdet.serialize import checkpoint_digest, load_checkpoint, save_checkpoint


def build():
    corpus = [LabeledSentence(["a", "b", "c", "a"], [0, 1, 0, 0])]
    vocab = build_vocab(corpus, min_count=1)
    config = ModelConfig(architecture="bi-lstm", vocab_size=len(vocab),
                         embedding_dim=5, recurrent_dim=4, pre_output_dim=3)
    return init_model(config, seed=21), vocab


def test_round_trip_is_bit_exact(tmp_path):
    model, vocab = build()
    first = tmp_path / "model.ckpt"
    second = tmp_path / "model2.ckpt"
    save_checkpoint(first, model, vocab)
    loaded, loaded_vocab = load_checkpoint(first)
    save_checkpoint(second, loaded, loaded_vocab)
    assert first.read_bytes() == second.read_bytes()

    assert loaded.config == model.config
    assert list(loaded.params) == list(model.params)
    for name in model.params:
        assert np.array_equal(loaded.params[name].data, model.params[name].data)
    assert loaded_vocab.tokens == vocab.tokens
    assert loaded_vocab.min_count == vocab.min_count


def test_predictions_identical_after_reload(tmp_path):
    model, vocab = build()
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, vocab)
    loaded, loaded_vocab = load_checkpoint(path)
    ids = loaded_vocab.encode(["a", "b", "zzz"])
    assert np.array_equal(forward(model, ids), forward(loaded, ids))


def test_checkpoint_without_vocab(tmp_path):
    model, _ = build()
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, vocab=None)
    _, vocab = load_checkpoint(path)
    assert vocab is None


def test_corrupt_files_rejected(tmp_path):
    bad_magic = tmp_path / "bad.ckpt"
    bad_magic.write_bytes(b"NOTAMODEL" + b"\x00" * 16)
    with pytest.raises(ParseError, match="magic"):
        load_checkpoint(bad_magic)

    model, vocab = build()
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, vocab)
    truncated = tmp_path / "trunc.ckpt"
    truncated.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(ParseError, match="truncated|trailing"):
        load_checkpoint(truncated)


def test_digest_stable(tmp_path):
    model, vocab = build()
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, vocab)
    d1 = checkpoint_digest(path)
    save_checkpoint(path, model, vocab)
    assert checkpoint_digest(path) == d1
    assert len(d1) == 12
