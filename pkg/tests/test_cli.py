import json

import pytest

from errdet.cli import main
from errdet.data import read_tsv

pytestmark = pytest.mark.filterwarnings("ignore:.*dev sentence.*:UserWarning")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_gold(tmp_path, name="gold.tsv"):
    path = tmp_path / name
    path.write_text("I\tc\ngoes\ti\nhome\tc\n\n", encoding="utf-8")
    return path


def test_usage_error_exit_code(capsys):
    code, _, err = run(capsys, "definitely-not-a-command")
    assert code == 1
    assert "usage error" in err


def test_missing_file_is_data_error(capsys, tmp_path):
    code, _, err = run(capsys, "eval", "--gold", str(tmp_path / "nope.tsv"),
                       "--system", str(tmp_path / "nope.tsv"))
    assert code == 2


def test_eval_identity_prints_100(capsys, tmp_path):
    gold = write_gold(tmp_path)
    code, out, _ = run(capsys, "eval", "--gold", str(gold), "--system", str(gold))
    assert code == 0
    assert "100.0" in out


def test_eval_csv_variant(capsys, tmp_path):
    gold = write_gold(tmp_path)
    code, out, _ = run(capsys, "eval", "--gold", str(gold), "--system", str(gold),
                       "--csv", "--name", "identity")
    assert code == 0
    assert out.splitlines()[0] == "name,predicted,correct,precision,recall,f05"
    assert out.splitlines()[1].startswith("identity,")


def test_align_command_labels_substitution(capsys, tmp_path):
    source = tmp_path / "source.txt"
    corrected = tmp_path / "corrected.txt"
    out_path = tmp_path / "aligned.tsv"
    source.write_text("I goes home\n", encoding="utf-8")
    corrected.write_text("I go home\n", encoding="utf-8")
    code, _, _ = run(capsys, "align", "--source", str(source),
                     "--corrected", str(corrected), "--output", str(out_path))
    assert code == 0
    (sentence,) = read_tsv(out_path)
    assert sentence.tokens == ("I", "goes", "home")
    assert sentence.labels == (0, 1, 0)


def test_align_mismatched_line_counts(capsys, tmp_path):
    source = tmp_path / "source.txt"
    corrected = tmp_path / "corrected.txt"
    source.write_text("a b\nc d\n", encoding="utf-8")
    corrected.write_text("a b\n", encoding="utf-8")
    code, _, err = run(capsys, "align", "--source", str(source),
                       "--corrected", str(corrected),
                       "--output", str(tmp_path / "x.tsv"))
    assert code == 2


def test_convert_command(capsys, tmp_path):
    src = tmp_path / "spans.jsonl"
    src.write_text(json.dumps({"tokens": ["I", "saw", "cat"], "spans": [[2, 2]]})
                   + "\n", encoding="utf-8")
    out_path = tmp_path / "labels.tsv"
    code, _, _ = run(capsys, "convert", "--input", str(src), "--output", str(out_path))
    assert code == 0
    (sentence,) = read_tsv(out_path)
    assert sentence.labels == (0, 0, 1)


def test_convert_bad_json_is_data_error(capsys, tmp_path):
    src = tmp_path / "spans.jsonl"
    src.write_text("{not json\n", encoding="utf-8")
    code, _, err = run(capsys, "convert", "--input", str(src),
                       "--output", str(tmp_path / "x.tsv"))
    assert code == 2
    assert "spans.jsonl:1" in err


def test_vocab_command(capsys, tmp_path):
    corpus = tmp_path / "corpus.tsv"
    corpus.write_text("the\tc\nthe\tc\ncat\tc\n\n", encoding="utf-8")
    out_path = tmp_path / "vocab.json"
    code, _, _ = run(capsys, "vocab", "--corpus", str(corpus),
                     "--min-count", "2", "--output", str(out_path))
    assert code == 0
    payload = json.loads(out_path.read_text(encoding="utf-8"))
    assert payload["tokens"] == ["the"]


def test_synth_commands(capsys, tmp_path):
    out_path = tmp_path / "synthetic.tsv"
    clean_path = tmp_path / "clean.tsv"
    code, _, _ = run(capsys, "synth", "--task", "general", "--n", "25",
                     "--rate", "0.2", "--seed", "3", "--output", str(out_path),
                     "--clean-output", str(clean_path))
    assert code == 0
    assert len(read_tsv(out_path)) == 25
    assert all(l == 0 for s in read_tsv(clean_path) for l in s.labels)

    lr_path = tmp_path / "longrange.tsv"
    code, _, _ = run(capsys, "synth", "--task", "long-range", "--n", "10",
                     "--seed", "3", "--output", str(lr_path))
    assert code == 0
    assert len(read_tsv(lr_path)) == 10


def train_tiny(capsys, tmp_path, tag, seed="5"):
    corpus = tmp_path / f"train_{tag}.tsv"
    run(capsys, "synth", "--task", "general", "--n", "30", "--rate", "0.3",
        "--seed", "1", "--output", str(corpus))
    model_path = tmp_path / f"model_{tag}.ckpt"
    history_path = tmp_path / f"history_{tag}.csv"
    code, out, err = run(capsys, "train", "--train", str(corpus),
                         "--dev", str(corpus), "--arch", "cnn",
                         "--epochs", "2", "--batch-size", "8",
                         "--seed", seed, "--min-count", "1",
                         "--embedding-dim", "8", "--conv-window", "1",
                         "--conv-output-dim", "8", "--pre-output-dim", "4",
                         "--output", str(model_path),
                         "--history", str(history_path))
    assert code == 0, err
    return model_path, history_path


def test_train_checkpoint_and_history_deterministic(capsys, tmp_path):
    model_a, history_a = train_tiny(capsys, tmp_path, "a")
    model_b, history_b = train_tiny(capsys, tmp_path, "b")
    assert model_a.read_bytes() == model_b.read_bytes()
    assert history_a.read_text() == history_b.read_text()
    header = history_a.read_text().splitlines()[0]
    assert header == "epoch,loss,dev_P,dev_R,dev_F05"


def test_predict_text_and_corpus(capsys, tmp_path):
    model_path, _ = train_tiny(capsys, tmp_path, "p")
    code, out, _ = run(capsys, "predict", "--model", str(model_path),
                       "--text", "the cat runs.", "--probs")
    assert code == 0
    lines = [l for l in out.splitlines() if l]
    assert [l.split("\t")[0] for l in lines] == ["the", "cat", "runs", "."]
    for line in lines:
        token, label, prob = line.split("\t")
        assert label in ("c", "i")
        assert 0.0 <= float(prob) <= 1.0

    corpus = tmp_path / "in.tsv"
    corpus.write_text("the\tc\ncat\tc\n\n", encoding="utf-8")
    out_path = tmp_path / "pred.tsv"
    code, _, _ = run(capsys, "predict", "--model", str(model_path),
                     "--input", str(corpus), "--output", str(out_path))
    assert code == 0
    (sentence,) = read_tsv(out_path)
    assert sentence.tokens == ("the", "cat")


def test_score_command(capsys, tmp_path):
    model_path, _ = train_tiny(capsys, tmp_path, "s")
    scores = tmp_path / "scores.tsv"
    essay_dir = tmp_path / "essays"
    essay_dir.mkdir()
    rows = []
    for i in range(8):
        essay_id = f"e{i}"
        words = ["the cat runs ." if i % 2 else "these cat runs ."] * (i + 1)
        (essay_dir / f"{essay_id}.txt").write_text("\n".join(words) + "\n",
                                                   encoding="utf-8")
        rows.append(f"{essay_id}\t{float(i)}")
    scores.write_text("\n".join(rows) + "\n", encoding="utf-8")
    out_path = tmp_path / "scored.csv"
    code, out, err = run(capsys, "score", "--model", str(model_path),
                         "--scores", str(scores), "--essays-dir", str(essay_dir),
                         "--train-count", "4", "--output", str(out_path))
    assert code == 0, err
    assert "pearson_r=" in out and "spearman_rho=" in out
    assert out_path.read_text().splitlines()[0] == "essay_id,feature,predicted_score"


def test_train_config_file(capsys, tmp_path):
    corpus = tmp_path / "train_cfg.tsv"
    run(capsys, "synth", "--task", "general", "--n", "30", "--rate", "0.3",
        "--seed", "1", "--output", str(corpus))
    config = {
        "train": [str(corpus)], "dev": str(corpus),
        "output": str(tmp_path / "from_config.ckpt"),
        "arch": "cnn", "epochs": 1, "batch_size": 8, "min_count": 1,
        "embedding_dim": 8, "conv_window": 1, "conv_output_dim": 8,
        "pre_output_dim": 4, "seed": 5,
    }
    config_path = tmp_path / "train.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    code, out, err = run(capsys, "train", "--config", str(config_path))
    assert code == 0, err
    assert (tmp_path / "from_config.ckpt").exists()

    # explicit flags win over the file
    code, out, err = run(capsys, "train", "--config", str(config_path),
                         "--output", str(tmp_path / "override.ckpt"),
                         "--epochs", "2")
    assert code == 0, err
    assert (tmp_path / "override.ckpt").exists()

    config_path.write_text(json.dumps({"learning_rate": 1}), encoding="utf-8")
    code, _, err = run(capsys, "train", "--config", str(config_path))
    assert code == 1
    assert "unknown train config keys" in err


def test_train_missing_required_settings(capsys, tmp_path):
    code, _, err = run(capsys, "train", "--arch", "cnn")
    assert code == 1
    assert "--train" in err


def test_eval_requires_a_system_source(capsys, tmp_path):
    gold = write_gold(tmp_path)
    code, _, err = run(capsys, "eval", "--gold", str(gold))
    assert code == 1
    assert "--system" in err


def test_serve_requires_checkpoint(capsys):
    code, _, err = run(capsys, "serve")
    assert code == 1
    assert "serve needs --model" in err
