"""Command-line entry points for the full pipeline.

Subcommands: convert, align, vocab, train, eval, predict, score, synth,
serve. Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime
error; diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import data, metrics, scoring, synth
from .errors import AlignmentError, DataError, ErrdetError, ParseError
from .model import ARCHITECTURES, ModelConfig, init_model
from .serialize import load_checkpoint, save_checkpoint
from .service import DEFAULT_MAX_CHARS, create_server
from .training import TrainConfig, predict, train, write_history_csv


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read_corpora(paths) -> list[data.LabeledSentence]:
    sentences: list[data.LabeledSentence] = []
    for path in paths:
        sentences.extend(data.read_tsv(path))
    if not sentences:
        raise DataError(f"no sentences found in {', '.join(map(str, paths))}")
    return sentences


# -- subcommands --------------------------------------------------------------

def cmd_convert(args) -> int:
    sentences = []
    with open(args.input, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc}", path=args.input,
                                 line=lineno) from exc
            if not isinstance(record, dict) or "tokens" not in record:
                raise ParseError("expected {\"tokens\": [...], \"spans\": [[s,e],...]}",
                                 path=args.input, line=lineno)
            annotation = data.SpanAnnotation(record["tokens"],
                                             [tuple(s) for s in record.get("spans", [])])
            sentences.append(data.spans_to_labels(annotation))
    data.write_tsv(args.output, sentences)
    print(f"wrote {len(sentences)} sentences to {args.output}")
    return 0


def cmd_align(args) -> int:
    source = data.read_sentences(args.source)
    corrected = data.read_sentences(args.corrected)
    if len(source) != len(corrected):
        raise AlignmentError(f"{len(source)} source sentences vs "
                             f"{len(corrected)} corrected")
    sentences = [data.align_correction(s, c) for s, c in zip(source, corrected)]
    data.write_tsv(args.output, sentences)
    print(f"wrote {len(sentences)} aligned sentences to {args.output}")
    return 0


def cmd_vocab(args) -> int:
    corpus = _read_corpora(args.corpus)
    vocab = data.build_vocab(corpus, min_count=args.min_count)
    payload = {"tokens": vocab.tokens[2:], "min_count": vocab.min_count}
    Path(args.output).write_text(json.dumps(payload, ensure_ascii=False, indent=0)
                                 + "\n", encoding="utf-8")
    print(f"vocabulary of {len(vocab)} entries written to {args.output}")
    return 0


# training settings and their defaults; a JSON config file (--config) may
# set any of them, explicit command-line flags win over the file
TRAIN_DEFAULTS = {
    "train": None, "dev": None, "output": None, "history": None,
    "arch": "bi-lstm", "epochs": 20, "batch_size": 64, "lr": 0.001,
    "seed": 0, "patience": None, "grad_clip": None, "min_count": 2,
    "embedding_dim": 300, "conv_window": 3, "conv_output_dim": 300,
    "recurrent_dim": 200, "pre_output_dim": 50, "pretrained": None,
    "freeze_embeddings": False,
}


def cmd_train(args) -> int:
    provided = {k: v for k, v in vars(args).items()
                if k in TRAIN_DEFAULTS and v is not None}
    settings = dict(TRAIN_DEFAULTS)
    if args.config:
        try:
            file_settings = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad train config: {exc}", path=args.config) from exc
        unknown = set(file_settings) - set(TRAIN_DEFAULTS)
        if unknown:
            raise UsageError(f"unknown train config keys: {sorted(unknown)}")
        settings.update(file_settings)
    settings.update(provided)
    for key in ("train", "dev", "output"):
        if not settings[key]:
            raise UsageError(f"train needs --{key} (flag or config file)")
    if isinstance(settings["train"], str):
        settings["train"] = [settings["train"]]

    train_corpus = _read_corpora(settings["train"])
    dev_corpus = _read_corpora([settings["dev"]])
    vocab = data.build_vocab(train_corpus, min_count=settings["min_count"])
    config = ModelConfig(architecture=settings["arch"], vocab_size=len(vocab),
                         embedding_dim=settings["embedding_dim"],
                         conv_window=settings["conv_window"],
                         conv_output_dim=settings["conv_output_dim"],
                         recurrent_dim=settings["recurrent_dim"],
                         pre_output_dim=settings["pre_output_dim"])
    model = init_model(config, seed=settings["seed"])
    if settings["pretrained"]:
        table, coverage = data.load_pretrained(settings["pretrained"], vocab,
                                               model.params["embed.E"].data)
        model.params["embed.E"].data = table
        print(f"pretrained embeddings cover {coverage:.1%} of the vocabulary",
              file=sys.stderr)

    train_config = TrainConfig(learning_rate=settings["lr"],
                               batch_size=settings["batch_size"],
                               max_epochs=settings["epochs"],
                               seed=settings["seed"],
                               patience=settings["patience"],
                               grad_clip=settings["grad_clip"],
                               freeze_embeddings=settings["freeze_embeddings"])
    result = train(model, vocab, train_corpus, dev_corpus, train_config)
    for row in result.history:
        print(f"epoch {row.epoch}: loss {row.loss:.4f} "
              f"dev P/R/F0.5 {row.dev_precision:.1f}/{row.dev_recall:.1f}/"
              f"{row.dev_f05:.1f}", file=sys.stderr)
    save_checkpoint(settings["output"], model, vocab)
    if settings["history"]:
        write_history_csv(settings["history"], result.history)
    print(f"best epoch {result.best_epoch} with dev F0.5 {result.best_f05:.1f}; "
          f"model written to {settings['output']}")
    return 0


def cmd_eval(args) -> int:
    if not args.system and not (args.source and args.corrected):
        raise UsageError("eval needs --system, or --source together with --corrected")
    gold = _read_corpora([args.gold])
    if args.system:
        system = _read_corpora([args.system])
    else:
        source = data.read_sentences(args.source)
        corrected = data.read_sentences(args.corrected)
        if len(source) != len(corrected):
            raise AlignmentError(f"{len(source)} source sentences vs "
                                 f"{len(corrected)} corrected")
        system = [data.align_correction(s, c) for s, c in zip(source, corrected)]
    result = metrics.detection_eval(system, gold)
    if args.csv:
        print(metrics.format_report_csv(result, name=args.name), end="")
    else:
        print(metrics.format_report(result, name=args.name))
    return 0


def cmd_predict(args) -> int:
    model, vocab = load_checkpoint(args.model)
    if vocab is None:
        raise DataError(f"checkpoint {args.model} carries no vocabulary")
    if args.text is not None:
        sentences = [data.simple_tokenize(args.text)]
        if not sentences[0]:
            raise DataError("no tokens in --text input")
    else:
        sentences = [list(s.tokens) for s in _read_corpora([args.input])]

    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        for tokens in sentences:
            labels, probs = predict(model, vocab, tokens, threshold=args.threshold)
            for token, label, prob in zip(tokens, labels, probs):
                if args.probs:
                    out.write(f"{token}\t{'i' if label else 'c'}\t{prob!r}\n")
                else:
                    out.write(f"{token}\t{'i' if label else 'c'}\n")
            out.write("\n")
    finally:
        if args.output:
            out.close()
    return 0


def cmd_score(args) -> int:
    model, vocab = load_checkpoint(args.model)
    if vocab is None:
        raise DataError(f"checkpoint {args.model} carries no vocabulary")
    essays = scoring.read_essays(args.scores, args.essays_dir)
    scoring.extract_features(model, vocab, essays)
    train_count = args.train_count or (len(essays) + 1) // 2
    report = scoring.fit_and_correlate(essays, train_count=train_count)
    if args.output:
        scoring.write_scored_csv(args.output, essays)
    print(f"pearson_r={report.pearson_r:.4f} spearman_rho={report.spearman_rho:.4f} "
          f"(fit on {report.train_count}, evaluated on {report.eval_count})")
    return 0


def cmd_synth(args) -> int:
    if args.task == "general":
        pairs = synth.generate(synth.DEFAULT_TEMPLATES,
                               synth.default_rules(args.rate), args.n,
                               seed=args.seed)
        data.write_tsv(args.output, synth.corrupted_corpus(pairs))
        if args.clean_output:
            data.write_tsv(args.clean_output, synth.clean_corpus(pairs))
    else:
        items = synth.long_range_task(args.n, seed=args.seed,
                                      mismatch_rate=args.mismatch_rate)
        data.write_tsv(args.output, [item.sentence for item in items])
    print(f"wrote {args.n} sentences to {args.output}")
    return 0


def cmd_serve(args) -> int:
    settings = {"host": "127.0.0.1", "port": 8321, "max_chars": DEFAULT_MAX_CHARS,
                "checkpoint": None}
    if args.config:
        try:
            settings.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad serve config: {exc}", path=args.config) from exc
    if args.model:
        settings["checkpoint"] = args.model
    if args.host:
        settings["host"] = args.host
    if args.port is not None:
        settings["port"] = args.port
    if args.max_chars is not None:
        settings["max_chars"] = args.max_chars
    if not settings["checkpoint"]:
        raise UsageError("serve needs --model or a config file with 'checkpoint'")

    server = create_server(settings["checkpoint"], host=settings["host"],
                           port=int(settings["port"]),
                           max_chars=int(settings["max_chars"]))
    host, port = server.server_address[:2]
    print(f"serving {settings['checkpoint']} on http://{host}:{port}/predict",
          file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="errdet",
                     description="Token-level grammatical error detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="span annotations (JSONL) to labeled TSV")
    p.add_argument("--input", required=True,
                   help="JSONL with {\"tokens\": [...], \"spans\": [[start,end],...]}")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("align", help="correction output to detection labels")
    p.add_argument("--source", required=True, help="original sentences, one per line")
    p.add_argument("--corrected", required=True, help="corrected sentences, line-aligned")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("vocab", help="build a vocabulary from labeled TSV corpora")
    p.add_argument("--corpus", required=True, nargs="+")
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("train", help="train a detection model")
    p.add_argument("--config", help="JSON file of training settings; explicit "
                                    "flags override it")
    p.add_argument("--train", nargs="+",
                   help="one or more labeled TSV corpora, concatenated in order")
    p.add_argument("--dev")
    p.add_argument("--arch", choices=ARCHITECTURES)
    p.add_argument("--output")
    p.add_argument("--history", help="per-epoch CSV (epoch,loss,dev_P,dev_R,dev_F05)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--grad-clip", type=float, dest="grad_clip")
    p.add_argument("--min-count", type=int, dest="min_count")
    p.add_argument("--embedding-dim", type=int, dest="embedding_dim")
    p.add_argument("--conv-window", type=int, dest="conv_window")
    p.add_argument("--conv-output-dim", type=int, dest="conv_output_dim")
    p.add_argument("--recurrent-dim", type=int, dest="recurrent_dim")
    p.add_argument("--pre-output-dim", type=int, dest="pre_output_dim")
    p.add_argument("--pretrained", help="plain-text embedding file")
    p.add_argument("--freeze-embeddings", action="store_true", default=None,
                   dest="freeze_embeddings")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score predictions against gold labels")
    p.add_argument("--gold", required=True)
    p.add_argument("--system", help="labeled TSV predictions")
    p.add_argument("--source", help="with --corrected: route correction output "
                                    "through alignment instead of --system")
    p.add_argument("--corrected")
    p.add_argument("--csv", action="store_true")
    p.add_argument("--name", default="system")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="label sentences with a trained model")
    p.add_argument("--model", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--input", help="TSV corpus (labels ignored)")
    group.add_argument("--text", help="raw text, tokenized by the demo tokenizer")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--probs", action="store_true",
                   help="append P(incorrect) as a third column")
    p.add_argument("--output")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("score", help="essay scoring feature + correlation report")
    p.add_argument("--model", required=True)
    p.add_argument("--scores", required=True, help="TSV of essay_id<TAB>gold_score")
    p.add_argument("--essays-dir", required=True)
    p.add_argument("--train-count", type=int, default=None,
                   help="essays used for the fit (default: first half)")
    p.add_argument("--output", help="CSV of essay_id,feature,predicted_score")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("synth", help="generate synthetic corpora")
    p.add_argument("--task", choices=("general", "long-range"), default="general")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rate", type=float, default=0.15)
    p.add_argument("--mismatch-rate", type=float, default=0.4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.add_argument("--clean-output")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="run the JSON /predict endpoint")
    p.add_argument("--model")
    p.add_argument("--config", help="JSON file: checkpoint, host, port, max_chars")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--max-chars", type=int)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ErrdetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
