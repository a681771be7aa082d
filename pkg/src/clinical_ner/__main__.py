from __future__ import annotations

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Any, NoReturn, Optional, Sequence

from clinical_ner.config import YamlConfigLoader
from clinical_ner.config.models import AppConfig, ConfigLoadRequest, TrainingSettings
from clinical_ner.logging import init_logging
from clinical_ner.model.config import ArchKind, ModelConfig
from clinical_ner.model.inference import DecodeOptions

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

SCHEME_CHOICES = ("ngram", "piet-onehot", "piet-embed", "pdet-onehot", "pdet-embed")
ARCH_CHOICES = tuple(arch.value for arch in ArchKind)
MODEL_FLAGS = (
    "arch",
    "scheme",
    "epochs",
    "seed",
    "d_e",
    "d_d",
    "d_h",
    "d_hx",
    "d_hd",
    "dropout",
    "batch_size",
    "learning_rate",
    "clip",
)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--arch", choices=ARCH_CHOICES, default=None, help="Tagger architecture")
    parser.add_argument("--scheme", choices=SCHEME_CHOICES, default=None, help="Dictionary feature scheme")
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--d-e", dest="d_e", type=int, default=None, help="Character embedding size")
    parser.add_argument("--d-d", dest="d_d", type=int, default=None, help="Feature embedding size")
    parser.add_argument("--d-h", dest="d_h", type=int, default=None, help="Bi-LSTM hidden units")
    parser.add_argument("--d-hx", dest="d_hx", type=int, default=None, help="model2 character-stream hidden units")
    parser.add_argument("--d-hd", dest="d_hd", type=int, default=None, help="model2 feature-stream hidden units")
    parser.add_argument("--dropout", type=float, default=None)
    parser.add_argument("--batch", dest="batch_size", type=int, default=None, help="Sentences per optimizer step")
    parser.add_argument("--lr", dest="learning_rate", type=float, default=None, help="Adam learning rate")
    parser.add_argument("--clip", type=float, default=None, help="Global gradient-norm clipping threshold")
    parser.add_argument("--dev-split", dest="dev_split", type=float, default=None, help="Held-out dev fraction")
    parser.add_argument("--patience", type=int, default=None, help="Early-stopping patience in epochs")


def _build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="clinical-ner",
        description="Dictionary-augmented Bi-LSTM-CRF clinical named entity recognition",
    )
    parser.add_argument(
        "--config",
        default="data/config/config.yaml",
        help="Path to config.yaml (default: data/config/config.yaml)",
    )
    parser.add_argument("--log-level", dest="log_level", default=None, help="Override logging.level")
    subparsers = parser.add_subparsers(
        dest="command",
        required=True,
        help="Command to run",
        metavar="{train,tag,eval,segment,features,sweep,stats}",
        parser_class=_ArgumentParser,
    )

    # Command: train
    train_parser = subparsers.add_parser("train", help="Train a tagger and write a model file")
    train_parser.add_argument("--corpus", required=True, help="Tagged training corpus")
    train_parser.add_argument("--dict", dest="dict_path", default=None, help="Entity dictionary")
    train_parser.add_argument("--out", required=True, help="Model file to write")
    train_parser.add_argument("--embeddings", default=None, help="Pretrained character embeddings (text format)")
    train_parser.add_argument(
        "--feature-embeddings", dest="feature_embeddings", default=None, help="Pretrained feature-label embeddings"
    )
    train_parser.add_argument("--metrics-log", dest="metrics_log", default=None, help="Per-epoch JSON lines log")
    _add_model_flags(train_parser)

    # Command: tag
    tag_parser = subparsers.add_parser("tag", help="Tag text with a trained model")
    tag_parser.add_argument("--model", required=True)
    tag_parser.add_argument("--input", required=True, help="Input file")
    tag_parser.add_argument(
        "--input-format",
        dest="input_format",
        choices=("text", "corpus"),
        default="text",
        help="One sentence per line (text) or the column corpus format; corpus tags are ignored",
    )
    tag_parser.add_argument("--dict", dest="dict_path", default=None)
    tag_parser.add_argument("--out", required=True, help="Corpus-format output file")
    tag_parser.add_argument(
        "--mask-invalid", dest="mask_invalid", action="store_true", help="Forbid invalid BIEOS transitions"
    )

    # Command: eval
    eval_parser = subparsers.add_parser("eval", help="Score predictions against gold spans")
    eval_parser.add_argument("--gold", required=True, help="Gold corpus")
    eval_group = eval_parser.add_mutually_exclusive_group(required=True)
    eval_group.add_argument("--pred", default=None, help="Predicted corpus")
    eval_group.add_argument("--dict", dest="dict_path", default=None, help="Score dictionary matching alone")

    # Command: segment
    segment_parser = subparsers.add_parser("segment", help="Bi-directional maximum matching segmentation")
    segment_parser.add_argument("--dict", dest="dict_path", required=True)
    segment_parser.add_argument("--input", required=True, help="One sentence per line")
    segment_parser.add_argument("--as-spans", dest="as_spans", action="store_true", help="Print entity spans only")

    # Command: features
    features_parser = subparsers.add_parser("features", help="Dump per-character dictionary features")
    features_parser.add_argument("--dict", dest="dict_path", required=True)
    features_parser.add_argument("--input", required=True, help="One sentence per line")
    features_parser.add_argument("--scheme", choices=SCHEME_CHOICES, required=True)

    # Command: sweep
    sweep_parser = subparsers.add_parser("sweep", help="Retrain over dictionary fractions or hidden sizes")
    sweep_parser.add_argument("--corpus", required=True, help="Tagged training corpus")
    sweep_parser.add_argument("--test", required=True, help="Tagged test corpus")
    sweep_parser.add_argument("--dict", dest="dict_path", default=None)
    sweep_axis = sweep_parser.add_mutually_exclusive_group(required=True)
    sweep_axis.add_argument("--sweep-dict", dest="sweep_dict", default=None, help="e.g. 0.8,0.85,0.9,0.95")
    sweep_axis.add_argument("--sweep-hidden", dest="sweep_hidden", default=None, help="e.g. 128,192,256,320,384")
    sweep_parser.add_argument("--concurrency", type=int, default=None, help="Sweep points run in parallel")
    sweep_parser.add_argument("--out", default=None, help="Also write the results table here")
    _add_model_flags(sweep_parser)

    # Command: stats
    stats_parser = subparsers.add_parser("stats", help="Entity counts per type")
    stats_parser.add_argument("--corpus", required=True)

    # Command: gen-synthetic (not listed in help)
    synthetic_parser = subparsers.add_parser("gen-synthetic")
    synthetic_parser.add_argument("--out-dir", dest="out_dir", required=True)
    synthetic_parser.add_argument("--train-size", dest="train_size", type=int, default=50)
    synthetic_parser.add_argument("--test-size", dest="test_size", type=int, default=50)
    synthetic_parser.add_argument("--oov-rate", dest="oov_rate", type=float, default=0.0)
    synthetic_parser.add_argument("--seed", type=int, default=0)

    return parser


async def _load_config(args: argparse.Namespace) -> AppConfig:
    loader = YamlConfigLoader()
    return await loader.load(ConfigLoadRequest(yaml_path=args.config))


def _model_config(config: AppConfig, args: argparse.Namespace) -> ModelConfig:
    updates: dict[str, Any] = {}
    for key in MODEL_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            updates[key] = value
    if updates.get("arch") == ArchKind.BASELINE.value and "scheme" not in updates:
        updates["scheme"] = None
    switches_to_features = updates.get("arch", ArchKind.BASELINE.value) != ArchKind.BASELINE.value
    if switches_to_features and "scheme" not in updates and config.model.scheme is None:
        updates["scheme"] = "pdet-embed"
    return ModelConfig.model_validate({**config.model.model_dump(mode="json"), **updates})


def _training_settings(config: AppConfig, args: argparse.Namespace) -> TrainingSettings:
    updates: dict[str, Any] = {}
    if getattr(args, "dev_split", None) is not None:
        updates["dev_split"] = args.dev_split
    if getattr(args, "patience", None) is not None:
        updates["patience"] = args.patience
    if getattr(args, "metrics_log", None) is not None:
        updates["metrics_log"] = args.metrics_log
    return TrainingSettings.model_validate({**config.training.model_dump(), **updates})


def _decode_options(config: AppConfig, mask_invalid: bool = False) -> DecodeOptions:
    return DecodeOptions(
        split_clauses=config.corpus.split_clauses,
        clause_delimiters=config.corpus.clause_delimiters,
        mask_invalid_transitions=mask_invalid or config.decoding.mask_invalid_transitions,
    )


def _read_dictionary(path: Optional[str]):
    from clinical_ner.dictionary import read_dictionary_file

    return read_dictionary_file(path) if path else None


async def _train(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    from clinical_ner.corpus import read_corpus_file
    from clinical_ner.model.embeddings import PretrainedEmbeddings
    from clinical_ner.model.serialization import save_model
    from clinical_ner.model.training import train

    config = await _load_config(args)
    init_logging(config.logging, args.log_level)
    model_config = _model_config(config, args)
    if model_config.arch is not ArchKind.BASELINE and not args.dict_path:
        parser.error(f"--dict is required for --arch {model_config.arch.value}")

    logger.info(
        "Starting training. arch=%s scheme=%s epochs=%s seed=%s",
        model_config.arch.value,
        model_config.scheme.value if model_config.scheme else None,
        model_config.epochs,
        model_config.seed,
    )
    corpus = read_corpus_file(args.corpus)
    dictionary = _read_dictionary(args.dict_path)
    pretrained = None
    if args.embeddings or args.feature_embeddings:
        pretrained = PretrainedEmbeddings(
            char_path=Path(args.embeddings) if args.embeddings else None,
            feature_path=Path(args.feature_embeddings) if args.feature_embeddings else None,
        )
    result = train(corpus, dictionary, model_config, _training_settings(config, args), config.corpus, pretrained)
    save_model(result.model, args.out)
    print(f"epochs={len(result.history)} best_epoch={result.best_epoch} final_loss={result.history[-1].loss:.6f}")
    return EXIT_OK


def _format_spans(chars: Sequence[str], spans) -> str:
    return " ".join(f"{''.join(chars[s.start : s.end + 1])}:{s.etype.letter}[{s.start},{s.end}]" for s in spans)


async def _tag(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    from clinical_ner.corpus import LabeledSentence, read_corpus_file, read_text_lines, write_corpus_file
    from clinical_ner.model.inference import tag_sentences
    from clinical_ner.model.serialization import load_model

    config = await _load_config(args)
    init_logging(config.logging, args.log_level)
    model = load_model(args.model)
    if model.config.scheme is not None and not args.dict_path:
        parser.error(f"--dict is required to tag with a {model.config.arch.value} model")

    if args.input_format == "corpus":
        sentences = [LabeledSentence(s.chars) for s in read_corpus_file(args.input)]
    else:
        sentences = read_text_lines(args.input)
    tagged = tag_sentences(model, sentences, _read_dictionary(args.dict_path), _decode_options(config, args.mask_invalid))
    write_corpus_file(args.out, [t.to_labeled() for t in tagged])
    for idx, t in enumerate(tagged, start=1):
        print(f"{idx}\t{''.join(t.chars)}\t{_format_spans(t.chars, t.spans)}")
    return EXIT_OK


async def _eval(args: argparse.Namespace) -> int:
    from clinical_ner.corpus import read_corpus_file, tags_to_spans
    from clinical_ner.dictionary import dictionary_spans
    from clinical_ner.evaluation import format_report, micro_prf

    config = await _load_config(args)
    init_logging(config.logging, args.log_level)
    gold = read_corpus_file(args.gold)
    if any(not s.is_tagged for s in gold):
        raise ValueError(f"Gold corpus must be tagged: {args.gold}")
    gold_spans = [tags_to_spans(s.tags or ()) for s in gold]

    if args.pred:
        pred = read_corpus_file(args.pred)
        if len(pred) != len(gold):
            raise ValueError(f"Sentence count mismatch: gold={len(gold)} pred={len(pred)}")
        for idx, (g, p) in enumerate(zip(gold, pred), start=1):
            if g.chars != p.chars:
                raise ValueError(f"Sentence {idx} text differs between gold and prediction")
            if not p.is_tagged:
                raise ValueError(f"Prediction sentence {idx} is untagged")
        pred_spans = [tags_to_spans(s.tags or ()) for s in pred]
    else:
        dictionary = _read_dictionary(args.dict_path)
        assert dictionary is not None
        pred_spans = [dictionary_spans(s.text, dictionary) for s in gold]

    print(format_report(micro_prf(gold_spans, pred_spans)))
    return EXIT_OK


async def _segment(args: argparse.Namespace) -> int:
    from clinical_ner.corpus import read_text_lines
    from clinical_ner.dictionary import bdmm_segment, dictionary_spans

    config = await _load_config(args)
    init_logging(config.logging, args.log_level)
    dictionary = _read_dictionary(args.dict_path)
    assert dictionary is not None
    for sentence in read_text_lines(args.input):
        if args.as_spans:
            print(_format_spans(sentence.chars, dictionary_spans(sentence.text, dictionary)))
            continue
        print(
            " ".join(
                f"{segment.text}:{segment.etype.letter}" if segment.etype else segment.text
                for segment in bdmm_segment(sentence.text, dictionary)
            )
        )
    return EXIT_OK


async def _features(args: argparse.Namespace) -> int:
    from clinical_ner.corpus import read_text_lines
    from clinical_ner.features import FeatureScheme, ngram_features, pdet_labels, piet_labels
    from clinical_ner.features.extract import describe_ngram_bits

    config = await _load_config(args)
    init_logging(config.logging, args.log_level)
    dictionary = _read_dictionary(args.dict_path)
    assert dictionary is not None
    scheme = FeatureScheme(args.scheme)
    blocks: list[str] = []
    for sentence in read_text_lines(args.input):
        if scheme.family == "ngram":
            labels = [describe_ngram_bits(row) for row in ngram_features(sentence.chars, dictionary)]
        elif scheme.family == "piet":
            labels = [str(label) for label in piet_labels(sentence.chars, dictionary)]
        else:
            labels = [str(label) for label in pdet_labels(sentence.chars, dictionary)]
        blocks.append("\n".join(f"{char}\t{scheme.value}\t{label}" for char, label in zip(sentence.chars, labels)))
    if blocks:
        print("\n\n".join(blocks))
    return EXIT_OK


async def _sweep(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    from clinical_ner.corpus import read_corpus_file
    from clinical_ner.model.sweep import SweepAxis, SweepJob, format_sweep, parse_sweep_values, run_sweep
    from clinical_ner.utils import atomic_write_text

    config = await _load_config(args)
    init_logging(config.logging, args.log_level)
    model_config = _model_config(config, args)
    if model_config.arch is not ArchKind.BASELINE and not args.dict_path:
        parser.error(f"--dict is required for --arch {model_config.arch.value}")
    if args.sweep_dict and not args.dict_path:
        parser.error("--sweep-dict needs --dict")

    if args.sweep_dict:
        points = parse_sweep_values(args.sweep_dict, SweepAxis.DICTIONARY)
    else:
        points = parse_sweep_values(args.sweep_hidden, SweepAxis.HIDDEN)

    train_corpus = tuple(read_corpus_file(args.corpus))
    test_corpus = tuple(read_corpus_file(args.test))
    dictionary = _read_dictionary(args.dict_path)
    training = _training_settings(config, args)
    jobs = [
        SweepJob(
            point=point,
            train=train_corpus,
            test=test_corpus,
            dictionary=dictionary,
            config=model_config,
            training=training,
            corpus_settings=config.corpus,
            decoding=config.decoding,
        )
        for point in points
    ]
    concurrency = args.concurrency if args.concurrency is not None else config.sweep.concurrency
    if concurrency < 1:
        parser.error("--concurrency must be at least 1")
    table = format_sweep(await run_sweep(jobs, concurrency))
    print(table)
    if args.out:
        atomic_write_text(Path(args.out), table + "\n")
    return EXIT_OK


async def _stats(args: argparse.Namespace) -> int:
    from clinical_ner.corpus import read_corpus_file
    from clinical_ner.corpus.stats import corpus_statistics, format_statistics

    config = await _load_config(args)
    init_logging(config.logging, args.log_level)
    print(format_statistics(corpus_statistics(read_corpus_file(args.corpus))))
    return EXIT_OK


async def _gen_synthetic(args: argparse.Namespace) -> int:
    from clinical_ner.corpus import write_corpus_file
    from clinical_ner.corpus.synthetic import generate_synthetic
    from clinical_ner.dictionary import write_dictionary_file

    config = await _load_config(args)
    init_logging(config.logging, args.log_level)
    data = generate_synthetic(args.train_size, args.test_size, args.oov_rate, args.seed)
    out_dir = Path(args.out_dir)
    write_corpus_file(out_dir / "train.tsv", data.train)
    write_corpus_file(out_dir / "test.tsv", data.test)
    write_dictionary_file(out_dir / "dict.tsv", data.dictionary)
    print(f"train={len(data.train)} test={len(data.test)} dictionary={len(data.dictionary)} out_dir={out_dir}")
    return EXIT_OK


async def _main_async(argv: Optional[Sequence[str]]) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "train":
        return await _train(parser, args)
    if args.command == "tag":
        return await _tag(parser, args)
    if args.command == "eval":
        return await _eval(args)
    if args.command == "segment":
        return await _segment(args)
    if args.command == "features":
        return await _features(args)
    if args.command == "sweep":
        return await _sweep(parser, args)
    if args.command == "stats":
        return await _stats(args)
    if args.command == "gen-synthetic":
        return await _gen_synthetic(args)
    parser.error(f"unknown command: {args.command}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        return asyncio.run(_main_async(argv))
    except SystemExit as e:
        if e.code is None:
            return EXIT_OK
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except (ValueError, OSError) as e:
        logger.debug("Command failed.", exc_info=True)
        print(f"clinical-ner: error: {e}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        logger.info("Interrupted by user.")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
