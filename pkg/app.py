"""
Command-line front end.

    python app.py parse    INPUT OUTPUT
    python app.py abstract INPUT OUTPUT [--config PATH] [--no-mix] [--seed N] [--rounds R] [--outputs-only]
    python app.py mix      INPUT OUTPUT [--config PATH] [--seed N] [--top-k K]
    python app.py smatch   FILE_A FILE_B [--exact] [--restarts N] [--seed N]
    python app.py metrics  ORIGINAL AUGMENTED OUTPUT [--per-augmentation]

Exit codes: 0 success, 1 I/O error, 2 data, validation or usage error.
Diagnostics go to standard error; data goes to files or standard output.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from amr_graph import InvariantViolation
from augmentation_engine import AugmentationEngine, extract_tri, to_rows
from config import ConfigError, load_config
from data_processor import CorpusFormatError, DataProcessor
from diversity_metrics import EmptyOriginal, MissingAugmentationText, MissingSourceRecord, build_report
from external_adapters import ExternalAdapters
from graph_editor import match_tri
from graph_mixer import CorpusTooSmall, apply_mix, build_mix_plan, retrieve_partners
from penman_codec import PenmanSyntaxError, parse_penman, serialize_penman
from similarity import EmbeddingFileError, LexicalSimilarityProvider, MissingEmbedding
from smatch_scorer import GraphTooLarge, SmatchScorer

load_dotenv()

logger = logging.getLogger("amr_augment")

EXIT_OK = 0
EXIT_IO = 1
EXIT_DATA = 2

DATA_ERRORS = (
    ConfigError, CorpusFormatError, PenmanSyntaxError, InvariantViolation, GraphTooLarge, CorpusTooSmall,
    EmbeddingFileError, MissingEmbedding, EmptyOriginal, MissingSourceRecord, MissingAugmentationText,
)


def _report_invalid(report: dict) -> None:
    for problem in report['errors']:
        where = f" at byte {problem['offset']}" if problem.get('offset') is not None else ""
        name = problem['id'] if problem['id'] is not None else f"#{problem['record_index'] + 1}"
        logger.error(f"record {name}: {problem['error']}{where}")


def cmd_parse(args: argparse.Namespace) -> int:
    processor = DataProcessor()
    records = processor.process_file(args.input)
    valid, report = processor.validate_records(records)
    processor.save_jsonl(processor.normalize_records(valid), args.output)
    processor.get_data_summary(valid)
    if report['errors']:
        _report_invalid(report)
        logger.error(f"{len(report['errors'])} of {report['total_records']} records rejected")
        return EXIT_DATA
    return EXIT_OK


def cmd_abstract(args: argparse.Namespace) -> int:
    config = load_config(args.config).with_overrides(
        seed=args.seed,
        rounds=args.rounds,
        no_mix=True if args.no_mix else None,
    )
    processor = DataProcessor()
    valid, report = processor.validate_records(processor.process_file(args.input))
    if report['errors']:
        _report_invalid(report)
        logger.error("Input has invalid records, nothing written")
        return EXIT_DATA

    engine = AugmentationEngine(config, ExternalAdapters.from_config(config))
    augmented = engine.run(valid)
    processor.save_jsonl(to_rows(augmented, outputs_only=args.outputs_only), args.output)
    processor.get_data_summary(augmented)

    if engine.failures:
        logger.error(f"{len(engine.failures)} failure(s):")
        for failure in engine.failures:
            logger.error(f"  {failure}")
        return EXIT_DATA
    return EXIT_OK


def cmd_mix(args: argparse.Namespace) -> int:
    config = load_config(args.config).with_overrides(seed=args.seed, top_k_mix=args.top_k)
    processor = DataProcessor()
    valid, report = processor.validate_records(processor.process_file(args.input))
    if report['errors']:
        _report_invalid(report)
        return EXIT_DATA

    usable = [r for r in valid if r.amr is not None]
    engine = AugmentationEngine(config)
    partners = retrieve_partners(usable, engine.provider)
    scorer = LexicalSimilarityProvider()

    rows = []
    for record, position in zip(usable, partners):
        partner = usable[position]
        tri = record.tri if record.tri is not None else extract_tri(record.text, record.label, config.tri_k, scorer)
        plan = build_mix_plan(record.amr, partner.amr, config.top_k_mix, config.similarity_mode,
                              config.exact_bound, config.smatch_restarts, config.seed)
        mixed = apply_mix(record.amr, partner.amr, plan, config.mix_mode, match_tri(record.amr, tri))
        rows.append({
            'id': record.id,
            'partner_id': partner.id,
            'mixed_amr': serialize_penman(mixed),
            'grafts': plan.to_dict()['grafts'],
        })
    processor.save_jsonl(rows, args.output)
    return EXIT_OK


def _load_graphs(path: str) -> List[tuple]:
    processor = DataProcessor()
    graphs = []
    for index, record in enumerate(processor.process_file(path)):
        record_id = str(record.get('id', index + 1))
        if not record.get('amr'):
            raise CorpusFormatError(f"{path}: record {record_id} has no graph")
        graphs.append((record_id, parse_penman(str(record['amr']))))
    return graphs


def cmd_smatch(args: argparse.Namespace) -> int:
    first, second = _load_graphs(args.file_a), _load_graphs(args.file_b)
    if len(first) != len(second):
        logger.error(f"{args.file_a} has {len(first)} graphs but {args.file_b} has {len(second)}")
        return EXIT_DATA

    config = load_config(args.config).with_overrides(seed=args.seed, smatch_restarts=args.restarts)
    scorer = SmatchScorer(
        restarts=config.smatch_restarts,
        seed=config.seed,
        exact=args.exact,
        exact_bound=config.exact_bound,
        workers=config.workers,
    )
    scores = scorer.score_pairs([(a, b) for (_, a), (_, b) in zip(first, second)])
    for ((id_a, _), (id_b, _)), result in zip(zip(first, second), scores):
        sys.stdout.write(result.line(id_a, id_b) + "\n")
    total = SmatchScorer.corpus_score(scores)
    logger.info(f"Corpus SMATCH: P={total.precision:.4f} R={total.recall:.4f} F1={total.f1:.4f}")
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    processor = DataProcessor()
    originals = processor.process_file(args.original)
    augmented = processor.process_file(args.augmented)
    report = build_report(originals, augmented, pooled=not args.per_augmentation)
    output = Path(args.output)
    output.write_text(report.to_text(), encoding='utf-8')
    Path(f"{output}.json").write_text(report.dumps() + "\n", encoding='utf-8')
    logger.info(f"D={report.token_diversity:.2f} DL={report.length_diversity:.2f}, report written to {output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amr-augment", description="Controllable AMR abstraction for data augmentation")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    parse = commands.add_parser("parse", help="validate and normalize PENMAN graphs")
    parse.add_argument("input")
    parse.add_argument("output")
    parse.set_defaults(handler=cmd_parse)

    abstract = commands.add_parser("abstract", help="run the abstraction pipeline")
    abstract.add_argument("input")
    abstract.add_argument("output")
    abstract.add_argument("--config", help="config file (default: $AMRAUG_CONFIG, else built-in defaults)")
    abstract.add_argument("--no-mix", action="store_true", help="skip mixing")
    abstract.add_argument("--seed", type=int)
    abstract.add_argument("--rounds", type=int)
    abstract.add_argument("--outputs-only", action="store_true", help="write augmentation rows only")
    abstract.set_defaults(handler=cmd_abstract)

    mix = commands.add_parser("mix", help="graft subgraphs from each document's most similar partner")
    mix.add_argument("input")
    mix.add_argument("output")
    mix.add_argument("--config")
    mix.add_argument("--seed", type=int)
    mix.add_argument("--top-k", type=int)
    mix.set_defaults(handler=cmd_mix)

    smatch = commands.add_parser("smatch", help="score graphs pairwise by position")
    smatch.add_argument("file_a")
    smatch.add_argument("file_b")
    smatch.add_argument("--config")
    smatch.add_argument("--exact", action="store_true", help="exhaustive alignment (small graphs only)")
    smatch.add_argument("--restarts", type=int)
    smatch.add_argument("--seed", type=int)
    smatch.set_defaults(handler=cmd_smatch)

    metrics = commands.add_parser("metrics", help="token and length diversity of augmentations")
    metrics.add_argument("original")
    metrics.add_argument("augmented")
    metrics.add_argument("output")
    metrics.add_argument("--per-augmentation", action="store_true", help="average new-token shares per augmentation")
    metrics.set_defaults(handler=cmd_metrics)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_DATA

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except DATA_ERRORS as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_DATA
    except OSError as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
