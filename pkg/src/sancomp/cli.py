"""Command-line surface: train / parse / eval / enumerate / convert / stats / bench.

Exit codes: 0 success, 1 runtime failure (single-line diagnostic on stderr),
2 usage error. All file I/O is UTF-8. Every subcommand is deterministic
given --seed and fixed inputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from typing import Optional

from . import corpus as corpus_io
from . import metrics as metrics_mod
from . import parser as parser_mod
from .core import (
    FormatError,
    ModelConfig,
    SancompError,
    collect_labels_from_data,
    load_label_inventory,
    parse_config_pairs,
)
from .encoder import load_pretrained_vectors, read_contextual_vectors
from .treeops import catalan, enumerate_parses, render_bracket, validate_graph


def _write_text(path: Optional[str], text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_config(args) -> ModelConfig:
    values = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            values = parse_config_pairs(fh.read())
    # flags override file values
    if getattr(args, "seed", None) is not None:
        values["seed"] = args.seed
    if getattr(args, "no_context", False):
        values["use_context"] = False
    if getattr(args, "no_span_encoding", False):
        values["use_span_encoding"] = False
    if getattr(args, "no_pretrained", False):
        values["use_pretrained_vectors"] = False
    if getattr(args, "contextual", None):
        values["use_contextual_vectors"] = True
    return ModelConfig(**values)


def _load_inventory(args, sentences):
    if args.labels:
        return load_label_inventory(args.labels, args.mode)
    return collect_labels_from_data(sentences)


def cmd_train(args) -> int:
    data = corpus_io.parse_corpus(args.data)
    dev = corpus_io.parse_corpus(args.dev) if args.dev else data
    config = _load_config(args)
    contextual = None
    if args.contextual:
        contextual = read_contextual_vectors(args.contextual)
        config = config.replace(word_dim=contextual.dim)
    inventory = _load_inventory(args, data)
    pretrained = None
    if config.use_pretrained_vectors and args.vectors:
        pretrained = load_pretrained_vectors(args.vectors)

    log_lines = ["epoch\tloss\tdev_uss\tdev_lss\tdev_em"]

    def log(e):
        log_lines.append(f"{e.epoch}\t{e.loss:.6f}\t{e.dev_uss:.4f}\t{e.dev_lss:.4f}\t{e.dev_em:.4f}")
        print(f"epoch {e.epoch}: loss {e.loss:.4f} dev LSS {e.dev_lss:.4f} EM {e.dev_em:.4f}")

    model, stats = parser_mod.train(
        data, dev, config, inventory=inventory, pretrained=pretrained,
        contextual=contextual, log=log,
    )
    parser_mod.save_model(model, args.out)
    log_lines.append(f"# best_epoch\t{stats.best_epoch}")
    _write_text(f"{args.out}.log", "\n".join(log_lines))
    print(f"saved model to {args.out} (best epoch {stats.best_epoch})")
    return 0


def _prepare_for_model(model, sentences):
    if not model.config.use_context:
        return corpus_io.strip_context(sentences)
    return sentences


def _spans_text(parsed) -> str:
    lines = []
    for ps in parsed:
        for cp in ps.parses:
            cells = " ".join(f"{s.start}:{s.end}:{s.label.name}" for s in cp.spans)
            lines.append(f"{ps.sentence.sid}\t{cp.compound.id}\t{cells}")
    return "\n".join(lines)


def _with_predicted_trees(parsed):
    sentences = []
    for ps in parsed:
        trees = {cp.compound.id: cp.tree for cp in ps.parses}
        compounds = tuple(
            dataclasses.replace(c, gold_tree=trees[c.id]) for c in ps.sentence.compounds
        )
        sentences.append(dataclasses.replace(ps.sentence, compounds=compounds))
    return sentences


def cmd_parse(args) -> int:
    model = parser_mod.load_model(args.model)
    contextual = read_contextual_vectors(args.contextual) if args.contextual else None
    sentences = _prepare_for_model(model, corpus_io.parse_corpus(args.input))
    parsed = parser_mod.parse(sentences, model, contextual)
    if args.format == "spans":
        _write_text(args.output, _spans_text(parsed))
    elif args.format == "brackets":
        _write_text(args.output, corpus_io.render_corpus(_with_predicted_trees(parsed)))
    else:
        _write_text(
            args.output,
            corpus_io.render_conll([ps.sentence for ps in parsed], [ps.graph for ps in parsed]),
        )
    return 0


def cmd_eval(args) -> int:
    if args.model:
        if not args.data:
            raise SancompError("--model requires --data")
        model = parser_mod.load_model(args.model)
        contextual = read_contextual_vectors(args.contextual) if args.contextual else None
        sentences = _prepare_for_model(model, corpus_io.parse_corpus(args.data))
        gold = metrics_mod.span_index_gold(sentences)
        parsed = parser_mod.parse(sentences, model, contextual)
        pred = metrics_mod.span_index_from_parses(parsed)
    else:
        if not (args.gold and args.pred):
            raise SancompError("provide either --gold and --pred, or --model and --data")
        gold = metrics_mod.span_index_gold(corpus_io.parse_corpus(args.gold))
        pred = metrics_mod.span_index_gold(corpus_io.parse_corpus(args.pred))
    report = metrics_mod.build_report(pred, gold, average=args.average)
    print(report.render_table())
    if args.report:
        _write_text(args.report, report.to_tsv())
    if args.buckets:
        _write_text(args.buckets, report.buckets_csv())
    return 0


def cmd_enumerate(args) -> int:
    if args.components:
        components = [c for c in args.components.split(",") if c]
        n = len(components)
    else:
        components = None
        n = args.n if args.n is not None else 0
    if n < 2:
        raise SancompError("need at least 2 components to enumerate")
    if args.count_only:
        print(catalan(n - 1))
        return 0
    for tree in enumerate_parses(n):
        print(render_bracket(tree, components))
    return 0


def _trees_from_input(args):
    """Yield (sentence, compound, tree) triples from either input format."""
    if getattr(args, "from_format") == "brackets":
        for sent in corpus_io.parse_corpus(args.input):
            for comp in sent.compounds:
                if comp.gold_tree is None:
                    raise SancompError(f"compound {comp.id} has no annotation to convert")
                yield sent, comp, comp.gold_tree
    else:
        from .treeops import compound_arcs, dependency_to_tree

        for sent, graph in corpus_io.parse_conll(args.input):
            problems = validate_graph(graph, sent)
            if problems:
                raise SancompError(f"{args.input}: {problems[0]}")
            for comp in sent.compounds:
                yield sent, comp, dependency_to_tree(compound_arcs(graph, comp))


def cmd_convert(args) -> int:
    if args.from_format == "conll" and args.to_format == "conll":
        pairs = corpus_io.parse_conll(args.input)
        _write_text(args.output, corpus_io.render_conll([s for s, _ in pairs], [g for _, g in pairs]))
        return 0
    if args.to_format == "brackets":
        sentences = []
        current = None
        for sent, comp, tree in _trees_from_input(args):
            if current is None or current[0].sid != sent.sid:
                if current is not None:
                    sentences.append(_attach(current))
                current = (sent, {})
            current[1][comp.id] = tree
        if current is not None:
            sentences.append(_attach(current))
        _write_text(args.output, corpus_io.render_corpus(sentences))
        return 0
    if args.to_format == "spans":
        from .treeops import tree_to_spans

        lines = []
        for sent, comp, tree in _trees_from_input(args):
            cells = " ".join(f"{s.start}:{s.end}:{s.label.name}" for s in tree_to_spans(tree))
            lines.append(f"{sent.sid}\t{comp.id}\t{cells}")
        _write_text(args.output, "\n".join(lines))
        return 0
    # -> conll: needs head rules to orient arcs
    if not args.rules:
        raise SancompError("converting to conll requires --rules (label inventory with head sides)")
    inventory = load_label_inventory(args.rules, args.mode)
    from .treeops import graph_from_arcs, tree_to_dependency

    by_sentence: dict[str, tuple] = {}
    for sent, comp, tree in _trees_from_input(args):
        entry = by_sentence.setdefault(sent.sid, (sent, {}))
        try:
            entry[1].update(
                tree_to_dependency(tree, inventory.head_rules, offset=comp.token_start - 1)
            )
        except Exception as e:
            raise SancompError(f"compound {comp.id}: {e}") from None
    sentences, graphs = [], []
    for sent, arcs in by_sentence.values():
        sentences.append(sent)
        graphs.append(graph_from_arcs(sent, arcs))
    _write_text(args.output, corpus_io.render_conll(sentences, graphs))
    return 0


def _attach(entry):
    sent, trees = entry
    compounds = tuple(
        dataclasses.replace(c, gold_tree=trees.get(c.id, c.gold_tree)) for c in sent.compounds
    )
    return dataclasses.replace(sent, compounds=compounds)


def cmd_stats(args) -> int:
    sentences = corpus_io.parse_corpus(args.data)
    stats = corpus_io.corpus_stats(sentences)
    print(f"records\t{stats.n_records}")
    print(f"compounds\t{stats.n_compounds}")
    for n in sorted(stats.histogram):
        print(f"N={n}\t{stats.histogram[n]}")
    for name in sorted(stats.label_freq):
        print(f"label {name}\t{stats.label_freq[name]}")
    if args.csv:
        _write_text(args.csv, corpus_io.stats_csv(stats))
    return 0


def cmd_bench(args) -> int:
    if args.passes < 1:
        raise SancompError("--passes must be >= 1")
    model = parser_mod.load_model(args.model)
    contextual = read_contextual_vectors(args.contextual) if args.contextual else None
    sentences = _prepare_for_model(model, corpus_io.parse_corpus(args.data))
    result = metrics_mod.measure_throughput(
        lambda batch: parser_mod.parse(batch, model, contextual),
        sentences,
        passes=args.passes,
    )
    for i, rate in enumerate(result.pass_rates, start=1):
        print(f"pass {i}\t{rate:.2f} sentences/s")
    print(f"median\t{result.sentences_per_second:.2f} sentences/s")
    return 0


def build_argparser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(
        prog="sancomp",
        description="Nested compound analysis via labeled dependency parsing.",
    )
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--data", required=True, help="training corpus")
    p.add_argument("--dev", help="development corpus (defaults to --data)")
    p.add_argument("--labels", help="label inventory file")
    p.add_argument("--mode", choices=["coarse", "fine"], default="fine")
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--out", required=True, help="model output path")
    p.add_argument("--no-context", action="store_true", help="train per-compound, context dropped")
    p.add_argument("--no-span-encoding", action="store_true")
    p.add_argument("--no-pretrained", action="store_true")
    p.add_argument("--vectors", help="pretrained word vectors (.vec)")
    p.add_argument("--contextual", help="precomputed contextual vectors (NCTV)")
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("parse", help="parse a corpus with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-")
    p.add_argument("--format", choices=["spans", "brackets", "conll"], default="brackets")
    p.add_argument("--contextual")
    p.set_defaults(handler=cmd_parse)

    p = sub.add_parser("eval", help="score predictions against gold annotations")
    p.add_argument("--gold")
    p.add_argument("--pred")
    p.add_argument("--model")
    p.add_argument("--data")
    p.add_argument("--average", choices=["micro", "macro"], default="micro")
    p.add_argument("--buckets", help="write per-component-count CSV here")
    p.add_argument("--report", help="write key<TAB>value metrics here")
    p.add_argument("--contextual")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("enumerate", help="enumerate binary bracketings")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--components", help="comma-separated component surfaces")
    group.add_argument("--n", type=int, help="number of components")
    p.add_argument("--count-only", action="store_true")
    p.set_defaults(handler=cmd_enumerate)

    p = sub.add_parser("convert", help="convert between analysis formats")
    p.add_argument("--from", dest="from_format", choices=["brackets", "conll"], required=True)
    p.add_argument("--to", dest="to_format", choices=["brackets", "conll", "spans"], required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-")
    p.add_argument("--rules", help="label inventory with head sides (required for conll output)")
    p.add_argument("--mode", choices=["coarse", "fine"], default="fine")
    p.set_defaults(handler=cmd_convert)

    p = sub.add_parser("stats", help="dataset statistics")
    p.add_argument("--data", required=True)
    p.add_argument("--csv", help="write statistics CSV here")
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("bench", help="measure parsing throughput")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--passes", type=int, default=3)
    p.add_argument("--contextual")
    p.set_defaults(handler=cmd_bench)

    return root


def main(argv=None) -> int:
    args = build_argparser().parse_args(argv)
    try:
        return args.handler(args)
    except (SancompError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
