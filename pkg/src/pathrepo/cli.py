"""``pathrepo`` command line."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .combos import CombinationGraph, build_combination_graph
from .evidence import build_evidence_graph, candidate_pairs, read_evidence_tsv, write_evidence_tsv, write_pairs_tsv
from .fda import fetch_snapshot, load_fda_snapshot, validate_graph, write_report
from .ingest import (
    IngestError,
    load_trials,
    parse_medline,
    read_abstracts_tsv,
    read_trials_tsv,
    write_corpus_tsv,
)
from .kgml import PathwayModule, parse_kgml, read_pathways_tsv, write_pathways_tsv
from .lexicon import load_drug_lexicon, protein_lexicon
from .miner import DEFAULT_WINDOW, DrugTargetGraph, build_drug_target_layer
from .model import PathrepoError, read_combination_tsv, write_combination_tsv
from .pipeline import ConfigError, load_config, run_pipeline
from .prompts import ChatCompletionsBackend, MockBackend, extract_corpus, load_shots, shot_keywords
from .combos import COMBINATION_KEYWORDS
from .reports import (
    coverage_report,
    export_figure_data,
    summary_stats,
    sweep_from_graph,
    write_coverage_csv,
    write_coverage_summary,
    write_stats_csv,
    write_sweep_csv,
)

logger = logging.getLogger("pathrepo")


def _windows(text: str) -> list:
    try:
        values = sorted({int(x) for x in text.split(",") if x.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad window list {text!r}") from None
    if not values or values[0] < 1:
        raise argparse.ArgumentTypeError("windows must be positive integers")
    return values


def _read_module(path) -> PathwayModule:
    data = Path(path).read_bytes()
    if data.lstrip().startswith(b"<"):
        return parse_kgml(data)
    return read_pathways_tsv(path)


def _read_abstracts(path) -> list:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("PMID-"):
        return sorted(parse_medline(text), key=lambda d: d.pmid)
    return read_abstracts_tsv(path)


def _read_trials(path) -> list:
    path = Path(path)
    return load_trials(path) if path.is_dir() else read_trials_tsv(path)


# -- subcommands ------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    if args.kind == "trials":
        trials = load_trials(args.source, workers=args.workers)
        write_corpus_tsv(args.out, ((t.nct_id, t.description) for t in trials))
        print(f"{len(trials)} trials -> {args.out}")
    elif args.kind == "medline":
        records = parse_medline(Path(args.source).read_text(encoding="utf-8"), not args.strict)
        docs = sorted(records, key=lambda d: d.pmid)
        write_corpus_tsv(args.out, ((d.pmid, d.abstract) for d in docs))
        print(f"{len(docs)} abstracts ({records.skipped} skipped without abstract) -> {args.out}")
    else:
        module = parse_kgml(Path(args.source).read_bytes(), args.disease or "")
        write_pathways_tsv(args.out, module)
        print(f"{len(module)} pathways, {len(module.unique_proteins)} unique proteins -> {args.out}")
    return 0


def cmd_extract(args) -> int:
    shots = load_shots(args.shots)
    if args.backend == "live":
        backend = ChatCompletionsBackend(args.base_url, args.model)
    elif args.responses:
        backend = MockBackend(responses=json.loads(Path(args.responses).read_text(encoding="utf-8")))
    elif args.drugs:
        backend = MockBackend(lexicon=load_drug_lexicon(args.drugs), keywords=set(COMBINATION_KEYWORDS) | shot_keywords(shots))
    else:
        print("mock backend needs --responses (map mode) or --drugs (rule mode)", file=sys.stderr)
        return 2
    run = extract_corpus(_read_trials(args.trials), backend, shots, workers=args.workers, retries=args.retries)
    write_combination_tsv(args.out, run.triples)
    if args.report:
        Path(args.report).write_text(json.dumps(run.report(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for nct_id, message in run.errors:
        print(f"warning: {nct_id}: {message}", file=sys.stderr)
    print(f"{len(run.triples)} triples, {len(run.rejects)} rejected lines, {len(run.errors)} failed trials -> {args.out}")
    return 0


def cmd_graph(args) -> int:
    graph = build_combination_graph(read_combination_tsv(args.input))
    graph.write_tsv(args.out)
    if args.stats:
        print(json.dumps(graph.stats(), indent=2, sort_keys=True))
    return 0


def cmd_validate(args) -> int:
    graph = CombinationGraph.read_tsv(args.graph)
    valid, report = validate_graph(graph, load_fda_snapshot(args.fda))
    valid.write_tsv(args.out)
    if args.report:
        write_report(args.report, report)
    print(json.dumps(report.to_json()["table"]))
    return 0


def cmd_fda(args) -> int:
    n = fetch_snapshot(args.out, url=args.url, max_records=args.max_records)
    print(f"{n} names -> {args.out}")
    return 0


def cmd_mine(args) -> int:
    docs = _read_abstracts(args.medline)
    module = _read_module(args.kgml)
    drug_lex, prot_lex = load_drug_lexicon(args.drugs), protein_lexicon(module)
    if args.windows:
        full = build_drug_target_layer(docs, drug_lex, prot_lex, max(args.windows), workers=args.workers)
        out = Path(args.out)
        for w in args.windows:
            path = out.with_name(f"{out.stem}.w{w}{out.suffix}")
            full.within(w).write_tsv(path)
            print(f"window {w}: {len(full.within(w))} edges -> {path}")
    else:
        dt = build_drug_target_layer(docs, drug_lex, prot_lex, args.window, workers=args.workers)
        dt.write_tsv(args.out)
        print(f"{len(dt)} proximity edges, {len(dt.pairs)} drug-target pairs -> {args.out}")
    return 0


def cmd_evidence(args) -> int:
    module = _read_module(args.kgml)
    combos = CombinationGraph.read_tsv(args.combos)
    ev = build_evidence_graph(DrugTargetGraph.read_tsv(args.dt), combos, module)
    write_evidence_tsv(args.out, ev)
    pairs = candidate_pairs(ev, combos)
    if args.pairs:
        write_pairs_tsv(args.pairs, pairs)
    print(f"{len(ev.records)} evidence records, {len(pairs)} candidate pairs")
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    module = _read_module(args.kgml)
    if args.kind in ("sweep", "figures"):
        if not args.dt:
            print("--dt is required", file=sys.stderr)
            return 2
        sweep = sweep_from_graph(DrugTargetGraph.read_tsv(args.dt), module, args.windows)
        if args.kind == "sweep":
            write_sweep_csv(out / "sweep.csv", sweep)
            write_stats_csv(out / "sweep_stats.csv", summary_stats(sweep))
        else:
            export_figure_data(sweep, out)
    else:
        if not args.evidence:
            print("--evidence is required", file=sys.stderr)
            return 2
        cov = coverage_report(read_evidence_tsv(args.evidence), module.pathway_ids)
        write_coverage_csv(out / "coverage.csv", cov)
        write_coverage_summary(out / "coverage_summary.txt", cov)
        print(cov.header)
    return 0


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    result = run_pipeline(cfg, args.out, workers=args.workers, force=args.force)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if result.exit_code:
        print(result.error, file=sys.stderr)
    else:
        print(f"ran: {', '.join(result.ran) or '-'}; skipped: {', '.join(result.skipped) or '-'}")
    return result.exit_code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pathrepo", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    ing = sub.add_parser("ingest", help="normalize raw inputs")
    ing.add_argument("kind", choices=("trials", "medline", "kgml"))
    ing.add_argument("source")
    ing.add_argument("--out", required=True)
    ing.add_argument("--disease")
    ing.add_argument("--strict", action="store_true", help="fail on MEDLINE records without abstract")
    ing.add_argument("--workers", type=int, default=1)
    ing.set_defaults(func=cmd_ingest)

    ex = sub.add_parser("extract", help="LLM drug-combination extraction")
    ex.add_argument("--trials", required=True, help="trial JSON directory or trials TSV")
    ex.add_argument("--shots", help="annotated shots file (default: bundled)")
    ex.add_argument("--backend", choices=("live", "mock"), default="mock")
    ex.add_argument("--responses", help="JSON map nct_id -> response (mock map mode)")
    ex.add_argument("--drugs", help="drug lexicon (mock rule mode)")
    ex.add_argument("--base-url", default="https://api.openai.com/v1")
    ex.add_argument("--model", default="gpt-3.5-turbo")
    ex.add_argument("--retries", type=int, default=3)
    ex.add_argument("--workers", type=int, default=4)
    ex.add_argument("--report")
    ex.add_argument("--out", required=True)
    ex.set_defaults(func=cmd_extract)

    gr = sub.add_parser("graph", help="build graphs")
    gr.add_argument("kind", choices=("combos",))
    gr.add_argument("--in", dest="input", required=True)
    gr.add_argument("--out", required=True)
    gr.add_argument("--stats", action="store_true")
    gr.set_defaults(func=cmd_graph)

    va = sub.add_parser("validate", help="validate drug nodes against an FDA snapshot")
    va.add_argument("--graph", required=True)
    va.add_argument("--fda", required=True)
    va.add_argument("--out", required=True)
    va.add_argument("--report")
    va.set_defaults(func=cmd_validate)

    fd = sub.add_parser("fda", help="OpenFDA snapshot tools")
    fd.add_argument("action", choices=("fetch",))
    fd.add_argument("--out", required=True)
    fd.add_argument("--url", default="https://api.fda.gov/drug/drugsfda.json")
    fd.add_argument("--max-records", type=int, default=30000)
    fd.set_defaults(func=cmd_fda)

    mi = sub.add_parser("mine", help="mine drug-target proximity edges")
    mi.add_argument("--medline", required=True, help="MEDLINE file or abstracts TSV")
    mi.add_argument("--drugs", required=True)
    mi.add_argument("--kgml", required=True, help="KGML file or pathways TSV")
    mi.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    mi.add_argument("--windows", type=_windows, help="sweep mode, e.g. 10,20,30,40,50")
    mi.add_argument("--workers", type=int, default=1)
    mi.add_argument("--out", required=True)
    mi.set_defaults(func=cmd_mine)

    ev = sub.add_parser("evidence", help="join layers into the evidence graph")
    ev.add_argument("--dt", required=True)
    ev.add_argument("--combos", required=True)
    ev.add_argument("--kgml", required=True)
    ev.add_argument("--out", required=True)
    ev.add_argument("--pairs")
    ev.set_defaults(func=cmd_evidence)

    rp = sub.add_parser("report", help="tables and figure data")
    rp.add_argument("kind", choices=("sweep", "coverage", "figures"))
    rp.add_argument("--kgml", required=True)
    rp.add_argument("--dt", help="proximity edges mined at the widest window")
    rp.add_argument("--evidence")
    rp.add_argument("--windows", type=_windows, default=[10, 20, 30, 40, 50])
    rp.add_argument("--out", required=True)
    rp.set_defaults(func=cmd_report)

    rn = sub.add_parser("run", help="run the whole pipeline from a config file")
    rn.add_argument("--config", required=True)
    rn.add_argument("--out", required=True)
    rn.add_argument("--workers", type=int)
    rn.add_argument("--force", action="store_true", help="ignore cached stage state")
    rn.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PathrepoError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
