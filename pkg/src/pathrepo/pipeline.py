"""End-to-end pipeline: config loading, resumable stages and the provenance manifest."""

from __future__ import annotations

import hashlib
import json
import logging
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from . import __version__
from .combos import CombinationGraph, build_combination_graph
from .evidence import build_evidence_graph, candidate_pairs, write_evidence_tsv, write_pairs_tsv, read_evidence_tsv
from .fda import load_fda_snapshot, validate_graph, write_report
from .ingest import (
    load_trials,
    parse_medline,
    read_abstracts_tsv,
    read_trials_tsv,
    write_corpus_tsv,
)
from .kgml import read_kgml, read_pathways_tsv, write_pathways_tsv
from .lexicon import load_drug_lexicon, protein_lexicon
from .miner import DEFAULT_WINDOW, DEFAULT_WINDOWS, DrugTargetGraph, build_drug_target_layer
from .model import PathrepoError, read_combination_tsv, write_combination_tsv
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

logger = logging.getLogger(__name__)

STATE_FILE = ".pathrepo-stages.json"
MANIFEST = "manifest.json"
RUN_LOG = "run_log.json"


class ConfigError(PathrepoError):
    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


class StageError(PathrepoError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


# -- config -------------------------------------------------------------------------

_REQUIRED_INPUTS = ("trials", "medline", "kgml", "drugs")
_OPTIONAL_INPUTS = ("fda", "shots", "responses")


@dataclass
class Config:
    base_dir: Path
    inputs: dict
    disease: str = ""
    skip_missing_abstract: bool = True
    backend: str = "mock"
    mock_mode: str = "rule"
    model: str = "gpt-3.5-turbo"
    base_url: str = "https://api.openai.com/v1"
    retries: int = 3
    backoff: float = 0.5
    min_interval: float = 0.0
    llm_workers: int = 4
    window: int = DEFAULT_WINDOW
    windows: tuple = DEFAULT_WINDOWS
    mining_workers: int = 1
    keywords: tuple = tuple(sorted(COMBINATION_KEYWORDS))
    raw: dict = field(default_factory=dict)

    def path(self, key: str) -> Optional[Path]:
        value = self.inputs.get(key)
        return None if value is None else (self.base_dir / value)


def _get(section: dict, name: str, key: str, kind, default):
    value = section.get(key, default)
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise ConfigError(f"{name}.{key}", f"expected {kind.__name__}, got {value!r}")
    return value


def parse_config(data: dict, base_dir) -> Config:
    base_dir = Path(base_dir)
    for section in data:
        if section not in ("inputs", "ingest", "llm", "mining", "report"):
            raise ConfigError(section, "unknown section")
    inputs = data.get("inputs", {})
    if not isinstance(inputs, dict):
        raise ConfigError("inputs", "must be a table")
    resolved = {}
    for key in _REQUIRED_INPUTS + _OPTIONAL_INPUTS:
        value = inputs.get(key)
        if value is None:
            if key in _REQUIRED_INPUTS:
                raise ConfigError(f"inputs.{key}", "missing required input path")
            continue
        if not isinstance(value, str):
            raise ConfigError(f"inputs.{key}", "expected a path string")
        if not (base_dir / value).exists():
            raise ConfigError(f"inputs.{key}", f"path does not exist: {value}")
        resolved[key] = value
    ingest = data.get("ingest", {})
    llm = data.get("llm", {})
    mining = data.get("mining", {})
    cfg = Config(
        base_dir=base_dir,
        inputs=resolved,
        disease=_get(inputs, "inputs", "disease", str, ""),
        skip_missing_abstract=_get(ingest, "ingest", "skip_missing_abstract", bool, True),
        backend=_get(llm, "llm", "backend", str, "mock"),
        mock_mode=_get(llm, "llm", "mock_mode", str, "rule"),
        model=_get(llm, "llm", "model", str, "gpt-3.5-turbo"),
        base_url=_get(llm, "llm", "base_url", str, "https://api.openai.com/v1"),
        retries=_get(llm, "llm", "retries", int, 3),
        backoff=_get(llm, "llm", "backoff", float, 0.5),
        min_interval=_get(llm, "llm", "min_interval", float, 0.0),
        llm_workers=_get(llm, "llm", "workers", int, 4),
        window=_get(mining, "mining", "window", int, DEFAULT_WINDOW),
        mining_workers=_get(mining, "mining", "workers", int, 1),
        raw=data,
    )
    if cfg.backend not in ("mock", "live"):
        raise ConfigError("llm.backend", "must be 'mock' or 'live'")
    if cfg.mock_mode not in ("rule", "map"):
        raise ConfigError("llm.mock_mode", "must be 'rule' or 'map'")
    if cfg.backend == "mock" and cfg.mock_mode == "map" and "responses" not in resolved:
        raise ConfigError("inputs.responses", "map-mode mock backend needs a responses file")
    windows = mining.get("windows", list(DEFAULT_WINDOWS))
    if not isinstance(windows, list) or not windows:
        raise ConfigError("mining.windows", "must be a non-empty list")
    if not all(isinstance(w, int) and not isinstance(w, bool) and w >= 1 for w in windows):
        raise ConfigError("mining.windows", "entries must be positive integers")
    cfg.windows = tuple(sorted(set(windows)))
    if cfg.window < 1:
        raise ConfigError("mining.window", "must be >= 1")
    keywords = llm.get("keywords")
    if keywords is not None:
        if not isinstance(keywords, list) or not all(isinstance(k, str) for k in keywords):
            raise ConfigError("llm.keywords", "must be a list of strings")
        cfg.keywords = tuple(sorted({k.lower() for k in keywords}))
    return cfg


def load_config(path) -> Config:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"invalid TOML: {exc}") from None
    return parse_config(data, path.parent)


# -- hashing / staleness ---------------------------------------------------------------------


def file_sha256(path) -> str:
    path = Path(path)
    h = hashlib.sha256()
    if path.is_dir():
        for child in sorted(p for p in path.rglob("*") if p.is_file()):
            h.update(str(child.relative_to(path)).encode("utf-8") + b"\0")
            h.update(file_sha256(child).encode("ascii"))
        return h.hexdigest()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _mtime(path: Path) -> float:
    if path.is_dir():
        return max([p.stat().st_mtime for p in path.rglob("*")] + [path.stat().st_mtime])
    return path.stat().st_mtime


@dataclass
class Stage:
    name: str
    inputs: list
    outputs: list
    params: dict
    action: Callable


def _fingerprint(stage: Stage) -> str:
    payload = {
        "stage": stage.name,
        "inputs": [file_sha256(p) for p in stage.inputs],
        "params": stage.params,
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode("utf-8")).hexdigest()


def _up_to_date(stage: Stage, recorded: Optional[str], fingerprint: str) -> bool:
    if recorded != fingerprint:
        return False
    if not all(p.exists() for p in stage.outputs):
        return False
    newest_input = max((_mtime(p) for p in stage.inputs), default=0.0)
    return min(_mtime(p) for p in stage.outputs) >= newest_input


# -- the pipeline --------------------------------------------------------------------------


@dataclass
class RunResult:
    exit_code: int
    out_dir: Path
    ran: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    error: Optional[str] = None


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _make_backend(cfg: Config, drug_lexicon_path: Path, shots):
    if cfg.backend == "live":
        return ChatCompletionsBackend(cfg.base_url, cfg.model, min_interval=cfg.min_interval)
    if cfg.mock_mode == "map":
        responses = json.loads(cfg.path("responses").read_text(encoding="utf-8"))
        return MockBackend(responses=responses)
    keywords = set(cfg.keywords) | shot_keywords(shots)
    return MockBackend(lexicon=load_drug_lexicon(drug_lexicon_path), keywords=keywords)


def build_stages(cfg: Config, out: Path, workers: Optional[int] = None, log: Optional[RunResult] = None) -> list:
    llm_workers = workers or cfg.llm_workers
    mining_workers = workers or cfg.mining_workers
    d = {name: out / name for name in ("corpus", "extract", "graph", "mine", "evidence", "report")}

    trials_tsv = d["corpus"] / "trials.tsv"
    abstracts_tsv = d["corpus"] / "abstracts.tsv"
    pathways_tsv = d["corpus"] / "pathways.tsv"
    ingest_report = d["corpus"] / "ingest_report.json"
    triples_tsv = d["extract"] / "triples.tsv"
    extract_report = d["extract"] / "extract_report.json"
    combos_tsv = d["graph"] / "combos.tsv"
    valid_tsv = d["graph"] / "combos.valid.tsv"
    validation_json = d["graph"] / "validation_report.json"
    stats_json = d["graph"] / "combos_stats.json"
    dt_tsv = d["mine"] / "dt.tsv"
    dt_sweep_tsv = d["mine"] / "dt_sweep.tsv"
    evidence_tsv = d["evidence"] / "evidence.tsv"
    pairs_tsv = d["evidence"] / "pairs.tsv"
    report_dir = d["report"]

    drugs_path = cfg.path("drugs")
    shots_path = cfg.path("shots")
    fda_path = cfg.path("fda")

    def ingest():
        trials = load_trials(cfg.path("trials"), workers=llm_workers)
        write_corpus_tsv(trials_tsv, ((t.nct_id, t.description) for t in trials))
        records = parse_medline(cfg.path("medline").read_text(encoding="utf-8"), cfg.skip_missing_abstract)
        docs = sorted(records, key=lambda r: r.pmid)
        write_corpus_tsv(abstracts_tsv, ((r.pmid, r.abstract) for r in docs))
        module = read_kgml(cfg.path("kgml"), cfg.disease)
        write_pathways_tsv(pathways_tsv, module)
        _write_json(ingest_report, {
            "trials": len(trials),
            "abstracts": len(docs),
            "skipped_without_abstract": records.skipped,
            "pathways": len(module),
            "kgml_warnings": list(module.warnings),
        })

    def extract():
        shots = load_shots(shots_path)
        backend = _make_backend(cfg, drugs_path, shots)
        run = extract_corpus(read_trials_tsv(trials_tsv), backend, shots, workers=llm_workers,
                             retries=cfg.retries, backoff=cfg.backoff)
        write_combination_tsv(triples_tsv, run.triples)
        _write_json(extract_report, run.report())
        if run.errors and log is not None:
            log.warnings.extend(f"extraction failed for {n}: {m}" for n, m in run.errors)

    def graph():
        lex = load_drug_lexicon(drugs_path)
        raw = read_combination_tsv(triples_tsv)
        normalized = [(t.nct_id, lex.canonicalize(t.drug_a), lex.canonicalize(t.drug_b), t.relation) for t in raw]
        combos = build_combination_graph(normalized)
        combos.write_tsv(combos_tsv)
        _write_json(stats_json, combos.stats())
        if fda_path is not None:
            valid, report = validate_graph(combos, load_fda_snapshot(fda_path))
        else:
            valid, report = validate_graph(combos, combos.nodes)
        valid.write_tsv(valid_tsv)
        write_report(validation_json, report)

    def mine():
        docs = read_abstracts_tsv(abstracts_tsv)
        module = read_pathways_tsv(pathways_tsv)
        drug_lex, prot_lex = load_drug_lexicon(drugs_path), protein_lexicon(module)
        widest = max(cfg.window, *cfg.windows)
        full = build_drug_target_layer(docs, drug_lex, prot_lex, widest, workers=mining_workers)
        full.within(cfg.window).write_tsv(dt_tsv)
        full.within(max(cfg.windows)).write_tsv(dt_sweep_tsv)

    def evidence():
        module = read_pathways_tsv(pathways_tsv)
        combos = CombinationGraph.read_tsv(valid_tsv)
        ev = build_evidence_graph(DrugTargetGraph.read_tsv(dt_tsv), combos, module)
        write_evidence_tsv(evidence_tsv, ev)
        write_pairs_tsv(pairs_tsv, candidate_pairs(ev, combos))

    def report():
        module = read_pathways_tsv(pathways_tsv)
        report_dir.mkdir(parents=True, exist_ok=True)
        sweep = sweep_from_graph(DrugTargetGraph.read_tsv(dt_sweep_tsv), module, cfg.windows)
        write_sweep_csv(report_dir / "sweep.csv", sweep)
        write_stats_csv(report_dir / "sweep_stats.csv", summary_stats(sweep))
        export_figure_data(sweep, report_dir / "figures")
        cov = coverage_report(read_evidence_tsv(evidence_tsv), module.pathway_ids)
        write_coverage_csv(report_dir / "coverage.csv", cov)
        write_coverage_summary(report_dir / "coverage_summary.txt", cov)

    trial_inputs = [cfg.path("trials"), cfg.path("medline"), cfg.path("kgml")]
    llm_params = {"backend": cfg.backend, "mock_mode": cfg.mock_mode, "model": cfg.model,
                  "base_url": cfg.base_url, "keywords": cfg.keywords}
    extract_inputs = [trials_tsv, drugs_path] + [p for p in (shots_path, cfg.path("responses")) if p is not None]
    return [
        Stage("ingest", trial_inputs, [trials_tsv, abstracts_tsv, pathways_tsv, ingest_report],
              {"skip_missing_abstract": cfg.skip_missing_abstract, "disease": cfg.disease}, ingest),
        Stage("extract", extract_inputs, [triples_tsv, extract_report], llm_params, extract),
        Stage("validate", [triples_tsv, drugs_path] + ([fda_path] if fda_path else []),
              [combos_tsv, valid_tsv, validation_json, stats_json], {}, graph),
        Stage("mine", [abstracts_tsv, pathways_tsv, drugs_path], [dt_tsv, dt_sweep_tsv],
              {"window": cfg.window, "windows": list(cfg.windows)}, mine),
        Stage("evidence", [dt_tsv, valid_tsv, pathways_tsv], [evidence_tsv, pairs_tsv], {}, evidence),
        Stage("report", [dt_sweep_tsv, evidence_tsv, pathways_tsv],
              [report_dir / "sweep.csv", report_dir / "sweep_stats.csv", report_dir / "coverage.csv",
               report_dir / "coverage_summary.txt", report_dir / "figures" / "drug_heatmap.csv"],
              {"windows": list(cfg.windows)}, report),
    ]


def _manifest(cfg: Config, out: Path) -> dict:
    inputs = {key: {"path": value, "sha256": file_sha256(cfg.base_dir / value)} for key, value in sorted(cfg.inputs.items())}
    artifacts = {}
    for p in sorted(out.rglob("*")):
        rel = str(p.relative_to(out))
        if p.is_file() and rel not in (MANIFEST, RUN_LOG, STATE_FILE):
            artifacts[rel] = file_sha256(p)
    return {
        "config": cfg.raw,
        "inputs": inputs,
        "artifacts": artifacts,
        "versions": {"pathrepo": __version__, "numpy": np.__version__, "python": platform.python_version()},
    }


def run_pipeline(cfg: Config, out_dir, workers: Optional[int] = None, force: bool = False) -> RunResult:
    """Run every stage in order, skipping ones whose inputs and parameters are unchanged."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = RunResult(0, out)
    state_path = out / STATE_FILE
    state = json.loads(state_path.read_text()) if state_path.exists() and not force else {}
    timings = {}
    for stage in build_stages(cfg, out, workers, result):
        for p in stage.outputs:
            p.parent.mkdir(parents=True, exist_ok=True)
        fingerprint = _fingerprint(stage)
        if _up_to_date(stage, state.get(stage.name), fingerprint):
            logger.info("stage %s up to date, skipping", stage.name)
            result.skipped.append(stage.name)
            continue
        logger.info("running stage %s", stage.name)
        t0 = time.perf_counter()
        try:
            stage.action()
        except Exception as exc:  # noqa: BLE001 - any stage failure maps to exit 1
            logger.exception("stage %s failed", stage.name)
            result.exit_code = 1
            result.error = str(StageError(stage.name, exc))
            state.pop(stage.name, None)
            break
        timings[stage.name] = round(time.perf_counter() - t0, 4)
        state[stage.name] = fingerprint
        result.ran.append(stage.name)
    state_path.write_text(json.dumps(state, indent=2, sort_keys=True) + "\n")
    if result.exit_code == 0:
        _write_json(out / MANIFEST, _manifest(cfg, out))
    _write_json(out / RUN_LOG, {
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "ran": result.ran,
        "skipped": result.skipped,
        "timings_s": timings,
        "warnings": result.warnings,
        "error": result.error,
    })
    for w in result.warnings:
        logger.warning(w)
    return result
