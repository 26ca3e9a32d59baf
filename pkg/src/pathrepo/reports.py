"""Result tables and figure data: window sweep, summary statistics, coverage."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .evidence import EvidenceGraph, pathway_coverage
from .kgml import PathwayModule
from .lexicon import PhraseLexicon
from .miner import DEFAULT_WINDOWS, DrugTargetGraph, build_drug_target_layer
from .model import PathrepoError

METRICS = ("pmids", "drugs", "proteins")


class StatsError(PathrepoError):
    pass


@dataclass(frozen=True)
class SweepTable:
    """Per-pathway counts at each window; arrays are ``(n_pathways, n_windows)``."""

    pathway_ids: tuple
    windows: tuple
    pmids: np.ndarray
    drugs: np.ndarray
    proteins: np.ndarray

    def metric(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def row(self, pathway_id: str, window: int) -> tuple:
        i, j = self.pathway_ids.index(pathway_id), self.windows.index(window)
        return int(self.pmids[i, j]), int(self.drugs[i, j]), int(self.proteins[i, j])

    def __eq__(self, other):
        if not isinstance(other, SweepTable):
            return NotImplemented
        return (self.pathway_ids == other.pathway_ids and self.windows == other.windows
                and all(np.array_equal(self.metric(m), other.metric(m)) for m in METRICS))


def sweep_from_graph(dt: DrugTargetGraph, module: PathwayModule, windows: Sequence[int] = DEFAULT_WINDOWS) -> SweepTable:
    """Count PMIDs, drugs and proteins per pathway for each window.

    ``dt`` must have been mined at a window at least ``max(windows)`` wide.
    """
    windows = tuple(windows)
    if list(windows) != sorted(set(windows)):
        raise ValueError("windows must be strictly ascending")
    ids = module.pathway_ids
    row = {pid: i for i, pid in enumerate(ids)}
    index = module.pathways_by_protein()
    sets = [[(set(), set(), set()) for _ in windows] for _ in ids]
    thresholds = np.asarray(windows)
    for e in dt.edges:
        first = int(np.searchsorted(thresholds, e.distance))
        for pid in index.get(e.protein, ()):
            cells = sets[row[pid]]
            for j in range(first, len(windows)):
                pm, dr, pr = cells[j]
                pm.add(e.pmid)
                dr.add(e.drug)
                pr.add(e.protein)
    counts = np.array([[[len(s) for s in cell] for cell in r] for r in sets], dtype=np.int64)
    counts = counts.reshape(len(ids), len(windows), 3)
    return SweepTable(ids, windows, counts[..., 0], counts[..., 1], counts[..., 2])


def proximity_sweep(corpus, drug_lex: PhraseLexicon, protein_lex: PhraseLexicon, module: PathwayModule,
                    windows: Sequence[int] = DEFAULT_WINDOWS, workers: int = 1) -> SweepTable:
    windows = tuple(windows)
    if not windows:
        raise ValueError("need at least one window")
    dt = build_drug_target_layer(corpus, drug_lex, protein_lex, max(windows), workers)
    return sweep_from_graph(dt, module, windows)


@dataclass(frozen=True)
class MetricStats:
    mean: float
    max: int
    mean_over_max: Optional[float]


def summary_stats(sweep: SweepTable) -> dict:
    """``{window: {metric: MetricStats}}``; means skip pathways with a zero count."""
    if not sweep.pathway_ids or not sweep.windows:
        raise StatsError("sweep table is empty")
    out = {}
    for j, w in enumerate(sweep.windows):
        per = {}
        for m in METRICS:
            col = sweep.metric(m)[:, j]
            covered = col[col > 0]
            if covered.size == 0:
                per[m] = MetricStats(0.0, 0, None)
                continue
            mean, top = float(covered.mean()), int(covered.max())
            per[m] = MetricStats(mean, top, mean / top)
        out[w] = per
    return out


def protein_to_drug_ratios(stats: dict) -> dict:
    """``{window: (protein mean / drug mean, protein max / drug max)}``."""
    out = {}
    for w, per in stats.items():
        d, p = per["drugs"], per["proteins"]
        out[w] = (p.mean / d.mean if d.mean else None, p.max / d.max if d.max else None)
    return out


def _r2(x):
    return "" if x is None else f"{x:.2f}"


def write_sweep_csv(path, sweep: SweepTable) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pathway_id", "window", "pubmed", "drugs", "proteins"])
        for i, pid in enumerate(sweep.pathway_ids):
            for j, win in enumerate(sweep.windows):
                w.writerow([pid, win, sweep.pmids[i, j], sweep.drugs[i, j], sweep.proteins[i, j]])


def write_stats_csv(path, stats: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["window", "metric", "mean", "max", "mean_over_max"])
        for win, per in stats.items():
            for m in METRICS:
                s = per[m]
                w.writerow([win, m, _r2(s.mean), s.max, _r2(s.mean_over_max)])


# -- coverage -------------------------------------------------------------------------


@dataclass(frozen=True)
class CoverageReport:
    rows: tuple  # (pathway_id, drug_count), count >= 2, most covered first
    under_covered: tuple  # exactly one drug
    uncovered: tuple  # no drug at all
    total: int

    @property
    def header(self) -> str:
        return f"{len(self.rows)}/{self.total} covered"


def coverage_report(ev: EvidenceGraph, pathway_ids: Iterable[str] = ()) -> CoverageReport:
    coverage = pathway_coverage(ev)
    universe = list(dict.fromkeys(list(pathway_ids) or list(ev.pathway_ids) or list(coverage)))
    universe.extend(p for p in coverage if p not in universe)
    rows = sorted(((p, n) for p, n in coverage.items() if n >= 2), key=lambda r: (-r[1], r[0]))
    under = sorted(p for p, n in coverage.items() if n == 1)
    uncovered = tuple(p for p in universe if p not in coverage)
    return CoverageReport(tuple(rows), tuple(under), uncovered, len(universe))


def write_coverage_csv(path, report: CoverageReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pathway_id", "drug_count"])
        w.writerows(report.rows)


def write_coverage_summary(path, report: CoverageReport) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.header + "\n")
        fh.write("under_covered\t" + ",".join(report.under_covered) + "\n")
        fh.write("uncovered\t" + ",".join(report.uncovered) + "\n")


# -- figure data --------------------------------------------------------------------------


def _write_matrix(path, ids, windows, matrix) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pathway_id", *windows])
        for pid, row in zip(ids, matrix):
            w.writerow([pid, *(int(x) for x in row)])


def read_heatmap_csv(path) -> tuple:
    """Inverse of the heatmap writer: ``(pathway_ids, windows, matrix)``."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    windows = tuple(int(x) for x in rows[0][1:])
    ids = tuple(r[0] for r in rows[1:])
    matrix = np.array([[int(x) for x in r[1:]] for r in rows[1:]], dtype=np.int64).reshape(len(ids), len(windows))
    return ids, windows, matrix


def export_figure_data(sweep: SweepTable, out_dir) -> dict:
    """Write drug/protein heatmap matrices and long-format violin data."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "drug_heatmap": out_dir / "drug_heatmap.csv",
        "protein_heatmap": out_dir / "protein_heatmap.csv",
        "violin": out_dir / "pubmed_violin.csv",
    }
    _write_matrix(paths["drug_heatmap"], sweep.pathway_ids, sweep.windows, sweep.drugs)
    _write_matrix(paths["protein_heatmap"], sweep.pathway_ids, sweep.windows, sweep.proteins)
    with open(paths["violin"], "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["window", "pathway_id", "pmid_count"])
        for j, win in enumerate(sweep.windows):
            for i, pid in enumerate(sweep.pathway_ids):
                w.writerow([win, pid, int(sweep.pmids[i, j])])
    return paths
