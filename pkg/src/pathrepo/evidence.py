"""Join of the proximity layer, the combination layer and the pathway module."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .combos import CombinationGraph
from .kgml import PathwayModule
from .miner import DrugTargetGraph
from .model import EvidenceRecord, GraphFormatError

NO_TRIAL = "-"


class PairStatus(str, enum.Enum):
    TRIAL_SUPPORTED = "trial-supported"
    HYPOTHESIS = "hypothesis"


@dataclass(frozen=True)
class EvidenceGraph:
    records: tuple
    pathway_ids: tuple = ()
    by_pathway: dict = field(default=None, init=False, compare=False, repr=False)

    def __post_init__(self):
        records = tuple(sorted(set(self.records), key=EvidenceRecord.sort_key))
        object.__setattr__(self, "records", records)
        by: dict = {}
        for r in records:
            by.setdefault(r.pathway_id, set()).add(r.drug)
        object.__setattr__(self, "by_pathway", {k: frozenset(v) for k, v in sorted(by.items())})

    @property
    def drugs(self) -> frozenset:
        return frozenset(r.drug for r in self.records)

    def records_for(self, pathway_id: str) -> list:
        return [r for r in self.records if r.pathway_id == pathway_id]


def build_evidence_graph(dt: DrugTargetGraph, combos: CombinationGraph, module: PathwayModule) -> EvidenceGraph:
    """Attach every drug-target edge to the pathways listing its target.

    A drug that appears in the combination layer yields one record per trial id;
    otherwise a single record without a trial id.
    """
    index = module.pathways_by_protein()
    records = []
    for drug, target, pmids, _ in dt.aggregated():
        pathways = index.get(target, ())
        if not pathways:
            continue
        trials = combos.trials_for_drug(drug) or (None,)
        pmids = frozenset(pmids)
        for pid in pathways:
            for trial in trials:
                records.append(EvidenceRecord(pid, drug, target, trial, pmids))
    return EvidenceGraph(tuple(records), module.pathway_ids)


def pathway_coverage(ev: EvidenceGraph) -> dict:
    """Distinct drug count per covered pathway."""
    return {pid: len(drugs) for pid, drugs in ev.by_pathway.items()}


def multi_covered(coverage: dict, threshold: int = 2) -> dict:
    return {pid: n for pid, n in coverage.items() if n >= threshold}


def combo_layer_coverage(ev: EvidenceGraph) -> dict:
    """Like :func:`pathway_coverage` but only counting drugs seen in a trial."""
    by: dict = {}
    for r in ev.records:
        if r.trial_id is not None:
            by.setdefault(r.pathway_id, set()).add(r.drug)
    return {pid: len(v) for pid, v in sorted(by.items())}


@dataclass(frozen=True)
class CandidatePair:
    drug_a: str
    drug_b: str
    pathway_id: str
    status: PairStatus
    trial_ids: tuple = ()
    pmids: frozenset = frozenset()


def candidate_pairs(ev: EvidenceGraph, combos: CombinationGraph) -> list:
    """Every unordered pair of drugs covering the same pathway."""
    pmids_by: dict = {}
    for r in ev.records:
        pmids_by.setdefault((r.pathway_id, r.drug), set()).update(r.pmids)
    out = []
    for pid, drugs in ev.by_pathway.items():
        for a, b in itertools.combinations(sorted(drugs), 2):
            trials = combos.trials_for_pair(a, b)
            status = PairStatus.TRIAL_SUPPORTED if trials else PairStatus.HYPOTHESIS
            pmids = frozenset(pmids_by[(pid, a)] | pmids_by[(pid, b)])
            out.append(CandidatePair(a, b, pid, status, trials, pmids))
    return out


# -- serialization ------------------------------------------------------------------


def write_evidence_tsv(path, ev: EvidenceGraph) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in ev.records:
            fh.write(f"{r.drug}\t{r.target}\t{r.pathway_id}\t{r.trial_id or NO_TRIAL}\t{','.join(sorted(r.pmids))}\n")


def read_evidence_tsv(path, pathway_ids: Iterable[str] = ()) -> EvidenceGraph:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise GraphFormatError(f"{path}:{lineno}: expected 5 fields")
            drug, target, pid, trial, pmids = parts
            records.append(EvidenceRecord(pid, drug, target, None if trial == NO_TRIAL else trial,
                                          frozenset(p for p in pmids.split(",") if p)))
    return EvidenceGraph(tuple(records), tuple(pathway_ids))


def write_pairs_tsv(path, pairs: Iterable[CandidatePair]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            trials = ",".join(p.trial_ids) or NO_TRIAL
            fh.write(f"{p.drug_a}\t{p.drug_b}\t{p.pathway_id}\t{p.status.value}\t{trials}\t{','.join(sorted(p.pmids))}\n")
