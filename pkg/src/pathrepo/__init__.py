"""Drug-combination evidence graphs from clinical trials, abstracts and KEGG pathways."""

__version__ = "0.1.0"

from .combos import CombinationGraph, build_combination_graph, drugs_in_layer
from .evidence import (
    CandidatePair,
    EvidenceGraph,
    PairStatus,
    build_evidence_graph,
    candidate_pairs,
    pathway_coverage,
)
from .fda import ValidationReport, load_fda_snapshot, validate_graph
from .ingest import TokenStream, parse_medline, parse_trial, tokenize
from .kgml import PathwayModule, parse_kgml, unique_target_count
from .lexicon import Mention, PhraseLexicon, find_mentions, load_drug_lexicon, protein_lexicon
from .miner import DrugTargetGraph, build_drug_target_layer, calc_distance, mine_abstract
from .model import (
    AbstractDoc,
    CombinationTriple,
    DrugTerm,
    EvidenceRecord,
    Pathway,
    ProteinTerm,
    ProximityEdge,
    TrialDoc,
    canonical_pair,
)
from .prompts import MockBackend, build_prompt, extract_trial, parse_response, parse_shot
from .reports import coverage_report, export_figure_data, proximity_sweep, summary_stats
