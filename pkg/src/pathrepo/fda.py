"""Drug-name validation against an offline OpenFDA name snapshot."""

from __future__ import annotations

import json
import logging
import re
import urllib.parse
import urllib.request
from dataclasses import asdict, dataclass, field

from .combos import CombinationGraph
from .model import PathrepoError, normalize_term

logger = logging.getLogger(__name__)

# Sponsor prefix plus compound number: AZD6738, BMS-791325, TAK-491, JNJ-42847922.
INVESTIGATIONAL_RE = re.compile(r"^[a-z]{2,4}-?\d{3,8}$")

OPENFDA_URL = "https://api.fda.gov/drug/drugsfda.json"


class ValidationError(PathrepoError):
    pass


def load_fda_snapshot(path) -> frozenset:
    """Newline-delimited generic/brand names -> lowercase name set."""
    with open(path, encoding="utf-8") as fh:
        names = frozenset(n for n in (normalize_term(line) for line in fh) if n)
    if not names:
        raise ValidationError(f"{path}: FDA snapshot is empty")
    return names


def is_investigational(name: str) -> bool:
    return bool(INVESTIGATIONAL_RE.match(name))


@dataclass
class ValidationReport:
    nodes_total: int
    edges_total: int
    nodes_validated: int
    edges_validated: int
    rejected_terms: list = field(default_factory=list)
    investigational: list = field(default_factory=list)
    combination_therapy_edges: int = 0

    def to_json(self) -> dict:
        out = asdict(self)
        out["rejected_terms"] = [{"term": t, "reason": r} for t, r in self.rejected_terms]
        out["table"] = {
            "#Nodes": self.nodes_total,
            "# Edges": self.edges_total,
            "#Validated Nodes": self.nodes_validated,
            "# Validated Edges": self.edges_validated,
        }
        return out


def validate_graph(graph: CombinationGraph, snapshot) -> tuple:
    """Keep nodes named in the snapshot or shaped like investigational codes.

    Returns ``(validated_graph, report)``.  Edges survive only when both
    endpoints survive.
    """
    kept, investigational, rejected = set(), [], []
    for node in sorted(graph.nodes):
        if node in snapshot:
            kept.add(node)
        elif is_investigational(node):
            kept.add(node)
            investigational.append(node)
        else:
            rejected.append((node, "not in snapshot"))
    valid = graph.subgraph(kept)
    report = ValidationReport(
        nodes_total=len(graph.nodes),
        edges_total=len(graph.edges),
        nodes_validated=len(valid.nodes),
        edges_validated=len(valid.edges),
        rejected_terms=rejected,
        investigational=investigational,
        combination_therapy_edges=valid.stats()["combination_therapy_edges"],
    )
    return valid, report


def write_report(path, report: ValidationReport) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def fetch_snapshot(out_path, url: str = OPENFDA_URL, page_size: int = 1000, max_records: int = 30000,
                   timeout: float = 60.0) -> int:
    """Page through the drugs@FDA endpoint and write generic and brand names.

    Needs network access; returns the number of distinct names written.
    """
    names = set()
    skip = 0
    while skip < max_records:
        query = urllib.parse.urlencode({"limit": page_size, "skip": skip})
        with urllib.request.urlopen(f"{url}?{query}", timeout=timeout) as resp:
            payload = json.loads(resp.read().decode("utf-8"))
        results = payload.get("results", [])
        if not results:
            break
        for item in results:
            openfda = item.get("openfda", {})
            for key in ("generic_name", "brand_name", "substance_name"):
                names.update(normalize_term(n) for n in openfda.get(key, []))
            for product in item.get("products", []):
                if product.get("brand_name"):
                    names.add(normalize_term(product["brand_name"]))
        skip += len(results)
    names.discard("")
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{n}\n" for n in sorted(names))
    logger.info("wrote %d names to %s", len(names), out_path)
    return len(names)
