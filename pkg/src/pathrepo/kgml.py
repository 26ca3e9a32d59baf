"""KEGG KGML parsing: gene entries become pathways with protein alias sets."""

from __future__ import annotations

import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from .model import KEGG_ID_RE, PathrepoError, Pathway, ProteinTerm, normalize_term

logger = logging.getLogger(__name__)

_ELLIPSIS_RE = re.compile(r"(\.\.\.|…)+$")


class ParseError(PathrepoError):
    """Malformed KGML or pathway TSV input."""


def _id_key(pathway_id: str):
    prefix, _, num = pathway_id.partition(":")
    return (prefix, int(num) if num.isdigit() else 0, num)


@dataclass(frozen=True)
class PathwayModule:
    """All gene-entry pathways of one disease map."""

    disease_name: str
    pathways: tuple
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        ids = [p.id for p in self.pathways]
        if len(ids) != len(set(ids)):
            raise ValueError("pathway ids must be unique within a module")

    @property
    def unique_proteins(self) -> frozenset:
        """One :class:`ProteinTerm` per distinct protein name.

        A name listed under several pathways is attributed to the lowest id.
        """
        seen = {}
        for pw in sorted(self.pathways, key=lambda p: _id_key(p.id)):
            for name in pw.names:
                seen.setdefault(name, ProteinTerm(name, pw.id))
        return frozenset(seen.values())

    def pathway(self, pathway_id: str) -> Pathway:
        for pw in self.pathways:
            if pw.id == pathway_id:
                return pw
        raise KeyError(pathway_id)

    @property
    def pathway_ids(self) -> tuple:
        return tuple(p.id for p in self.pathways)

    def pathways_by_protein(self) -> dict:
        """Map protein name -> sorted tuple of pathway ids listing it."""
        index: dict = {}
        for pw in self.pathways:
            for name in pw.names:
                index.setdefault(name, []).append(pw.id)
        return {k: tuple(v) for k, v in index.items()}

    def __len__(self):
        return len(self.pathways)


def unique_target_count(module: PathwayModule) -> int:
    return len({p.canonical for p in module.unique_proteins})


def _split_aliases(label: str) -> list:
    names = []
    for part in label.split(","):
        name = normalize_term(_ELLIPSIS_RE.sub("", part.strip()))
        if name and name not in names:
            names.append(name)
    return names


def _entry_order(entry_id: str):
    return int(entry_id) if entry_id.isdigit() else float("inf")


def parse_kgml(xml_doc, disease_name: str = "") -> PathwayModule:
    """Extract gene entries from a KGML document.

    The first ``hsa:<n>`` token of an entry's ``name`` attribute is the pathway
    id; the ``graphics/@name`` label supplies the protein aliases.  Entries that
    share an id are merged.  Non-gene entries are ignored.
    """
    try:
        root = ET.fromstring(xml_doc)
    except ET.ParseError as exc:
        raise ParseError(f"malformed KGML: {exc}") from None
    if not disease_name:
        disease_name = root.get("title") or root.get("name") or ""

    warnings = []
    groups: dict = {}
    for entry in root.iter("entry"):
        if (entry.get("type") or "").lower() != "gene":
            continue
        ids = (entry.get("name") or "").split()
        hsa = [i for i in ids if KEGG_ID_RE.match(i)]
        if not hsa:
            warnings.append(f"entry {entry.get('id')}: no hsa id in name {entry.get('name')!r}")
            continue
        graphics = entry.find("graphics")
        label = graphics.get("name", "") if graphics is not None else ""
        names = _split_aliases(label)
        if not names:
            warnings.append(f"entry {entry.get('id')} ({hsa[0]}): empty graphics name, skipped")
            continue
        groups.setdefault(hsa[0], []).append((_entry_order(entry.get("id") or ""), names, hsa[1:]))

    pathways = []
    for pid, parts in groups.items():
        parts.sort(key=lambda p: (p[0], p[1]))
        names, extra = [], []
        for _, aliases, more in parts:
            names.extend(a for a in aliases if a not in names)
            extra.extend(i for i in more if i not in extra and i != pid)
        pathways.append(Pathway(pid, tuple(names), tuple(sorted(extra, key=_id_key))))
    pathways.sort(key=lambda p: _id_key(p.id))
    for w in warnings:
        logger.warning(w)
    return PathwayModule(disease_name, tuple(pathways), tuple(warnings))


def read_kgml(path, disease_name: str = "") -> PathwayModule:
    return parse_kgml(Path(path).read_bytes(), disease_name)


def write_pathways_tsv(path, module: PathwayModule) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pw in module.pathways:
            fh.write(f"{pw.id}\t{pw.canonical}\t{'|'.join(pw.names)}\n")


def read_pathways_tsv(path, disease_name: str = "") -> PathwayModule:
    pathways = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 fields")
            pid, canonical, aliases = parts
            names = [a for a in aliases.split("|") if a]
            if not names or names[0] != canonical:
                raise ParseError(f"{path}:{lineno}: canonical name must lead the alias list")
            try:
                pathways.append(Pathway(pid, tuple(names)))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    pathways.sort(key=lambda p: _id_key(p.id))
    return PathwayModule(disease_name, tuple(pathways))
