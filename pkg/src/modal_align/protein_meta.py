"""FASTA metadata parsing, description templating, and rarity ranking.

Header grammars accepted, tried in order:

1. legacy PDB seqres style
       >{pdbid}_{chain} mol:protein length:{n}  {molecule} [organism:{organism}]
2. RCSB pipe style
       >{pdbid}_{entity}|Chain[s] A[, B...]|{molecule}|{organism}
3. permissive fallback: ">{id} {free text}" with molecule = remainder and
   organism = "unknown"

Sequence length is the total residue count over all chains of a protein.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import EmptyInput, MalformedHeader, NoRecords

_LEGACY_RE = re.compile(
    r"^(?P<id>[0-9A-Za-z]+)_(?P<chain>\w+)\s+mol:\S+\s+length:(?P<len>\d+)\s+(?P<rest>.*)$"
)
_PIPE_RE = re.compile(
    r"^(?P<id>[0-9A-Za-z]+)(?:_\w+)?\|Chains?\s+(?P<chains>[^|]+)\|(?P<mol>[^|]*)\|(?P<org>[^|]*)$"
)
_FALLBACK_RE = re.compile(r"^(?P<id>[0-9A-Za-z]+)(?:_(?P<chain>\w+))?\s*(?P<rest>.*)$")
_ORGANISM_FIELD_RE = re.compile(r"\s+organism:(?P<org>.+)$")
_TAXID_RE = re.compile(r"\s*\(\s*\d+\s*\)\s*$")

DESCRIPTION_TEMPLATE = (
    "The protein structure {id} has a sequence length of {length} amino acids. "
    "Here is more information: The protein structure {id} involves the following "
    "chains: {chains}. The protein is named {name} and is derived from the "
    "organism {organism}."
)


@dataclass
class ProteinRecord:
    protein_id: str
    chains: list[str] = field(default_factory=list)
    molecule_name: str = ""
    organism: str = "unknown"
    sequence_length: int = 0

    @property
    def description(self) -> str:
        return describe_protein(self)


def _parse_header(header: str) -> tuple[str, list[str], str, str]:
    """Return (protein_id, chains, molecule, organism) for one '>' line."""
    body = header[1:].strip()
    m = _LEGACY_RE.match(body)
    if m:
        rest = m.group("rest").strip()
        organism = "unknown"
        om = _ORGANISM_FIELD_RE.search(rest)
        if om:
            organism = om.group("org").strip()
            rest = rest[: om.start()].strip()
        return m.group("id"), [m.group("chain")], rest, organism
    m = _PIPE_RE.match(body)
    if m:
        chains = [c.strip() for c in m.group("chains").split(",") if c.strip()]
        organism = _TAXID_RE.sub("", m.group("org").strip()) or "unknown"
        return m.group("id"), chains, m.group("mol").strip(), organism
    m = _FALLBACK_RE.match(body)
    if m and m.group("id"):
        chain = m.group("chain") or "A"
        return m.group("id"), [chain], m.group("rest").strip(), "unknown"
    raise MalformedHeader(f"cannot extract a protein ID from header: {header!r}")


def parse_fasta(content: str) -> list[ProteinRecord]:
    """Parse FASTA text into one ProteinRecord per distinct protein ID.

    Multiple headers sharing an ID are merged: their chains accumulate and
    their residue counts sum.
    """
    records: dict[str, ProteinRecord] = {}
    current: ProteinRecord | None = None
    saw_header = False
    for line in content.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith(">"):
            saw_header = True
            pid, chains, molecule, organism = _parse_header(line)
            rec = records.get(pid)
            if rec is None:
                rec = ProteinRecord(protein_id=pid, molecule_name=molecule, organism=organism)
                records[pid] = rec
            if molecule and not rec.molecule_name:
                rec.molecule_name = molecule
            if organism != "unknown" and rec.organism == "unknown":
                rec.organism = organism
            for chain in chains:
                if chain not in rec.chains:
                    rec.chains.append(chain)
            current = rec
        elif current is not None:
            current.sequence_length += len(re.sub(r"\s+", "", line))
    if not saw_header:
        raise NoRecords("no FASTA header lines found")
    return list(records.values())


def describe_protein(record: ProteinRecord) -> str:
    """Render the deterministic description template for one protein."""
    return DESCRIPTION_TEMPLATE.format(
        id=record.protein_id,
        length=record.sequence_length,
        chains=", ".join(record.chains),
        name=record.molecule_name,
        organism=record.organism,
    )


_PAREN_NUM_RE = re.compile(r"\(\s*\d+\s*\)")
_WS_RE = re.compile(r"\s+")


def _clean(part: str) -> str:
    part = part.lower()
    part = _PAREN_NUM_RE.sub(" ", part)
    return _WS_RE.sub(" ", part).strip()


def category_label(molecule: str, organism: str) -> str:
    """Cleaned "molecule, organism" label used for rarity counting."""
    return f"{_clean(molecule)}, {_clean(organism)}"


@dataclass
class RarityTable:
    categories: dict[str, dict]  # label -> {"count": int, "members": [ids]}
    labels: dict[str, str]  # protein_id -> rare | popular | unlabeled

    def label_of(self, protein_id: str) -> str:
        return self.labels.get(protein_id, "unlabeled")


def rank_rarity(records: list[ProteinRecord], top_n: int = 100) -> RarityTable:
    """Label proteins rare/popular by category frequency.

    Categories sort ascending by (count, label); members of the first top_n
    are rare, of the last top_n popular. A category in both windows counts
    as rare (rare precedence). The degenerate ", " label stays unlabeled.
    """
    if not records:
        raise EmptyInput("no protein records")
    categories: dict[str, dict] = {}
    for rec in records:
        label = category_label(rec.molecule_name, rec.organism)
        if label == ", ":
            continue
        cat = categories.setdefault(label, {"count": 0, "members": []})
        cat["count"] += 1
        cat["members"].append(rec.protein_id)

    ordered = sorted(categories.items(), key=lambda kv: (kv[1]["count"], kv[0]))
    rare_cats = {label for label, _ in ordered[:top_n]}
    popular_cats = {label for label, _ in ordered[-top_n:]} - rare_cats

    labels: dict[str, str] = {}
    for rec in records:
        label = category_label(rec.molecule_name, rec.organism)
        if label in rare_cats:
            labels[rec.protein_id] = "rare"
        elif label in popular_cats:
            labels[rec.protein_id] = "popular"
        else:
            labels[rec.protein_id] = "unlabeled"
    return RarityTable(categories=categories, labels=labels)
