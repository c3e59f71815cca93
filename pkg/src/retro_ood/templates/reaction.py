"""Atom-mapped reactions and corpus files."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

from ..molgraph import MolecularGraph, merge, parse_smiles, to_smiles

PROVENANCES = ("observed", "enhanced")


class MappingError(ValueError):
    """A product atom lacks a unique precursor counterpart."""


@dataclass(eq=False)
class Reaction:
    id: str
    precursors: list[MolecularGraph]
    product: MolecularGraph
    reaction_class: int | None = None
    provenance: str = "observed"
    smiles: str = field(default="", repr=False)

    @cached_property
    def precursor_graph(self) -> MolecularGraph:
        return merge(self.precursors)

    def check_mapping(self) -> None:
        if not self.product.atoms:
            raise MappingError(f"{self.id}: empty product")
        if not self.precursors:
            raise MappingError(f"{self.id}: no precursors")
        prec_maps = [a.atom_map for a in self.precursor_graph.atoms if a.atom_map]
        if len(prec_maps) != len(set(prec_maps)):
            raise MappingError(f"{self.id}: duplicate atom maps across precursors")
        prec_set = set(prec_maps)
        for i, atom in enumerate(self.product.atoms):
            if not atom.atom_map:
                raise MappingError(f"{self.id}: product atom {i} ({atom.symbol}) is unmapped")
            if atom.atom_map not in prec_set:
                raise MappingError(
                    f"{self.id}: product map {atom.atom_map} has no precursor counterpart"
                )

    @cached_property
    def product_smiles(self) -> str:
        """Canonical product SMILES without atom maps."""
        return to_smiles(self.product, keep_maps=False)

    @cached_property
    def ground_truth(self) -> str:
        """Canonical precursor set, sorted and dot-joined, maps stripped.

        Precursor fragments that contribute no atom to the product (reagents
        listed on the precursor side) are left out.
        """
        product_maps = {a.atom_map for a in self.product.atoms if a.atom_map}
        kept = [
            frag
            for frag in self.precursors
            if any(a.atom_map in product_maps for a in frag.atoms if a.atom_map)
        ]
        return to_smiles(merge(kept), keep_maps=False)


def parse_reaction(text: str, rid: str = "", reaction_class: int | None = None,
                   provenance: str = "observed") -> Reaction:
    """Parse ``precursors>agents>product`` or ``precursors>>product``; agents are ignored."""
    parts = text.strip().split(">")
    if len(parts) != 3:
        raise ValueError(f"{rid}: not a reaction SMILES: {text!r}")
    precursors = parse_smiles(parts[0]).fragments()
    product = parse_smiles(parts[2])
    return Reaction(rid, precursors, product, reaction_class, provenance, text.strip())


def reaction_smiles(r: Reaction, keep_maps: bool = True) -> str:
    return f"{to_smiles(r.precursor_graph, keep_maps=keep_maps)}>>{to_smiles(r.product, keep_maps=keep_maps)}"


def read_corpus(path: str | Path, errors: list | None = None) -> list[Reaction]:
    """Read a ``id<TAB>class<TAB>reaction_smiles[<TAB>provenance]`` file.

    A header line starting with ``id`` is skipped; an empty or non-integer
    class column becomes ``None``. When ``errors`` is a list, rows whose
    reaction SMILES fail to parse are skipped and recorded there as
    ``(line, id, message)``; otherwise the first failure raises.
    """
    reactions = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), 1):
            if not row or row[0].startswith("#"):
                continue
            if lineno == 1 and row[0] == "id":
                continue
            if len(row) < 3:
                raise ValueError(f"{path}:{lineno}: expected at least 3 columns")
            rid, cls, rxn = row[0], row[1], row[2]
            provenance = row[3] if len(row) > 3 and row[3] else "observed"
            reaction_class = int(cls) if cls.strip().lstrip("-").isdigit() else None
            try:
                reactions.append(parse_reaction(rxn, rid, reaction_class, provenance))
            except ValueError as exc:
                if errors is None:
                    raise
                errors.append((lineno, rid, str(exc)))
    return reactions


def write_corpus(reactions: Iterable[Reaction], path: str | Path, provenance: bool = False) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        header = ["id", "class", "reaction_smiles"] + (["provenance"] if provenance else [])
        writer.writerow(header)
        for r in reactions:
            text = r.smiles or reaction_smiles(r)
            row = [r.id, "" if r.reaction_class is None else r.reaction_class, text]
            if provenance:
                row.append(r.provenance)
            writer.writerow(row)
