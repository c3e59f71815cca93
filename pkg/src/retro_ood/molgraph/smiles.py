"""SMILES reader.

Supports the OpenSMILES organic subset, bracket atoms (isotope, chirality,
hydrogen count, charge, atom class), ring closures including ``%nn``, branches,
dot-separated fragments and ``/``/``\\`` bond annotations. A bracket atom may
also carry a ``;D<n>`` degree constraint, used only by template patterns.
"""

from __future__ import annotations

import re

from .elements import (
    AROMATIC_BRACKET,
    AROMATIC_ORGANIC,
    ATOMIC_NUMBER,
    ORGANIC_SUBSET,
    implicit_hydrogens,
)
from .graph import AROMATIC, DOUBLE, SINGLE, TRIPLE, Atom, Bond, MolecularGraph

_BOND_SYMBOLS = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC, "/": SINGLE, "\\": SINGLE}

_BRACKET = re.compile(
    r"^(?P<isotope>\d+)?"
    r"(?P<symbol>\*|[A-Z][a-z]?|se|as|te|si|[bcnops])"
    r"(?P<chiral>@@|@)?"
    r"(?P<h>H\d*)?"
    r"(?P<charge>\+\d+|-\d+|\++|-+)?"
    r"(?:;D(?P<degree>\d+))?"
    r"(?::(?P<map>\d+))?$"
)


class SmilesSyntaxError(ValueError):
    """Malformed SMILES: unbalanced branches or rings, or an unknown element."""


def parse_smiles(text: str, validate: bool = True) -> MolecularGraph:
    """Parse a SMILES string into a :class:`MolecularGraph`.

    Parameters
    ----------
    text : str
        SMILES, possibly with several dot-separated fragments.
    validate : bool
        Check every atom against the valence table and raise
        :class:`~retro_ood.molgraph.graph.ValenceError` on violation.
        Template patterns are parsed with ``validate=False``.
    """
    text = text.strip()
    atoms: list[Atom] = []
    bonds: list[Bond] = []
    implicit_h: list[bool] = []
    orders: list[list] = []  # neighbour order per atom, for chirality
    implicit_aromatic: set[int] = set()
    bond_keys: set[tuple[int, int]] = set()

    prev: int | None = None
    pending_bond: str | None = None
    branch_stack: list[int | None] = []
    open_rings: dict[int, tuple[int, str | None, int]] = {}
    i = 0
    n = len(text)

    def add_bond(a: int, b: int, symbol: str | None, written_from: int) -> int:
        key = (min(a, b), max(a, b))
        if a == b or key in bond_keys:
            raise SmilesSyntaxError(f"duplicate or self bond at atoms {a}, {b} in {text!r}")
        bond_keys.add(key)
        if symbol is None:
            both_aromatic = atoms[a].aromatic and atoms[b].aromatic
            order = AROMATIC if both_aromatic else SINGLE
            if both_aromatic:
                implicit_aromatic.add(len(bonds))
        else:
            order = _BOND_SYMBOLS[symbol]
        bond = Bond(a, b, order)
        if symbol in ("/", "\\"):
            bond.stereo = symbol
            bond.stereo_from = written_from
        bonds.append(bond)
        return len(bonds) - 1

    def add_atom(atom: Atom, implicit: bool, explicit_h: bool) -> None:
        nonlocal prev, pending_bond
        idx = len(atoms)
        atoms.append(atom)
        implicit_h.append(implicit)
        orders.append([])
        if prev is not None:
            add_bond(prev, idx, pending_bond, prev)
            orders[prev].append(idx)
            orders[idx].append(prev)
        elif pending_bond is not None:
            raise SmilesSyntaxError(f"bond symbol without a preceding atom in {text!r}")
        if explicit_h:
            orders[idx].append(-1)
        pending_bond = None
        prev = idx

    while i < n:
        ch = text[i]
        if ch == "[":
            close = text.find("]", i)
            if close == -1:
                raise SmilesSyntaxError(f"unterminated bracket atom in {text!r}")
            atom = _parse_bracket(text[i + 1 : close], text)
            add_atom(atom, implicit=False, explicit_h=atom.hcount > 0 and atom.chirality is not None)
            i = close + 1
            continue
        if ch.isalpha() or ch == "*":
            two = text[i : i + 2]
            if two in ("Cl", "Br"):
                symbol, aromatic, width = two, False, 2
            elif ch in ORGANIC_SUBSET:
                symbol, aromatic, width = ch, False, 1
            elif ch in AROMATIC_ORGANIC:
                symbol, aromatic, width = ch.upper(), True, 1
            elif ch == "*":
                symbol, aromatic, width = "*", False, 1
            else:
                raise SmilesSyntaxError(f"unknown element {ch!r} in {text!r}")
            add_atom(Atom(symbol, aromatic=aromatic), implicit=symbol != "*", explicit_h=False)
            i += width
            continue
        if ch == "(":
            if prev is None:
                raise SmilesSyntaxError(f"branch without an atom in {text!r}")
            branch_stack.append(prev)
            i += 1
            continue
        if ch == ")":
            if not branch_stack:
                raise SmilesSyntaxError(f"unbalanced ')' in {text!r}")
            if pending_bond is not None:
                raise SmilesSyntaxError(f"dangling bond before ')' in {text!r}")
            prev = branch_stack.pop()
            i += 1
            continue
        if ch in _BOND_SYMBOLS or ch == "$":
            if ch == "$":
                raise SmilesSyntaxError("quadruple bonds are not supported")
            if pending_bond is not None:
                raise SmilesSyntaxError(f"consecutive bond symbols in {text!r}")
            pending_bond = ch
            i += 1
            continue
        if ch == ".":
            if branch_stack:
                raise SmilesSyntaxError(f"'.' inside a branch in {text!r}")
            if pending_bond is not None:
                raise SmilesSyntaxError(f"dangling bond before '.' in {text!r}")
            prev = None
            i += 1
            continue
        if ch.isdigit() or ch == "%":
            if ch == "%":
                digits = text[i + 1 : i + 3]
                if len(digits) != 2 or not digits.isdigit():
                    raise SmilesSyntaxError(f"bad ring number at {i} in {text!r}")
                ring, i = int(digits), i + 3
            else:
                ring, i = int(ch), i + 1
            if prev is None:
                raise SmilesSyntaxError(f"ring bond without an atom in {text!r}")
            if ring in open_rings:
                opener, symbol, slot = open_rings.pop(ring)
                if symbol is not None and pending_bond is not None and symbol != pending_bond:
                    if _BOND_SYMBOLS[symbol] != _BOND_SYMBOLS[pending_bond]:
                        raise SmilesSyntaxError(f"conflicting ring bond orders in {text!r}")
                if pending_bond is not None:
                    add_bond(prev, opener, pending_bond, prev)
                else:
                    add_bond(opener, prev, symbol, opener)
                orders[opener][slot] = prev
                orders[prev].append(opener)
            else:
                orders[prev].append(None)
                open_rings[ring] = (prev, pending_bond, len(orders[prev]) - 1)
            pending_bond = None
            continue
        raise SmilesSyntaxError(f"unexpected character {ch!r} in {text!r}")

    if branch_stack:
        raise SmilesSyntaxError(f"unbalanced '(' in {text!r}")
    if open_rings:
        raise SmilesSyntaxError(f"unclosed ring bond(s) {sorted(open_rings)} in {text!r}")
    if pending_bond is not None:
        raise SmilesSyntaxError(f"dangling bond at end of {text!r}")

    graph = MolecularGraph(atoms, bonds)
    # An unwritten bond between aromatic atoms is aromatic only inside a ring.
    if implicit_aromatic:
        ring = graph.ring_bonds
        fixed = [k for k in implicit_aromatic if k not in ring]
        if fixed:
            for k in fixed:
                bonds[k].order = SINGLE
            graph = MolecularGraph(atoms, bonds)

    for idx, atom in enumerate(atoms):
        if implicit_h[idx]:
            bond_sum = 0
            for k in graph.adjacency[idx].values():
                order = bonds[k].order
                bond_sum += 1 if order == AROMATIC else order
            atom.hcount = implicit_hydrogens(atom.symbol, atom.aromatic, bond_sum)
        if atom.chirality:
            order = [o for o in orders[idx] if o is not None]
            if len(order) >= 3:
                atom.stereo_nbrs = tuple(order)
            else:
                atom.chirality = None

    if validate:
        graph.check_valence()
    return graph


def _parse_bracket(body: str, text: str) -> Atom:
    m = _BRACKET.match(body)
    if m is None:
        raise SmilesSyntaxError(f"cannot parse bracket atom [{body}] in {text!r}")
    symbol = m.group("symbol")
    aromatic = False
    if symbol in AROMATIC_BRACKET:
        aromatic = True
        symbol = symbol.capitalize()
    if symbol != "*" and symbol not in ATOMIC_NUMBER:
        raise SmilesSyntaxError(f"unknown element {symbol!r} in {text!r}")
    h = m.group("h")
    hcount = 0 if h is None else (int(h[1:]) if len(h) > 1 else 1)
    charge_text = m.group("charge")
    charge = 0
    if charge_text:
        if charge_text[1:].isdigit():
            charge = int(charge_text)
        else:
            charge = len(charge_text) * (1 if charge_text[0] == "+" else -1)
    degree = m.group("degree")
    return Atom(
        symbol=symbol,
        charge=charge,
        hcount=hcount,
        aromatic=aromatic,
        atom_map=int(m.group("map") or 0),
        isotope=int(m.group("isotope") or 0),
        chirality=m.group("chiral"),
        degree_constraint=None if degree is None else int(degree),
    )
