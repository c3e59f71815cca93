"""Generate the bundled desk corpus of atom-mapped reactions.

Each reaction type is a mapped core with numbered attachment points
(``[*:901]``...). Attachment points are filled with substituent groups drawn
from pools, atom maps are shuffled, and both sides are written with a random
atom order, so the corpus exercises canonicalization and map handling.
Leaving groups stay unmapped, as in patent-derived corpora.

Usage: python3 tools/make_desk_corpus.py [out.tsv] [--seed N] [--n N]
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from retro_ood.molgraph import Atom, Bond, MolecularGraph, parse_smiles, to_smiles

ARYL = [
    "[*]c1ccccc1", "[*]c1ccc(F)cc1", "[*]c1ccc(Cl)cc1", "[*]c1ccc(OC)cc1",
    "[*]c1cccc(C(F)(F)F)c1", "[*]c1ccc(C)cc1", "[*]c1cccnc1", "[*]c1ccncc1",
    "[*]c1cncnc1", "[*]c1cccs1", "[*]c1ccc2ccccc2c1", "[*]c1ccc(C#N)cc1",
    "[*]c1ccc2ncccc2c1", "[*]c1ccc(-c2ccccc2)cc1", "[*]c1ccc2c(c1)ccn2C",
    "[*]c1ccc2c(c1)OCO2", "[*]c1ccccc1C", "[*]c1ccc(Cl)c(Cl)c1", "[*]c1ccco1",
    "[*]c1ccc(N2CCOCC2)cc1", "[*]c1cnn(C)c1", "[*]c1ccc(-c2ccc(F)cc2)cc1",
    "[*]c1ccc2c(c1)CCN(C(C)=O)C2", "[*]c1ccc(OC2CCCC2)cc1",
]
ALKYL = [
    "[*]C", "[*]CC", "[*]C(C)C", "[*]C1CC1", "[*]C1CCCCC1", "[*]Cc1ccccc1",
    "[*]CCc1ccccc1", "[*]Cc1ccc(F)cc1", "[*]C1CCN(C(=O)OC(C)(C)C)CC1",
    "[*]C1CCOCC1", "[*]CC1CCCC1", "[*]CCOC", "[*]C(C)(C)C", "[*]Cc1ccccn1",
    "[*]CCCc1ccccc1", "[*]CCCC", "[*]CCN1CCOCC1", "[*]C1CCC(c2ccccc2)CC1",
    "[*]Cc1ccc2ccccc2c1", "[*]CC1CCN(Cc2ccccc2)CC1",
]
ANY = ARYL + ALKYL

# (name, reaction class, core, pools per attachment point, weight)
TYPES = [
    ("amide_acid", 2, "[*:901][C:1](=[O:2])[OH].[*:902][NH2:3]>>[*:901][C:1](=[O:2])[NH:3][*:902]", (ANY, ANY), 70),
    ("suzuki_br", 3, "[*:901]Br.[*:902]B(O)O>>[*:901][*:902]", (ARYL, ARYL), 50),
    ("boc_deprotect", 6, "[*:901][NH:1]C(=O)OC(C)(C)C>>[*:901][NH2:1]", (ANY,), 40),
    ("buchwald", 1, "[*:901]Br.[*:902][NH2:1]>>[*:901][NH:1][*:902]", (ARYL, ANY), 32),
    ("ester_hydrolysis", 9, "[*:901][C:1](=[O:2])[O:3]C>>[*:901][C:1](=[O:2])[OH:3]", (ANY,), 30),
    ("reductive_amination", 1, "[*:901][CH:1]=O.[*:902][NH2:2]>>[*:901][CH2:1][NH:2][*:902]", (ANY, ANY), 28),
    ("n_alkylation", 1, "[*:901][CH2:1]Br.[*:902][NH2:2]>>[*:901][CH2:1][NH:2][*:902]", (ANY, ANY), 24),
    ("amide_chloride", 2, "[*:901][C:1](=[O:2])Cl.[*:902][NH2:3]>>[*:901][C:1](=[O:2])[NH:3][*:902]", (ANY, ANY), 22),
    ("nitro_reduction", 7, "[*:901][N+:1](=O)[O-]>>[*:901][NH2:1]", (ARYL,), 20),
    ("williamson", 1, "[*:901][OH:1].[*:902][CH2:2]Br>>[*:901][O:1][CH2:2][*:902]", (ARYL, ANY), 18),
    ("sulfonamide", 2, "[*:901][S:1](=[O:2])(=[O:3])Cl.[*:902][NH2:4]>>[*:901][S:1](=[O:2])(=[O:3])[NH:4][*:902]", (ARYL, ANY), 16),
    ("suzuki_i", 3, "[*:901]I.[*:902]B(O)O>>[*:901][*:902]", (ARYL, ARYL), 14),
    ("snar_cl", 1, "[*:901]Cl.[*:902][NH2:1]>>[*:901][NH:1][*:902]", (ARYL, ALKYL), 13),
    ("ester_formation", 2, "[*:901][C:1](=[O:2])[OH:3].[*:902][CH2:4]Br>>[*:901][C:1](=[O:2])[O:3][CH2:4][*:902]", (ANY, ANY), 12),
    ("urea", 2, "[*:901][N:1]=[C:2]=[O:3].[*:902][NH2:4]>>[*:901][NH:1][C:2](=[O:3])[NH:4][*:902]", (ANY, ANY), 11),
    ("ester_reduction", 7, "[*:901][C:1](=[O:2])OC>>[*:901][CH2:1][OH:2]", (ANY,), 10),
    ("amide_morpholine", 2, "[*:901][C:1](=[O:2])[OH].[NH:3]1[CH2:4][CH2:5][O:6][CH2:7][CH2:8]1>>[*:901][C:1](=[O:2])[N:3]1[CH2:4][CH2:5][O:6][CH2:7][CH2:8]1", (ANY,), 10),
    ("ketone_reduction", 7, "[*:901][C:1](=[O:2])[*:902]>>[*:901][CH:1]([OH:2])[*:902]", (ANY, ALKYL), 9),
    ("benzyl_ether_cleavage", 6, "[*:901][O:1]Cc1ccccc1>>[*:901][OH:1]", (ANY,), 9),
    ("alcohol_oxidation", 8, "[*:901][CH2:1][OH:2]>>[*:901][CH:1]=[O:2]", (ANY,), 8),
    ("acetylation", 2, "[CH3:1][C:2](=[O:3])Cl.[*:901][OH:4]>>[CH3:1][C:2](=[O:3])[O:4][*:901]", (ANY,), 8),
    ("mesylation", 9, "[CH3:1][S:2](=[O:3])(=[O:4])Cl.[*:901][OH:5]>>[CH3:1][S:2](=[O:3])(=[O:4])[O:5][*:901]", (ALKYL,), 7),
    ("aminolysis", 2, "[*:901][C:1](=[O:2])OC.[*:902][NH2:3]>>[*:901][C:1](=[O:2])[NH:3][*:902]", (ANY, ANY), 7),
    ("methyl_ether_cleavage", 6, "[*:901][O:1]C>>[*:901][OH:1]", (ARYL,), 6),
    ("cbz_deprotect", 6, "[*:901][NH:1]C(=O)OCc1ccccc1>>[*:901][NH2:1]", (ANY,), 6),
    ("tbs_deprotect", 6, "[*:901][O:1][Si](C)(C)C(C)(C)C>>[*:901][OH:1]", (ALKYL,), 5),
    ("nitrile_hydration", 9, "[*:901][C:1]#[N:2].[OH2:3]>>[*:901][C:1](=[O:3])[NH2:2]", (ANY,), 5),
    ("boc_protect", 5, "[*:901][NH2:1].[CH3:5][C:6]([CH3:7])([CH3:8])[O:2][C:3](=[O:4])OC(=O)OC(C)(C)C>>[*:901][NH:1][C:3](=[O:4])[O:2][C:6]([CH3:5])([CH3:7])[CH3:8]", (ANY,), 4),
    ("sonogashira", 3, "[*:901]I.[CH:1]#[C:2][*:902]>>[*:901][C:1]#[C:2][*:902]", (ARYL, ANY), 4),
    ("amide_piperidine", 2, "[*:901][C:1](=[O:2])[OH].[NH:3]1[CH2:4][CH2:5][CH2:6][CH2:7][CH2:8]1>>[*:901][C:1](=[O:2])[N:3]1[CH2:4][CH2:5][CH2:6][CH2:7][CH2:8]1", (ANY,), 3),
    ("thioether", 1, "[*:901][SH:1].[*:902][CH2:2]Br>>[*:901][S:1][CH2:2][*:902]", (ARYL, ANY), 3),
    ("weinreb_ketone", 3, "[*:901][C:1](=[O:2])N(C)OC.[*:902][Mg]Br>>[*:901][C:1](=[O:2])[*:902]", (ARYL, ALKYL), 3),
    ("carbamate", 2, "[*:901][NH2:1].Cl[C:2](=[O:3])[O:4][CH2:5][CH3:6]>>[*:901][NH:1][C:2](=[O:3])[O:4][CH2:5][CH3:6]", (ANY,), 3),
    ("azide_reduction", 7, "[*:901][CH2:1][N:2]=[N+]=[N-]>>[*:901][CH2:1][NH2:2]", (ANY,), 2),
    ("chlorination", 9, "[*:901][CH2:1][OH].[Cl:2][S](Cl)=O>>[*:901][CH2:1][Cl:2]", (ANY,), 2),
]


def _substitute(side: str, groups: dict[int, MolecularGraph], group_maps: dict[int, list[int]]) -> MolecularGraph:
    core = parse_smiles(side, validate=False)
    star_of: dict[int, int] = {}
    atoms: list[Atom] = []
    new_index: dict[int, int] = {}
    for i, a in enumerate(core.atoms):
        if a.symbol == "*":
            star_of[i] = a.atom_map
        else:
            new_index[i] = len(atoms)
            atoms.append(Atom(a.symbol, a.charge, a.hcount, a.aromatic, a.atom_map))
    anchor: dict[int, int] = {}
    bonds: list[Bond] = []
    for s in sorted(set(star_of.values())):
        g = groups[s]
        offset = {}
        star = next(i for i, a in enumerate(g.atoms) if a.symbol == "*")
        for j, a in enumerate(g.atoms):
            if j == star:
                continue
            offset[j] = len(atoms)
            atoms.append(Atom(a.symbol, a.charge, a.hcount, a.aromatic, group_maps[s][j]))
        anchor[s] = offset[next(iter(g.adjacency[star]))]
        for b in g.bonds:
            if star not in (b.a, b.b):
                bonds.append(Bond(offset[b.a], offset[b.b], b.order))

    def resolve(i: int) -> int:
        return anchor[star_of[i]] if i in star_of else new_index[i]

    for b in core.bonds:
        bonds.append(Bond(resolve(b.a), resolve(b.b), b.order))
    return MolecularGraph(atoms, bonds)


def _random_smiles(g: MolecularGraph, rng: random.Random) -> str:
    ranks = list(range(len(g.atoms)))
    rng.shuffle(ranks)
    return to_smiles(g, keep_maps=True, ranks=ranks)


def _pick(pool: list[str], rng: random.Random, skew: float) -> str:
    # small building blocks are common, large ones rare (Zipf over size rank)
    ranked = sorted(pool, key=lambda smi: (len(parse_smiles(smi, validate=False).atoms), smi))
    weights = [1.0 / (i + 1) ** skew for i in range(len(ranked))]
    return rng.choices(ranked, weights)[0]


def make_reaction(core: str, pools, rng: random.Random, skew: float = 1.0) -> str:
    groups: dict[int, MolecularGraph] = {}
    for k, pool in enumerate(pools):
        groups[901 + k] = parse_smiles(_pick(pool, rng, skew), validate=False)
    next_map = 100
    group_maps: dict[int, list[int]] = {}
    for s, g in groups.items():
        group_maps[s] = list(range(next_map, next_map + len(g.atoms)))
        next_map += len(g.atoms)
    left, right = core.split(">>")
    prec = _substitute(left, groups, group_maps)
    prod = _substitute(right, groups, group_maps)
    prec.check_valence()
    prod.check_valence()
    used = sorted({a.atom_map for a in prec.atoms if a.atom_map} | {a.atom_map for a in prod.atoms})
    shuffled = list(range(1, len(used) + 1))
    rng.shuffle(shuffled)
    relabel = dict(zip(used, shuffled))
    for g in (prec, prod):
        for a in g.atoms:
            if a.atom_map:
                a.atom_map = relabel[a.atom_map]
    return f"{_random_smiles(prec, rng)}>>{_random_smiles(prod, rng)}"


def generate(n: int, seed: int, skew: float = 1.0) -> list[tuple[str, int, str]]:
    rng = random.Random(seed)
    total = sum(t[4] for t in TYPES)
    counts = [max(1, round(n * t[4] / total)) for t in TYPES]
    while sum(counts) > n:
        counts[counts.index(max(counts))] -= 1
    while sum(counts) < n:
        counts[0] += 1
    rows = []
    seen = set()
    for (name, cls, core, pools, _), count in zip(TYPES, counts):
        made, attempts = 0, 0
        while made < count and attempts < 50 * count:
            attempts += 1
            rxn = make_reaction(core, pools, rng, skew)
            key = rxn.split(">>")[1]
            product_key = to_smiles(parse_smiles(key), keep_maps=False)
            if (name, product_key) in seen:
                continue
            seen.add((name, product_key))
            rows.append((name, cls, rxn))
            made += 1
    rng.shuffle(rows)
    return [(f"desk_{i:04d}", cls, rxn) for i, (_, cls, rxn) in enumerate(rows)]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    default = Path(__file__).resolve().parents[1] / "src" / "retro_ood" / "data" / "desk_corpus.tsv"
    ap.add_argument("out", nargs="?", default=str(default))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--skew", type=float, default=1.0, help="Zipf exponent over substituent size rank")
    args = ap.parse_args(argv)
    rows = generate(args.n, args.seed, args.skew)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("id\tclass\treaction_smiles\n")
        for rid, cls, rxn in rows:
            fh.write(f"{rid}\t{cls}\t{rxn}\n")
    print(f"wrote {len(rows)} reactions to {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
