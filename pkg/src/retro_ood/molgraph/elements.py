"""Periodic table data and valence rules."""

SYMBOLS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni "
    "Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe "
    "Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg "
    "Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg "
    "Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og"
).split()

ATOMIC_NUMBER = {sym: i + 1 for i, sym in enumerate(SYMBOLS)}

# Atoms writable without brackets.
ORGANIC_SUBSET = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")
AROMATIC_BRACKET = ("b", "c", "n", "o", "p", "s", "se", "as", "te", "si")

VALENCES = {
    "H": (1,),
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "F": (1,),
    "Si": (4,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

# Implicit-hydrogen defaults for unbracketed organic-subset atoms follow the
# OpenSMILES convention, which also admits pentavalent nitrogen.
_IMPLICIT_VALENCES = dict(VALENCES, N=(3, 5))


def allowed_valences(symbol: str, charge: int = 0) -> tuple[int, ...] | None:
    """Allowed total valences for an element, or ``None`` when unrestricted.

    A formal charge shifts each allowed valence by ``abs(charge)`` in either
    direction, which covers both onium cations (N+ = 4) and anions (O- = 1).
    """
    base = VALENCES.get(symbol)
    if base is None:
        return None
    if not charge:
        return base
    shift = abs(charge)
    return tuple(sorted({v + s for v in base for s in (shift, -shift) if v + s >= 0}))


def implicit_hydrogens(symbol: str, aromatic: bool, bond_sum: int) -> int:
    """Implicit H count for an unbracketed organic-subset atom.

    ``bond_sum`` counts every bond to a heavy atom at its integer order, with
    aromatic bonds counted as one.
    """
    valences = _IMPLICIT_VALENCES[symbol]
    if aromatic:
        return max(0, valences[0] - bond_sum - 1)
    for v in valences:
        if v >= bond_sum:
            return v - bond_sum
    return 0
