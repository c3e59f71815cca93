import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retro_ood.molgraph import parse_smiles
from retro_ood.splits import (
    PARTITIONS,
    InfeasibleSplit,
    SplitManifest,
    largest_remainder,
    make_covariate_split,
    make_label_split,
    round_half_up,
    summarize_shift,
    validate_manifest,
)
from retro_ood.templates import Reaction


def toy(sizes_by_class: dict[str, list[int]]):
    """Reactions whose product is a carbon chain of the given size, with a fixed template label."""
    corpus, assignment = [], {}
    k = 0
    for tid, sizes in sizes_by_class.items():
        for n in sizes:
            g = parse_smiles("C" * n)
            rid = f"x{k:03d}"
            corpus.append(Reaction(rid, [g], g))
            assignment[rid] = tid
            k += 1
    return corpus, assignment


# ---------------------------------------------------------------- helpers

def test_rounding_helpers():
    assert round_half_up(2.5) == 3 and round_half_up(1.2) == 1 and round_half_up(0.5) == 1
    assert largest_remainder(10) == [8, 1, 1]
    assert largest_remainder(9) == [7, 1, 1]
    assert largest_remainder(0) == [0, 0, 0]
    for n in range(60):
        counts = largest_remainder(n)
        assert sum(counts) == n
        assert all(abs(c - n * w / 9) < 1 for c, w in zip(counts, (7, 1, 1)))


# ---------------------------------------------------------------- label split

def test_label_split_moves_one_whole_class():
    corpus, assignment = toy({"A": [3] * 8, "B": [3] * 6, "C": [3] * 4, "D": [3] * 2})
    for seed in range(20):
        m = make_label_split(corpus, 0, 0.1, seed, assignment)
        ood_classes = {assignment[r] for r in m.partitions["test_ood"]}
        assert len(ood_classes) == 1
        (t,) = ood_classes
        assert sorted(m.partitions["test_ood"]) == sorted(r for r, c in assignment.items() if c == t)
        assert len(m.partitions["test_ood"]) >= 2
        assert validate_manifest(m, corpus, assignment).ok


def test_label_split_infeasible():
    corpus, assignment = toy({"A": [3] * 20})
    with pytest.raises(InfeasibleSplit):
        make_label_split(corpus, 0, 0.1, 0, assignment)
    corpus, assignment = toy({"A": [3] * 8, "B": [3] * 6})
    with pytest.raises(InfeasibleSplit):
        make_label_split(corpus, 0, 0.9, 0, assignment)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 12), min_size=2, max_size=25), st.integers(0, 1000),
       st.sampled_from([0.05, 0.1, 0.2, 0.3]))
def test_label_split_properties(class_sizes, seed, frac):
    corpus, assignment = toy({f"T{i}": [2] * n for i, n in enumerate(class_sizes)})
    try:
        m = make_label_split(corpus, 0, frac, seed, assignment)
    except InfeasibleSplit:
        return
    rep = validate_manifest(m, corpus, assignment)
    assert rep.ok, rep.lines()
    n = len(corpus)
    n_ood = len(m.partitions["test_ood"])
    target = frac * n
    assert target <= n_ood < target + 2 * -(-target // 1) + 1
    rest = n - n_ood
    assert [len(m.partitions[p]) for p in ("train", "val", "test_id")] == largest_remainder(rest)


# ---------------------------------------------------------------- covariate split

def test_covariate_single_class_largest_goes_ood():
    corpus, assignment = toy({"A": list(range(5, 17))})
    m = make_covariate_split(corpus, "size", 10, 0.1, 0, assignment)
    ood = m.partitions["test_ood"]
    assert len(ood) == 1
    assert corpus[[r.id for r in corpus].index(ood[0])].product.heavy_atom_count() == 16
    assert validate_manifest(m, corpus, assignment).ok


def test_covariate_discards_small_classes():
    corpus, assignment = toy({"A": list(range(3, 15)), "B": [4] * 9, "C": list(range(2, 22))})
    m = make_covariate_split(corpus, "size", 10, 0.1, 0, assignment)
    discarded = set(m.metadata["discarded"])
    assert discarded == {r for r, t in assignment.items() if t == "B"}
    kept = {assignment[r] for p in PARTITIONS for r in m.partitions[p]}
    assert kept == {"A", "C"}
    # 20 * 0.1 = 2 for class C, 12 * 0.1 rounds to 1 for class A
    assert len(m.partitions["test_ood"]) == 3
    assert validate_manifest(m, corpus, assignment).ok


def test_covariate_errors():
    corpus, assignment = toy({"A": [3] * 5})
    with pytest.raises(InfeasibleSplit):
        make_covariate_split(corpus, "size", 10, 0.1, 0, assignment)
    with pytest.raises(ValueError):
        make_covariate_split(corpus, "size", 1, 0.1, 0, assignment)
    with pytest.raises(ValueError):
        make_covariate_split(corpus, "weight", 2, 0.1, 0, assignment)


def test_covariate_scaffold_orders_by_complexity():
    smiles = ["CCCC", "CCCCC", "C1CCCCC1", "CC1CCCCC1", "c1ccccc1", "c1ccc2ccccc2c1", "C1CC1",
              "CCCCCC", "c1ccc(cc1)-c1ccccc1", "c1ccc(cc1)Cc1ccc(cc1)-c1ccccc1"]
    corpus = [Reaction(f"s{i}", [parse_smiles(s)], parse_smiles(s)) for i, s in enumerate(smiles)]
    assignment = {r.id: "A" for r in corpus}
    m = make_covariate_split(corpus, "scaffold", 10, 0.1, 0, assignment)
    assert m.partitions["test_ood"] == ["s9"]  # three rings


# ---------------------------------------------------------------- validation and summary

def test_validation_catches_violations():
    corpus, assignment = toy({"A": [3] * 8, "B": [3] * 6, "C": [3] * 4, "D": [3] * 2})
    m = make_label_split(corpus, 0, 0.1, 1, assignment)
    bad = SplitManifest.from_dict(m.to_dict())
    moved = bad.partitions["test_ood"].pop()
    bad.partitions["train"].append(moved)
    rep = validate_manifest(bad, corpus, assignment)
    assert not rep.ok and "template_disjoint" in rep.failures()

    dup = SplitManifest.from_dict(m.to_dict())
    dup.partitions["val"].append(dup.partitions["train"][0])
    assert "disjoint" in validate_manifest(dup, corpus, assignment).failures()

    lost = SplitManifest.from_dict(m.to_dict())
    lost.partitions["train"].pop()
    assert "coverage" in validate_manifest(lost, corpus, assignment).failures()

    empty = SplitManifest("label_minimal", 0, {}, 0)
    rep = validate_manifest(empty, corpus, assignment)
    assert not rep.ok and rep.failures() == ["structure"]


def test_covariate_validation_catches_one_sided_class():
    corpus, assignment = toy({"A": list(range(3, 15)), "C": list(range(2, 22))})
    m = make_covariate_split(corpus, "size", 10, 0.1, 0, assignment)
    bad = SplitManifest.from_dict(m.to_dict())
    a_ood = [r for r in bad.partitions["test_ood"] if assignment[r] == "A"]
    for r in a_ood:
        bad.partitions["test_ood"].remove(r)
        bad.partitions["train"].append(r)
    assert "class_both_sides" in validate_manifest(bad, corpus, assignment).failures()


def test_manifest_json_round_trip(tmp_path):
    corpus, assignment = toy({"A": [3] * 8, "B": [3] * 6, "C": [3] * 4, "D": [3] * 2})
    m = make_label_split(corpus, 0, 0.1, 3, assignment)
    m.save(tmp_path / "m.json")
    again = SplitManifest.load(tmp_path / "m.json")
    assert again.to_json() == m.to_json() and again.digest() == m.digest()


# ---------------------------------------------------------------- desk corpus

@pytest.mark.parametrize("radius", [0, 1])
def test_desk_label_splits(corpus, assigned0, assigned1, radius):
    assignment = (assigned0 if radius == 0 else assigned1).assignment
    m = make_label_split(corpus, radius, 0.1, 0, assignment)
    rep = validate_manifest(m, corpus, assignment)
    assert rep.ok, rep.lines()
    assert m.split_kind == ("label_minimal" if radius == 0 else "label_retro")
    counts = [len(m.partitions[p]) for p in PARTITIONS]
    assert counts[:3] == largest_remainder(len(corpus) - counts[3])
    assert 0.1 * len(corpus) <= counts[3] <= 0.2 * len(corpus)
    summary = summarize_shift(m, corpus, assignment)
    assert summary["template_overlap"] == 0


@pytest.mark.parametrize("criterion", ["size", "scaffold"])
def test_desk_covariate_splits(corpus, assigned0, criterion):
    assignment = assigned0.assignment
    m = make_covariate_split(corpus, criterion, 10, 0.1, 0, assignment)
    rep = validate_manifest(m, corpus, assignment)
    assert rep.ok, rep.lines()
    sizes = {}
    for rid, t in assignment.items():
        sizes[t] = sizes.get(t, 0) + 1
    assert set(m.metadata["discarded"]) == {rid for rid, t in assignment.items() if sizes[t] < 10}
    for t, parts in m.metadata["per_class"].items():
        assert parts["test_ood"] == max(1, round_half_up(sizes[t] * 0.1))
        assert [parts["train"], parts["val"], parts["test_id"]] == largest_remainder(sizes[t] - parts["test_ood"])
    summary = summarize_shift(m, corpus, assignment)
    if criterion == "size":
        assert summary["test_ood"]["mean_size"] > summary["train"]["mean_size"]


def test_desk_splits_deterministic(corpus, assigned0):
    a = make_label_split(corpus, 0, 0.1, 7, assigned0.assignment)
    b = make_label_split(corpus, 0, 0.1, 7, assigned0.assignment)
    assert a.to_json() == b.to_json()
    assert summarize_shift(a, corpus, assigned0.assignment) == summarize_shift(b, corpus, assigned0.assignment)
    c = make_covariate_split(corpus, "size", 10, 0.1, 7, assigned0.assignment)
    d = make_covariate_split(corpus, "size", 10, 0.1, 7, assigned0.assignment)
    assert c.to_json() == d.to_json()
    assert make_label_split(corpus, 0, 0.1, 8, assigned0.assignment).to_json() != a.to_json()


def test_assignment_recomputed_when_omitted(corpus, assigned1):
    m = make_label_split(corpus[:200], 1, 0.1, 0)
    assert validate_manifest(m, corpus[:200]).ok
