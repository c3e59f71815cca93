import math
import time

import numpy as np
import pytest

from retro_ood.enhance import (
    BipartiteGraph,
    EmptyNegatives,
    EncoderConfig,
    EnergyModel,
    EnhanceConfig,
    GraphIndex,
    MissingEdge,
    NodeInputs,
    SubgraphSample,
    TemplateInputs,
    batch_subgraph_loss,
    build_bipartite_graph,
    denoise_top_n,
    ebm_subgraph_loss,
    edge_energies,
    khop_subgraph,
    ranking_auc,
    read_edges,
    run_enhancement,
    sandwich_report,
    stage_a_filter,
    subgraph_loss_from_energies,
    train_ebm,
    truncate_negatives,
    write_edges,
)
from retro_ood.enhance.synthetic import make_planted_graph
from retro_ood.numerics import Tensor, dumps_checkpoint, finite_diff_check, loads_checkpoint
from retro_ood.templates import Template, apply_template, parse_reaction

from helpers import brute_force_khop

SPEC_EDGES = {("m1", "t1"), ("m2", "t1"), ("m1", "t2"), ("m3", "t2")}


def graph(edges, gt=()):
    mols = sorted({m for m, _ in edges})
    tmpls = sorted({t for _, t in edges})
    return BipartiteGraph(mols, tmpls, set(gt), set(edges))


# ---------------------------------------------------------------- k-hop extraction

def test_khop_worked_example():
    g = graph(SPEC_EDGES, gt={("m1", "t1")})
    s = khop_subgraph(g, ("m1", "t1"), 1)
    assert s.molecules == {"m1", "m2"} and s.templates == {"t1", "t2"}
    assert set(s.positives) | set(s.negatives) == {("m1", "t1"), ("m2", "t1"), ("m1", "t2")}
    assert s.positives == (("m1", "t1"),)
    s2 = khop_subgraph(g, ("m1", "t1"), 2)
    assert set(s2.positives) | set(s2.negatives) == SPEC_EDGES


def test_khop_isolated_edge_is_fixed_point():
    g = graph(SPEC_EDGES | {("m9", "t9")}, gt={("m9", "t9")})
    for k in (1, 2, 3, 5):
        s = khop_subgraph(g, ("m9", "t9"), k)
        assert s.positives == (("m9", "t9"),) and s.negatives == ()


def test_khop_errors():
    g = graph(SPEC_EDGES)
    with pytest.raises(MissingEdge):
        khop_subgraph(g, ("m2", "t2"), 1)
    with pytest.raises(ValueError):
        khop_subgraph(g, ("m1", "t1"), 0)


def test_khop_matches_brute_force_on_random_graphs():
    rng = np.random.default_rng(0)
    start = time.perf_counter()
    checked = 0
    for case in range(1000):
        n_m, n_t = int(rng.integers(2, 41)), int(rng.integers(2, 21))
        density = rng.uniform(0.1, 0.4)
        adj = rng.random((n_m, n_t)) < density
        if not adj.any():
            adj[0, 0] = True
        mols = [f"m{i}" for i in range(n_m)]
        tmpls = [f"t{j}" for j in range(n_t)]
        edges = {(mols[i], tmpls[j]) for i, j in zip(*np.nonzero(adj))}
        gt = {e for e in edges if rng.random() < 0.3}
        g = BipartiteGraph(mols, tmpls, gt, edges)
        i, j = (int(v) for v in np.argwhere(adj)[rng.integers(adj.sum())])
        seed = (mols[i], tmpls[j])
        for k in (1, 2, 3):
            s = khop_subgraph(g, seed, k)
            bm, bt, be = brute_force_khop(mols, tmpls, adj, seed, k)
            assert set(s.molecules) == bm and set(s.templates) == bt
            assert set(s.positives) | set(s.negatives) == be
            assert not set(s.positives) & set(s.negatives)
            assert set(s.positives) == be & gt
            assert seed in be
            checked += 1
    assert checked == 3000
    assert time.perf_counter() - start < 10.0


# ---------------------------------------------------------------- loss

def loss(fp, fn, tau=1.0, include_positive=False):
    return subgraph_loss_from_energies(Tensor(np.asarray(fp, float)), Tensor(np.asarray(fn, float)), tau,
                                       include_positive).item()


def test_loss_worked_examples():
    assert loss([0.3], [0.3]) == pytest.approx(0.0, abs=1e-15)
    assert loss([0.0], [0.0, 0.0]) == pytest.approx(math.log(2), abs=1e-15)
    assert loss([0.0], [1.0], tau=0.5) == pytest.approx(-2.0, abs=1e-15)


def test_loss_matches_formula():
    rng = np.random.default_rng(0)
    for _ in range(50):
        fp, fn = rng.normal(size=3), rng.normal(size=5)
        tau = rng.uniform(0.2, 2)
        ref = -np.mean([-f / tau - np.log(np.sum(np.exp(-fn / tau))) for f in fp])
        assert loss(fp, fn, tau) == pytest.approx(ref, rel=1e-12)
        with_pos = -np.mean([-f / tau - np.log(np.sum(np.exp(-np.r_[fn, fp] / tau))) for f in fp])
        assert loss(fp, fn, tau, True) == pytest.approx(with_pos, rel=1e-12)
        assert loss([fp[0]], fn, tau, True) >= 0


def test_loss_stable_for_large_energies():
    assert math.isfinite(loss([1000.0], [1000.0, -1000.0]))
    assert loss([1000.0], [1000.0, -1000.0]) == pytest.approx(2000.0)


def test_loss_needs_negatives():
    with pytest.raises(EmptyNegatives):
        loss([0.0], [])


def test_batch_loss_is_mean_of_sample_losses():
    rng = np.random.default_rng(1)
    f = rng.normal(size=9)
    sample_of = np.array([0, 0, 0, 1, 1, 1, 1, 2, 2])
    is_pos = np.array([1, 0, 0, 1, 1, 0, 0, 1, 0], dtype=bool)
    for inc in (False, True):
        per = [loss(f[(sample_of == s) & is_pos], f[(sample_of == s) & ~is_pos], 0.7, inc) for s in range(3)]
        got = batch_subgraph_loss(Tensor(f), sample_of, is_pos, 3, 0.7, inc).item()
        assert got == pytest.approx(np.mean(per), rel=1e-12)


# ---------------------------------------------------------------- model

def small_model(kind="dense", seed=0):
    pg = make_planted_graph(n_mols=12, n_tmpls=6, n_types=3, n_candidates=3, seed=seed)
    cfg = EncoderConfig(kind="dense", hidden=8, embed=5, head_hidden=6, dropout=0.0)
    return pg, EnergyModel(cfg, pg.index.mols.width, pg.index.tmpls.patterns.width, seed=seed)


def test_ebm_loss_gradients():
    for draw in range(10):
        pg, model = small_model(seed=draw)
        seeds = sorted(pg.graph.gt)
        s = khop_subgraph(pg.graph, seeds[draw % len(seeds)], 1)
        fn = lambda p, _: ebm_subgraph_loss(model, s, pg.index, 0.8, False, params=p)  # noqa: E731
        assert finite_diff_check(fn, model.params, n_coords=50, seed=draw).max_rel_error < 1e-4


def test_mpnn_energy_gradients():
    from retro_ood.molgraph import parse_smiles

    mols = [parse_smiles(s) for s in ["CC(=O)NC", "c1ccccc1O", "CCO"]]
    pats = [parse_smiles(s) for s in ["CC(=O)O", "CN", "O"]]
    cfg = EncoderConfig(kind="mpnn", embed=6, depth=2, head_hidden=5, dropout=0.0)
    from retro_ood.enhance import fingerprint_inputs

    mi = fingerprint_inputs(mols, cfg)
    ti = TemplateInputs(fingerprint_inputs(pats, cfg), np.array([0, 0, 1]), 2)
    index = GraphIndex({"a": 0, "b": 1, "c": 2}, {"x": 0, "y": 1}, mi, ti)
    model = EnergyModel(cfg, mi.width, ti.patterns.width, seed=3)
    s = SubgraphSample(("a", "x"), frozenset("abc"), frozenset("xy"), (("a", "x"),),
                       (("b", "x"), ("c", "y"), ("a", "y")), 1)
    fn = lambda p, _: ebm_subgraph_loss(model, s, index, 1.0, False, params=p)  # noqa: E731
    assert finite_diff_check(fn, model.params, n_coords=60).max_rel_error < 1e-4


def test_template_encoding_ignores_pattern_order():
    pg, model = small_model()
    idx = pg.index
    perm = np.random.default_rng(0).permutation(len(idx.tmpls.owner))
    shuffled = TemplateInputs(NodeInputs(dense=idx.tmpls.patterns.dense[perm]), idx.tmpls.owner[perm],
                              idx.tmpls.n_templates)
    edges = sorted(pg.graph.edge_set())
    mr, tr = idx.rows(edges)
    a = model.energies(idx.mols, idx.tmpls, mr, tr)
    b = model.energies(idx.mols, shuffled, mr, tr)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_energy_model_checkpoint_round_trip():
    pg, model = small_model()
    params, meta = loads_checkpoint(dumps_checkpoint(model.params, model.meta()))
    again = EnergyModel.from_meta(meta, params)
    edges = sorted(pg.graph.edge_set())
    assert edge_energies(model, pg.index, edges) == edge_energies(again, pg.index, edges)


# ---------------------------------------------------------------- training and denoising

def test_truncate_negatives_priority():
    negs = (("m2", "tA"), ("m1", "tB"), ("m3", "tC"), ("m2", "tC"), ("m1", "tC"))
    s = SubgraphSample(("m1", "tZ"), frozenset(), frozenset(), (("m1", "tZ"),), negs, 1)
    out = truncate_negatives(s, 3, {"tA": 1, "tB": 9, "tC": 5})
    assert out.negatives == (("m1", "tB"), ("m1", "tC"), ("m2", "tC"))
    assert truncate_negatives(s, 10, {}) is s


def test_ranking_auc():
    assert ranking_auc([0.0, 1.0], [2.0, 3.0]) == 1.0
    assert ranking_auc([2.0, 3.0], [0.0, 1.0]) == 0.0
    assert ranking_auc([1.0], [1.0]) == 0.5
    assert ranking_auc([0.0, 2.0], [1.0]) == 0.5
    assert math.isnan(ranking_auc([], [1.0]))


def test_training_is_deterministic_and_learns():
    cfg = EnhanceConfig(epochs=15, batch_size=8, lr=3e-3, include_positive=True)
    runs = []
    for _ in range(2):
        pg, model = small_model(seed=1)
        log = train_ebm(pg.graph, model, pg.index, cfg, seed=4)
        runs.append((model.params, log))
    (p1, log1), (p2, log2) = runs
    assert all(np.array_equal(p1[k], p2[k]) for k in p1)
    assert log1.epochs == log2.epochs
    losses = [e["loss"] for e in log1.epochs]
    assert losses[-1] < losses[0]
    assert log1.epochs[-1]["pos_energy"] < log1.epochs[-1]["neg_energy"]


def test_training_max_steps():
    pg, model = small_model()
    log = train_ebm(pg.graph, model, pg.index, EnhanceConfig(epochs=50, batch_size=4, max_steps=7), seed=0)
    assert log.steps == 7


def toy_denoise_graph():
    g = graph({("m1", "t1"), ("m1", "t2"), ("m1", "t3"), ("m1", "t4")}, gt={("m1", "t1")})
    energies = {("m1", "t1"): 0.0, ("m1", "t2"): 0.1, ("m1", "t3"): 0.5, ("m1", "t4"): 0.9}
    return g, energies


def test_denoise_picks_lowest_energy():
    g, energies = toy_denoise_graph()
    r = denoise_top_n(g, None, None, 2, energies=energies)
    assert r.selected == {("m1", "t2"), ("m1", "t3")}
    assert r.e_enh == r.selected | g.gt
    hi = denoise_top_n(g, None, None, 2, select_highest=True, energies=energies)
    assert hi.selected == {("m1", "t4"), ("m1", "t3")}
    zero = denoise_top_n(g, None, None, 0, energies=energies)
    assert zero.e_enh == g.gt and not zero.selected
    with pytest.raises(ValueError):
        denoise_top_n(g, None, None, -1, energies=energies)


def test_denoise_counting_bound():
    pg, model = small_model()
    for n in (0, 1, 2, 5):
        r = denoise_top_n(pg.graph, model, pg.index, n)
        assert pg.graph.gt <= r.e_enh <= pg.graph.edge_set()
        assert len(r.e_enh) <= (n + 1) * len(pg.graph.gt)


# ---------------------------------------------------------------- graph on real reactions

AMIDES = [
    "[CH3:1][C:2](=[O:3])[OH:4].[NH2:5][CH3:6]>>[CH3:1][C:2](=[O:3])[NH:5][CH3:6]",
    "[CH3:1][CH2:7][C:2](=[O:3])[OH:4].[NH2:5][CH3:6]>>[CH3:1][CH2:7][C:2](=[O:3])[NH:5][CH3:6]",
    "[CH3:1][CH2:2][OH:3].[Cl:4][C:5]([CH3:6])=[O:7]>>[CH3:1][CH2:2][O:3][C:5]([CH3:6])=[O:7]",
]


def small_real_graph():
    from retro_ood.templates import assign_corpus_templates

    rxns = [parse_reaction(s, f"r{i}") for i, s in enumerate(AMIDES)]
    a = assign_corpus_templates(rxns, 1)
    return rxns, a, build_bipartite_graph(rxns, a.assignment, a.by_id())


def test_build_graph_is_complete_bipartite():
    rxns, a, g = small_real_graph()
    assert g.is_complete
    assert len(g.molecules) == 3 and len(g.templates) == 3
    assert g.n_edges() == 9 and len(g.edge_set()) == 9
    assert len(g.gt) == 3


def test_stage_a_removes_impossible_edges():
    rxns, a, g = small_real_graph()
    f = stage_a_filter(g)
    assert g.gt <= f.edge_set()
    assert f.edge_set() | f.failed == g.edge_set()
    assert not f.edge_set() & f.failed
    by_id = a.by_id()
    ester = a.assignment["r2"]
    # the ester template needs an O-acyl bond, which amides lack
    for r in rxns[:2]:
        assert (r.product_smiles, ester) in f.failed
        assert not apply_template(by_id[ester], r.product)


def test_stage_a_keeps_failing_gt_edge(caplog):
    rxns, a, g = small_real_graph()
    broken = Template.from_string("[Si:1][OH]>>[Si;D1:1]", 1)
    m = rxns[0].product_smiles
    g.template_objs[broken.template_id] = broken
    g.templates.append(broken.template_id)
    g.gt.add((m, broken.template_id))
    f = stage_a_filter(g)
    assert (m, broken.template_id) in f.edge_set()
    assert "does not regenerate" in caplog.text


def test_sandwich_report_flags_violations():
    rxns, a, g = small_real_graph()
    f = stage_a_filter(g)
    assert all(ok for _, ok in sandwich_report(g, f, set(g.gt)))
    missing_gt = set(list(g.gt)[1:])
    assert not dict(sandwich_report(g, f, missing_gt))["E_gt <= E_enh"]
    outside = set(g.gt) | set(f.failed)
    assert not dict(sandwich_report(g, f, outside))["E_enh <= E'_enh"]


def test_edge_file_round_trip(tmp_path):
    rxns, a, g = small_real_graph()
    f = stage_a_filter(g)
    extra = set(f.edge_set()) - g.gt
    write_edges(tmp_path / "e.tsv", f, extra, {e: 0.25 for e in f.edge_set()})
    rows = read_edges(tmp_path / "e.tsv")
    assert {(m, t) for m, t, _, _ in rows} == f.edge_set()
    assert {lab for *_, lab, _ in rows} <= {"gt", "candidate", "enhanced"}
    assert all(e == 0.25 for *_, e in rows)


@pytest.mark.slow
def test_run_enhancement_on_desk_subset(corpus):
    train = corpus[:80]
    enc = EncoderConfig(hidden=32, embed=16, head_hidden=16, fp_bits=512)
    res = run_enhancement(train, 1, EnhanceConfig(n=2, epochs=2), enc, seed=0)
    assert res.sandwich_ok
    counts = res.counts()
    assert counts["E_enh"] <= 3 * counts["E_gt"]
    train_products = {r.product_smiles for r in train}
    for r in res.reactions:
        assert r.provenance == "enhanced"
        assert r.product_smiles in train_products
        r.check_mapping()
        m, t = res.edge_of[r.id]
        assert (m, t) in res.denoise.selected
        assert r.ground_truth in apply_template(res.templates[t], r.product)
    zero = run_enhancement(train, 1, EnhanceConfig(n=0, epochs=1), enc, seed=0)
    assert zero.denoise.e_enh == zero.g_full.gt and zero.reactions == []
    with pytest.raises(ValueError):
        run_enhancement(train, 0)
