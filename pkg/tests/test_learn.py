import math

import numpy as np
import pytest

from retro_ood.learn import (
    Classifier,
    ClassifierConfig,
    EvalResult,
    IrmConfig,
    TooFewSamples,
    accuracy,
    best_match_rank,
    bin_environments,
    evaluate_topk,
    fit_arrays,
    irm_penalty,
    irm_penalty_tensor,
    logistic_risk_grad,
    make_env_task,
    rank_from_scores,
    softmax_risk_grad,
    topk_from_ranks,
    train_classifier,
)
from retro_ood.molgraph import parse_smiles, to_canonical_smiles
from retro_ood.numerics import NonFinite, Tensor, finite_diff_check
from retro_ood.numerics import ops as T
from retro_ood.templates import Reaction, apply_template

from helpers import permute


def chain_reaction(n_atoms, rid):
    smi = "C" * n_atoms
    return Reaction(rid, [parse_smiles(smi)], parse_smiles(smi), provenance="test")


# ---------------------------------------------------------------- environments

def test_size_bins_are_quantiles():
    rxns = [chain_reaction(n, f"r{n}") for n in range(8, 0, -1)]
    env = bin_environments(rxns, "size", 4)
    assert [env[f"r{n}"] for n in range(1, 9)] == [0, 0, 1, 1, 2, 2, 3, 3]


def test_equal_sizes_bin_by_id():
    rxns = [chain_reaction(3, f"r{i}") for i in (5, 1, 7, 3, 2, 0, 4, 6)]
    env = bin_environments(rxns, "size", 4)
    assert [env[f"r{i}"] for i in range(8)] == [0, 0, 1, 1, 2, 2, 3, 3]
    assert env == bin_environments(list(reversed(rxns)), "size", 4)


def test_binning_errors_and_coverage(corpus):
    with pytest.raises(TooFewSamples):
        bin_environments([chain_reaction(2, "a")], "size", 2)
    with pytest.raises(TooFewSamples):
        bin_environments([chain_reaction(2, f"r{i}") for i in range(5)], "scaffold", 2)
    with pytest.raises(ValueError):
        bin_environments(corpus[:10], "size", 1)
    for crit in ("size", "scaffold"):
        env = bin_environments(corpus, crit, 4)
        assert set(env) == {r.id for r in corpus}
        assert set(env.values()) == {0, 1, 2, 3}


def test_irm_config_validation():
    with pytest.raises(ValueError):
        IrmConfig(lam=-1)
    with pytest.raises(ValueError):
        IrmConfig(n_envs=1)
    with pytest.raises(ValueError):
        IrmConfig(criterion="colour")


# ---------------------------------------------------------------- penalty

def test_penalty_worked_examples():
    assert irm_penalty([logistic_risk_grad([0.0], [1])]) == 0.0
    g = logistic_risk_grad([2.0], [1])
    assert g == pytest.approx(-2.0 / (1.0 + math.exp(2.0)), rel=1e-12)
    assert g == pytest.approx(-0.2384, abs=1e-4)
    assert irm_penalty([g]) == pytest.approx(0.05684, abs=1e-5)
    assert irm_penalty([logistic_risk_grad([20.0], [1])]) < 1e-12


def test_penalty_properties():
    rng = np.random.default_rng(0)
    for _ in range(20):
        g = rng.normal(size=4)
        assert irm_penalty(g) == pytest.approx(float(np.sum(g**2)))
        assert irm_penalty(g) >= 0
    assert irm_penalty(np.zeros(3)) == 0.0
    with pytest.raises(NonFinite):
        irm_penalty([1.0, float("nan")])
    with pytest.raises(ValueError):
        irm_penalty([])


def test_softmax_risk_grad_matches_scalar_derivative():
    rng = np.random.default_rng(1)
    z = rng.normal(size=(6, 4))
    y = rng.integers(0, 4, 6)

    def ce(w):
        s = w * z
        s = s - s.max(axis=1, keepdims=True)
        return -(s[np.arange(6), y] - np.log(np.exp(s).sum(axis=1)))

    h = 1e-6
    fd = (ce(1 + h) - ce(1 - h)) / (2 * h)
    assert np.allclose(softmax_risk_grad(Tensor(z), y).value, fd, atol=1e-8)


def test_penalty_tensor_gradients():
    rng = np.random.default_rng(2)
    for draw in range(100):
        x = rng.normal(size=(12, 5))
        y = rng.integers(0, 3, 12)
        env = rng.integers(0, 3, 12)
        params = {"W": rng.normal(size=(5, 3)), "b": rng.normal(size=3)}

        def fn(p, _):
            logits = T.add(T.matmul(Tensor(x), p["W"]), p["b"])
            return irm_penalty_tensor(logits, y, env)

        rep = finite_diff_check(fn, params, seed=draw)
        assert rep.max_rel_error < 1e-4


def test_classifier_loss_gradients():
    from retro_ood.learn.classifier import _cross_entropy, forward, init_params

    rng = np.random.default_rng(3)
    cfg = ClassifierConfig(hidden=(6,), dropout=0.0, fp_bits=8)
    for draw in range(10):
        x = rng.normal(size=(10, 8))
        y = rng.integers(0, 4, 10)
        env = rng.integers(0, 2, 10)
        params = init_params(cfg, 8, 4, seed=draw)

        def fn(p, _):
            logits, _c = forward(cfg, p, x)
            return T.add(_cross_entropy(logits, y), T.mul(irm_penalty_tensor(logits, y, env), 3.0))

        assert finite_diff_check(fn, params, seed=draw).max_rel_error < 1e-4


# ---------------------------------------------------------------- training

def test_lambda_zero_matches_erm_bit_for_bit():
    task = make_env_task(n_per_env=100, n_test=10, seed=0)
    cfg = ClassifierConfig(hidden=(8,), dropout=0.1, epochs=5, batch_size=32, lr=1e-2)
    p_erm, log_erm = fit_arrays(task.x_train, task.y_train, 2, cfg, "erm", seed=3)
    p_irm, log_irm = fit_arrays(task.x_train, task.y_train, 2, cfg, "irm",
                                IrmConfig(lam=0.0, warmup=0), task.env_train, seed=3)
    assert all(np.array_equal(p_erm[k], p_irm[k]) for k in p_erm)
    assert [e["risk"] for e in log_erm.epochs] == [e["risk"] for e in log_irm.epochs]


def test_training_is_deterministic():
    task = make_env_task(n_per_env=100, n_test=10, seed=1)
    cfg = ClassifierConfig(hidden=(8,), dropout=0.1, epochs=4, batch_size=16)
    irm = IrmConfig(lam=5.0, warmup=1)
    a, la = fit_arrays(task.x_train, task.y_train, 2, cfg, "irm", irm, task.env_train, seed=7)
    b, lb = fit_arrays(task.x_train, task.y_train, 2, cfg, "irm", irm, task.env_train, seed=7)
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert la.epochs == lb.epochs
    assert not la.epochs[0]["penalty_active"] and la.epochs[1]["penalty_active"]


def test_fit_errors():
    x, y = np.ones((4, 2)), np.array([0, 1, 0, 1])
    with pytest.raises(ValueError):
        fit_arrays(x, y, 2, ClassifierConfig(hidden=()), "irm")
    with pytest.raises(ValueError):
        fit_arrays(x, y, 2, ClassifierConfig(hidden=()), "dro")
    with pytest.raises(NonFinite), np.errstate(all="ignore"):
        fit_arrays(x * 1e200, y, 2, ClassifierConfig(hidden=(), epochs=3, lr=1e150), "erm")


def test_linear_erm_fits_in_distribution():
    task = make_env_task(n_per_env=500, n_test=500, seed=0)
    cfg = ClassifierConfig(hidden=(), dropout=0.0, batch_size=None, epochs=300, lr=0.05)
    params, _ = fit_arrays(task.x_train, task.y_train, 2, cfg, "erm", seed=0)
    from retro_ood.learn import predict_scores

    assert accuracy(predict_scores(cfg, params, task.x_train), task.y_train) > 0.85


# ---------------------------------------------------------------- ranking and evaluation

def test_rank_ties_break_by_id():
    assert [t for t, _ in rank_from_scores(("c", "a", "b"), np.zeros(3))] == ["a", "b", "c"]
    assert [t for t, _ in rank_from_scores(("c", "a", "b"), np.array([1.0, 0.0, 1.0]))] == ["b", "c", "a"]


def test_topk_worked_examples():
    acc = topk_from_ranks([1, 4, None], (1, 3, 5, 10))
    assert acc[1] == pytest.approx(1 / 3) and acc[3] == pytest.approx(1 / 3)
    assert acc[5] == pytest.approx(2 / 3) and acc[10] == pytest.approx(2 / 3)
    single = topk_from_ranks([3], (1, 3, 5))
    assert single == {1: 0.0, 3: 1.0, 5: 1.0}
    assert topk_from_ranks([], (1, 3)) == {1: 0.0, 3: 0.0}


def test_eval_result_monotone():
    good = EvalResult((1, 3), {"a": {1: 0.2, 3: 0.5}})
    bad = EvalResult((1, 3), {"a": {1: 0.6, 3: 0.5}})
    assert good.monotone() and not bad.monotone()
    assert good.to_dict() == {"a": {"1": 0.2, "3": 0.5}}


def test_best_match_rank_counts_distinct_outcomes(assigned1, corpus):
    by_id = assigned1.by_id()
    r = next(r for r in corpus if r.id in assigned1.assignment)
    gt_t = assigned1.assignment[r.id]
    others = [t for t in sorted(by_id) if t != gt_t]
    assert best_match_rank([gt_t] + others, by_id, r.product, r.ground_truth, 10) == 1
    failing = [t for t in others if not apply_template(by_id[t], r.product)][:20]
    assert best_match_rank(failing + [gt_t], by_id, r.product, r.ground_truth, 10) == 1
    assert best_match_rank(failing, by_id, r.product, r.ground_truth, 10) is None


def test_scaling_scores_keeps_ranking():
    rng = np.random.default_rng(0)
    vocab = tuple(f"t{i}" for i in range(20))
    for _ in range(20):
        s = rng.normal(size=20)
        c = rng.uniform(0.01, 100)
        assert [t for t, _ in rank_from_scores(vocab, s)] == [t for t, _ in rank_from_scores(vocab, c * s)]


class OracleClassifier(Classifier):
    """Scores the ground-truth template of each known product highest."""

    def __init__(self, base, truth):
        super().__init__(base.cfg, base.radius, base.vocab, base.templates, base.params)
        self.truth = truth

    def scores(self, products):
        col = {t: i for i, t in enumerate(self.vocab)}
        out = np.zeros((len(products), len(self.vocab)))
        for i, g in enumerate(products):
            out[i, col[self.truth[to_canonical_smiles(g, keep_maps=False)]]] = 1.0
        return out


@pytest.fixture(scope="module")
def small_clf(corpus, assigned1):
    train = corpus[:120]
    cfg = ClassifierConfig(hidden=(32,), fp_bits=256, epochs=3, batch_size=32)
    clf, log = train_classifier(train, assigned1.assignment, assigned1.by_id(), 1, cfg, seed=0)
    return train, clf, log


def test_perfect_oracle_scores_one(small_clf, assigned1):
    train, clf, _ = small_clf
    rows = [r for r in train if r.id in assigned1.assignment]
    truth = {r.product_smiles: assigned1.assignment[r.id] for r in rows}
    # keep products with a single ground-truth template so the oracle is well defined
    seen: dict[str, set] = {}
    for r in rows:
        seen.setdefault(r.product_smiles, set()).add(assigned1.assignment[r.id])
    rows = [r for r in rows if len(seen[r.product_smiles]) == 1]
    # and whose template regenerates exactly the recorded precursors
    by_id = assigned1.by_id()
    rows = [r for r in rows if apply_template(by_id[assigned1.assignment[r.id]], r.product) == {r.ground_truth}]
    assert len(rows) > 50
    res = evaluate_topk(OracleClassifier(clf, truth), {"train": rows})
    assert all(v == 1.0 for v in res.topk["train"].values())
    assert all(rank == 1 for rank in res.ranks["train"].values())


def test_classifier_save_load(tmp_path, small_clf):
    train, clf, log = small_clf
    clf.save(tmp_path / "c.ckpt")
    again = Classifier.load(tmp_path / "c.ckpt")
    assert again.vocab == clf.vocab and again.cfg == clf.cfg
    products = [r.product for r in train[:10]]
    assert np.array_equal(clf.scores(products), again.scores(products))
    assert {t: s.canonical_string for t, s in again.templates.items()} == \
        {t: s.canonical_string for t, s in clf.templates.items()}
    assert len(log.epochs) == 3


def test_ranking_ignores_atom_order(small_clf):
    train, clf, _ = small_clf
    rng = np.random.default_rng(0)
    for r in train[:10]:
        assert clf.rank_templates(r.product) == clf.rank_templates(permute(r.product, rng))


def test_evaluation_parallel_matches_serial(small_clf, corpus):
    _, clf, _ = small_clf
    parts = {"a": corpus[120:150], "b": corpus[150:170]}
    serial = evaluate_topk(clf, parts)
    parallel = evaluate_topk(clf, parts, n_jobs=2)
    assert serial.ranks == parallel.ranks and serial.topk == parallel.topk
    assert serial.monotone()
    with pytest.raises(ValueError):
        evaluate_topk(clf, parts, ks=(0,))


def test_center_head_and_center_penalty(corpus, assigned0, assigned1):
    train = corpus[:60]
    cfg = ClassifierConfig(hidden=(16,), fp_bits=128, epochs=2, batch_size=32, center_head=True)
    irm = IrmConfig(lam=2.0, warmup=0, target="center")
    clf, log = train_classifier(train, assigned1.assignment, assigned1.by_id(), 1, cfg, "irm", irm, 0,
                                center_assignment=assigned0.assignment)
    assert clf.center_vocab and "center.W" in clf.params
    assert log.epochs[-1]["penalty_active"]
    with pytest.raises(ValueError):
        train_classifier(train, assigned1.assignment, assigned1.by_id(), 1, cfg)
