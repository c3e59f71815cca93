import numpy as np
import pytest

from retro_ood.molgraph import BOND_DIM, featurize, parse_smiles
from retro_ood.numerics import (
    AdamState,
    GraphBatch,
    MlpSpec,
    MpnnSpec,
    NonFinite,
    ShapeError,
    Tensor,
    adam_step,
    dumps_checkpoint,
    finite_diff_check,
    load_checkpoint,
    loads_checkpoint,
    loss_and_grad,
    message_passing_encode,
    mlp,
    mlp_forward,
    save_checkpoint,
)
from retro_ood.numerics import ops as T

from helpers import permute

RNG = np.random.default_rng(0)
SEG = np.array([0, 2, 1, 2, 0])


# Each entry builds a scalar loss from a parameter dict with "a" (5, 3) and "b" (3, 4).
OP_LOSSES = {
    "add_broadcast": lambda p: T.sum(T.square(T.add(p["a"], T.reshape(T.take_rows(T.reshape(p["b"], (12,)), np.arange(3)), (1, 3))))),
    "sub": lambda p: T.sum(T.square(T.sub(p["a"], T.mul(p["a"], p["a"])))),
    "matmul": lambda p: T.sum(T.matmul(p["a"], p["b"])),
    "relu": lambda p: T.sum(T.mul(T.relu(p["a"]), p["a"])),
    "exp_log": lambda p: T.sum(T.log(T.add(T.exp(p["a"]), 1.0))),
    "softplus": lambda p: T.mean(T.softplus(T.matmul(p["a"], p["b"]))),
    "mean_axis": lambda p: T.sum(T.square(T.mean(p["a"], axis=0))),
    "sum_axis": lambda p: T.sum(T.square(T.sum(p["b"], axis=1))),
    "logsumexp": lambda p: T.sum(T.logsumexp(T.matmul(p["a"], p["b"]), axis=1)),
    "log_softmax_pick": lambda p: T.mean(T.pick(T.log_softmax(T.matmul(p["a"], p["b"]), axis=1),
                                                np.array([0, 3, 1, 2, 0]))),
    "take_rows": lambda p: T.sum(T.square(T.take_rows(p["a"], np.array([0, 0, 4, 2])))),
    "segment_sum": lambda p: T.sum(T.square(T.segment_sum(p["a"], SEG, 3))),
    "segment_mean": lambda p: T.sum(T.square(T.segment_mean(p["a"], SEG, 3))),
    "segment_logsumexp": lambda p: T.sum(T.segment_logsumexp(T.sum(p["a"], axis=1), SEG, 3)),
    "concat": lambda p: T.sum(T.square(T.concat([p["a"], T.matmul(p["a"], p["b"])], axis=1))),
}


@pytest.mark.parametrize("name", sorted(OP_LOSSES))
def test_op_gradients(name):
    fn = OP_LOSSES[name]
    for draw in range(5):
        rng = np.random.default_rng(draw)
        params = {"a": rng.normal(size=(5, 3)), "b": rng.normal(size=(3, 4))}
        rep = finite_diff_check(lambda p, _: fn(p), params, n_coords=27, seed=draw)
        assert rep.max_rel_error < 1e-6, (name, rep)


def test_square_gradient_closed_form():
    value, grads = loss_and_grad(lambda p, _: T.square(p["w"]), {"w": np.array(3.0)})
    assert value == 9.0 and grads["w"] == pytest.approx(6.0, abs=1e-12)
    rep = finite_diff_check(lambda p, _: T.square(p["w"]), {"w": np.array(3.0)}, h=1e-5)
    assert rep.max_rel_error < 1e-9


def test_constant_loss_zero_grads():
    _, grads = loss_and_grad(lambda p, _: Tensor(2.5), {"w": np.ones((2, 2))})
    assert np.all(grads["w"] == 0)


def test_corrupted_gradient_detected():
    params = {"w": RNG.normal(size=(4, 3))}
    fn = lambda p, _: T.sum(T.square(p["w"]))  # noqa: E731
    _, grads = loss_and_grad(fn, params)
    bad = {"w": grads["w"] * 1.01}
    assert not finite_diff_check(fn, params, grads=bad).ok
    assert finite_diff_check(fn, params).ok


def test_mlp_squared_loss_matches_finite_differences():
    spec = MlpSpec((6, 8, 5, 2))
    for draw in range(10):
        rng = np.random.default_rng(100 + draw)
        params = spec.init(rng, "m.")
        x, y = rng.normal(size=(7, 6)), rng.normal(size=(7, 2))

        def fn(p, _):
            return T.mean(T.square(T.sub(mlp(spec, p, "m.", Tensor(x)), y)))

        assert finite_diff_check(fn, params, n_coords=60, seed=draw).max_rel_error < 1e-4


def test_nonfinite_and_shape_errors():
    with pytest.raises(NonFinite), np.errstate(divide="ignore"):
        loss_and_grad(lambda p, _: T.sum(T.log(p["w"])), {"w": np.zeros(3)})
    with pytest.raises(ShapeError):
        loss_and_grad(lambda p, _: T.matmul(p["w"], p["w"]), {"w": np.ones((2, 3))})
    with pytest.raises(ShapeError):
        loss_and_grad(lambda p, _: p["w"], {"w": np.ones(3)})


# ---------------------------------------------------------------- MLP forward

def test_mlp_zero_weights_give_bias():
    spec = MlpSpec((4, 3, 2))
    params = {k: np.zeros_like(v) for k, v in spec.init(RNG, "").items()}
    params["b1"] = np.array([0.5, -2.0])
    out, acts = mlp_forward(params, RNG.normal(size=(6, 4)), spec)
    assert np.all(out == np.array([0.5, -2.0]))
    assert len(acts) == 2


def test_mlp_single_layer_is_affine():
    spec = MlpSpec((4, 3))
    params = spec.init(RNG, "")
    params["b0"] = RNG.normal(size=3)
    x = RNG.normal(size=(5, 4))
    out, _ = mlp_forward(params, x, spec)
    assert np.allclose(out, x @ params["W0"] + params["b0"], rtol=0, atol=1e-14)


def test_mlp_dropout_replay():
    spec = MlpSpec((4, 16, 2), dropout=0.5)
    params = spec.init(np.random.default_rng(1), "")
    x = RNG.normal(size=(8, 4))
    eval1, _ = mlp_forward(params, x, spec)
    eval2, _ = mlp_forward(params, x, spec)
    assert np.array_equal(eval1, eval2)
    t1, _ = mlp_forward(params, x, spec, training=True, rng_seed=5)
    t2, _ = mlp_forward(params, x, spec, training=True, rng_seed=5)
    t3, _ = mlp_forward(params, x, spec, training=True, rng_seed=6)
    assert np.array_equal(t1, t2) and not np.array_equal(t1, t3)
    assert not np.array_equal(t1, eval1)


def test_mlp_spec_validation():
    with pytest.raises(ShapeError):
        MlpSpec((4,))
    with pytest.raises(ValueError):
        MlpSpec((4, 2), dropout=1.0)
    spec = MlpSpec((4, 2))
    with pytest.raises(ShapeError):
        mlp_forward(spec.init(RNG, ""), np.ones((3, 5)), spec)


def test_glorot_bounds():
    spec = MlpSpec((30, 20))
    w = spec.init(np.random.default_rng(0), "")["W0"]
    a = np.sqrt(6 / 50)
    assert np.all(np.abs(w) <= a) and w.std() > a / 3


# ---------------------------------------------------------------- Adam

def test_adam_first_step():
    params, state = adam_step(AdamState(lr=1e-3), {"w": np.array([2.0])}, {"w": np.array([1.0])})
    assert params["w"][0] - 2.0 == pytest.approx(-1e-3, rel=1e-6)
    assert state.step == 1


def test_adam_zero_grads_leave_params():
    p = {"w": RNG.normal(size=(3, 3))}
    new, _ = adam_step(AdamState(), p, {"w": np.zeros((3, 3))})
    assert np.array_equal(new["w"], p["w"])


def test_adam_deterministic_and_errors():
    def run():
        p, s = {"w": np.linspace(-1, 1, 6)}, AdamState(lr=0.01)
        for _ in range(400):
            _, g = loss_and_grad(lambda q, _: T.sum(T.square(T.sub(q["w"], 0.3))), p)
            p, s = adam_step(s, p, g)
        return p["w"]

    assert np.array_equal(run(), run())
    assert np.allclose(run(), 0.3, atol=0.05)
    with pytest.raises(NonFinite):
        adam_step(AdamState(), {"w": np.ones(2)}, {"w": np.array([np.nan, 0.0])})
    with pytest.raises(ShapeError):
        adam_step(AdamState(), {"w": np.ones(2)}, {"w": np.ones(3)})


# ---------------------------------------------------------------- message passing

def _encode(spec, params, graphs):
    batch = GraphBatch.from_features([featurize(g) for g in graphs], BOND_DIM)
    return message_passing_encode(spec, {k: Tensor(v) for k, v in params.items()}, "g.", batch).value


def test_mpnn_single_atom():
    g = parse_smiles("N")
    for depth in (0, 1, 3):
        spec = MpnnSpec(98, BOND_DIM, hidden=8, depth=depth)
        p = spec.init(np.random.default_rng(depth), "g.")
        p["b_upd"] = np.random.default_rng(9).normal(size=8)
        x = featurize(g)[0]
        h = np.maximum(x @ p["g.W_in"] + p["g.b_in"], 0)
        for _ in range(depth):
            h = np.maximum(h @ p["g.W_self"] + p["g.b_upd"], 0)
        assert np.allclose(_encode(spec, p, [g]), h, atol=1e-14)


def test_mpnn_depth_zero_is_mean_projection():
    spec = MpnnSpec(98, BOND_DIM, hidden=8, depth=0)
    p = spec.init(np.random.default_rng(0), "g.")
    g = parse_smiles("CC(=O)N")
    x = featurize(g)[0]
    assert np.allclose(_encode(spec, p, [g])[0], np.maximum(x @ p["g.W_in"], 0).mean(axis=0))


def test_mpnn_permutation_invariance(corpus):
    spec = MpnnSpec(98, BOND_DIM, hidden=16, depth=4)
    p = spec.init(np.random.default_rng(0), "g.")
    rng = np.random.default_rng(1)
    graphs = [r.product for r in corpus[:10]]
    ref = _encode(spec, p, graphs)
    shuffled = _encode(spec, p, [permute(g, rng) for g in graphs])
    assert np.allclose(ref, shuffled, rtol=1e-10, atol=1e-12)


def test_mpnn_gradients():
    spec = MpnnSpec(98, BOND_DIM, hidden=6, depth=2)
    graphs = [parse_smiles(s) for s in ["CC(=O)N", "c1ccccc1O", "C"]]
    batch = GraphBatch.from_features([featurize(g) for g in graphs], BOND_DIM)
    for draw in range(5):
        p = spec.init(np.random.default_rng(draw), "g.")
        p["g.b_in"] = np.random.default_rng(50 + draw).normal(size=6) * 0.1
        fn = lambda q, _: T.sum(T.square(message_passing_encode(spec, q, "g.", batch)))  # noqa: E731
        assert finite_diff_check(fn, p, n_coords=60, seed=draw).max_rel_error < 1e-4


# ---------------------------------------------------------------- checkpoints

def test_checkpoint_round_trip(tmp_path):
    params = {"a": RNG.normal(size=(3, 4)), "b": np.array(1.5), "c": np.zeros(0)}
    save_checkpoint(tmp_path / "x.ckpt", params, {"k": [1, 2]})
    again, meta = load_checkpoint(tmp_path / "x.ckpt")
    assert meta == {"k": [1, 2]}
    for k in params:
        assert again[k].shape == params[k].shape and np.array_equal(again[k], params[k])
    assert dumps_checkpoint(again, meta) == (tmp_path / "x.ckpt").read_bytes()


def test_checkpoint_rejects_garbage():
    with pytest.raises(ValueError):
        loads_checkpoint(b"not a checkpoint at all")
    good = bytearray(dumps_checkpoint({"a": np.ones(2)}))
    good = bytes(good).replace(b'"version":1', b'"version":9')
    with pytest.raises(ValueError):
        loads_checkpoint(good)
