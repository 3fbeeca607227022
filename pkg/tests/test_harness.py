from dataclasses import replace

import numpy as np
import pytest

from isvd_gpm.harness import (
    DenseNet,
    HarnessConfig,
    Layer,
    TaskGenConfig,
    TrainingError,
    backward,
    capture_and_update_basis,
    evaluate_task,
    forward,
    init_net,
    make_tasks,
    mse_loss,
    run_sequence,
    train_task,
)
from isvd_gpm.isvd import significant_basis_direct
from isvd_gpm.linalg import principal_angles
from isvd_gpm.metrics import auroc
from isvd_gpm.projection import ProjectionState

SMALL = TaskGenConfig(d_in=12, n_tasks=2, rank=2, n_train=60, n_eval=40, anomaly_scale=0.5)


def flat_params(net):
    return [p for layer in net.layers for p in (layer.weight, layer.bias)]


class TestTasks:
    def test_rank_too_large(self):
        with pytest.raises(ValueError):
            TaskGenConfig(d_in=4, rank=5)

    def test_deterministic(self):
        a = make_tasks(SMALL, 3)
        b = make_tasks(SMALL, 3)
        for ta, tb in zip(a, b):
            for name in ("train_inputs", "eval_normal", "eval_anomalous"):
                assert getattr(ta, name).tobytes() == getattr(tb, name).tobytes()

    def test_exact_rank(self):
        t = make_tasks(SMALL, 0)[0]
        assert np.linalg.matrix_rank(t.train_inputs) == SMALL.rank
        resid = t.eval_normal - t.eval_normal @ t.frame @ t.frame.T
        assert np.abs(resid).max() < 1e-12

    def test_orthogonal_frames_give_distinct_subspaces(self):
        t0, t1 = make_tasks(SMALL, 1)
        a = significant_basis_direct(t0.train_inputs.T, 1.0).basis
        b = significant_basis_direct(t1.train_inputs.T, 1.0).basis
        assert principal_angles(a, b).min() > 0.1

    def test_null_anomaly_is_chance(self):
        cfg = replace(SMALL, n_tasks=1, anomaly_scale=0.0, n_eval=2000)
        task = make_tasks(cfg, 0)[0]
        net = init_net([12, 6, 12], "tanh", np.random.default_rng(0))
        assert abs(evaluate_task(net, task) - 0.5) < 0.05

    def test_shared_random_frames(self):
        cfg = TaskGenConfig(d_in=16, n_tasks=3, rank=2, shared_rank=2, frames="random")
        tasks = make_tasks(cfg, 0)
        shared = tasks[0].frame[:, :2]
        for t in tasks:
            np.testing.assert_allclose(t.frame[:, :2], shared)
            assert np.abs(shared.T @ t.frame[:, 2:]).max() < 1e-12


class TestNet:
    def test_identity_net(self):
        net = DenseNet([Layer(np.eye(3), np.zeros(3), "linear")])
        x = np.random.default_rng(0).standard_normal((5, 3))
        out, inputs = forward(net, x)
        np.testing.assert_array_equal(out, x)
        assert inputs[0].tobytes() == x.tobytes()

    def test_two_layer_capture(self):
        net = DenseNet([Layer(np.array([[1.0, -1.0], [2.0, 0.5]]), np.array([0.1, 0.0]), "relu"),
                        Layer(np.eye(2), np.zeros(2), "linear")])
        x = np.array([[1.0, -1.0]])
        # z = [1 - 2 + 0.1, -1 - 0.5] = [-0.9, -1.5] -> relu -> [0, 0]
        _, inputs = forward(net, x)
        np.testing.assert_allclose(inputs[1], [[0.0, 0.0]])
        x = np.array([[1.0, 1.0]])
        _, inputs = forward(net, x)
        np.testing.assert_allclose(inputs[1], [[3.1, 0.0]])

    def test_bad_chain(self):
        with pytest.raises(ValueError):
            DenseNet([Layer(np.eye(2), np.zeros(2)), Layer(np.eye(3), np.zeros(3))])

    def test_zero_loss_zero_grad(self):
        net = init_net([4, 3, 4], "tanh", np.random.default_rng(0))
        x = np.random.default_rng(1).standard_normal((6, 4))
        grads, loss = backward(net, x, net(x))
        assert loss == 0.0
        assert max(np.abs(g).max() for pair in grads for g in pair) <= 1e-12

    def test_linear_closed_form(self):
        rng = np.random.default_rng(2)
        w = rng.standard_normal((3, 2))
        net = DenseNet([Layer(w, np.zeros(2), "linear")])
        x = rng.standard_normal((1, 3))
        y = rng.standard_normal((1, 2))
        grads, _ = backward(net, x, y)
        gw = grads[0][0]
        np.testing.assert_allclose(gw, 2.0 / 1 * x.T @ (x @ w - y), rtol=1e-14)

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("act", ["tanh", "relu"])
    def test_finite_differences(self, seed, act):
        rng = np.random.default_rng(seed)
        net = init_net([5, 4, 3, 5], act, rng)
        for layer in net.layers:
            layer.bias[:] = rng.standard_normal(layer.bias.shape) * 0.1
        x = rng.standard_normal((7, 5))
        y = rng.standard_normal((7, 5))
        grads, _ = backward(net, x, y)
        analytic = [g for pair in grads for g in pair]
        h = 1e-5
        for p, g in zip(flat_params(net), analytic):
            num = np.zeros_like(p)
            for idx in np.ndindex(p.shape):
                old = p[idx]
                p[idx] = old + h
                up = mse_loss(net(x), y)
                p[idx] = old - h
                dn = mse_loss(net(x), y)
                p[idx] = old
                num[idx] = (up - dn) / (2 * h)
            err = np.linalg.norm(num - g) / max(np.linalg.norm(g), 1e-12)
            assert err <= 1e-4


class TestTraining:
    def test_first_task_matches_unprotected(self):
        task = make_tasks(SMALL, 0)[0]
        net = init_net([12, 6, 12], "tanh", np.random.default_rng(0))
        proj = ProjectionState({}, 0.05)
        a, ca = train_task(net, task, proj, 5, 16, np.random.default_rng(1), "project", True)
        b, cb = train_task(net, task, proj, 5, 16, np.random.default_rng(1), "raw", False)
        assert ca == cb
        for pa, pb in zip(flat_params(a), flat_params(b)):
            assert pa.tobytes() == pb.tobytes()

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_raises(self):
        task = make_tasks(SMALL, 0)[0]
        net = init_net([12, 6, 12], "linear", np.random.default_rng(0))
        with pytest.raises(TrainingError):
            train_task(net, task, ProjectionState({}, 1e4), 50, 16, np.random.default_rng(0))

    def test_capture_single_block_is_direct(self):
        task = make_tasks(SMALL, 0)[0]
        net = init_net([12, 6, 12], "tanh", np.random.default_rng(0))
        proj = capture_and_update_basis(net, task, ProjectionState({}, 0.1), 0.99, sample_frac=1.0,
                                        n_blocks=1, bias_mode="raw")
        _, inputs = forward(net, task.train_inputs)
        for i, x in enumerate(inputs):
            direct = significant_basis_direct(x.T, 0.99)
            got = proj.basis_for(i)
            assert got.k == direct.k
            assert principal_angles(got.basis, direct.basis).max() <= 1e-8

    def test_capture_repeated_task_keeps_span(self):
        task = make_tasks(SMALL, 0)[0]
        net = init_net([12, 6, 12], "tanh", np.random.default_rng(0))
        p1 = capture_and_update_basis(net, task, ProjectionState({}, 0.1), 1.0, 1.0)
        p2 = capture_and_update_basis(net, task, p1, 1.0, 1.0)
        for i in p1.per_layer_bases:
            a, b = p1.basis_for(i), p2.basis_for(i)
            assert a.k == b.k
            assert principal_angles(a.basis, b.basis).max() <= 1e-6

    def test_default_sample_fraction(self):
        assert HarnessConfig().sample_frac == 0.1

    def test_forgetting_baseline_without_projection(self):
        cfg = TaskGenConfig(d_in=16, n_tasks=2, rank=3, frames="random", n_train=100)
        t0, t1 = make_tasks(cfg, 4)
        net = init_net([16, 8, 16], "tanh", np.random.default_rng(0))
        proj = ProjectionState({}, 0.05)
        net, _ = train_task(net, t0, proj, 200, 32, np.random.default_rng(1), project=False)
        before = mse_loss(net(t0.eval_normal), t0.eval_normal)
        net, _ = train_task(net, t1, proj, 50, 32, np.random.default_rng(2), project=False)
        after = mse_loss(net(t0.eval_normal), t0.eval_normal)
        assert after > before

    def test_projection_preserves_prior_outputs(self):
        cfg = TaskGenConfig(d_in=16, n_tasks=2, rank=3, frames="random", n_train=100)
        t0, t1 = make_tasks(cfg, 4)
        net = init_net([16, 8, 16], "tanh", np.random.default_rng(0))
        proj = ProjectionState({}, 0.05)
        net, _ = train_task(net, t0, proj, 100, 32, np.random.default_rng(1))
        proj = capture_and_update_basis(net, t0, proj, 1.0, 1.0)
        before = net(t0.eval_normal)
        net, _ = train_task(net, t1, proj, 50, 32, np.random.default_rng(2))
        after = net(t0.eval_normal)
        assert np.linalg.norm(after - before) <= 1e-4 * np.linalg.norm(before)


class TestEvaluate:
    def test_matches_pairwise(self):
        from tests.test_metrics import pairwise_auroc
        from isvd_gpm.harness import reconstruction_errors

        cfg = TaskGenConfig(d_in=12, n_tasks=1, rank=2, n_eval=25)
        task = make_tasks(cfg, 0)[0]
        net = init_net([12, 6, 12], "tanh", np.random.default_rng(0))
        s = reconstruction_errors(net, task.eval_inputs)
        assert evaluate_task(net, task) == pairwise_auroc(s, task.eval_labels)

    def test_perfect_separation(self):
        s = np.r_[np.zeros(5), np.ones(5)]
        assert auroc(s, np.r_[np.zeros(5, int), np.ones(5, int)]) == 1.0


class TestRunSequence:
    def test_single_task(self):
        cfg = HarnessConfig(tasks=replace(SMALL, n_tasks=1), hidden=(6,), epochs_base=5)
        rep = run_sequence(cfg, 0)
        assert rep.metric_table.t_steps == 1
        assert rep.forgetting is None
        assert rep.a_metric == rep.metric_table.rows[0][0]

    def test_structure_and_determinism(self):
        cfg = HarnessConfig(tasks=replace(SMALL, n_tasks=3), hidden=(6,), epochs_base=10,
                            epochs_incremental=5)
        a = run_sequence(cfg, 5)
        b = run_sequence(cfg, 5)
        assert a.to_dict() == b.to_dict()
        assert [len(r) for r in a.metric_table.rows] == [1, 2, 3]
        assert a.metric_table.is_complete()

    def test_projection_reduces_forgetting(self):
        from isvd_gpm.config import SUITES

        tasks_cfg, harness = SUITES["conflict"]
        cfg = replace(harness, tasks=tasks_cfg)
        on = run_sequence(cfg, 0)
        off = run_sequence(replace(cfg, project=False), 0)
        assert on.forgetting <= off.forgetting
