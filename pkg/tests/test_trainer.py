"""
Tests for the training loop
"""

import numpy as np
import pytest

from config.settings import settings
from src.green import trainer as trainer_module
from src.green.collocation import TrainConfig, sample_collocation
from src.green.surrogate import ExactGreenKernel, evaluate_green
from src.green.trainer import GreenTrainer, source_chunks, train
from src.models.mlp_network import init_network
from src.monitoring.run_manifest import TrainingLossLog
from src.problems.benchmark_problems import manufactured_case
from src.utils.errors import NonFiniteLossError, TrainingDivergedError

TINY_1D = dict(depth=1, width=8, n_sources=6, n_regular=10, n_boundary=2, n_singular=6, log_every=1)


def _same_parameters(a, b):
    return all(np.array_equal(p, q) for p, q in zip(a.net.parameters(), b.net.parameters()))


class TestTrain:

    def test_zero_epochs_returns_initial_network(self):
        config = TrainConfig.from_defaults('poisson1d', max_epochs=0, seed=11)
        surrogate = train(manufactured_case('poisson1d'), config)
        initial = init_network(3, config.depth, config.width, seed=11)
        assert all(np.array_equal(p, q) for p, q in zip(surrogate.net.parameters(), initial.parameters()))
        assert surrogate.dimension == 1
        assert surrogate.net.input_dim == 3

    def test_deterministic_given_seed(self):
        problem = manufactured_case('poisson1d')
        config = TrainConfig.from_defaults('poisson1d', max_epochs=4, seed=3, **TINY_1D)
        assert _same_parameters(train(problem, config, threads=1), train(problem, config, threads=1))

    def test_thread_count_does_not_change_the_result(self, monkeypatch):
        monkeypatch.setattr(settings, 'loss_chunk_points', 40)
        problem = manufactured_case('poisson1d')
        config = TrainConfig.from_defaults('poisson1d', max_epochs=3, seed=5, **TINY_1D)
        assert _same_parameters(train(problem, config, threads=1), train(problem, config, threads=3))

    def test_loss_log_rows(self):
        log = TrainingLossLog()
        config = TrainConfig.from_defaults('poisson1d', max_epochs=5, **TINY_1D)
        train(manufactured_case('poisson1d'), config, loss_log=log)
        frame = log.to_frame()
        assert list(frame['epoch']) == [0, 1, 2, 3, 4]
        assert list(frame.columns) == TrainingLossLog.COLUMNS
        assert np.all(np.isfinite(frame['total']))

    def test_loss_log_every_hundred_epochs(self):
        log = TrainingLossLog()
        overrides = dict(TINY_1D, log_every=100, n_sources=2, n_regular=4)
        config = TrainConfig.from_defaults('poisson1d', max_epochs=201, **overrides)
        train(manufactured_case('poisson1d'), config, loss_log=log)
        assert list(log.to_frame()['epoch']) == [0, 100, 200]

    def test_divergence_reports_the_epoch(self, monkeypatch):
        calls = {'count': 0}
        real = trainer_module.total_loss_and_grad

        def failing(*args, **kwargs):
            calls['count'] += 1
            if calls['count'] > 2:
                raise NonFiniteLossError("Loss is not finite: nan")
            return real(*args, **kwargs)

        monkeypatch.setattr(trainer_module, 'total_loss_and_grad', failing)
        config = TrainConfig.from_defaults('poisson1d', max_epochs=5, **TINY_1D)
        with pytest.raises(TrainingDivergedError) as excinfo:
            train(manufactured_case('poisson1d'), config, threads=1)
        assert excinfo.value.epoch == 2


class TestChunking:

    def test_chunks_cover_every_source_once(self, rng):
        config = TrainConfig.from_defaults('poisson1d', **TINY_1D)
        batch = sample_collocation(manufactured_case('poisson1d'), config, rng)
        chunks = source_chunks(batch, 40)
        np.testing.assert_array_equal(np.concatenate(chunks), np.arange(6))
        assert len(chunks) > 1

    def test_chunked_loss_matches_full_batch(self, rng, monkeypatch):
        problem = manufactured_case('poisson2d')
        config = TrainConfig.from_defaults('poisson2d', depth=2, width=8, n_sources=5, n_regular=12,
                                           n_boundary=6, n_singular=8)
        batch = sample_collocation(problem, config, rng)
        net = init_network(5, 2, 8, seed=1)
        trainer = GreenTrainer(problem, config, threads=1)

        whole, grad_whole = trainer.loss_and_grad(net, batch)
        monkeypatch.setattr(settings, 'loss_chunk_points', 1)
        chunked, grad_chunked = trainer.loss_and_grad(net, batch)

        assert chunked.total == pytest.approx(whole.total, rel=1e-12)
        for a, b in zip(grad_chunked.parameters(), grad_whole.parameters()):
            np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12 * np.max(np.abs(b)))


@pytest.mark.training
@pytest.mark.slow
def test_poisson1d_surrogate_accuracy():
    problem = manufactured_case('poisson1d')
    config = TrainConfig.from_defaults('poisson1d')
    surrogate = train(problem, config)
    grid = np.linspace(0, 1, 101)
    x, y = np.meshgrid(grid, grid, indexing='ij')
    learned = evaluate_green(surrogate, x.ravel(), y.ravel())
    exact = evaluate_green(ExactGreenKernel(problem), x.ravel(), y.ravel())
    assert np.max(np.abs(learned - exact)) <= 1e-2
    assert evaluate_green(surrogate, 0.5, 0.3) == pytest.approx(0.15, abs=1e-2)
