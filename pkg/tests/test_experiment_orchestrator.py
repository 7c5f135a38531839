"""
Tests for the experiment orchestrator, run on reduced sweeps with the analytic kernel
"""

import json
import os

import numpy as np
import pytest

from config.experiments import ExperimentConfig
from src.green.surrogate import ExactGreenKernel
from src.green.trainer import train as real_train
from src.loaders.artifact_writer import read_frame
from src.orchestrators import experiment_orchestrator as orchestrator_module
from src.orchestrators.experiment_orchestrator import ExperimentOrchestrator, build_system, neural_preconditioner
from src.preconditioners.dense_neural import build_dense_neural
from src.problems.benchmark_problems import manufactured_case
from src.solvers.spectrum import preconditioned_condition
from src.utils.errors import TrainingDivergedError

TINY_CONFIG = """
[problem]
name = poisson1d
[network]
depth = 1
width = 8
[loss]
beta_snglr = 400
beta_bndry = 400
beta_symtr = 400
[sampling]
n_regular = 10
n_singular = 6
n_boundary = 2
n_sources = 6
exclusion_radius = 1e-3
[optimizer]
learning_rate = 1e-3
max_epochs = 3
log_every = 1
[run]
seed = 4
"""


def _manifest(results):
    with open(results['manifest'], encoding='utf-8') as handle:
        return json.load(handle)


@pytest.fixture
def orchestrator(tmp_path):
    return ExperimentOrchestrator(out_dir=str(tmp_path), threads=1)


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / 'tiny.ini'
    path.write_text(TINY_CONFIG)
    return str(path)


class TestTrain:

    def test_writes_model_sidecar_loss_log_and_manifest(self, orchestrator, tiny_config):
        results = orchestrator.run_train(tiny_config)
        assert results['success'], results['errors']
        names = sorted(os.path.basename(path) for path in results['outputs'])
        assert names == ['loss_log.csv', 'model.json', 'model.meta.json']
        record = _manifest(results)
        assert record['seed'] == 4
        assert record['model_hash'] is not None
        assert len(read_frame(os.path.join(os.path.dirname(results['model_path']), 'loss_log.csv'))) == 3

    def test_rerun_is_identical(self, tmp_path, tiny_config):
        first = ExperimentOrchestrator(out_dir=str(tmp_path / 'a'), threads=1).run_train(tiny_config)
        second = ExperimentOrchestrator(out_dir=str(tmp_path / 'b'), threads=1).run_train(tiny_config)
        assert first['final_loss'] == second['final_loss']
        with open(first['model_path']) as a, open(second['model_path']) as b:
            assert a.read() == b.read()

    def test_missing_key_exits_with_usage_error(self, orchestrator, tmp_path):
        path = tmp_path / 'broken.ini'
        path.write_text(TINY_CONFIG.replace('width = 8\n', ''))
        results = orchestrator.run_train(str(path))
        assert not results['success']
        assert results['exit_code'] == 2
        assert "'width'" in results['errors'][0]
        assert 'manifest' not in results

    def test_divergence_moves_to_the_next_seed(self, orchestrator, tiny_config, monkeypatch):
        seeds = []

        def flaky(problem, config, **kwargs):
            seeds.append(config.seed)
            if len(seeds) == 1:
                raise TrainingDivergedError(epoch=2)
            return real_train(problem, config, **kwargs)

        monkeypatch.setattr(orchestrator_module, 'train', flaky)
        results = orchestrator.run_train(tiny_config)
        assert results['success']
        assert seeds == [4, 5]
        assert _manifest(results)['seed'] == 5

    def test_persistent_divergence_is_a_numerical_failure(self, orchestrator, tiny_config, monkeypatch):
        def diverge(problem, config, **kwargs):
            raise TrainingDivergedError(epoch=1)

        monkeypatch.setattr(orchestrator_module, 'train', diverge)
        results = orchestrator.run_train(tiny_config)
        assert results['exit_code'] == 1


class TestTables:

    @pytest.fixture(autouse=True)
    def small_sweeps(self, monkeypatch):
        monkeypatch.setattr(ExperimentConfig, 'TABLE1_MESH_EXPONENTS', [4, 5])
        monkeypatch.setattr(ExperimentConfig, 'TABLE1_PLAIN_BUDGETS', [15, 31])
        monkeypatch.setattr(ExperimentConfig, 'TABLE2_GEOMETRIES', [{'h_exp': 8, 'H_exp': 4, 'overlap': 4}])

    def test_exact_kernel_table1(self, orchestrator):
        results = orchestrator.run_table(1, exact=True)
        assert results['success'], results['errors']
        frame = read_frame(os.path.join(os.path.dirname(results['manifest']), 'table1.csv'))
        assert list(frame['n']) == [15, 31]
        np.testing.assert_allclose(frame['kappa_BA'], 1.0, atol=1e-6)
        assert np.all(frame['precond_iterations'] <= 3)
        assert np.all(frame['plain_iterations'] <= np.array([15, 31]))
        assert np.all(frame['kappa_A'] > 10.0)
        assert _manifest(results)['metadata']['kernel'] == 'exact'

    def test_schwarz_table_with_exact_coarse_level(self, orchestrator):
        results = orchestrator.run_table(2, exact=True)
        assert results['success'], results['errors']
        row = results['table'].iloc[0]
        assert row['subdomains'] == 16
        assert row['two_level_iterations'] <= row['one_level_iterations']
        assert row['two_level_error'] <= ExperimentConfig.PRECONDITIONED_TARGET_ERROR

    def test_disc_preconditioner_uses_fixed_diagonal_radius(self):
        problem = manufactured_case('poisson2d')
        system = build_system(problem, 0.1)
        prec = neural_preconditioner(ExactGreenKernel(problem), system)
        assert prec.r_avg == ExperimentConfig.DENSE_DIAGONAL_RADIUS
        assert preconditioned_condition(prec.matrix, system.matrix) == pytest.approx(2.47, abs=0.03)

        half_mesh = build_dense_neural(ExactGreenKernel(problem), system.nodes, r_avg=0.05)
        assert preconditioned_condition(half_mesh.matrix, system.matrix) > 100.0

    def test_exact_kernel_table5(self, orchestrator, monkeypatch):
        monkeypatch.setattr(ExperimentConfig, 'TABLE5_MESH_SIZES', [0.1])
        results = orchestrator.run_table(5, exact=True)
        assert results['success'], results['errors']
        row = results['table'].iloc[0]
        assert row['kappa_method'] == 'dense'
        assert row['kappa_BA'] == pytest.approx(2.47, abs=0.03)
        assert row['precond_iterations'] < row['plain_iterations']

    def test_unknown_table_id(self, orchestrator, tmp_path):
        results = orchestrator.run_table(7, exact=True)
        assert results['exit_code'] == 2
        assert not os.path.exists(tmp_path / 'table7' / 'manifest.json')

    def test_helmholtz_has_no_analytic_kernel(self, orchestrator):
        assert orchestrator.run_table(4, exact=True)['exit_code'] == 2

    def test_kernel_is_required(self, orchestrator):
        results = orchestrator.run_table(1)
        assert results['exit_code'] == 2
        assert '--model' in results['errors'][0]


class TestHybrid:

    def test_jacobi_against_hybrid_periods(self, orchestrator):
        results = orchestrator.run_hybrid('poisson1d', exact=True, periods=[2, 4], h=2.0 ** -5)
        assert results['success'], results['errors']
        summary = results['summary'].set_index('run')
        assert list(summary.index) == ['jacobi', 'K2', 'K4']
        assert summary.loc['jacobi', 'neural_applications'] == 0
        assert summary.loc['jacobi', 'status'] == 'maxiter'
        assert summary.loc['K2', 'status'] == 'converged'
        assert summary.loc['K2', 'iterations'] < summary.loc['K4', 'iterations']
        assert summary.loc['K2', 'amplification_radius'] < 1e-6

        record = _manifest(results)
        assert record['metadata']['neural_applications']['jacobi'] == 0
        assert record['metadata']['non_convergent'] == ['jacobi']
        names = {os.path.basename(path) for path in record['outputs']}
        assert {'hybrid_jacobi.csv', 'hybrid_K2.csv', 'hybrid_K4.csv', 'hybrid_summary.csv'} <= names

    def test_trace_has_mode_columns(self, orchestrator):
        results = orchestrator.run_hybrid('poisson1d', exact=True, periods=[2], h=2.0 ** -4)
        frame = read_frame(os.path.join(os.path.dirname(results['manifest']), 'hybrid_K2.csv'))
        assert list(frame.columns[:3]) == ['k', 'err_l2', 'res_l2']
        assert 'm_1' in frame.columns

    def test_helmholtz_jacobi_is_flagged(self, orchestrator):
        results = orchestrator.run_hybrid('helmholtz1d', jacobi_only=True, h=2.0 ** -6)
        assert results['success'], results['errors']
        assert _manifest(results)['metadata']['non_convergent'] == ['jacobi']


class TestSpectrum:

    def test_interval_profile(self, orchestrator):
        results = orchestrator.run_spectrum('poisson1d', exact=True, count=5, h=2.0 ** -5)
        assert results['success'], results['errors']
        frame = results['profile']
        assert len(frame) == 5
        assert 'delta_phi' in frame.columns
        assert np.all(frame['delta_mu'] < 1e-2)
        assert _manifest(results)['metadata']['count'] == 5

    def test_disc_profile_and_mesh(self, orchestrator):
        results = orchestrator.run_spectrum('poisson2d', exact=True, count=4, h=0.3)
        assert results['success'], results['errors']
        assert len(results['profile']) == 4
        names = {os.path.basename(path) for path in results['outputs']}
        assert {'spectrum.csv', 'mass.txt', 'vertices.txt', 'triangles.txt'} <= names

    def test_problem_without_reference(self, orchestrator):
        assert orchestrator.run_spectrum('helmholtz1d', exact=True)['exit_code'] == 2

    def test_too_many_eigenpairs(self, orchestrator):
        assert orchestrator.run_spectrum('poisson1d', exact=True, count=500, h=2.0 ** -4)['exit_code'] == 2


class TestSolve:

    def test_interval_fast_solve(self, orchestrator):
        results = orchestrator.run_solve('poisson1d', exact=True)
        assert results['success'], results['errors']
        frame = results['solution']
        assert list(frame.columns) == ['x', 'u_approx', 'u_exact', 'abs_err']
        assert len(frame) == 1023
        assert frame['abs_err'].max() < 1e-3

    def test_disc_fast_solve(self, orchestrator):
        results = orchestrator.run_solve('poisson2d', exact=True, h=0.2)
        assert results['success'], results['errors']
        frame = results['solution']
        assert list(frame.columns) == ['x1', 'x2', 'u_approx', 'u_exact', 'abs_err']
        assert frame['abs_err'].max() < 0.1


class TestMultigrid:

    def test_classical_against_hybrid(self, orchestrator):
        results = orchestrator.run_multigrid('poisson1d', exact=True)
        assert results['success'], results['errors']
        summary = results['summary'].set_index('run')
        assert list(summary.index) == ['classical', 'classical_vcycle', 'hybrid']
        assert summary.loc['hybrid', 'final_error'] < 1e-8
        assert summary.loc['hybrid', 'neural_applications'] > 0
        assert summary.loc['classical', 'final_error'] > 1e-6
        assert 'classical' in _manifest(results)['metadata']['non_convergent']

        with open(os.path.join(os.path.dirname(results['manifest']), 'vcycle.txt'), encoding='utf-8') as handle:
            assert 'N+J' in handle.read()

    def test_classical_only_without_kernel(self, orchestrator):
        results = orchestrator.run_multigrid('poisson1d')
        assert results['success'], results['errors']
        assert 'hybrid' not in set(results['summary']['run'])
