#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Experiment Orchestrator
Runs every command of the toolkit end to end: training, preconditioned solver tables, hybrid
iterations, kernel spectra, the fast solver and hybrid multigrid
"""

import os
import sys
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

# Add project root to Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from config.experiments import ExperimentConfig
from config.settings import settings
from src.green.surrogate import ExactGreenKernel, disc_rule, gauss_rule, reconstruct_solution
from src.green.trainer import train
from src.hybrid.hybrid_iteration import HybridConfig, amplification_radius, hybrid_iterate, jacobi_matrix
from src.hybrid.multigrid import build_hierarchy, interval_hierarchy, run_multigrid, vcycle_diagram
from src.loaders.artifact_writer import ArtifactWriter
from src.loaders.model_store import load_surrogate, save_surrogate, sidecar_path
from src.monitoring.run_manifest import RunManifest, TrainingLossLog
from src.preconditioners.dense_neural import DensePreconditioner, build_dense_neural
from src.preconditioners.schwarz import build_schwarz, build_subdomains
from src.problems.benchmark_problems import EllipticProblem, manufactured_case
from src.problems.discretization import (
    DiscreteSystem,
    assemble_poisson1d_fem,
    assemble_poisson2d_fem,
    assemble_system,
)
from src.problems.meshing import mesh_unit_disc
from src.solvers.iterative import IterationTrace, bicg, gmres
from src.solvers.spectrum import (
    condition_number,
    jacobi_mode_basis,
    lanczos_condition_estimate,
    preconditioned_condition,
)
from src.spectral.fe_space import disc_space, interval_space
from src.spectral.kernel_eigen import (
    assemble_kernel_matrices,
    mercer_truncation_check,
    profile_frame,
    reference_report_disc,
    reference_report_interval,
    solve_kernel_eigs,
    spectral_bias_profile,
)
from src.utils.config_loader import load_train_config
from src.utils.errors import (
    ConfigError,
    DimensionMismatchError,
    GreenToolkitError,
    NumericalError,
    TrainingDivergedError,
)
from src.utils.logging import setup_logging

logger = setup_logging("experiment_orchestrator")

MODEL_NAME = 'model.json'
SOLVERS = {'bicg': bicg, 'gmres': gmres}


def build_system(problem: EllipticProblem, h: float) -> DiscreteSystem:
    """Grid system for 1D problems, linear elements on a disc mesh of target size h in 2D"""
    if problem.dimension == 1:
        return assemble_system(problem, h)
    return assemble_poisson2d_fem(mesh_unit_disc(h), problem)


def neural_preconditioner(kernel, system: DiscreteSystem, threads: Optional[int] = None) -> DensePreconditioner:
    """Dense kernel preconditioner on the unknowns of a system"""
    if kernel.dimension != system.dimension:
        raise DimensionMismatchError(
            f"A {kernel.dimension}-dimensional kernel cannot precondition a {system.dimension}-dimensional system"
        )
    # finite-difference loads are point values, so the kernel matrix carries the grid width
    weight = system.h if system.scheme == 'fd' else 1.0
    r_avg = ExperimentConfig.DENSE_DIAGONAL_RADIUS if system.dimension == 2 else None
    return build_dense_neural(kernel, system.nodes, r_avg=r_avg, weight=weight, threads=threads)


def _has_positive_diagonal(system: DiscreteSystem) -> bool:
    return system.symmetric and bool(np.all(system.matrix.diagonal() > 0))


class ExperimentOrchestrator:
    """
    One method per command. Each returns a results dictionary ('success', 'errors', 'outputs',
    'exit_code') and writes its artifacts and one manifest below out_dir/<run name>
    """

    def __init__(self, out_dir: Optional[str] = None, seed: Optional[int] = None,
                 threads: Optional[int] = None):
        self.out_dir = out_dir or settings.output_dir
        self.seed = seed
        self.threads = threads or settings.num_threads

    # ========================
    # RUN BOOKKEEPING
    # ========================

    def _execute(self, command: str, run_name: str, config: Dict[str, Any],
                 body: Callable[[Dict[str, Any], ArtifactWriter, RunManifest], None]) -> Dict[str, Any]:
        start_time = datetime.now()
        logger.info(f"🚀 {command.upper()}: {run_name}")
        logger.info(f"⏰ Started at: {start_time.strftime('%Y-%m-%d %H:%M:%S')} ({self.threads} threads)")
        logger.info("=" * 70)

        results: Dict[str, Any] = {
            'command': command,
            'run': run_name,
            'start_time': start_time,
            'outputs': [],
            'success': False,
            'exit_code': 0,
            'errors': [],
        }
        directory = os.path.join(self.out_dir, run_name)
        writer = ArtifactWriter(directory)
        manifest = RunManifest(command=command, config=dict(config),
                               seed=settings.default_seed if self.seed is None else self.seed)

        try:
            body(results, writer, manifest)
            results['success'] = True
        except GreenToolkitError as e:
            logger.error(f"❌ {command} failed: {e}")
            results['errors'].append(str(e))
            results['exit_code'] = e.exit_code
        except ValueError as e:
            logger.error(f"❌ {command} rejected its input: {e}")
            results['errors'].append(str(e))
            results['exit_code'] = 2
        except Exception as e:
            logger.error(f"❌ {command} failed unexpectedly: {e}")
            results['errors'].append(f"Unexpected error: {e}")
            results['exit_code'] = 1

        for path in writer.written:
            manifest.add_output(path)
        if results['success'] or writer.written:
            if results['errors']:
                manifest.metadata['errors'] = list(results['errors'])
            results['manifest'] = manifest.write(directory)
        results['outputs'] = list(manifest.outputs)
        return self._finalize_results(results)

    def _finalize_results(self, results: Dict[str, Any]) -> Dict[str, Any]:
        end_time = datetime.now()
        results['end_time'] = end_time
        results['duration_seconds'] = (end_time - results['start_time']).total_seconds()

        logger.info(f"📊 {results['command'].upper()} SUMMARY ({results['run']}):")
        logger.info(f"   ⏱️  Duration: {results['duration_seconds']:.1f} seconds")
        logger.info(f"   📝 Outputs: {len(results['outputs'])}")
        if results['success']:
            logger.info("   ✅ Completed")
        else:
            logger.info(f"   ❌ Failed with exit code {results['exit_code']}")
        return results

    def _kernel(self, problem: EllipticProblem, model_path: Optional[str], exact: bool,
                manifest: RunManifest, required: bool = True):
        """Analytic kernel, a trained surrogate, or None when neither is requested and none is required"""
        if exact:
            kernel = ExactGreenKernel(problem)
            manifest.metadata['kernel'] = 'exact'
            return kernel
        if model_path:
            surrogate = load_surrogate(model_path)
            if surrogate.dimension != problem.dimension:
                raise DimensionMismatchError(
                    f"Model {model_path} is {surrogate.dimension}-dimensional, problem {problem.name} is not"
                )
            if surrogate.problem and surrogate.problem != problem.name:
                logger.warning(f"⚠️ Model was trained for {surrogate.problem}, used for {problem.name}")
            manifest.use_model(model_path)
            manifest.metadata['kernel'] = 'surrogate'
            return surrogate
        if required:
            raise ConfigError(f"{problem.name} needs a trained model (--model) or the analytic kernel (--exact)",
                              key='model')
        return None

    # ========================
    # TRAIN
    # ========================

    def run_train(self, config_path: str) -> Dict[str, Any]:
        run_name = f"train_{os.path.splitext(os.path.basename(config_path))[0]}"

        def body(results, writer, manifest):
            config = load_train_config(config_path, seed=self.seed)
            problem = manufactured_case(config.problem)
            config.check_problem(problem)
            manifest.config = config.model_dump()

            surrogate, loss_log, seed = self._train_with_retries(problem, config)
            manifest.seed = seed

            model_path = save_surrogate(surrogate, writer.path(MODEL_NAME))
            writer.record(model_path)
            writer.record(sidecar_path(model_path))
            writer.record(loss_log.write_csv(writer.path('loss_log.csv')))
            manifest.use_model(model_path)
            manifest.metadata.update({'problem': problem.name, 'seed_attempts': seed - config.seed + 1,
                                      'final_loss': loss_log.final_total})
            results.update({'model_path': model_path, 'seed': seed, 'final_loss': loss_log.final_total})

        return self._execute('train', run_name, {'config_path': config_path}, body)

    def _train_with_retries(self, problem: EllipticProblem, config):
        """Train, moving on to the next seed when a run diverges"""
        retrying = Retrying(stop=stop_after_attempt(settings.train_seed_attempts),
                            retry=retry_if_exception_type(TrainingDivergedError), reraise=True)
        for attempt in retrying:
            with attempt:
                number = attempt.retry_state.attempt_number
                seed = config.seed + number - 1
                if number > 1:
                    logger.warning(f"⚠️ Training diverged, retrying with seed {seed}")
                logger.info(f"🔧 Training {problem.name} with seed {seed} (attempt {number})")
                loss_log = TrainingLossLog()
                surrogate = train(problem, config.model_copy(update={'seed': seed}), loss_log=loss_log,
                                  threads=self.threads)
        logger.info(f"✅ Training finished with loss {loss_log.final_total:.6e}")
        return surrogate, loss_log, seed

    # ========================
    # TABLES
    # ========================

    def run_table(self, table_id: int, model_path: Optional[str] = None, exact: bool = False) -> Dict[str, Any]:
        def body(results, writer, manifest):
            try:
                sweep = ExperimentConfig.get_table_sweep(table_id)
            except KeyError as e:
                raise ConfigError(f"Unknown table id {table_id}, expected 1, 2, 4 or 5", key='table') from e
            problem = manufactured_case(sweep['problem'])
            kernel = self._kernel(problem, model_path, exact, manifest)
            manifest.metadata['sweep'] = sweep

            if table_id == 2:
                frame = self._schwarz_table(problem, kernel, sweep)
            else:
                frame = self._dense_table(problem, kernel, sweep)
            writer.write_frame(frame, f"table{table_id}.csv")
            results['table'] = frame

        return self._execute('table', f"table{table_id}",
                             {'table': table_id, 'model': model_path, 'exact': exact}, body)

    def _conditions(self, system: DiscreteSystem, prec: DensePreconditioner, plain: IterationTrace,
                    preconditioned: IterationTrace):
        if system.size <= ExperimentConfig.DENSE_EIG_LIMIT:
            return (condition_number(system.matrix), preconditioned_condition(prec.matrix, system.matrix), 'dense')
        if plain.alphas and preconditioned.alphas and system.symmetric:
            return (lanczos_condition_estimate(plain)[2], lanczos_condition_estimate(preconditioned)[2], 'lanczos')
        logger.warning(f"⚠️ No condition estimate for {system.size} unknowns")
        return float('nan'), float('nan'), 'none'

    def _dense_table(self, problem: EllipticProblem, kernel, sweep: Dict[str, Any]) -> pd.DataFrame:
        """Plain solver to its iteration budget, then the preconditioned solver down to the same error"""
        solve = SOLVERS[sweep['solver']]
        budgets = sweep.get('budgets') or [None] * len(sweep['mesh'])
        rows = []
        for h, budget in zip(sweep['mesh'], budgets):
            system = build_system(problem, h)
            A, F = system.matrix, system.rhs
            reference = system.reference_solution()
            logger.info(f"🔧 h = {h:.6g}: {system.size} unknowns, budget {budget or 'default'}")

            _, plain = solve(A, F, tol=ExperimentConfig.KRYLOV_TOLERANCE, maxiter=budget, reference=reference)
            prec = neural_preconditioner(kernel, system, self.threads)
            _, preconditioned = solve(A, F, apply_prec=prec, tol=ExperimentConfig.KRYLOV_TOLERANCE, maxiter=budget,
                                      reference=reference, target_error=plain.final_error)
            for trace in (plain, preconditioned):
                if trace.status == 'breakdown':
                    logger.warning(f"⚠️ {trace.solver} broke down after {trace.iterations} iterations at h = {h:.6g}")

            kappa_A, kappa_BA, method = self._conditions(system, prec, plain, preconditioned)
            rows.append({
                'h': h,
                'n': system.size,
                'kappa_A': kappa_A,
                'plain_iterations': plain.iterations,
                'plain_error': plain.final_error,
                'kappa_BA': kappa_BA,
                'precond_iterations': preconditioned.iterations,
                'precond_error': preconditioned.final_error,
                'kappa_method': method,
            })
            logger.info(f"   ✅ kappa(A) = {kappa_A:.3e}, kappa(BA) = {kappa_BA:.4f}, "
                        f"iterations {plain.iterations} -> {preconditioned.iterations}")
        return pd.DataFrame(rows)

    def _schwarz_table(self, problem: EllipticProblem, kernel, sweep: Dict[str, Any]) -> pd.DataFrame:
        """One-level and kernel two-level additive Schwarz, BiCG to the target error"""
        rows = []
        for geometry in sweep['geometries']:
            h = 2.0 ** -geometry['h_exp']
            H = 2.0 ** -geometry['H_exp']
            system = assemble_poisson1d_fem(h, problem)
            A, F, nodes = system.matrix, system.rhs, system.nodes
            reference = system.reference_solution()
            subdomains = build_subdomains(nodes, H, geometry['overlap'], h=h)
            coarse_nodes = np.arange(1, 2 ** geometry['H_exp']) * H
            logger.info(f"🔧 h = 2^-{geometry['h_exp']}, H = 2^-{geometry['H_exp']}: "
                        f"{system.size} unknowns, {subdomains.count} subdomains")

            row = {'h': h, 'H': H, 'overlap': geometry['overlap'], 'n': system.size, 'subdomains': subdomains.count}
            for label, coarse_kernel in (('one_level', None), ('two_level', kernel)):
                prec = build_schwarz(A, subdomains, kernel=coarse_kernel, coarse_nodes=coarse_nodes,
                                     fine_nodes=nodes, threads=self.threads)
                _, trace = bicg(A, F, apply_prec=prec, tol=ExperimentConfig.KRYLOV_TOLERANCE, reference=reference,
                                target_error=ExperimentConfig.PRECONDITIONED_TARGET_ERROR)
                trace.check()
                row[f"{label}_kappa"] = lanczos_condition_estimate(trace)[2]
                row[f"{label}_iterations"] = trace.iterations
                row[f"{label}_error"] = trace.final_error
            rows.append(row)
            logger.info(f"   ✅ kappa(BA) {row['one_level_kappa']:.3e} -> {row['two_level_kappa']:.3f}, "
                        f"iterations {row['one_level_iterations']} -> {row['two_level_iterations']}")
        return pd.DataFrame(rows)

    # ========================
    # HYBRID ITERATION
    # ========================

    def run_hybrid(self, problem_name: str = 'poisson1d', model_path: Optional[str] = None, exact: bool = False,
                   periods: Optional[List[int]] = None, h: Optional[float] = None,
                   jacobi_only: bool = False) -> Dict[str, Any]:
        periods = list(periods or ExperimentConfig.HYBRID_PERIODS)
        config = {'problem': problem_name, 'model': model_path, 'exact': exact, 'periods': periods, 'h': h,
                  'jacobi_only': jacobi_only}

        def body(results, writer, manifest):
            problem = manufactured_case(problem_name)
            if h is not None:
                mesh = h
            elif problem.dimension == 1:
                mesh = 2.0 ** -ExperimentConfig.HYBRID_MESH_EXPONENT
            else:
                mesh = ExperimentConfig.HYBRID_DISC_MESH
            system = build_system(problem, mesh)
            A, F = system.matrix, system.rhs
            reference = system.reference_solution()
            basis = jacobi_mode_basis(A) if _has_positive_diagonal(system) else None

            kernel = None if jacobi_only else self._kernel(problem, model_path, exact, manifest, required=False)
            prec = None if kernel is None else neural_preconditioner(kernel, system, self.threads)
            if prec is None:
                logger.info("⚠️ No kernel given, running damped Jacobi only")
            runs = [('jacobi', None)] + ([(f"K{K}", K) for K in periods] if prec is not None else [])
            classical = jacobi_matrix(A) if prec is not None and system.size <= ExperimentConfig.DENSE_EIG_LIMIT else None

            summary = []
            for label, period in runs:
                hybrid_config = HybridConfig.create(period=period or 2, neural=prec if period else None)
                row = {'run': label, 'period': period or 0, 'iterations': np.nan, 'status': 'diverged',
                       'final_error': np.nan, 'final_residual': np.nan, 'neural_applications': 0,
                       'amplification_radius': np.nan}
                try:
                    _, trace = hybrid_iterate(A, F, hybrid_config, reference=reference, mode_basis=basis)
                except NumericalError as e:
                    logger.warning(f"⚠️ {label}: {e}")
                    summary.append(row)
                    continue

                writer.write_frame(trace.to_frame(), f"hybrid_{label}.csv")
                row.update({'iterations': trace.iterations, 'status': trace.status, 'final_error': trace.final_error,
                            'final_residual': trace.final_residual,
                            'neural_applications': trace.neural_applications})
                if period and classical is not None:
                    row['amplification_radius'] = amplification_radius(A, classical, prec, period)
                summary.append(row)
                if trace.converged:
                    logger.info(f"   ✅ {label}: converged in {trace.iterations} iterations")
                else:
                    logger.warning(f"   ⚠️ {label}: not converged after {trace.iterations} iterations "
                                   f"(residual {trace.final_residual:.3e})")

            frame = pd.DataFrame(summary)
            writer.write_frame(frame, 'hybrid_summary.csv')
            manifest.metadata['problem'] = problem.name
            manifest.metadata['neural_applications'] = {row['run']: int(row['neural_applications']) for row in summary}
            manifest.metadata['non_convergent'] = [row['run'] for row in summary
                                                   if row['status'] not in ('converged', 'exact')]
            results['summary'] = frame

        return self._execute('hybrid', f"hybrid_{problem_name}", config, body)

    # ========================
    # KERNEL SPECTRUM
    # ========================

    def run_spectrum(self, problem_name: str = 'poisson1d', model_path: Optional[str] = None, exact: bool = False,
                     count: Optional[int] = None, h: Optional[float] = None) -> Dict[str, Any]:
        config = {'problem': problem_name, 'model': model_path, 'exact': exact, 'count': count, 'h': h}

        def body(results, writer, manifest):
            problem = manufactured_case(problem_name)
            if problem_name not in ('poisson1d', 'poisson2d'):
                raise ConfigError(f"No reference spectrum for {problem_name}", key='problem')
            kernel = self._kernel(problem, model_path, exact, manifest)

            setup = dict(ExperimentConfig.SPECTRUM_1D if problem.dimension == 1 else ExperimentConfig.SPECTRUM_2D)
            setup.update({key: value for key, value in (('count', count), ('h', h)) if value is not None})
            if problem.dimension == 1:
                space = interval_space(setup['h'], setup['element'])
            else:
                space = disc_space(mesh_unit_disc(setup['h']))
                writer.write_mesh(space.mesh)
            if setup['count'] > space.size:
                raise ConfigError(f"Requested {setup['count']} eigenpairs from a space of size {space.size}",
                                  key='count')
            logger.info(f"🔧 {setup['element']} elements, h = {setup['h']:.6g}: {space.size} unknowns, "
                        f"{space.quadrature_size} quadrature points")

            K, M = assemble_kernel_matrices(kernel, space, threads=self.threads)
            approx = solve_kernel_eigs(K, M, setup['count'], label=kernel.source)
            if problem.dimension == 1:
                exact_report = reference_report_interval(space, setup['count'])
            else:
                exact_report = reference_report_disc(setup['count'])
            delta_mu, delta_phi = spectral_bias_profile(approx, exact_report)
            frame = profile_frame(approx, exact_report, delta_mu, delta_phi)
            writer.write_frame(frame, 'spectrum.csv')
            writer.write_coordinates(M, 'mass.txt')

            check = mercer_truncation_check(K, M, approx, setup['count'])
            if approx.negative_count:
                logger.warning(f"⚠️ {approx.negative_count} negative eigenvalues in the kernel spectrum")
            manifest.metadata.update({'problem': problem.name, 'element': setup['element'], 'h': setup['h'],
                                      'count': setup['count'], 'negative_eigenvalues': approx.negative_count,
                                      'mercer_residual': check.residual, 'mercer_tail': check.tail})
            results.update({'profile': frame, 'truncation': check})
            logger.info(f"   ✅ {setup['count']} eigenpairs, median delta_mu {np.median(delta_mu):.3e}")

        return self._execute('spectrum', f"spectrum_{problem_name}", config, body)

    # ========================
    # FAST SOLVER
    # ========================

    def run_solve(self, problem_name: str = 'poisson1d', model_path: Optional[str] = None, exact: bool = False,
                  h: Optional[float] = None) -> Dict[str, Any]:
        config = {'problem': problem_name, 'model': model_path, 'exact': exact, 'h': h}

        def body(results, writer, manifest):
            problem = manufactured_case(problem_name)
            kernel = self._kernel(problem, model_path, exact, manifest)
            if problem.dimension == 1:
                mesh_size = ExperimentConfig.SOLVE_1D_MESH if h is None else h
                cells = int(round(1.0 / mesh_size))
                grid = (np.arange(1, cells) / cells)[:, None]
                quadrature = gauss_rule(mesh_size)
                columns = {'x': grid[:, 0]}
            else:
                mesh = mesh_unit_disc(ExperimentConfig.SOLVE_2D_MESH if h is None else h)
                grid = mesh.vertices[mesh.interior]
                quadrature = disc_rule(mesh)
                columns = {'x1': grid[:, 0], 'x2': grid[:, 1]}

            u_approx = reconstruct_solution(kernel, problem, grid, quadrature)
            frame = pd.DataFrame(columns)
            frame['u_approx'] = u_approx
            if problem.exact_u is not None:
                frame['u_exact'] = np.asarray(problem.exact_u(grid), dtype=np.float64).reshape(-1)
                frame['abs_err'] = np.abs(frame['u_approx'] - frame['u_exact'])
                manifest.metadata['max_abs_err'] = float(frame['abs_err'].max())
                logger.info(f"   ✅ max |u - u_h| = {manifest.metadata['max_abs_err']:.3e} on {len(frame)} points")
            writer.write_frame(frame, 'solution.csv')
            manifest.metadata.update({'problem': problem.name, 'points': len(frame), 'quadrature': quadrature.name})
            results['solution'] = frame

        return self._execute('solve', f"solve_{problem_name}", config, body)

    # ========================
    # MULTIGRID
    # ========================

    def run_multigrid(self, problem_name: str = 'poisson1d', model_path: Optional[str] = None,
                      exact: bool = False) -> Dict[str, Any]:
        config = {'problem': problem_name, 'model': model_path, 'exact': exact}

        def body(results, writer, manifest):
            problem = manufactured_case(problem_name)
            kernel = self._kernel(problem, model_path, exact, manifest, required=False)
            fine_exp, coarse_exp = ExperimentConfig.MG_FINE_EXPONENT, ExperimentConfig.MG_COARSE_EXPONENT

            def hierarchy(two_grid: bool, smoother: str = 'jacobi', neural=None):
                if problem.dimension == 1:
                    return interval_hierarchy(problem, fine_exp, coarse_exp, two_grid=two_grid,
                                              smoother=smoother, neural=neural)
                return build_hierarchy([build_system(problem, size) for size in ExperimentConfig.MG_DISC_MESHES],
                                       smoother=smoother, neural=neural)

            hierarchies = {'classical': hierarchy(two_grid=True)}
            if problem.dimension == 1:
                hierarchies['classical_vcycle'] = hierarchy(two_grid=False)
            if kernel is not None:
                prec = neural_preconditioner(kernel, hierarchies['classical'].finest.system, self.threads)
                hierarchies['hybrid'] = hierarchy(two_grid=True, smoother='hybrid', neural=prec)
            else:
                logger.info("⚠️ No kernel given, running classical multigrid only")

            summary = []
            for label, levels in hierarchies.items():
                row = {'run': label, 'levels': levels.depth, 'cycles': np.nan, 'status': 'diverged',
                       'final_error': np.nan, 'final_residual': np.nan, 'neural_applications': 0}
                try:
                    _, trace = run_multigrid(levels)
                except NumericalError as e:
                    logger.warning(f"⚠️ {label}: {e}")
                    summary.append(row)
                    continue
                writer.write_frame(trace.to_frame(), f"multigrid_{label}.csv")
                row.update({'cycles': trace.iterations, 'status': trace.status, 'final_error': trace.final_error,
                            'final_residual': trace.final_residual,
                            'neural_applications': trace.neural_applications})
                summary.append(row)
                logger.info(f"   {'✅' if trace.converged else '⚠️'} {label}: {trace.status} after "
                            f"{trace.iterations} cycles, error {trace.final_error:.3e}")

            shown = hierarchies.get('hybrid', hierarchies['classical'])
            writer.write_text(vcycle_diagram(shown), 'vcycle.txt')
            frame = pd.DataFrame(summary)
            writer.write_frame(frame, 'multigrid_summary.csv')
            manifest.metadata['problem'] = problem.name
            manifest.metadata['non_convergent'] = [row['run'] for row in summary if row['status'] != 'converged']
            results['summary'] = frame

        return self._execute('multigrid', f"multigrid_{problem_name}", config, body)
