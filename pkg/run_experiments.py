#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Green's function preconditioner experiments
Command-line entry point: train surrogates, reproduce the solver tables, run hybrid
iterations, kernel spectra, the fast solver and hybrid multigrid

Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error
"""

import os
import sys

# Add project root to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config.settings import settings
from src.orchestrators.experiment_orchestrator import ExperimentOrchestrator
from src.problems.benchmark_problems import available_problems
from src.utils.logging import setup_logging

logger = setup_logging("run_experiments")


def _add_kernel_arguments(parser) -> None:
    parser.add_argument('--model', default=None, help='Trained model file (model.json with its .meta.json sidecar)')
    parser.add_argument('--exact', action='store_true', help="Use the analytic Green's function")


def main(argv=None) -> int:
    """Main function; returns the process exit code"""
    import argparse

    parser = argparse.ArgumentParser(description="Green's function preconditioners: training and solver experiments")
    parser.add_argument('--seed', type=int, default=None,
                        help=f'Random seed (default: config file, then GREEN_SEED={settings.default_seed})')
    parser.add_argument('--threads', type=int, default=None,
                        help=f'Worker threads, 1 for reproducible runs (default: {settings.num_threads})')
    parser.add_argument('--out-dir', default=None, help=f'Output directory (default: {settings.output_dir})')
    commands = parser.add_subparsers(dest='command', required=True)

    train = commands.add_parser('train', help='Train a singularity-encoded Green\'s function')
    train.add_argument('config', help='Training configuration file (configs/*.ini)')

    table = commands.add_parser('table', help='Preconditioned solver table 1, 2, 4 or 5')
    table.add_argument('table_id', type=int, help='Table id')
    _add_kernel_arguments(table)

    hybrid = commands.add_parser('hybrid', help='Damped Jacobi against hybrid iterations')
    hybrid.add_argument('--problem', default='poisson1d', choices=available_problems())
    hybrid.add_argument('--periods', type=int, nargs='+', default=None, help='Switching periods K')
    hybrid.add_argument('--h', type=float, default=None, help='Mesh size')
    hybrid.add_argument('--jacobi-only', action='store_true', help='Never apply the neural preconditioner')
    _add_kernel_arguments(hybrid)

    spectrum = commands.add_parser('spectrum', help='Kernel eigenpairs and spectral-bias profile')
    spectrum.add_argument('--problem', default='poisson1d', choices=['poisson1d', 'poisson2d'])
    spectrum.add_argument('--count', type=int, default=None, help='Number of eigenpairs')
    spectrum.add_argument('--h', type=float, default=None, help='Mesh size')
    _add_kernel_arguments(spectrum)

    solve = commands.add_parser('solve', help='Fast solver u = integral of G f')
    solve.add_argument('--problem', default='poisson1d', choices=available_problems())
    solve.add_argument('--h', type=float, default=None, help='Grid or mesh size')
    _add_kernel_arguments(solve)

    multigrid = commands.add_parser('multigrid', help='Classical against hybrid multigrid')
    multigrid.add_argument('--problem', default='poisson1d', choices=available_problems())
    _add_kernel_arguments(multigrid)

    args = parser.parse_args(argv)

    if args.threads is not None and args.threads < 1:
        parser.error(f"--threads must be at least 1, got {args.threads}")

    logger.info(f"🚀 Command: {args.command} ({settings.environment})")
    orchestrator = ExperimentOrchestrator(out_dir=args.out_dir, seed=args.seed, threads=args.threads)

    if args.command == 'train':
        results = orchestrator.run_train(args.config)
    elif args.command == 'table':
        results = orchestrator.run_table(args.table_id, model_path=args.model, exact=args.exact)
    elif args.command == 'hybrid':
        results = orchestrator.run_hybrid(args.problem, model_path=args.model, exact=args.exact,
                                          periods=args.periods, h=args.h, jacobi_only=args.jacobi_only)
    elif args.command == 'spectrum':
        results = orchestrator.run_spectrum(args.problem, model_path=args.model, exact=args.exact,
                                            count=args.count, h=args.h)
    elif args.command == 'solve':
        results = orchestrator.run_solve(args.problem, model_path=args.model, exact=args.exact, h=args.h)
    else:
        results = orchestrator.run_multigrid(args.problem, model_path=args.model, exact=args.exact)

    if results['success']:
        print("\n" + "=" * 70)
        print(f"🎉 SUCCESS: {args.command} completed")
        for path in results['outputs']:
            print(f"📝 {path}")
        print("=" * 70)
    else:
        print("\n" + "=" * 70)
        print(f"❌ FAILED: {args.command}")
        for error in results['errors']:
            print(f"   {error}")
        print("=" * 70)

    return results['exit_code']


if __name__ == "__main__":
    sys.exit(main())
