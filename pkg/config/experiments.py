#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Experiment Configuration
Constants for the benchmark experiments: training rows, mesh sweeps, solver budgets
"""

from typing import Any, Dict, List


class ExperimentConfig:
    """Experiment configuration constants"""

    # Training rows (depth, width, penalties, batch sizes, lr, milestones)
    TRAIN_ROWS: Dict[str, Dict[str, Any]] = {
        'poisson1d': {
            'depth': 2, 'width': 40,
            'beta_snglr': 400.0, 'beta_bndry': 400.0, 'beta_symtr': 400.0,
            'n_regular': 160, 'n_singular': 500, 'n_boundary': 2, 'n_sources': 500,
            'learning_rate': 1e-3, 'milestones': [12000, 22000], 'max_epochs': 30000,
            'kind': 'abs',
        },
        'helmholtz1d': {
            'depth': 2, 'width': 40,
            'beta_snglr': 400.0, 'beta_bndry': 400.0, 'beta_symtr': 400.0,
            'n_regular': 500, 'n_singular': 500, 'n_boundary': 2, 'n_sources': 500,
            'learning_rate': 1e-3, 'milestones': [8000, 15000], 'max_epochs': 20000,
            'kind': 'abs',
        },
        'poisson2d': {
            'depth': 6, 'width': 40,
            'beta_snglr': 400.0, 'beta_bndry': 400.0, 'beta_symtr': 400.0,
            'n_regular': 640, 'n_singular': 200, 'n_boundary': 640, 'n_sources': 160,
            'learning_rate': 1e-3, 'milestones': [15000, 25000], 'max_epochs': 30000,
            'kind': 'log', 'epsilons': [0.1, 0.08, 0.064, 0.005],
        },
    }

    # Regular points keep this distance from their source
    EXCLUSION_RADIUS = {1: 1e-3, 2: 5e-3}

    # Diagonal averaging
    DIAGONAL_ANGLES = 16
    # Circle radius for G(x, x) in fine-grid dense preconditioners (d = 2), independent of h
    DENSE_DIAGONAL_RADIUS = 5e-3

    # Mesh sweeps
    TABLE1_MESH_EXPONENTS: List[int] = [6, 8, 10, 12]
    TABLE1_PLAIN_BUDGETS: List[int] = [63, 255, 1023, 4095]
    TABLE2_GEOMETRIES: List[Dict[str, int]] = [
        {'h_exp': 14, 'H_exp': 9, 'overlap': 30},
        {'h_exp': 16, 'H_exp': 10, 'overlap': 30},
    ]
    TABLE4_MESH_EXPONENTS: List[int] = [6, 8, 10, 12]
    TABLE4_PLAIN_BUDGETS: List[int] = [30, 252, 1014, 4058]
    TABLE5_MESH_SIZES: List[float] = [0.1, 0.05, 0.025, 0.0125]

    # Solver tolerances
    KRYLOV_TOLERANCE = 1e-12
    PRECONDITIONED_TARGET_ERROR = 1e-8
    DENSE_EIG_LIMIT = 4100

    # Hybrid iteration and multigrid
    JACOBI_OMEGA = 0.5
    HYBRID_PERIODS: List[int] = [2, 4, 8, 16]
    HYBRID_MESH_EXPONENT = 8
    HYBRID_MAX_ITERATIONS = 2000
    HYBRID_TOLERANCE = 1e-12
    CLASSICAL_SMOOTHING_STEPS = 3
    HYBRID_SMOOTHING_STEPS = 2
    MG_FINE_EXPONENT = 8
    MG_COARSE_EXPONENT = 4
    MG_MAX_CYCLES = 20
    HYBRID_DISC_MESH = 0.1
    MG_DISC_MESHES: List[float] = [0.1, 0.3]

    # Kernel eigenanalysis
    SPECTRUM_1D = {'element': 'quadratic', 'h': 2.0 ** -10, 'count': 200}
    SPECTRUM_2D = {'element': 'linear', 'h': 0.045, 'count': 300}

    # Fast solver
    SOLVE_1D_MESH = 2.0 ** -10
    SOLVE_2D_MESH = 0.05

    @classmethod
    def get_train_defaults(cls, problem: str) -> Dict[str, Any]:
        """Training defaults for one benchmark problem"""
        if problem not in cls.TRAIN_ROWS:
            raise KeyError(f"No training row for problem: {problem}")

        row = dict(cls.TRAIN_ROWS[problem])
        dimension = 2 if problem == 'poisson2d' else 1
        row.setdefault('epsilons', [])
        row['exclusion_radius'] = cls.EXCLUSION_RADIUS[dimension]
        row['problem'] = problem
        return row

    @classmethod
    def get_table_sweep(cls, table_id: int) -> Dict[str, Any]:
        """Mesh sweep and budgets for one reproduced table"""
        sweeps = {
            1: {'problem': 'poisson1d', 'mesh': [2.0 ** -e for e in cls.TABLE1_MESH_EXPONENTS],
                'budgets': cls.TABLE1_PLAIN_BUDGETS, 'solver': 'bicg'},
            2: {'problem': 'poisson1d', 'geometries': cls.TABLE2_GEOMETRIES, 'solver': 'bicg'},
            4: {'problem': 'helmholtz1d', 'mesh': [2.0 ** -e for e in cls.TABLE4_MESH_EXPONENTS],
                'budgets': cls.TABLE4_PLAIN_BUDGETS, 'solver': 'gmres'},
            5: {'problem': 'poisson2d', 'mesh': cls.TABLE5_MESH_SIZES, 'solver': 'bicg'},
        }
        if table_id not in sweeps:
            raise KeyError(f"Unknown table id: {table_id}")
        return sweeps[table_id]
