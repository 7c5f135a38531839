#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Green's Function Trainer
Minimises the penalised collocation loss with AdamW and a step-decay learning rate
"""

import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

# Add project root to Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from config.settings import settings
from src.green.collocation import CollocationBatch, TrainConfig, sample_collocation
from src.green.losses import LossBreakdown, total_loss_and_grad
from src.green.surrogate import GreenSurrogate
from src.models.adamw import AdamWState, StepDecaySchedule, adamw_step
from src.models.mlp_network import MlpNetwork, ParamGradient, init_network, pairwise_sum
from src.monitoring.run_manifest import TrainingLossLog
from src.problems.benchmark_problems import EllipticProblem
from src.utils.errors import NonFiniteLossError, TrainingDivergedError
from src.utils.logging import setup_logging

logger = setup_logging("green_trainer")


def source_chunks(batch: CollocationBatch, chunk_points: int) -> List[np.ndarray]:
    """Consecutive groups of whole sources holding about chunk_points collocation points each"""
    per_source = 2 * batch.regular.shape[1] + batch.singular.shape[1] + batch.boundary.shape[1]
    sources_per_chunk = max(1, chunk_points // per_source)
    m = batch.num_sources
    return [np.arange(start, min(start + sources_per_chunk, m)) for start in range(0, m, sources_per_chunk)]


class GreenTrainer:
    """
    Training loop for a singularity-encoded Green's function

    Every epoch draws a collocation batch (every ``resample_every`` epochs), evaluates the
    full-batch loss and gradient chunk by chunk, and takes one AdamW step.
    """

    def __init__(self, problem: EllipticProblem, config: TrainConfig,
                 loss_log: Optional[TrainingLossLog] = None, threads: Optional[int] = None):
        config.check_problem(problem)
        self.problem = problem
        self.config = config
        self.loss_log = loss_log
        self.threads = threads or settings.num_threads
        self.schedule = StepDecaySchedule(config.learning_rate, config.milestones)
        self.last_breakdown: Optional[LossBreakdown] = None

    def loss_and_grad(self, net: MlpNetwork, batch: CollocationBatch) -> Tuple[LossBreakdown, ParamGradient]:
        """Full-batch loss and gradient as a weighted pairwise sum over source chunks"""
        chunks = source_chunks(batch, settings.loss_chunk_points)
        m = batch.num_sources

        def evaluate(index: np.ndarray):
            return total_loss_and_grad(net, batch.select(index), self.problem, self.config,
                                       weight=index.size / m)

        if self.threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(evaluate, chunks))
        else:
            results = [evaluate(index) for index in chunks]

        breakdown = pairwise_sum([r[0] for r in results])
        grad = pairwise_sum([r[1] for r in results])
        return breakdown, grad

    def run(self) -> GreenSurrogate:
        """
        Train from a fresh initialisation

        Returns:
            GreenSurrogate holding the final network

        Raises:
            TrainingDivergedError: loss or gradient became non-finite
        """
        config = self.config
        d = self.problem.dimension
        rng = np.random.default_rng(config.seed)
        net = init_network(2 * d + 1, config.depth, config.width, config.seed)
        state: Optional[AdamWState] = None
        batch: Optional[CollocationBatch] = None

        logger.info(f"🚀 Training {self.problem.name}: depth {config.depth}, width {config.width}, "
                    f"{config.max_epochs} epochs, seed {config.seed}, {self.threads} thread(s)")
        start = time.time()

        for epoch in range(config.max_epochs):
            if epoch % config.resample_every == 0:
                batch = sample_collocation(self.problem, config, rng)
            lr = self.schedule.lr_at(epoch)

            try:
                breakdown, grad = self.loss_and_grad(net, batch)
                net, state = adamw_step(net, grad, state, lr, weight_decay=config.weight_decay)
            except NonFiniteLossError as e:
                logger.error(f"❌ Training diverged at epoch {epoch}: {e}")
                raise TrainingDivergedError(epoch, f"Training diverged at epoch {epoch}: {e}") from e

            self.last_breakdown = breakdown
            if epoch % config.log_every == 0 or epoch == config.max_epochs - 1:
                logger.info(f"epoch {epoch:6d}  lr {lr:.1e}  total {breakdown.total:.4e}  "
                            f"reglr {breakdown.reglr:.3e}  snglr {breakdown.snglr:.3e}  "
                            f"bndry {breakdown.bndry:.3e}  symtr {breakdown.symtr:.3e}")
                if self.loss_log is not None:
                    self.loss_log.record(epoch, lr, breakdown)

        logger.info(f"✅ Training finished in {time.time() - start:.1f}s")
        return GreenSurrogate(net=net, dimension=d, kind=config.augmented_kind(),
                              domain=self.problem.domain, problem=self.problem.name)


def train(problem: EllipticProblem, config: TrainConfig, loss_log: Optional[TrainingLossLog] = None,
          threads: Optional[int] = None) -> GreenSurrogate:
    """
    Train a singularity-encoded Green's function for a benchmark problem

    Args:
        problem: Benchmark problem
        config: Training configuration
        loss_log: Receives one row per logged epoch
        threads: Worker threads for chunked loss evaluation (default: settings.num_threads)

    Returns:
        GreenSurrogate
    """
    return GreenTrainer(problem, config, loss_log=loss_log, threads=threads).run()
