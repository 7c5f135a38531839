"""
AdamW optimizer and step-decay learning-rate schedule for MlpNetwork parameters

    m_t = beta1 * m_{t-1} + (1 - beta1) * g_t
    v_t = beta2 * v_{t-1} + (1 - beta2) * g_t^2
    theta_t = theta_{t-1} - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta_{t-1})
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.models.mlp_network import MlpNetwork, ParamGradient
from src.utils.errors import DimensionMismatchError, NonFiniteLossError

logger = logging.getLogger(__name__)


@dataclass
class AdamWState:
    """Step counter and moment estimates, one array per parameter"""

    step: int
    m: List[np.ndarray]
    v: List[np.ndarray]

    @classmethod
    def fresh(cls, net: MlpNetwork) -> "AdamWState":
        params = net.parameters()
        return cls(step=0, m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])

    def matches(self, net: MlpNetwork) -> bool:
        params = net.parameters()
        return len(self.m) == len(params) and all(
            m.shape == p.shape and v.shape == p.shape for m, v, p in zip(self.m, self.v, params)
        )


def adamw_step(
    net: MlpNetwork,
    grad: ParamGradient,
    state: Optional[AdamWState],
    lr: float,
    weight_decay: float = 1e-2,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Tuple[MlpNetwork, AdamWState]:
    """
    One AdamW update with decoupled weight decay

    Args:
        net: Current network (left untouched)
        grad: Gradient of the loss with respect to the network parameters
        state: Optimizer state from the previous step, or None for a fresh start
        lr: Learning rate
        weight_decay: Decoupled decay coefficient
        beta1: First-moment decay
        beta2: Second-moment decay
        eps: Denominator offset

    Returns:
        (updated network, updated state)
    """
    if lr < 0 or weight_decay < 0 or not (0.0 <= beta1 < 1.0) or not (0.0 <= beta2 < 1.0) or eps < 0:
        raise ValueError(f"Invalid AdamW hyperparameters: lr={lr}, weight_decay={weight_decay}, "
                         f"beta1={beta1}, beta2={beta2}, eps={eps}")
    if not grad.is_finite():
        raise NonFiniteLossError("AdamW step aborted: gradient has non-finite entries")

    if state is None:
        state = AdamWState.fresh(net)
    elif not state.matches(net):
        raise DimensionMismatchError("Optimizer state does not match the network parameters")

    params = net.parameters()
    grads = grad.parameters()
    if any(g.shape != p.shape for g, p in zip(grads, params)) or len(grads) != len(params):
        raise DimensionMismatchError("Gradient does not match the network parameters")

    step = state.step + 1
    bias1 = 1.0 - beta1 ** step
    bias2 = 1.0 - beta2 ** step

    new_params = []
    new_m = []
    new_v = []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / bias1
        v_hat = v / bias2
        decayed = p * (1.0 - lr * weight_decay)
        new_params.append(decayed - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m)
        new_v.append(v)

    return net.with_parameters(new_params), AdamWState(step=step, m=new_m, v=new_v)


class StepDecaySchedule:
    """Learning rate divided by ``factor`` at each milestone epoch"""

    def __init__(self, initial_lr: float, milestones: Sequence[int], factor: float = 10.0):
        if initial_lr <= 0:
            raise ValueError(f"Initial learning rate must be positive: {initial_lr}")
        if list(milestones) != sorted(set(milestones)):
            raise ValueError(f"Milestones must be strictly increasing: {list(milestones)}")
        self.initial_lr = initial_lr
        self.milestones = list(milestones)
        self.factor = factor

    def lr_at(self, epoch: int) -> float:
        passed = sum(1 for milestone in self.milestones if epoch >= milestone)
        return self.initial_lr / (self.factor ** passed)
