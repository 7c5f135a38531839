"""
Fully-connected tanh network with exact second-order input jets

Forward mode carries (value, gradient, Hessian) of every neuron with respect to a chosen
subset of the input coordinates. The reverse pass walks the recorded jet graph back to the
weights, so parameter gradients of losses built from input derivatives are exact.

Jet arrays keep the neuron axis last: value [B, U], grad [B, P, U], hess [B, P, P, U].
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.utils.errors import DimensionMismatchError, NonFiniteLossError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MlpNetwork:
    """Immutable tanh network L_{D} o tanh o ... o tanh o L_0 with D hidden layers"""

    input_dim: int
    depth: int
    width: int
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]
    activation: str = "tanh"

    def __post_init__(self):
        if len(self.weights) != self.depth + 1 or len(self.biases) != self.depth + 1:
            raise DimensionMismatchError(
                f"Expected {self.depth + 1} layers, got {len(self.weights)} weights and {len(self.biases)} biases"
            )

        expected_cols = self.input_dim
        for ell, (w, b) in enumerate(zip(self.weights, self.biases)):
            rows = 1 if ell == self.depth else self.width
            if w.shape != (rows, expected_cols) or b.shape != (rows,):
                raise DimensionMismatchError(
                    f"Layer {ell}: weight {w.shape} / bias {b.shape}, expected ({rows}, {expected_cols})"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"Layer {ell} has non-finite parameters")
            expected_cols = rows

        frozen_w = tuple(_readonly(w) for w in self.weights)
        frozen_b = tuple(_readonly(b) for b in self.biases)
        object.__setattr__(self, 'weights', frozen_w)
        object.__setattr__(self, 'biases', frozen_b)

    @property
    def num_layers(self) -> int:
        return self.depth + 1

    def parameters(self) -> List[np.ndarray]:
        """Parameters in layer order [W_0, b_0, W_1, b_1, ...]"""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        return params

    def with_parameters(self, params: Sequence[np.ndarray]) -> "MlpNetwork":
        """New network with the same architecture and the given parameters"""
        return MlpNetwork(
            input_dim=self.input_dim,
            depth=self.depth,
            width=self.width,
            weights=tuple(np.array(p, dtype=np.float64) for p in params[0::2]),
            biases=tuple(np.array(p, dtype=np.float64) for p in params[1::2]),
        )


@dataclass(frozen=True, eq=False)
class Jet2:
    """Value, gradient and Hessian of the network output at one input point"""

    value: float
    grad: np.ndarray
    hess: np.ndarray


@dataclass(eq=False)
class Jet2Batch:
    """Jets of a batch of inputs with respect to the coordinates in ``directions``"""

    value: np.ndarray
    grad: Optional[np.ndarray]
    hess: Optional[np.ndarray]
    directions: Tuple[int, ...]
    tape_id: int = -1


@dataclass(eq=False)
class ParamGradient:
    """Per-layer gradients congruent with the network parameters"""

    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]

    @classmethod
    def zeros_like(cls, net: MlpNetwork) -> "ParamGradient":
        return cls(
            weights=tuple(np.zeros_like(w) for w in net.weights),
            biases=tuple(np.zeros_like(b) for b in net.biases),
        )

    def parameters(self) -> List[np.ndarray]:
        grads = []
        for w, b in zip(self.weights, self.biases):
            grads.extend([w, b])
        return grads

    def __add__(self, other: "ParamGradient") -> "ParamGradient":
        return ParamGradient(
            weights=tuple(a + b for a, b in zip(self.weights, other.weights)),
            biases=tuple(a + b for a, b in zip(self.biases, other.biases)),
        )

    def scaled(self, factor: float) -> "ParamGradient":
        return ParamGradient(
            weights=tuple(factor * w for w in self.weights),
            biases=tuple(factor * b for b in self.biases),
        )

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.parameters())

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(p * p) for p in self.parameters())))


def _readonly(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


def init_network(input_dim: int, depth: int, width: int, seed: int) -> MlpNetwork:
    """
    Initialise a tanh network with zero-mean uniform weights and zero biases

    Weights of a layer with fan-in ``n`` are drawn from U(-1/sqrt(n), 1/sqrt(n)).

    Args:
        input_dim: Input dimension (2d + 1 for a singularity-encoded kernel)
        depth: Number of hidden layers
        width: Neurons per hidden layer
        seed: Seed of the generator

    Returns:
        Initialised network
    """
    if input_dim < 1 or depth < 1 or width < 1:
        raise ValueError(f"Network dimensions must be positive: input_dim={input_dim}, depth={depth}, width={width}")

    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    fan_in = input_dim
    for ell in range(depth + 1):
        rows = 1 if ell == depth else width
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(rows, fan_in)))
        biases.append(np.zeros(rows))
        fan_in = rows

    return MlpNetwork(input_dim=input_dim, depth=depth, width=width,
                      weights=tuple(weights), biases=tuple(biases))


def _check_inputs(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.input_dim:
        raise DimensionMismatchError(f"Input has {x.shape[-1]} coordinates, network expects {net.input_dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("Network inputs must be finite")
    return x


def forward(net: MlpNetwork, x: np.ndarray):
    """
    Evaluate the network at one point ([input_dim]) or a batch ([B, input_dim])
    """
    x = _check_inputs(net, x)
    single = x.ndim == 1
    h = np.atleast_2d(x)
    for ell, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w.T + b
        if ell < net.depth:
            h = np.tanh(h)
    out = h[:, 0]
    return float(out[0]) if single else out


class _LayerRecord:
    """Quantities of one layer needed by the reverse pass"""

    __slots__ = ('h_v', 'h_g', 'h_h', 'a_g', 'a_h', 's1', 's2', 's3')

    def __init__(self, h_v, h_g, h_h, a_g, a_h):
        self.h_v = h_v
        self.h_g = h_g
        self.h_h = h_h
        self.a_g = a_g
        self.a_h = a_h
        self.s1 = None
        self.s2 = None
        self.s3 = None


class _JetTape:
    """Forward jet propagation with the records for reverse accumulation"""

    def __init__(self, net: MlpNetwork, inputs: np.ndarray, directions: Tuple[int, ...], order: int):
        self.net = net
        self.directions = directions
        self.order = order
        self.records: List[_LayerRecord] = []
        self.seed_value: Optional[np.ndarray] = None
        self.seed_grad: Optional[np.ndarray] = None
        self.seed_hess: Optional[np.ndarray] = None
        self.jet = self._run(inputs)

    def _run(self, inputs: np.ndarray) -> Jet2Batch:
        net = self.net
        batch = inputs.shape[0]
        num_dirs = len(self.directions)
        with_grad = num_dirs > 0
        with_hess = with_grad and self.order >= 2

        h_v = inputs
        h_g = None
        h_h = None
        for ell, (w, b) in enumerate(zip(net.weights, net.biases)):
            a_v = h_v @ w.T + b
            if not with_grad:
                a_g = None
                a_h = None
            elif ell == 0:
                # input jet is the coordinate selector, its Hessian vanishes
                a_g = np.broadcast_to(w[:, list(self.directions)].T, (batch, num_dirs, w.shape[0]))
                a_h = None
            else:
                a_g = h_g @ w.T
                a_h = h_h @ w.T if with_hess else None

            record = _LayerRecord(h_v, h_g, h_h, a_g, a_h)
            self.records.append(record)

            if ell == net.depth:
                value = a_v[:, 0]
                grad = a_g[:, :, 0].copy() if with_grad else None
                if with_hess:
                    hess = a_h[:, :, :, 0] if a_h is not None else np.zeros((batch, num_dirs, num_dirs))
                    hess = _mirror_upper(hess)
                else:
                    hess = None
                return Jet2Batch(value=value, grad=grad, hess=hess, directions=self.directions)

            s = np.tanh(a_v)
            s1 = 1.0 - s * s
            s2 = -2.0 * s * s1
            record.s1 = s1
            record.s2 = s2
            record.s3 = -2.0 * (s1 * s1 + s * s2)

            h_v = s
            if with_grad:
                h_g = s1[:, None, :] * a_g
            if with_hess:
                h_h = s2[:, None, None, :] * a_g[:, :, None, :] * a_g[:, None, :, :]
                if a_h is not None:
                    h_h = h_h + s1[:, None, None, :] * a_h

        raise RuntimeError("unreachable")

    def add_seed(self, value=None, grad=None, hess=None) -> None:
        if value is not None:
            self.seed_value = value if self.seed_value is None else self.seed_value + value
        if grad is not None:
            self.seed_grad = grad if self.seed_grad is None else self.seed_grad + grad
        if hess is not None:
            self.seed_hess = hess if self.seed_hess is None else self.seed_hess + hess

    def backward(self) -> ParamGradient:
        net = self.net
        batch = self.jet.value.shape[0]

        # adjoints of the output-layer pre-activation
        a_v_bar = np.zeros((batch, 1)) if self.seed_value is None else self.seed_value[:, None]
        a_g_bar = None if self.seed_grad is None else self.seed_grad[:, :, None]
        a_h_bar = None
        if self.seed_hess is not None:
            seed = self.seed_hess
            # adjoint of mirroring the upper triangle
            folded = np.triu(seed) + np.triu(np.swapaxes(seed, 1, 2), 1)
            a_h_bar = folded[:, :, :, None]

        w_grads: List[np.ndarray] = [None] * net.num_layers
        b_grads: List[np.ndarray] = [None] * net.num_layers

        for ell in range(net.depth, -1, -1):
            w = net.weights[ell]
            rec = self.records[ell]

            # linear layer a = h W^T + b
            w_bar = a_v_bar.T @ rec.h_v
            if a_g_bar is not None:
                if ell == 0:
                    w_bar[:, list(self.directions)] += a_g_bar.sum(axis=0).T
                else:
                    w_bar += a_g_bar.reshape(-1, w.shape[0]).T @ rec.h_g.reshape(-1, w.shape[1])
            if a_h_bar is not None and ell > 0:
                w_bar += a_h_bar.reshape(-1, w.shape[0]).T @ rec.h_h.reshape(-1, w.shape[1])
            w_grads[ell] = w_bar
            b_grads[ell] = a_v_bar.sum(axis=0)

            if ell == 0:
                break

            h_v_bar = a_v_bar @ w
            h_g_bar = a_g_bar @ w if a_g_bar is not None else None
            h_h_bar = a_h_bar @ w if (a_h_bar is not None and ell > 0) else None

            # tanh layer feeding this linear layer
            prev = self.records[ell - 1]
            s1, s2, s3 = prev.s1, prev.s2, prev.s3
            a_g = prev.a_g
            a_h = prev.a_h

            a_v_bar = s1 * h_v_bar
            new_g_bar = None
            new_h_bar = None
            if h_g_bar is not None:
                a_v_bar = a_v_bar + s2 * np.einsum('bpu,bpu->bu', h_g_bar, a_g)
                new_g_bar = s1[:, None, :] * h_g_bar
            if h_h_bar is not None:
                sym = h_h_bar + np.swapaxes(h_h_bar, 1, 2)
                a_v_bar = a_v_bar + s3 * np.einsum('bpqu,bpu,bqu->bu', h_h_bar, a_g, a_g)
                if a_h is not None:
                    a_v_bar = a_v_bar + s2 * np.einsum('bpqu,bpqu->bu', h_h_bar, a_h)
                cross = s2[:, None, :] * np.einsum('bpqu,bqu->bpu', sym, a_g)
                new_g_bar = cross if new_g_bar is None else new_g_bar + cross
                # the first layer has no pre-activation Hessian
                new_h_bar = s1[:, None, None, :] * h_h_bar if a_h is not None else None
            a_g_bar = new_g_bar
            a_h_bar = new_h_bar

        return ParamGradient(weights=tuple(w_grads), biases=tuple(b_grads))


def _mirror_upper(hess: np.ndarray) -> np.ndarray:
    """Symmetric matrix built from the upper triangle (diagonal included)"""
    upper = np.triu(hess)
    return upper + np.swapaxes(np.triu(hess, 1), -1, -2)


class JetRecorder:
    """
    Runs jet forward passes of one network and collects adjoint seeds for them

    A loss evaluator calls the recorder to obtain jets, computes its loss, and seeds
    the adjoint of the loss with respect to each jet it used.
    """

    def __init__(self, net: MlpNetwork):
        self.net = net
        self._tapes: List[_JetTape] = []

    def __call__(self, inputs: np.ndarray, directions: Optional[Sequence[int]] = None, order: int = 2) -> Jet2Batch:
        inputs = np.atleast_2d(_check_inputs(self.net, inputs))
        dirs = tuple(range(self.net.input_dim)) if directions is None else tuple(int(d) for d in directions)
        tape = _JetTape(self.net, inputs, dirs, order)
        tape.jet.tape_id = len(self._tapes)
        self._tapes.append(tape)
        return tape.jet

    def seed(self, jet: Jet2Batch, value: np.ndarray = None, grad: np.ndarray = None, hess: np.ndarray = None) -> None:
        """Accumulate d(loss)/d(jet component) for a jet returned by this recorder"""
        self._tapes[jet.tape_id].add_seed(value, grad, hess)

    def backward(self) -> ParamGradient:
        total = ParamGradient.zeros_like(self.net)
        for tape in self._tapes:
            if tape.seed_value is None and tape.seed_grad is None and tape.seed_hess is None:
                continue
            total = total + tape.backward()
        return total


LossEvaluator = Callable[[JetRecorder], float]


def forward_jet2(net: MlpNetwork, x: np.ndarray, directions: Optional[Sequence[int]] = None):
    """
    Exact value, gradient and Hessian of the network output

    Args:
        net: Network
        x: One point [input_dim] or a batch [B, input_dim]
        directions: Input coordinates the jet is taken with respect to (default: all)

    Returns:
        Jet2 for a single point, Jet2Batch for a batch
    """
    x = _check_inputs(net, x)
    recorder = JetRecorder(net)
    jet = recorder(np.atleast_2d(x), directions)
    if x.ndim == 1:
        return Jet2(value=float(jet.value[0]), grad=jet.grad[0].copy(), hess=jet.hess[0].copy())
    return jet


def loss_param_grad(net: MlpNetwork, loss_evaluator: LossEvaluator) -> Tuple[float, ParamGradient]:
    """
    Loss and its exact parameter gradient by reverse accumulation over the jet graph

    Args:
        net: Network
        loss_evaluator: Callable receiving a JetRecorder; returns the scalar loss after
            seeding the adjoints of every jet it used

    Returns:
        (loss, gradient)
    """
    recorder = JetRecorder(net)
    loss = float(loss_evaluator(recorder))
    if not np.isfinite(loss):
        raise NonFiniteLossError(f"Loss is not finite: {loss}")

    grad = recorder.backward()
    if not grad.is_finite():
        raise NonFiniteLossError("Parameter gradient is not finite")
    return loss, grad


def pairwise_sum(items: List):
    """Sum with a fixed pairwise tree order"""
    if not items:
        raise ValueError("Nothing to sum")
    level = list(items)
    while len(level) > 1:
        paired = [level[i] + level[i + 1] for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            paired.append(level[-1])
        level = paired
    return level[0]
