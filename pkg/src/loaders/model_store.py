"""
Model Store
Saves and loads trained networks as JSON model files with a surrogate sidecar
"""

import json
import os
import sys
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

# Add project root to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..'))
from src.green.augmented_variable import AugmentedKind
from src.green.surrogate import GreenSurrogate
from src.models.mlp_network import MlpNetwork
from src.problems.benchmark_problems import Domain
from src.utils.errors import ConfigError, NumericalError
from src.utils.logging import setup_logging

logger = setup_logging("model_store")

FORMAT_VERSION = 1
SIDECAR_SUFFIX = '.meta.json'


class LayerDocument(BaseModel):
    """One affine layer, W stored row-major"""

    model_config = ConfigDict(extra='forbid')

    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    W: List[float]
    b: List[float]

    @model_validator(mode='after')
    def sizes_match(self) -> "LayerDocument":
        if len(self.W) != self.rows * self.cols:
            raise ValueError(f"W has {len(self.W)} entries, expected {self.rows} x {self.cols}")
        if len(self.b) != self.rows:
            raise ValueError(f"b has {len(self.b)} entries, expected {self.rows}")
        return self


class ModelDocument(BaseModel):
    """Model file contents"""

    model_config = ConfigDict(extra='forbid')

    format_version: int
    input_dim: int = Field(ge=1)
    depth: int = Field(ge=1)
    width: int = Field(ge=1)
    activation: str
    layers: List[LayerDocument]

    @model_validator(mode='after')
    def supported(self) -> "ModelDocument":
        if self.format_version != FORMAT_VERSION:
            raise ValueError(f"Unsupported format_version {self.format_version}")
        if self.activation != 'tanh':
            raise ValueError(f"Unsupported activation '{self.activation}'")
        if len(self.layers) != self.depth + 1:
            raise ValueError(f"Expected {self.depth + 1} layers, found {len(self.layers)}")
        return self


class SidecarDocument(BaseModel):
    """Surrogate header stored next to the model file"""

    model_config = ConfigDict(extra='forbid')

    d: int = Field(ge=1, le=2)
    kind: str
    exponent: Optional[float] = None
    domain: str
    problem: str = ''


def sidecar_path(model_path: str) -> str:
    root, ext = os.path.splitext(model_path)
    return (root if ext == '.json' else model_path) + SIDECAR_SUFFIX


def _numbers(values: np.ndarray) -> str:
    return '[' + ', '.join(format(float(v), '.17g') for v in np.ravel(values)) + ']'


def network_to_text(net: MlpNetwork) -> str:
    """
    Serialize a network; every parameter is written with 17 significant digits so that
    loading restores it bit for bit
    """
    for ell, (w, b) in enumerate(zip(net.weights, net.biases)):
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise NumericalError(f"Layer {ell} has non-finite parameters and cannot be saved")

    layers = []
    for w, b in zip(net.weights, net.biases):
        layers.append(
            f'    {{"rows": {w.shape[0]}, "cols": {w.shape[1]},\n'
            f'     "W": {_numbers(w)},\n'
            f'     "b": {_numbers(b)}}}'
        )
    return (
        '{\n'
        f'  "format_version": {FORMAT_VERSION},\n'
        f'  "input_dim": {net.input_dim},\n'
        f'  "depth": {net.depth},\n'
        f'  "width": {net.width},\n'
        f'  "activation": {json.dumps(net.activation)},\n'
        '  "layers": [\n' + ',\n'.join(layers) + '\n  ]\n'
        '}\n'
    )


def network_from_document(document: ModelDocument) -> MlpNetwork:
    weights = tuple(np.asarray(layer.W, dtype=np.float64).reshape(layer.rows, layer.cols) for layer in document.layers)
    biases = tuple(np.asarray(layer.b, dtype=np.float64) for layer in document.layers)
    return MlpNetwork(input_dim=document.input_dim, depth=document.depth, width=document.width,
                      weights=weights, biases=biases, activation=document.activation)


def save_network(net: MlpNetwork, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(network_to_text(net))
    logger.info(f"💾 Model saved: {path} (input_dim {net.input_dim}, depth {net.depth}, width {net.width})")
    return path


def load_network(path: str) -> MlpNetwork:
    """
    Load and validate a model file

    Raises:
        ConfigError: missing file, malformed JSON or invalid document
    """
    if not os.path.exists(path):
        raise ConfigError(f"Model file not found: {path}", key='model')
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            document = ModelDocument.model_validate(json.load(handle))
        return network_from_document(document)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Model file {path} is not valid JSON: {e}", key='model') from e
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"Model file {path} is invalid: {e}", key='model') from e


def save_surrogate(surrogate: GreenSurrogate, path: str) -> str:
    """Write the network and its sidecar header; returns the model path"""
    save_network(surrogate.net, path)
    sidecar = SidecarDocument(d=surrogate.dimension, kind=surrogate.kind.name, exponent=surrogate.kind.exponent,
                              domain=surrogate.domain.kind, problem=surrogate.problem)
    with open(sidecar_path(path), 'w', encoding='utf-8') as handle:
        json.dump(sidecar.model_dump(), handle, indent=2)
    return path


def load_surrogate(path: str) -> GreenSurrogate:
    """
    Load a model file and its sidecar as a GreenSurrogate

    Raises:
        ConfigError: missing or invalid model file or sidecar
    """
    net = load_network(path)
    meta_path = sidecar_path(path)
    if not os.path.exists(meta_path):
        raise ConfigError(f"Sidecar not found next to the model: {meta_path}", key='model')
    try:
        with open(meta_path, 'r', encoding='utf-8') as handle:
            meta = SidecarDocument.model_validate(json.load(handle))
    except (json.JSONDecodeError, ValidationError) as e:
        raise ConfigError(f"Sidecar {meta_path} is invalid: {e}", key='model') from e

    surrogate = GreenSurrogate(net=net, dimension=meta.d, kind=AugmentedKind.parse(meta.kind, meta.exponent),
                               domain=Domain(meta.domain), problem=meta.problem)
    logger.info(f"📦 Loaded {meta.kind} surrogate for {meta.problem or meta.domain} from {path}")
    return surrogate
