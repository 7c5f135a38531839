#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Run Manifest
Audit record for every artifact-producing command, and the training loss log
"""

import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional

import pandas as pd

# Add project root to Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from config.settings import settings
from src.utils.logging import setup_logging

logger = setup_logging("run_manifest")

MANIFEST_NAME = "manifest.json"


def git_blob_hash(path: str) -> str:
    """Content hash of a file as git computes it for a blob object"""
    with open(path, 'rb') as handle:
        data = handle.read()
    header = f"blob {len(data)}\0".encode()
    return hashlib.sha1(header + data).hexdigest()


def config_digest(config: Dict[str, Any]) -> str:
    """Stable digest of a configuration dictionary"""
    canonical = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class RunManifest:
    """
    One record per artifact-producing run: command, configuration digest, seed, timing,
    output paths and the content hash of the model file used
    """

    command: str
    config: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    started_at: datetime = field(default_factory=datetime.now)
    finished_at: Optional[datetime] = None
    outputs: List[str] = field(default_factory=list)
    model_path: Optional[str] = None
    model_hash: Optional[str] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def use_model(self, path: str) -> None:
        self.model_path = path
        self.model_hash = git_blob_hash(path)

    def add_output(self, path: str) -> None:
        if path not in self.outputs:
            self.outputs.append(path)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'config_digest': config_digest(self.config),
            'config': self.config,
            'seed': self.seed,
            'started_at': self.started_at.isoformat(),
            'finished_at': self.finished_at.isoformat() if self.finished_at else None,
            'outputs': list(self.outputs),
            'model_path': self.model_path,
            'model_hash': self.model_hash,
            'metadata': self.metadata,
            'settings': settings.get_env_summary(),
        }

    def write(self, directory: str) -> str:
        """Finish the run and write manifest.json into the output directory"""
        os.makedirs(directory, exist_ok=True)
        self.finished_at = datetime.now()
        path = os.path.join(directory, MANIFEST_NAME)
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump(self.to_dict(), handle, indent=2, default=str)
        logger.info(f"📝 Manifest written: {path}")
        return path


class TrainingLossLog:
    """Loss breakdown rows recorded during training"""

    COLUMNS = ['epoch', 'lr', 'reglr', 'snglr', 'bndry', 'symtr', 'total']

    def __init__(self):
        self.rows: List[Dict[str, float]] = []

    def record(self, epoch: int, lr: float, breakdown) -> None:
        row = {'epoch': epoch, 'lr': lr}
        row.update(breakdown.as_dict())
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def final_total(self) -> Optional[float]:
        return self.rows[-1]['total'] if self.rows else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=self.COLUMNS)

    def write_csv(self, path: str) -> str:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format=settings.csv_float_format)
        return path
