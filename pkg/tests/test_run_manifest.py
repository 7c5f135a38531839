"""
Tests for run manifests and the training loss log
"""

import hashlib
import json

import pytest

from src.green.losses import LossBreakdown
from src.monitoring.run_manifest import RunManifest, TrainingLossLog, config_digest, git_blob_hash


class TestHashes:

    def test_git_blob_hash(self, tmp_path):
        path = tmp_path / 'blob.txt'
        path.write_bytes(b'hello\n')
        # git hash-object of "hello\n"
        assert git_blob_hash(str(path)) == 'ce013625030ba8dba906f756967f9e9ca394464a'

    def test_config_digest_ignores_key_order(self):
        assert config_digest({'a': 1, 'b': [2, 3]}) == config_digest({'b': [2, 3], 'a': 1})
        assert config_digest({'a': 1}) != config_digest({'a': 2})


class TestRunManifest:

    def test_written_record(self, tmp_path):
        model = tmp_path / 'model.json'
        model.write_text('{}')
        manifest = RunManifest(command='hybrid', config={'K': 4}, seed=3)
        manifest.use_model(str(model))
        manifest.add_output('trace.csv')
        manifest.add_output('trace.csv')
        manifest.metadata['neural_applications'] = 0
        path = manifest.write(str(tmp_path / 'run'))

        with open(path, encoding='utf-8') as handle:
            record = json.load(handle)
        assert record['command'] == 'hybrid'
        assert record['seed'] == 3
        assert record['outputs'] == ['trace.csv']
        assert record['model_hash'] == hashlib.sha1(b'blob 2\0{}').hexdigest()
        assert record['config_digest'] == config_digest({'K': 4})
        assert record['metadata'] == {'neural_applications': 0}
        assert record['finished_at'] is not None


class TestTrainingLossLog:

    def test_rows_and_final_total(self, tmp_path):
        log = TrainingLossLog()
        assert log.final_total is None
        log.record(0, 1e-3, LossBreakdown(reglr=1.0, snglr=2.0, bndry=3.0, symtr=4.0, total=10.0))
        log.record(100, 1e-4, LossBreakdown(reglr=0.5, snglr=0.5, bndry=0.5, symtr=0.5, total=2.0))
        assert len(log) == 2
        assert log.final_total == pytest.approx(2.0)
        frame = log.to_frame()
        assert list(frame.columns) == TrainingLossLog.COLUMNS
        path = log.write_csv(str(tmp_path / 'loss.csv'))
        with open(path, encoding='utf-8') as handle:
            assert handle.readline().strip() == ','.join(TrainingLossLog.COLUMNS)
