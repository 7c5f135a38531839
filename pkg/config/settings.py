"""
Settings for the Green's function toolkit
Centralised runtime settings read from environment variables (and a local .env file)
"""
import os
from typing import Any, Dict
import logging

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

load_dotenv()


class Settings:
    """Centralised settings for training runs, solver experiments and outputs"""

    def __init__(self):
        # ========================
        # RUNTIME SETTINGS
        # ========================
        self.project_name: str = os.getenv('GREEN_PROJECT_NAME', 'green-precond')
        self.environment: str = os.getenv('ENVIRONMENT', 'development')  # development, benchmark
        self.output_dir: str = os.getenv('GREEN_OUTPUT_DIR', 'outputs')

        # ========================
        # REPRODUCIBILITY
        # ========================
        self.default_seed: int = int(os.getenv('GREEN_SEED', '0'))
        self.num_threads: int = int(os.getenv('GREEN_THREADS', '1'))
        self.train_seed_attempts: int = int(os.getenv('GREEN_TRAIN_SEED_ATTEMPTS', '3'))

        # ========================
        # TRAINING SETTINGS
        # ========================
        # collocation points per loss chunk; bounds the memory of the jet tapes
        self.loss_chunk_points: int = int(os.getenv('GREEN_LOSS_CHUNK_POINTS', '4096'))
        self.kernel_eval_chunk: int = int(os.getenv('GREEN_KERNEL_CHUNK', '200000'))

        # ========================
        # OUTPUT FORMATS
        # ========================
        self.csv_float_format: str = os.getenv('GREEN_CSV_FLOAT_FORMAT', '%.17g')
        self.max_logged_modes: int = int(os.getenv('GREEN_MAX_LOGGED_MODES', '64'))

        # ========================
        # LOGGING SETTINGS
        # ========================
        self.log_level: str = os.getenv('LOG_LEVEL', 'INFO')
        self.log_format: str = os.getenv('LOG_FORMAT', '%(asctime)s - %(name)s - %(levelname)s - %(message)s')
        self.log_file_path: str = os.getenv('LOG_FILE_PATH', 'logs/green_precond.log')
        self.log_to_file: bool = os.getenv('GREEN_LOG_TO_FILE', 'false').lower() == 'true'

    def output_path(self, *parts: str) -> str:
        """Path below the configured output directory"""
        return os.path.join(self.output_dir, *parts)

    def validate_required_settings(self) -> bool:
        """
        Validate settings that must be positive

        Returns:
            True when every setting is usable
        """
        positive_settings = {
            'num_threads': 'Thread count',
            'train_seed_attempts': 'Training seed attempts',
            'loss_chunk_points': 'Loss chunk size',
            'kernel_eval_chunk': 'Kernel evaluation chunk',
        }

        invalid = [name for key, name in positive_settings.items() if getattr(self, key) < 1]
        if invalid:
            raise ValueError(f"Settings must be positive: {', '.join(invalid)}")

        return True

    def get_env_summary(self) -> Dict[str, Any]:
        """
        Summary of the active settings, echoed into run manifests

        Returns:
            Dictionary of settings
        """
        return {
            'project_name': self.project_name,
            'environment': self.environment,
            'output_dir': self.output_dir,
            'default_seed': self.default_seed,
            'num_threads': self.num_threads,
            'train_seed_attempts': self.train_seed_attempts,
            'loss_chunk_points': self.loss_chunk_points,
            'csv_float_format': self.csv_float_format,
            'log_level': self.log_level,
        }


# Global settings instance
settings = Settings()

try:
    settings.validate_required_settings()
except ValueError as e:
    logger.error(f"Invalid settings: {str(e)}")
