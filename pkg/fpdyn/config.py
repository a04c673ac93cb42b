from __future__ import annotations

import logging
import os
import threading

from dotenv import load_dotenv

from .exceptions import ConfigError

DEFAULT_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DEFAULT_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

MAX_U64 = 2**64 - 1

logger = logging.getLogger(__name__)


class Config:
    VERSION = "0.1.0"
    SEED: int | None = None
    DEFAULT_TIE_TOLERANCE = 1e-9
    TIE_TOLERANCE = DEFAULT_TIE_TOLERANCE

    DEFAULT_STEPS = 100_000
    DEFAULT_GRID_RATIO = 1.25
    DEFAULT_RANDOM_SHAPE = (5, 5)
    FLOAT_PRECISION = 12
    OUTPUT_DIR = "output"

    MAX_JOBS = 8
    EXHAUSTIVE_MAX_STATES = 2_000_000

    _env_loaded = False
    _lock = threading.Lock()

    @classmethod
    def initialize(cls, configure_logging: bool = False, log_level: int = logging.INFO) -> None:
        with cls._lock:
            if not cls._env_loaded:
                load_dotenv()
                cls._env_loaded = True
            cls._refresh_locked()
            if configure_logging:
                cls._configure_logging_locked(log_level)

    @classmethod
    def refresh(cls) -> None:
        with cls._lock:
            cls._refresh_locked()

    @classmethod
    def _refresh_locked(cls) -> None:
        raw_seed = os.getenv("FPDYN_SEED", "").strip()
        if raw_seed:
            try:
                seed = int(raw_seed, 0)
            except ValueError:
                raise ConfigError("FPDYN_SEED", f"not an integer: {raw_seed!r}") from None
            if not 0 <= seed <= MAX_U64:
                raise ConfigError("FPDYN_SEED", "must be an unsigned 64-bit integer")
            cls.SEED = seed
        else:
            cls.SEED = None

        raw_tolerance = os.getenv("FPDYN_TIE_TOLERANCE", "").strip()
        if raw_tolerance:
            try:
                tolerance = float(raw_tolerance)
            except ValueError:
                raise ConfigError("FPDYN_TIE_TOLERANCE", f"not a number: {raw_tolerance!r}") from None
            if not tolerance >= 0.0:
                raise ConfigError("FPDYN_TIE_TOLERANCE", "must be non-negative")
            cls.TIE_TOLERANCE = tolerance
        else:
            cls.TIE_TOLERANCE = cls.DEFAULT_TIE_TOLERANCE

    @classmethod
    def configure_logging(cls, level: int = logging.INFO) -> None:
        with cls._lock:
            cls._configure_logging_locked(level)

    @classmethod
    def _configure_logging_locked(cls, level: int = logging.INFO) -> None:
        root_logger = logging.getLogger()
        if root_logger.handlers:
            root_logger.setLevel(level)
            return
        logging.basicConfig(
            level=level,
            format=DEFAULT_LOG_FORMAT,
            datefmt=DEFAULT_DATE_FORMAT,
        )

    @classmethod
    def env_seed(cls) -> int | None:
        cls.initialize()
        return cls.SEED

    @classmethod
    def resolve_seed(cls, seed: int | None) -> int | None:
        """FPDYN_SEED wins over a seed given in a config or on the command line."""
        env = cls.env_seed()
        if env is not None:
            if seed is not None and seed != env:
                logger.info("FPDYN_SEED=%s overrides configured seed %s", env, seed)
            return env
        return seed

    @classmethod
    def tie_tolerance(cls) -> float:
        cls.initialize()
        return cls.TIE_TOLERANCE
