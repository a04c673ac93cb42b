"""
fpdyn - fictitious-play dynamics engine and slow-schedule generator
"""
from __future__ import annotations

from .config import Config
from .constructions import epoch_series, main_dynamic, main_i2, padding_i2, padding_in, part2, part2_gap
from .data_types import DynamicState, PayoffMatrix, Schedule, Trace
from .engine import Replay, best_response_sets, normalized_gap, run, step, step_scripted
from .exceptions import FPDynError, InvalidChoiceError
from .tie_breaking import TieBreakPolicy, get_policy
from .validator import permute_trace, validate_trace

__version__ = Config.VERSION
