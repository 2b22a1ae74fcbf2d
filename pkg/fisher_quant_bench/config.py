"""
Bench Settings - Numerical defaults and run-level overrides

Defaults live in system_config.json next to this file. Run-level values
(seed, worker threads, output directory) can be overridden through the
environment, optionally from a .env file in the working directory.

Priority for run-level values:
1. Explicit CLI flag
2. Environment variable (FISHER_BENCH_SEED, FISHER_BENCH_THREADS, FISHER_BENCH_OUTPUT_DIR)
3. system_config.json
"""

import json
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field


class NumericsSettings(BaseModel):
    quad_abs_tol: float = 1e-10
    quad_limit: int = 2000
    boundary_tol: float = 1e-12
    orlicz_rel_tol: float = 1e-6
    finite_difference_step: float = 1e-6
    holder_grid_step: float = 1e-3
    holder_margin: float = 0.01


class LimitSettings(BaseModel):
    max_exact_tree_bits: int = 20
    max_bruteforce_support: int = 12
    max_enumerated_bernoulli_dim: int = 16
    bandwidth_max_iterations: int = 50


class MonteCarloSettings(BaseModel):
    default_samples: int = 1_000_000
    batches: int = 20


class OutputSettings(BaseModel):
    significant_digits: int = 9
    default_output_dir: str = "results"
    default_seed: int = 0
    default_threads: int = Field(default=1, ge=1)


class BenchSettings(BaseModel):
    """Resolved configuration for one process"""

    numerics: NumericsSettings = NumericsSettings()
    limits: LimitSettings = LimitSettings()
    monte_carlo: MonteCarloSettings = MonteCarloSettings()
    output: OutputSettings = OutputSettings()


def _load_system_config(config_file: Optional[Path] = None) -> Dict[str, Any]:
    """Load the numerical defaults shipped with the package"""
    config_file = config_file or Path(__file__).parent / 'system_config.json'
    if not config_file.exists():
        raise FileNotFoundError(f"System configuration file not found: {config_file}")
    with open(config_file, 'r', encoding='utf-8') as f:
        return json.load(f)


def _apply_environment(raw: Dict[str, Any]) -> Dict[str, Any]:
    load_dotenv(override=False)
    output = dict(raw.get('output', {}))
    if os.getenv('FISHER_BENCH_SEED'):
        output['default_seed'] = int(os.environ['FISHER_BENCH_SEED'])
    if os.getenv('FISHER_BENCH_THREADS'):
        output['default_threads'] = int(os.environ['FISHER_BENCH_THREADS'])
    if os.getenv('FISHER_BENCH_OUTPUT_DIR'):
        output['default_output_dir'] = os.environ['FISHER_BENCH_OUTPUT_DIR']
    return {**raw, 'output': output}


@lru_cache(maxsize=1)
def get_settings() -> BenchSettings:
    """
    Return the process-wide settings

    Returns:
        BenchSettings built from system_config.json plus environment overrides
    """
    return BenchSettings.model_validate(_apply_environment(_load_system_config()))
