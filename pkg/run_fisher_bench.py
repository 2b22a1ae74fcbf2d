"""
Run Fisher Quant Bench

Usage:
    # Trace of a quantizer
    python run_fisher_bench.py fisher --model '{"kind": "discrete", "d": 2}' \
        --quantizer '{"type": "identity"}' --theta '[0.125, 0.125]'

    # Minimax lower bound
    python run_fisher_bench.py bound --model '{"kind": "gaussian_location", "d": 8, "sigma": 1}' --n 16384 --k 4

    # All invariant suites
    python run_fisher_bench.py verify all

    # Rate reproduction sweep
    python run_fisher_bench.py --output-dir results simulate fisher_quant_bench/experiment_bank/rate_discrete.json
"""

import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from fisher_quant_bench.cli import main

if __name__ == '__main__':
    sys.exit(main())
