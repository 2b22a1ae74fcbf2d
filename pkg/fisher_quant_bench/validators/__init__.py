"""
Verify suites

Each validator runs one family of invariant checks and returns a result
dict with per-check measured values.
"""

from .blackboard_bound_validator import BlackboardBoundValidator
from .lemma2_validator import Lemma2Validator
from .orlicz_validator import OrliczValidator
from .thm1_dominance_validator import Thm1DominanceValidator
from .thm2_gaussian_validator import Thm2GaussianValidator
from .tree_identity_validator import TreeIdentityValidator

SUITES = {
    'lemma2': Lemma2Validator,
    'tree-identity': TreeIdentityValidator,
    'thm1-dominance': Thm1DominanceValidator,
    'thm2-gaussian': Thm2GaussianValidator,
    'orlicz': OrliczValidator,
    'blackboard-bound': BlackboardBoundValidator,
}


def run_suite(name: str, seed: int = 0, **kwargs):
    try:
        validator_cls = SUITES[name]
    except KeyError:
        raise KeyError(f"Unknown verify suite: {name}")
    return validator_cls(seed=seed, **kwargs).validate()


__all__ = [
    'SUITES',
    'run_suite',
    'Lemma2Validator',
    'TreeIdentityValidator',
    'Thm1DominanceValidator',
    'Thm2GaussianValidator',
    'OrliczValidator',
    'BlackboardBoundValidator',
]
