"""
Shared result shape for verify suites
"""

from typing import Any, Dict, List


def check(name: str, passed: bool, message: str, value: Any = None) -> Dict[str, Any]:
    record = {'name': name, 'passed': bool(passed), 'message': message}
    if value is not None:
        record['value'] = value
    return record


def build_result(suite: str, checks: List[Dict[str, Any]]) -> Dict[str, Any]:
    """
    Collect checks into a suite result

    Returns:
        {'suite', 'passed', 'score', 'max_score', 'checks', 'feedback'}; one point per passed check
    """
    score = sum(1 for c in checks if c['passed'])
    passed = bool(checks) and score == len(checks)
    if passed:
        feedback = f"✅ {suite}: all {len(checks)} checks passed"
    else:
        failed = [c['name'] for c in checks if not c['passed']]
        feedback = f"❌ {suite}: {len(failed)} of {len(checks)} checks failed ({', '.join(failed[:5])})"
    return {
        'suite': suite,
        'passed': passed,
        'score': score,
        'max_score': len(checks),
        'checks': checks,
        'feedback': feedback,
    }
