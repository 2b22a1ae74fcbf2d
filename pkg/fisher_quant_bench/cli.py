"""
Command-line front end

Subcommands:
    fisher      Tr I_M(theta) of a quantizer, or of a blackboard tree transcript
    bound       Minimax lower bound for a catalog model (or a raw van Trees bound)
    verify      Invariant suites (lemma2, tree-identity, thm1-dominance, ...)
    simulate    Monte Carlo sweeps from a JSON config file
    bruteforce  Best deterministic k-bit quantizer on a finite support

Machine-readable results go to standard output; progress goes to standard
error. Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or
parse failure.
"""

import argparse
import csv
import io
import json
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .bounds import corollary_bound, nonpar_lower_bound, van_trees_bound, REGIMES
from .config import get_settings
from .errors import ExactComputationInfeasibleError, FisherBenchError, ParseError
from .fisher import (
    bound_thm1,
    brute_force_max_trace,
    trace_IM,
    trace_IM_blackboard,
    trace_IM_monte_carlo,
    variance_I0,
)
from .models import HolderDensity, model_from_json
from .quantizers import quantizer_from_json, tree_from_json
from .simulate import (
    RunManifest,
    SweepConfig,
    experiment_record,
    load_sweep,
    run_sweep,
    write_csv,
    write_jsonl,
)
from .validators import SUITES, run_suite

logger = logging.getLogger(__name__)


class TeeWriter:
    """Writer that outputs to both the console stream and a log file"""

    def __init__(self, original_stream, log_file):
        self.original_stream = original_stream
        self.log_file = log_file
        self.encoding = getattr(original_stream, 'encoding', 'utf-8') or 'utf-8'

    def write(self, message):
        self.original_stream.write(message)
        if self.log_file and not self.log_file.closed:
            try:
                self.log_file.write(message)
                self.log_file.flush()
            except OSError:
                pass

    def flush(self):
        self.original_stream.flush()
        if self.log_file and not self.log_file.closed:
            self.log_file.flush()

    def isatty(self):
        return self.original_stream.isatty() if hasattr(self.original_stream, 'isatty') else False


def say(message: str = "") -> None:
    """Human-readable progress on standard error"""
    print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------

def _load_json_arg(value: str, field: str) -> Any:
    """JSON text, or @path to a JSON file"""
    try:
        if value.startswith('@'):
            with open(value[1:], 'r', encoding='utf-8') as f:
                return json.load(f)
        return json.loads(value)
    except json.JSONDecodeError as e:
        raise ParseError(f"--{field} is not valid JSON: {e}", field=field)
    except OSError as e:
        raise ParseError(f"Cannot read --{field} file: {e}", field=field)


def _theta_arg(value: str) -> List[float]:
    theta = _load_json_arg(value, 'theta')
    theta = theta if isinstance(theta, list) else [theta]
    try:
        return [float(t) for t in theta]
    except (TypeError, ValueError):
        raise ParseError(f"--theta must be a number or a list of numbers, got {value}", field="theta")


def _round(value: Any, digits: int) -> Any:
    """Round every float in a JSON-like structure to `digits` significant digits"""
    if isinstance(value, float):
        return float(f"{value:.{digits}g}") if np.isfinite(value) else value
    if isinstance(value, dict):
        return {k: _round(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v, digits) for v in value]
    if isinstance(value, np.generic):
        return _round(value.item(), digits)
    return value


def _emit(record: Dict[str, Any], fmt: str, columns: Optional[Sequence[str]] = None) -> None:
    digits = get_settings().output.significant_digits
    if fmt == 'csv':
        columns = columns or list(record)
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        row = []
        for c in columns:
            v = record.get(c)
            if isinstance(v, float):
                row.append(f"{v:.{digits}g}")
            elif isinstance(v, (list, dict)):
                row.append(json.dumps(_round(v, digits)))
            else:
                row.append("" if v is None else str(v))
        writer.writerow(row)
        sys.stdout.write(buffer.getvalue())
    else:
        print(json.dumps(_round(record, digits), indent=2))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_fisher(args: argparse.Namespace) -> int:
    model = model_from_json(_load_json_arg(args.model, 'model'))
    theta = _theta_arg(args.theta)
    if args.tree:
        tree = tree_from_json(_load_json_arg(args.tree, 'tree'))
        report = tree.validity()
        if not report['passed']:
            _emit({'trace': None, 'valid': False, 'violations': report['violations']}, args.format)
            return 1
        _emit({'trace': trace_IM_blackboard(tree, model, theta), 'valid': True, 'n': tree.n, 'k': tree.k},
              args.format, ['trace', 'valid', 'n', 'k'])
        return 0

    if not args.quantizer:
        raise ParseError("fisher needs --quantizer or --tree", field="quantizer")
    q = quantizer_from_json(_load_json_arg(args.quantizer, 'quantizer'), model)
    try:
        result = trace_IM(model, theta, q, with_matrix=args.matrix)
    except ExactComputationInfeasibleError:
        say(f"⚠️  No exact integration for {model.kind} with d={model.dim}; using Monte Carlo")
        result = trace_IM_monte_carlo(model, theta, q, np.random.default_rng(args.seed), samples=args.samples)
    _emit(result.to_dict(), args.format, ['trace', 'stderr', 'centroids'])
    return 0


def cmd_bound(args: argparse.Namespace) -> int:
    if args.model:
        model = model_from_json(_load_json_arg(args.model, 'model'))
        if isinstance(model, HolderDensity):
            bound = nonpar_lower_bound(model.s, model.L, args.n, args.k)
        else:
            bound = corollary_bound(model, args.n, args.k)
    else:
        missing = [flag for flag in ('d', 'B', 'I0', 'regime') if getattr(args, flag) is None]
        if missing:
            raise ParseError(f"bound needs --model or all of --d --B --I0 --regime (missing {missing})",
                             field=missing[0])
        bound = van_trees_bound(args.d, args.n, args.k, args.B, args.regime, args.I0, args.p)
    for warning in bound.warnings:
        say(f"⚠️  {warning}")
    _emit(bound.to_dict(), args.format, ['value', 'rate', 'rate_value', 'regime', 'warnings'])
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    names = list(SUITES) if args.suite == 'all' else [args.suite]
    results = []
    for name in names:
        say(f"🔍 Running suite {name} (seed {args.seed})...")
        result = run_suite(name, seed=args.seed)
        say(f"   {result['feedback']}  [{result['score']}/{result['max_score']}]")
        results.append(result)
    passed = all(r['passed'] for r in results)
    record = {'passed': passed, 'suites': results}
    if args.format == 'csv':
        digits = get_settings().output.significant_digits
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(['suite', 'check', 'passed', 'value', 'message'])
        for r in results:
            for c in r['checks']:
                value = c.get('value')
                writer.writerow([r['suite'], c['name'], c['passed'],
                                 "" if value is None else f"{value:.{digits}g}", c['message']])
        sys.stdout.write(buffer.getvalue())
    else:
        _emit(record, 'json')
    return 0 if passed else 1


def _resolve_sweep_seed(sweep: SweepConfig, seed: Optional[int], default_seed: int) -> SweepConfig:
    """An explicit --seed wins over the file; the file wins over the environment default"""
    if seed is None:
        if 'seed' in sweep.base:
            return sweep
        seed = default_seed
    return sweep.model_copy(update={'base': {**sweep.base, 'seed': seed}})


def cmd_simulate(args: argparse.Namespace) -> int:
    sweep = _resolve_sweep_seed(load_sweep(args.config), args.seed_override, args.seed)
    sweep.points()
    output_dir = Path(args.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.start(sweep.model_dump(), int(sweep.base.get('seed', 0)))

    original_stderr = sys.stderr
    log_file = open(output_dir / 'simulate.log', 'w', encoding='utf-8')
    sys.stderr = TeeWriter(original_stderr, log_file)
    try:
        say("=" * 80)
        say(f"🚀 FISHER QUANT BENCH - simulate {sweep.name}")
        say("=" * 80)
        say(f"Axis: {sweep.sweep.axis} = {sweep.sweep.values}")
        say(f"Seed: {manifest.seed}   Threads: {args.threads}")
        say(f"📝 Output directory: {output_dir}")
        say("=" * 80)

        def progress(config, estimate):
            bound = f"{estimate.bound.value:.4g}" if estimate.bound else "n/a"
            status = "✅" if estimate.bound is None or estimate.risk + 3 * estimate.stderr >= estimate.bound.value \
                else "❌"
            say(f"{status} n={config.n:<8} k={config.k:<3} risk={estimate.risk:.6g} "
                f"± {estimate.stderr:.2g}  bound={bound}")

        results, fit = run_sweep(sweep, threads=args.threads, progress=progress)

        jsonl_path = output_dir / f"{sweep.name}.jsonl"
        csv_path = output_dir / f"{sweep.name}.csv"
        write_jsonl(jsonl_path, [experiment_record(c, e) for c, e in results])
        write_csv(csv_path, results)
        outputs = [jsonl_path, csv_path]
        summary: Dict[str, Any] = {'name': sweep.name, 'points': len(results)}
        if fit is not None:
            fit_path = output_dir / f"{sweep.name}_slope.csv"
            digits = get_settings().output.significant_digits
            with open(fit_path, 'w', encoding='utf-8', newline='') as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(['axis', 'slope', 'intercept', 'ci_low', 'ci_high', 'points'])
                writer.writerow([sweep.sweep.axis] + [f"{v:.{digits}g}" for v in fit[:4]] + [fit.points])
            outputs.append(fit_path)
            summary['slope_fit'] = fit._asdict()
            say(f"📈 Slope vs {sweep.sweep.axis}: {fit.slope:.4f} "
                f"(95% CI [{fit.ci_low:.4f}, {fit.ci_high:.4f}])")

        manifest.finish(outputs)
        manifest_path = output_dir / 'manifest.json'
        manifest.write(manifest_path)
        summary['outputs'] = {p.name: str(p) for p in outputs + [manifest_path]}
        say(f"💾 Results saved to: {csv_path}")
        say("=" * 80)
    finally:
        sys.stderr = original_stderr
        log_file.close()

    if args.format == 'csv':
        sys.stdout.write(csv_path.read_text(encoding='utf-8'))
    else:
        _emit(summary, 'json')
    return 0


def cmd_bruteforce(args: argparse.Namespace) -> int:
    model = model_from_json(_load_json_arg(args.model, 'model'))
    theta = _theta_arg(args.theta)
    started = datetime.now()
    best = brute_force_max_trace(model, theta, args.k)
    say(f"🔎 Enumerated partitions of {len(model.support())} points in {(datetime.now() - started).total_seconds():.2f}s")
    tr_IX = float(np.trace(model.fisher_X(theta)))
    certificate = bound_thm1(variance_I0(model), args.k, tr_IX)
    assignment = {json.dumps(list(p) if isinstance(p, tuple) else p): int(np.argmax(row)) + 1
                  for p, row in zip(best.quantizer.points, best.quantizer.matrix)}
    _emit({'trace': best.trace, 'assignment': assignment, 'tr_IX': tr_IX,
           'bound': certificate.bound_value, 'within_bound': best.trace <= certificate.bound_value + 1e-9},
          args.format, ['trace', 'bound', 'within_bound', 'tr_IX', 'assignment'])
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _global_flags() -> argparse.ArgumentParser:
    """Flags accepted both before and after the subcommand"""
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument('--seed', type=int, default=argparse.SUPPRESS, help='Master seed')
    flags.add_argument('--threads', type=int, default=argparse.SUPPRESS, help='Worker threads for Monte Carlo')
    flags.add_argument('--output-dir', type=str, default=argparse.SUPPRESS, help='Directory for simulate outputs')
    flags.add_argument('--format', choices=['json', 'csv'], default=argparse.SUPPRESS,
                       help='Output format on standard output (default: json)')
    flags.add_argument('--verbose', action='store_true', default=argparse.SUPPRESS, help='Debug logging')
    return flags


def build_parser() -> argparse.ArgumentParser:
    flags = _global_flags()
    parser = argparse.ArgumentParser(
        prog='fisher-quant-bench',
        description='Fisher information of quantized samples and distributed estimation bounds',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        parents=[flags],
        epilog="""
Examples:
  # Trace of the identity quantizer on a 3-category distribution
  python run_fisher_bench.py fisher --model '{"kind": "discrete", "d": 2}' \\
      --quantizer '{"type": "identity"}' --theta '[0.125, 0.125]'

  # Lower bound for distribution estimation with one bit per node
  python run_fisher_bench.py bound --model '{"kind": "discrete", "d": 8}' --n 10000 --k 1

  # Every invariant suite
  python run_fisher_bench.py verify all --seed 1

  # Rate sweep
  python run_fisher_bench.py --output-dir results simulate fisher_quant_bench/experiment_bank/rate_discrete.json
        """
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    fisher = sub.add_parser('fisher', parents=[flags], help='Trace of the quantized-sample Fisher information')
    fisher.add_argument('--model', required=True, help='Model JSON or @file')
    fisher.add_argument('--theta', required=True, help='Parameter as a JSON number or list')
    fisher.add_argument('--quantizer', help='Quantizer JSON or @file')
    fisher.add_argument('--tree', help='Blackboard protocol tree JSON or @file')
    fisher.add_argument('--matrix', action='store_true', help='Also report I_M(theta)')
    fisher.add_argument('--samples', type=int, default=None, help='Monte Carlo sample size when exact evaluation is infeasible')
    fisher.set_defaults(handler=cmd_fisher)

    bound = sub.add_parser('bound', parents=[flags], help='Minimax lower bound')
    bound.add_argument('--model', help='Model JSON or @file')
    bound.add_argument('--n', type=int, required=True, help='Number of nodes')
    bound.add_argument('--k', type=int, required=True, help='Bits per node')
    bound.add_argument('--d', type=int, help='Dimension (raw van Trees bound)')
    bound.add_argument('--B', type=float, help='Half-width of the parameter box (raw van Trees bound)')
    bound.add_argument('--I0', type=float, help='Model constant (raw van Trees bound)')
    bound.add_argument('--regime', choices=list(REGIMES), help='thm1 (variance) or thm2 (Orlicz)')
    bound.add_argument('--p', type=float, help='Orlicz exponent for thm2')
    bound.set_defaults(handler=cmd_bound)

    verify = sub.add_parser('verify', parents=[flags], help='Run invariant suites')
    verify.add_argument('suite', choices=list(SUITES) + ['all'])
    verify.set_defaults(handler=cmd_verify)

    simulate = sub.add_parser('simulate', parents=[flags], help='Monte Carlo experiments from a config file')
    simulate.add_argument('config', help='Sweep or experiment JSON file')
    simulate.set_defaults(handler=cmd_simulate)

    brute = sub.add_parser('bruteforce', parents=[flags], help='Exhaustive best deterministic quantizer')
    brute.add_argument('--model', required=True, help='Model JSON or @file (finite support)')
    brute.add_argument('--theta', required=True, help='Parameter as a JSON number or list')
    brute.add_argument('--k', type=int, required=True, help='Bits per node')
    brute.set_defaults(handler=cmd_bruteforce)
    return parser


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset global flags: CLI flag > environment > system_config.json"""
    output = get_settings().output
    args.seed_override = getattr(args, 'seed', None)
    args.seed = getattr(args, 'seed', output.default_seed)
    args.threads = getattr(args, 'threads', output.default_threads)
    args.output_dir = getattr(args, 'output_dir', output.default_output_dir)
    args.format = getattr(args, 'format', 'json')
    args.verbose = getattr(args, 'verbose', False)
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _resolve(args)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        return args.handler(args)
    except FisherBenchError as e:
        say(f"❌ {e.kind}: {e}")
        print(json.dumps({'error': e.to_dict()}))
        return e.exit_code
    except OSError as e:
        say(f"❌ io: {e}")
        print(json.dumps({'error': {'kind': 'io', 'message': str(e)}}))
        return 1


if __name__ == '__main__':
    sys.exit(main())
