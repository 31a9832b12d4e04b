#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Hetmarket - Experiment runner for the heterogeneous-buyer market model

Writes each experiment as a CSV table (run), exposes the Kendall tau toolkit (tau)
and validates analytic against simulated results (check).
"""

import argparse
import dataclasses
import io
import json
import logging
import re
import sys
from dataclasses import dataclass
from datetime import datetime
from typing import Dict, List, Optional, Tuple, get_type_hints

import numpy as np

import acceptance_checks
import experiments
from correlation import SCHEMES
from market_model import ACCEPTANCE_KINDS, AcceptanceFunction, MarketParams
from report_system import ReportSystem

# Fix Unicode encoding on Windows
if sys.platform == 'win32':
    sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding='utf-8', errors='replace')

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2


class ConfigError(ValueError):
    """Unparseable or invalid experiment configuration"""

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.source = source
        location = ''
        if source:
            location = f"{source}:{line}: " if line else f"{source}: "
        elif line:
            location = f"line {line}: "
        super().__init__(location + message)


class UsageError(Exception):
    """Bad command line"""


@dataclass
class ExperimentConfig:
    """Everything one invocation needs; defaults are the headline market"""
    scenario: str = 'uninformed'
    M: int = 500
    N: int = 2000
    p: float = 0.05
    Z: float = 5.0
    acceptance: str = 'linear'
    scheme: str = 'B'
    t: float = 0.5
    s: int = 1
    Z1: float = 5.0
    Z2: float = 5.0
    d: int = 10
    matching_N: int = 1000
    matching_M: int = 5
    k_max: Optional[int] = None
    sweep: Optional[str] = None
    realizations: int = 1000
    seed: int = 20070523
    out: str = 'results'
    tau_pairs: int = 200
    tolerance_scale: float = 1.0
    progress_file: Optional[str] = None
    check: bool = False
    suite: str = 'all'

    def __post_init__(self):
        if self.realizations < 2:
            raise ConfigError(f"realizations must be at least 2, got {self.realizations}")
        if self.acceptance not in ACCEPTANCE_KINDS:
            raise ConfigError(f"acceptance must be one of {ACCEPTANCE_KINDS}, got '{self.acceptance}'")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got '{self.scheme}'")
        if self.s not in (1, -1):
            raise ConfigError(f"s must be +1 or -1, got {self.s}")
        if not 0.0 <= self.t <= 1.0:
            raise ConfigError(f"t must lie in [0, 1], got {self.t}")
        if self.tolerance_scale < 0:
            raise ConfigError(f"tolerance_scale must be non-negative, got {self.tolerance_scale}")
        if self.tau_pairs < 2:
            raise ConfigError(f"tau_pairs must be at least 2, got {self.tau_pairs}")
        try:
            self.params()
        except ValueError as e:
            raise ConfigError(str(e))

    def params(self) -> MarketParams:
        return MarketParams(M=self.M, N=self.N, p=self.p, Z=self.Z)

    def acceptance_function(self) -> AcceptanceFunction:
        return AcceptanceFunction(self.acceptance, self.p)

    def replace(self, **changes) -> 'ExperimentConfig':
        return dataclasses.replace(self, **changes)

    def sweep_grid(self, default_var: str, default_values) -> Tuple[str, List[float]]:
        """Sweep variable and values: the configured sweep if any, else the experiment's default"""
        if not self.sweep:
            return default_var, [float(v) for v in default_values]
        var, values = parse_sweep(self.sweep)
        if var != default_var:
            raise ConfigError(f"this experiment sweeps '{default_var}', not '{var}'")
        return var, values


FIELD_TYPES = get_type_hints(ExperimentConfig)
# swept variables that only take whole values; k is the number of offered variants
INTEGER_SWEEPS = {'k'} | {name for name, hint in FIELD_TYPES.items() if hint is int}

_SWEEP = re.compile(r'^\s*(?P<var>[A-Za-z_][A-Za-z0-9_]*)\s*=\s*(?P<a>[-+0-9.eE]+)\s*\.\.\s*(?P<b>[-+0-9.eE]+)'
                    r'\s*(?::\s*(?P<step>[-+0-9.eE]+))?\s*$')


def parse_sweep(text: str) -> Tuple[str, List[float]]:
    """Parse 'var=a..b[:step]' into the variable name and the grid (both ends included)

    Without a step, integer variables with integer ends get unit steps and anything
    else 21 points.
    """
    match = _SWEEP.match(text or '')
    if not match:
        raise ConfigError(f"sweep must look like var=a..b[:step], got '{text}'")
    var = match.group('var')
    try:
        a, b = float(match.group('a')), float(match.group('b'))
        step = float(match.group('step')) if match.group('step') else None
    except ValueError:
        raise ConfigError(f"sweep bounds must be numbers, got '{text}'")
    if b < a:
        raise ConfigError(f"sweep end {b} lies below its start {a}")
    if step is None:
        step = 1.0 if var in INTEGER_SWEEPS and a.is_integer() and b.is_integer() else (b - a) / 20.0
    if step <= 0:
        if a == b:
            return var, [a]
        raise ConfigError(f"sweep step must be positive, got {step}")
    count = int(np.floor((b - a) / step + 1e-9)) + 1
    values = [round(a + i * step, 12) for i in range(count)]
    return var, values


def _coerce(name: str, value, line: Optional[int] = None, source: Optional[str] = None):
    """Convert a raw JSON or command-line value to the field's declared type"""
    if name not in FIELD_TYPES:
        raise ConfigError(f"unknown key '{name}'", line, source)
    expected = FIELD_TYPES[name]
    optional = getattr(expected, '__args__', None) and type(None) in expected.__args__
    if optional:
        if value is None:
            return None
        expected = next(arg for arg in expected.__args__ if arg is not type(None))
    try:
        if expected is bool:
            if isinstance(value, str):
                lowered = value.strip().lower()
                if lowered not in ('true', 'false', '1', '0', 'yes', 'no'):
                    raise ValueError(value)
                return lowered in ('true', '1', 'yes')
            return bool(value)
        if expected is int:
            number = float(value)
            if number != int(number):
                raise ValueError(value)
            return int(number)
        if expected is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"'{name}' expects {expected.__name__}, got {value!r}", line, source)


def _key_line(text: str, key: str) -> Optional[int]:
    match = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    if not match:
        return None
    return text.count('\n', 0, match.start()) + 1


def load_config(config_file: Optional[str] = None, overrides: Optional[Dict[str, object]] = None) -> ExperimentConfig:
    """Read a flat JSON configuration and apply overrides on top of it"""
    values = {}
    if config_file:
        try:
            with open(config_file, 'r', encoding='utf-8') as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"cannot read configuration: {e}", source=config_file)
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(e.msg, e.lineno, config_file)
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object", 1, config_file)
        for key, value in raw.items():
            values[key] = _coerce(key, value, _key_line(text, key), config_file)
    for key, value in (overrides or {}).items():
        values[key] = _coerce(key, value)
    return ExperimentConfig(**values)


def parse_assignment(text: str) -> Tuple[str, str]:
    if '=' not in text:
        raise UsageError(f"--set expects key=value, got '{text}'")
    key, value = text.split('=', 1)
    return key.strip(), value.strip()


class HetmarketArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = HetmarketArgumentParser(prog='hetmarket', description=__doc__.strip().splitlines()[0])
    commands = parser.add_subparsers(dest='command', metavar='{run,check,tau}')

    common = HetmarketArgumentParser(add_help=False)
    common.add_argument('--config', help='flat JSON configuration file')
    common.add_argument('--seed', type=int, default=argparse.SUPPRESS, help='master seed')
    common.add_argument('--realizations', '-R', type=int, default=argparse.SUPPRESS, help='Monte Carlo realizations')
    common.add_argument('--out', default=argparse.SUPPRESS, help='output directory for CSV tables')
    common.add_argument('--sweep', default=argparse.SUPPRESS, help='sweep as var=a..b[:step]')
    common.add_argument('--set', action='append', default=[], metavar='KEY=VALUE', help='override a configuration key')
    common.add_argument('--verbose', '-v', action='store_true', help='debug logging')
    common.add_argument('--quiet', '-q', action='store_true', help='suppress per-row output')
    named = {'seed', 'realizations', 'out', 'sweep', 'check', 'scenario', 'suite'}
    for name, kind in FIELD_TYPES.items():
        if name in named:
            continue
        common.add_argument(f'--{name}', dest=name, default=argparse.SUPPRESS, help=argparse.SUPPRESS)

    run = commands.add_parser('run', parents=[common], help='write the table of one experiment')
    run.add_argument('scenario', choices=sorted(experiments.EXPERIMENTS) + ['all'])
    run.add_argument('--check', action='store_true', default=argparse.SUPPRESS,
                     help='also run the matching check suite; exit 2 on failure')

    check = commands.add_parser('check', parents=[common], help='run acceptance criteria')
    check.add_argument('suite', choices=sorted(acceptance_checks.SUITES) + ['all'])

    tau = commands.add_parser('tau', parents=[common], help='sample versus expected Kendall tau')
    tau.add_argument('scheme', choices=list(SCHEMES))
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    overrides: Dict[str, object] = {}
    for name in FIELD_TYPES:
        if name in vars(args) and name not in ('scenario', 'suite'):
            overrides[name] = getattr(args, name)
    for assignment in args.set:
        key, value = parse_assignment(assignment)
        overrides[key] = value
    if args.command == 'run':
        overrides['scenario'] = args.scenario
    elif args.command == 'check':
        overrides['suite'] = args.suite
    elif args.command == 'tau':
        overrides['scenario'] = 'tau'
        overrides['scheme'] = args.scheme
    return load_config(args.config, overrides)


class MarketLab:
    def __init__(self, config: ExperimentConfig, quiet: bool = False):
        """Initialize the runner with a validated configuration"""
        self.config = config
        self.quiet = quiet
        self.report_system = ReportSystem({'out': config.out, 'quiet': quiet})

    def _update_progress(self, stage: str, progress: int, total: int, message: str = ""):
        """Update progress file for long runs"""
        if not self.config.progress_file:
            return
        try:
            progress_data = {
                'stage': stage,
                'progress': progress,
                'total': total,
                'percentage': int((progress / total * 100)) if total > 0 else 0,
                'message': message,
                'timestamp': datetime.now().isoformat()
            }
            with open(self.config.progress_file, 'w', encoding='utf-8') as f:
                json.dump(progress_data, f)
        except OSError as e:
            print(f"Warning: Could not update progress file: {e}", flush=True)

    def _progress(self, stage: str, done: int, total: int, message: str = ""):
        self._update_progress(stage, done, total, message)
        if not self.quiet and message:
            print(f"[{done}/{total}] {message}", flush=True)

    def run_experiments(self, names: List[str]) -> List[str]:
        """Run experiments by name and save one CSV per experiment"""
        paths = []
        for index, name in enumerate(names):
            print(f"\n[*] Running experiment '{name}' ({index + 1}/{len(names)})...", flush=True)
            table = experiments.EXPERIMENTS[name](self.config, progress=self._progress)
            paths.append(self.report_system.publish(table))
        self._update_progress('complete', len(names), len(names), f"Complete! Wrote {len(paths)} table(s)")
        return paths

    def run_checks(self, suites: List[str]) -> int:
        """Run check suites and return the number of failed criteria"""
        results = []
        for index, suite in enumerate(suites):
            print(f"\n[*] Checking '{suite}' ({index + 1}/{len(suites)})...", flush=True)
            self._update_progress('checking', index, len(suites), f"Checking {suite}...")
            results.extend(acceptance_checks.SUITES[suite](self.config))
        failures = self.report_system.report_checks(results)
        self._update_progress('complete', len(suites), len(suites), f"Complete! {failures} failure(s)")
        return failures


def _configure_logging(verbose: bool, quiet: bool):
    level = logging.DEBUG if verbose else (logging.ERROR if quiet else logging.WARNING)
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s', force=True)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a command is required")
        _configure_logging(args.verbose, args.quiet)
        config = config_from_args(args)
    except UsageError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE

    lab = MarketLab(config, quiet=args.quiet)
    try:
        if args.command == 'check':
            suites = acceptance_checks.suite_names(config.suite)
            return EXIT_VALIDATION if lab.run_checks(suites) else EXIT_OK

        names = sorted(experiments.EXPERIMENTS) if config.scenario == 'all' else [config.scenario]
        lab.run_experiments(names)
        if config.check:
            suites = sorted({acceptance_checks.SUITE_FOR_EXPERIMENT[name] for name in names
                             if name in acceptance_checks.SUITE_FOR_EXPERIMENT})
            if suites and lab.run_checks(suites):
                return EXIT_VALIDATION
        return EXIT_OK
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
