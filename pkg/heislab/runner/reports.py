"""
Reports
-------
Collects the assertions of one suite run and writes them out:
1. summary.json with per-assertion status, measured values and the resolved config
2. one CSV per table through pandas
3. failures.json with the failing instances when any assertion failed
"""

import json
import logging
import math
import os

import numpy as np
import pandas as pd
from simple_chalk import chalk

logger = logging.getLogger(__name__)


def _plain(value):
    """JSON-safe copy with numpy scalars unwrapped and non-finite floats as strings"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


class SuiteReport:
    def __init__(self, suite: str, config: dict, out_dir: str, echo: bool = True):
        self.suite = suite
        self.config = config
        self.out_dir = out_dir
        self.echo = echo
        self.assertions = []
        self.tables = {}
        self.records = {}
        self.notes = []

    def check(self, name: str, passed: bool, instance: dict = None, **measured) -> bool:
        """Record one assertion; ``instance`` is what gets dumped when it fails"""
        passed = bool(passed)
        self.assertions.append({"name": name, "passed": passed, "measured": _plain(measured),
                                "instance": _plain(instance or {})})
        if self.echo:
            detail = ", ".join(f"{k}={_short(v)}" for k, v in measured.items())
            line = f"[{self.suite}] {name}: {detail}" if detail else f"[{self.suite}] {name}"
            print(chalk.green(f"PASS {line}") if passed else chalk.red(f"FAIL {line}"))
        if not passed:
            logger.error("assertion %s failed in suite %s", name, self.suite)
        return passed

    def note(self, message: str):
        self.notes.append(message)
        if self.echo:
            print(chalk.yellow(f"NOTE [{self.suite}] {message}"))
        logger.info(message)

    def table(self, name: str, rows: list):
        self.tables.setdefault(name, []).extend(rows)

    def record(self, name: str, rows: list):
        """Rows written as a JSON list instead of a CSV table"""
        self.records.setdefault(name, []).extend(_plain(rows))

    @property
    def failures(self) -> list:
        return [a for a in self.assertions if not a["passed"]]

    @property
    def passed(self) -> bool:
        return not self.failures

    def write(self) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        for name, rows in self.tables.items():
            pd.DataFrame(rows).to_csv(os.path.join(self.out_dir, f"{name}.csv"), index=False,
                                      float_format="%.17g")
        for name, rows in self.records.items():
            with open(os.path.join(self.out_dir, f"{name}.json"), "w") as file:
                json.dump(rows, file, indent=2, sort_keys=True)
        summary = {
            "suite": self.suite,
            "passed": self.passed,
            "assertions": [{k: a[k] for k in ("name", "passed", "measured")} for a in self.assertions],
            "notes": self.notes,
            "tables": sorted([f"{name}.csv" for name in self.tables] + [f"{name}.json" for name in self.records]),
            "config": _plain(self.config),
        }
        path = os.path.join(self.out_dir, "summary.json")
        with open(path, "w") as file:
            json.dump(summary, file, indent=2, sort_keys=True)
        failures_path = os.path.join(self.out_dir, "failures.json")
        if self.failures:
            with open(failures_path, "w") as file:
                json.dump(self.failures, file, indent=2, sort_keys=True)
        elif os.path.exists(failures_path):
            os.remove(failures_path)
        return path


def _short(value):
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.4g}"
    return value
