"""
Console progress and artifact writers.

Console output keeps the pipeline's banner style; artifacts are
pandas CSV tables and indented JSON summaries.
"""

import json
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pandas as pd

RULE = "=" * 80
QUIET = False


def set_quiet(flag: bool) -> None:
    global QUIET
    QUIET = bool(flag)


def _emit(message: str) -> None:
    if not QUIET:
        print(message)


def banner(title: str) -> None:
    _emit(RULE)
    _emit(title)
    _emit(RULE)


def step(message: str) -> None:
    _emit(f"\n📊 {message}")


def info(message: str) -> None:
    _emit(f"   {message}")


def ok(message: str) -> None:
    _emit(f"   ✅ {message}")


def warn(message: str) -> None:
    _emit(f"   ⚠️  {message}")


def fail(message: str) -> None:
    _emit(f"   ❌ {message}")


def saved(path: Path) -> None:
    _emit(f"   💾 Saved: {path}")


def _plain(value: Any) -> Any:
    """Convert numpy scalars/arrays so json can serialise them."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    return value


def write_csv(rows: List[Dict[str, Any]], path: Path, columns: List[str]) -> Path:
    """Write rows as a CSV with a fixed column order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(rows, columns=columns)
    df.to_csv(path, index=False)
    saved(path)
    return path


def write_json(payload: Dict[str, Any], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(_plain(payload), f, indent=2, sort_keys=True)
    saved(path)
    return path


def read_json(path: Path) -> Dict[str, Any]:
    with open(path, 'r') as f:
        return json.load(f)


def summarize_checks(checks: Dict[str, bool]) -> bool:
    """Print one line per named check; return True iff all passed."""
    all_passed = True
    for name, passed in checks.items():
        if passed:
            ok(name)
        else:
            fail(name)
            all_passed = False
    return all_passed
