"""Shared tolerances, thread-cap handling and JSON helpers."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor

# Probability mass accounting (distribution rows).
DIST_TOL = 1e-12
# Linear solves / LP feasibility.
SOLVE_TOL = 1e-9
# Equality of extrapolated per-state values (communicating-set condition).
VALUE_SPREAD_TOL = 1e-4
# Margin tolerance for the one-shot value inequality.
VALUE_INEQ_TOL = 1e-6


def thread_cap() -> int:
    """Worker-thread cap, controlled by the AP_THREADS environment variable."""
    raw = os.environ.get("AP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Map `fn` over `items`, using up to AP_THREADS worker threads."""
    items = list(items)
    cap = thread_cap()
    if cap <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(cap, len(items))) as pool:
        return list(pool.map(fn, items))


def dump_json(obj, path) -> None:
    """Write `obj` as deterministic JSON (sorted keys, fixed layout)."""
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def json_ready(obj):
    """Recursively convert numpy scalars/arrays to plain Python types."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [json_ready(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj
