"""JSON and CSV writers with stable formatting.

JSON is UTF-8 with sorted keys; CSV uses ``,`` separators, ``.`` decimals,
a header row and LF line endings. Floats are written with ``repr`` so that a
rerun with identical inputs is byte-identical.
"""

import csv
import hashlib
import io
import json
import math

import numpy as np

from .geometry import RadialProfile


def _plain(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps_json(record) -> str:
    return json.dumps(_plain(record), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def config_hash(config: dict) -> str:
    """Short SHA-256 digest of the canonical JSON form of ``config``."""
    canon = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def dumps_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def _csv_cell(v):
    v = _plain(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def profile_to_json(h: RadialProfile) -> str:
    return dumps_json(h.to_dict())


def profile_from_json(text) -> RadialProfile:
    return RadialProfile.from_dict(json.loads(text))


def spectrum_record(Q, spec):
    """``{modes, min_eig, c0, eigvec_coeffs, verdict}`` plus diagnostics."""
    return {
        "modes": list(Q.modes),
        "min_eig": spec.min_eig,
        "c0": spec.c0,
        "eigvec_coeffs": spec.mode,
        "verdict": spec.verdict,
        "tolerance": spec.tolerance,
        "neutral_count": spec.neutral_count,
    }


def matrix_csv(Q, config_hash=None) -> str:
    """Row-major dump of ``M`` with the mode labels as header.

    A trailing ``config_hash`` column is appended when a hash is given.
    """
    if config_hash is None:
        return dumps_csv(Q.modes, Q.M.tolist())
    return dumps_csv(list(Q.modes) + ["config_hash"], [row + [config_hash] for row in Q.M.tolist()])
