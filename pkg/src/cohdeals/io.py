"""JSON readers and writers for models and results."""

import json
import math

import numpy as np

from ._tol import report_tol
from .errors import StructuralError
from .markets import MarketModel, PriceInterval
from .scenario import Density, ScenarioSpace, spec_from_dict

DIGITS = 12


def clean_number(x, tol=None):
    """Round to 12 significant digits; infinities become strings."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    tol = report_tol() if tol is None else tol
    # values far below the reporting tolerance are solver noise
    if abs(x) < tol * 1e-3:
        return 0.0
    return float(f"{x:.{DIGITS}g}")


def clean(obj):
    """Recursively convert numpy values and round floats for output."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, Density):
        return clean(obj.z)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return clean_number(obj)
    return obj


def dumps(obj):
    return json.dumps(clean(obj), sort_keys=True)


def parse_number(x):
    """Inverse of :func:`clean_number` for a single value."""
    return float(x)


def load_json(text_or_path):
    """Parse a JSON string, or read it from a file when the text names one."""
    text = text_or_path
    if isinstance(text, str) and not text.lstrip().startswith(("{", "[")):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructuralError(f"invalid JSON: {exc}") from exc


def space_from_dict(obj):
    try:
        probs = obj["probs"]
    except KeyError as exc:
        raise StructuralError("missing field 'probs'") from exc
    return ScenarioSpace(probs, obj.get("labels"))


def market_from_dict(obj):
    """``(model, payoff)`` from ``{"probs", "s0", "s1", "payoff"}``; payoff may be absent."""
    space = space_from_dict(obj)
    s0 = obj.get("s0", [])
    s1 = obj.get("s1", [])
    model = MarketModel(space, s0, s1 if len(s1) else np.zeros((0, space.n)))
    payoff = obj.get("payoff")
    return model, (None if payoff is None else space.pnl(payoff))


def market_to_dict(model, payoff=None):
    out = {"probs": model.space.probs.tolist(), "s0": model.s0.tolist(),
           "s1": model.s1.tolist()}
    if payoff is not None:
        out["payoff"] = payoff.values.tolist()
    return out


def risk_from(obj, space):
    return spec_from_dict(obj, space)


def interval_to_dict(iv):
    out = {
        "lo": iv.lo,
        "hi": iv.hi,
        "lo_closed": iv.lo_closed,
        "hi_closed": iv.hi_closed,
        "lo_witness": None if iv.lo_witness is None else iv.lo_witness.z,
        "hi_witness": None if iv.hi_witness is None else iv.hi_witness.z,
        "empty": iv.empty,
    }
    return out


def interval_from_dict(obj, space=None):
    lo, hi = parse_number(obj["lo"]), parse_number(obj["hi"])
    wit = []
    for key in ("lo_witness", "hi_witness"):
        z = obj.get(key)
        wit.append(Density(space, z) if (z is not None and space is not None) else None)
    return PriceInterval(lo, hi, bool(obj["lo_closed"]), bool(obj["hi_closed"]), *wit)


_NUM = {"oneOf": [{"type": "number"}, {"enum": ["inf", "-inf", "nan"]}]}
_VEC = {"type": "array", "items": _NUM}
_OPT_VEC = {"oneOf": [_VEC, {"type": "null"}]}

SCHEMAS = {
    "risk": {"type": "object", "required": ["risk", "utility"],
             "properties": {"risk": _NUM, "utility": _NUM}},
    "extreme": {"type": "object", "required": ["utility", "density"],
                "properties": {"utility": _NUM, "density": _VEC}},
    "allocate": {"type": "object", "required": ["allocation", "total", "unique", "witness"],
                 "properties": {"allocation": _VEC, "total": _NUM, "unique": {"type": "boolean"},
                                "witness": _VEC,
                                "segment": {"oneOf": [{"type": "null"},
                                                      {"type": "array", "items": _VEC}]}}},
    "contribute": {"type": "object", "required": ["contribution", "risk_contribution"],
                   "properties": {"contribution": _NUM, "risk_contribution": _NUM}},
    "interval": {"type": "object",
                 "required": ["lo", "hi", "lo_closed", "hi_closed", "lo_witness", "hi_witness"],
                 "properties": {"lo": _NUM, "hi": _NUM, "lo_closed": {"type": "boolean"},
                                "hi_closed": {"type": "boolean"}, "lo_witness": _OPT_VEC,
                                "hi_witness": _OPT_VEC, "empty": {"type": "boolean"}}},
    "hedge": {"type": "object",
              "required": ["upper_price", "lower_price", "super_h", "sub_h"],
              "properties": {"upper_price": _NUM, "lower_price": _NUM, "super_h": _OPT_VEC,
                             "sub_h": _OPT_VEC, "super_h_range": _OPT_VEC,
                             "sub_h_range": _OPT_VEC}},
    "ex1": {"type": "object", "required": ["upper", "lower", "super_h", "sub_h"],
            "properties": {k: _NUM for k in ("upper", "lower", "super_h", "sub_h",
                                             "a", "b", "c", "d")}},
    "gaussian": {"type": "object", "required": ["interval", "na_interval"],
                 "properties": {"interval": {"type": "object"},
                                "na_interval": {"type": "object"},
                                "hedges": {"oneOf": [{"type": "null"}, {"type": "object"}]}}},
    "certificate": {"type": "object", "required": ["violation"],
                    "properties": {"violation": {"type": "string"}}},
}
