"""Deterministic JSON rendering for reports.

Floats are printed with 17 significant digits (full double round-trip),
infinities as the strings "inf"/"-inf", NaN as null; dict insertion
order is preserved.  Identical report objects therefore serialize to
byte-identical documents.
"""

from __future__ import annotations

import json
import math


def _render(obj, out: list) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if math.isnan(obj):
            out.append("null")
        elif math.isinf(obj):
            out.append('"inf"' if obj > 0 else '"-inf"')
        else:
            out.append(format(obj, ".17g"))
    elif isinstance(obj, complex):
        _render({"re": obj.real, "im": obj.imag}, out)
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(key)))
            out.append(": ")
            _render(value, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, value in enumerate(obj):
            if i:
                out.append(", ")
            _render(value, out)
        out.append("]")
    else:
        try:
            import numpy as np
            if isinstance(obj, np.integer):
                out.append(str(int(obj)))
                return
            if isinstance(obj, np.floating):
                _render(float(obj), out)
                return
            if isinstance(obj, np.complexfloating):
                _render(complex(obj), out)
                return
            if isinstance(obj, np.ndarray):
                _render(obj.tolist(), out)
                return
        except ImportError:  # pragma: no cover
            pass
        raise TypeError(f"cannot serialize {type(obj).__name__} into a report")


def render_json(obj) -> str:
    out: list[str] = []
    _render(obj, out)
    out.append("\n")
    return "".join(out)


def write_report(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_json(obj))
