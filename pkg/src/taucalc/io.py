"""Symbol file format: one JSON record per symbol, round-tripping bit-exactly.

    {"dim": 1, "representation": "poly",
     "terms": [{"x": [1], "xi": [1], "re": "1", "im": "0"}]}

``rational`` records add ``base`` (a term list) and ``power``; ``expr``
records carry ``expr`` (and optionally ``shift``/``factor``); ``amplitude``
terms carry ``y`` as well.  Exact coefficients are rational strings, float
coefficients keep their repr.
"""
from __future__ import annotations

import json
import json.decoder
import json.scanner
from pathlib import Path

from .exact import coeff_from_parts, coeff_parts
from .expr import ExprParseError, ExprSymbol
from .symbols import PolyAmplitude, PolySymbol, RationalSymbol, SymbolError

REPRESENTATIONS = ("poly", "rational", "expr", "amplitude")


class SymbolFormatError(SymbolError):
    pass


class _Located(dict):
    line = 0


class _LocatingDecoder(json.JSONDecoder):
    """JSON decoder whose objects remember the line they start on."""

    def __init__(self):
        super().__init__()

        def parse_object(s_and_end, *args):
            s, start = s_and_end
            obj, end = json.decoder.JSONObject(s_and_end, *args)
            loc = _Located(obj)
            loc.line = s.count("\n", 0, start) + 1
            return loc, end

        self.parse_object = parse_object
        self.scan_once = json.scanner.py_make_scanner(self)


def _fail(source: str, node, msg: str):
    line = getattr(node, "line", 0)
    where = f"{source}:{line}" if line else source
    raise SymbolFormatError(f"{where}: {msg}")


# ---------------------------------------------------------------------------
# writing

def _term_list(terms: dict, keys: tuple[str, ...]) -> list[dict]:
    out = []
    for idx, c in terms.items():
        re, im = coeff_parts(c)
        rec = {k: list(v) for k, v in zip(keys, idx)}
        rec["re"] = re
        rec["im"] = im
        out.append(rec)
    return out


def symbol_to_record(a) -> dict:
    if isinstance(a, PolySymbol):
        return {"dim": a.dim, "representation": "poly", "terms": _term_list(a.terms, ("x", "xi"))}
    if isinstance(a, RationalSymbol):
        return {"dim": a.dim, "representation": "rational",
                "terms": _term_list(a.numerator.terms, ("x", "xi")),
                "base": _term_list(a.base.terms, ("x", "xi")), "power": a.power}
    if isinstance(a, ExprSymbol):
        rec = {"dim": a.dim, "representation": "expr", "expr": a.expr}
        if any(a.shift):
            rec["shift"] = list(a.shift)
        if a.factor != 1:
            rec["factor"] = {"re": repr(a.factor.real), "im": repr(a.factor.imag)}
        return rec
    if isinstance(a, PolyAmplitude):
        return {"dim": a.dim, "representation": "amplitude", "terms": _term_list(a.terms, ("x", "y", "xi"))}
    raise SymbolFormatError(f"cannot serialize {type(a).__name__}")


def dumps_symbol(a) -> str:
    rec = symbol_to_record(a)
    # one term per line keeps error locations meaningful
    parts = [f'"{k}": {json.dumps(v)}' for k, v in rec.items() if k not in ("terms", "base")]
    for key in ("terms", "base"):
        if key in rec:
            body = ",\n    ".join(json.dumps(t) for t in rec[key])
            parts.append(f'"{key}": [\n    {body}\n  ]' if body else f'"{key}": []')
    return "{\n  " + ",\n  ".join(parts) + "\n}\n"


def save_symbol(a, path) -> None:
    Path(path).write_text(dumps_symbol(a))


# ---------------------------------------------------------------------------
# reading

def _index(node, key: str, dim: int, source: str) -> tuple[int, ...]:
    if key not in node:
        _fail(source, node, f"term lacks multi-index {key!r}")
    v = node[key]
    if not isinstance(v, list) or len(v) != dim:
        _fail(source, node, f"multi-index {key!r} must be a list of length {dim}, got {v!r}")
    if not all(isinstance(k, int) and not isinstance(k, bool) and k >= 0 for k in v):
        _fail(source, node, f"multi-index {key!r} must hold nonnegative integers, got {v!r}")
    return tuple(v)


def _coeff(node, source: str):
    re, im = node.get("re", "0"), node.get("im", "0")
    if not isinstance(re, str) or not isinstance(im, str):
        _fail(source, node, "coefficient parts must be strings")
    try:
        return coeff_from_parts(re, im)
    except ValueError as exc:
        _fail(source, node, str(exc))


def _terms(node, key: str, keys: tuple[str, ...], dim: int, source: str) -> dict:
    items = node.get(key)
    if not isinstance(items, list):
        _fail(source, node, f"{key!r} must be a list of terms")
    out = {}
    for t in items:
        if not isinstance(t, dict):
            _fail(source, node, f"malformed term {t!r}")
        extra = set(t) - set(keys) - {"re", "im"}
        if extra:
            _fail(source, t, f"unexpected term fields {sorted(extra)}")
        idx = tuple(_index(t, k, dim, source) for k in keys)
        if idx in out:
            _fail(source, t, f"duplicate term {idx}")
        out[idx] = _coeff(t, source)
    return out


def symbol_from_record(rec, source: str = "<record>"):
    if not isinstance(rec, dict):
        raise SymbolFormatError(f"{source}: symbol record must be an object")
    dim = rec.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        _fail(source, rec, f"dim must be a positive integer, got {dim!r}")
    rep = rec.get("representation")
    if rep not in REPRESENTATIONS:
        _fail(source, rec, f"representation must be one of {REPRESENTATIONS}, got {rep!r}")
    try:
        if rep == "poly":
            return PolySymbol(dim, _terms(rec, "terms", ("x", "xi"), dim, source))
        if rep == "rational":
            num = PolySymbol(dim, _terms(rec, "terms", ("x", "xi"), dim, source))
            base = PolySymbol(dim, _terms(rec, "base", ("x", "xi"), dim, source))
            power = rec.get("power")
            if not isinstance(power, int) or isinstance(power, bool) or power < 0:
                _fail(source, rec, f"power must be a nonnegative integer, got {power!r}")
            return RationalSymbol(num, base, power)
        if rep == "amplitude":
            return PolyAmplitude(dim, _terms(rec, "terms", ("x", "y", "xi"), dim, source))
        expr = rec.get("expr")
        if not isinstance(expr, str):
            _fail(source, rec, "expr record needs an 'expr' string")
        shift = rec.get("shift")
        factor = rec.get("factor")
        f = 1.0 if factor is None else complex(float(factor["re"]), float(factor["im"]))
        return ExprSymbol(dim, expr, shift, f)
    except SymbolFormatError:
        raise
    except (ExprParseError, SymbolError, KeyError, TypeError, ValueError) as exc:
        _fail(source, rec, str(exc))


def loads_symbol(text: str, source: str = "<string>"):
    try:
        rec = _LocatingDecoder().decode(text)
    except json.JSONDecodeError as exc:
        raise SymbolFormatError(f"{source}:{exc.lineno}: {exc.msg}") from None
    return symbol_from_record(rec, source)


def load_symbol(path):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise SymbolFormatError(f"{path}: {exc.strerror}") from None
    return loads_symbol(text, str(path))
