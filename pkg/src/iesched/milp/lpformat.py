"""Reader and writer for the CPLEX-style LP text format.

Only the subset the writer emits is parsed back: a linear objective, linear
rows, explicit bounds, ``Binaries`` and ``Generals``.  Coefficients are
written with ``repr`` so a write/parse round trip is exact.
"""

from __future__ import annotations

import math
import re
from typing import Dict, List, Tuple

from .model import INF, MilpModel

_LINE = 200
_SECTIONS = {
    "minimize": "obj", "minimum": "obj", "min": "obj",
    "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "gen": "gen",
    "end": "end",
}


class LpFormatError(ValueError):
    pass


def _num(v: float) -> str:
    if math.isinf(v):
        return "+inf" if v > 0 else "-inf"
    return repr(float(v))


def _terms(coeffs, names) -> List[str]:
    out = []
    for j, a in sorted(coeffs.items()):
        sign = "-" if a < 0 or (a == 0 and math.copysign(1, a) < 0) else "+"
        out.append(f"{sign} {_num(abs(a))} {names[j]}")
    return out


def _wrap(head: str, items: List[str], tail: str = "") -> List[str]:
    lines, cur = [], head
    for it in items + ([tail] if tail else []):
        if len(cur) + len(it) + 1 > _LINE and cur.strip():
            lines.append(cur)
            cur = "   "
        cur += " " + it
    lines.append(cur)
    return lines


def export_lp_file(model: MilpModel) -> str:
    model.validate()
    names = model.var_names
    out = [f"\\ {model.name}", "Minimize"]
    # every column appears in the objective (zero if unused) to pin the order
    full = {j: model.objective.get(j, 0.0) for j in range(model.num_vars)}
    obj = _terms(full, names)
    if model.obj_constant != 0.0:
        obj.append(("- " if model.obj_constant < 0 else "+ ") + _num(abs(model.obj_constant)))
    if not obj:
        obj = [f"0 {names[0]}"] if names else []
    out += _wrap(" obj:", obj)
    out.append("Subject To")
    for con in model.constraints:
        terms = _terms(con.coeffs, names) if con.coeffs else [f"0 {names[0]}"]
        out += _wrap(f" {con.name}:", terms, f"{con.sense} {_num(con.rhs)}")
    out.append("Bounds")
    binaries, generals = [], []
    for j, n in enumerate(names):
        lo, hi = model.lb[j], model.ub[j]
        if model.integer[j]:
            if lo == 0.0 and hi == 1.0:
                binaries.append(n)
                continue
            generals.append(n)
        if lo == hi:
            out.append(f" {n} = {_num(lo)}")
        elif lo == -INF and hi == INF:
            out.append(f" {n} free")
        elif lo == 0.0 and hi == INF:
            continue
        else:
            out.append(f" {_num(lo)} <= {n} <= {_num(hi)}")
    if binaries:
        out.append("Binaries")
        out += _wrap("", binaries)
    if generals:
        out.append("Generals")
        out += _wrap("", generals)
    out.append("End")
    return "\n".join(out) + "\n"


_TOKEN = re.compile(r"[<>=]=?|[+-]|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[^\s<>=+-]+")


def _parse_num(tok: str) -> float:
    low = tok.lower()
    if low in ("inf", "infinity"):
        return INF
    return float(tok)


def _is_num(tok: str) -> bool:
    try:
        _parse_num(tok)
        return True
    except ValueError:
        return False


def _linear(tokens: List[str]) -> Tuple[List[Tuple[str, float]], float]:
    """Parse ``[+-] [coef] name ...`` into terms and a constant."""
    terms, const, sign, coef, i = [], 0.0, 1.0, None, 0
    while i < len(tokens):
        t = tokens[i]
        if t in "+-":
            sign = sign * (-1.0 if t == "-" else 1.0)
        elif _is_num(t):
            if coef is not None:
                raise LpFormatError(f"two numbers in a row near {t!r}")
            coef = _parse_num(t)
            nxt = tokens[i + 1] if i + 1 < len(tokens) else None
            if nxt is None or nxt in "+-":
                const += sign * coef
                sign, coef = 1.0, None
        else:
            terms.append((t, sign * (1.0 if coef is None else coef)))
            sign, coef = 1.0, None
        i += 1
    return terms, const


def parse_lp_file(text: str) -> MilpModel:
    model = MilpModel()
    section = None
    chunks: Dict[str, List[str]] = {"obj": [], "rows": [], "bounds": [], "bin": [], "gen": []}
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if raw.startswith("\\ ") and section is None:
            model.name = raw[2:].strip() or model.name
        if not line:
            continue
        key = _SECTIONS.get(line.lower())
        if key is not None:
            section = key
            if key == "end":
                break
            continue
        if section is None:
            raise LpFormatError(f"content before the objective section: {raw!r}")
        chunks[section].append(line)

    if section is None:
        raise LpFormatError("no objective section found")

    # constraints may span lines: a new one starts with "name:"
    rows: List[str] = []
    for line in chunks["rows"]:
        if re.match(r"^[A-Za-z_][A-Za-z0-9_]*\s*:", line) or not rows:
            rows.append(line)
        else:
            rows[-1] += " " + line

    order: List[str] = []

    def ensure(n):
        if not model.has_var(n):
            model.add_var(n)
            order.append(n)
        return model.index(n)

    obj_text = " ".join(chunks["obj"])
    if ":" in obj_text:
        obj_text = obj_text.split(":", 1)[1]
    terms, obj_const = _linear(_TOKEN.findall(obj_text))
    obj_terms = [(ensure(n), a) for n, a in terms]
    obj_terms = [(j, a) for j, a in obj_terms if a != 0.0]

    parsed_rows = []
    for r in rows:
        name, body = (r.split(":", 1) + [""])[:2] if ":" in r else (None, r)
        toks = _TOKEN.findall(body)
        k = next((i for i, t in enumerate(toks) if t in ("<=", ">=", "=", "<", ">", "=<", "=>")), None)
        if k is None:
            raise LpFormatError(f"constraint without a sense: {r!r}")
        sense = {"<": "<=", "=<": "<=", ">": ">=", "=>": ">="}.get(toks[k], toks[k])
        if k == len(toks) - 1:
            raise LpFormatError(f"constraint without a right-hand side: {r!r}")
        terms, const = _linear(toks[:k])
        rhs_terms, rhs = _linear(toks[k + 1:])
        if rhs_terms:
            raise LpFormatError(f"variables on the right-hand side: {r!r}")
        parsed_rows.append((name.strip() if name else None,
                            [(ensure(n), a) for n, a in terms], sense, rhs - const))

    for line in chunks["bounds"]:
        toks = _TOKEN.findall(line)
        if len(toks) == 2 and toks[1].lower() == "free":
            j = ensure(toks[0])
            model.lb[j], model.ub[j] = -INF, INF
            continue
        toks = _merge_signs(toks)
        if len(toks) == 5:
            j = ensure(toks[2])
            model.lb[j], model.ub[j] = _parse_num(toks[0]), _parse_num(toks[4])
        elif len(toks) == 3:
            if _is_num(toks[0]):
                toks = [toks[2], {"<=": ">=", ">=": "<="}.get(toks[1], toks[1]), toks[0]]
            j = ensure(toks[0])
            v = _parse_num(toks[2])
            if toks[1] == "=":
                model.lb[j] = model.ub[j] = v
            elif toks[1] in ("<=", "<"):
                model.ub[j] = v
            else:
                model.lb[j] = v
        else:
            raise LpFormatError(f"cannot read bound line {line!r}")

    for n in " ".join(chunks["bin"]).split():
        j = ensure(n)
        model.lb[j], model.ub[j], model.integer[j] = 0.0, 1.0, True
    for n in " ".join(chunks["gen"]).split():
        model.integer[ensure(n)] = True

    model.add_objective({}, obj_const)
    for j, a in obj_terms:
        model.objective[j] = model.objective.get(j, 0.0) + a
    for name, terms, sense, rhs in parsed_rows:
        model.add_constraint(terms, sense, rhs, name)
    return model


def _merge_signs(toks: List[str]) -> List[str]:
    out, i = [], 0
    while i < len(toks):
        if toks[i] in "+-" and i + 1 < len(toks) and _is_num(toks[i + 1]):
            out.append(toks[i].replace("+", "") + toks[i + 1])
            i += 2
        else:
            out.append(toks[i])
            i += 1
    return out
