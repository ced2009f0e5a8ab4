"""Reader and writer for the plain-text model format (see model_grammar.ebnf)."""

from __future__ import annotations

import re
from importlib import resources

import numpy as np

from .automaton import (Dynamics, FixedInput, HybridAutomaton, Location, ModelError,
                        SetInput, Transition)
from .geometry import Box, HalfSpace

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_NUM_RE = re.compile(_NUM)
_BR = r"(\[[^\]]*\])"

_LINES = {
    "dim": re.compile(r"dim\s+(\d+)"),
    "vars": re.compile(r"vars((?:\s+[A-Za-z_]\w*)+)"),
    "name": re.compile(r"name\s+(\S+)"),
    "location": re.compile(r"location\s+(-?\d+)(?:\s+name=(\S+))?"),
    "flow": re.compile(rf"flow\s+A\s*=\s*{_BR}\s+(?:u\s*=\s*{_BR}|U\s*=\s*box\s*{_BR})"),
    "inv": re.compile(rf"inv((?:\s+{_NUM})+)\s*<=\s*({_NUM})"),
    "tag": re.compile(r"tag\s+(\S+)"),
    "transition": re.compile(r"transition\s+(-?\d+)\s*->\s*(-?\d+)"),
    "guard": re.compile(rf"guard((?:\s+{_NUM})+)\s*<=\s*({_NUM})"),
    "map": re.compile(rf"map\s+M\s*=\s*{_BR}\s+v\s*=\s*{_BR}"),
    "init": re.compile(rf"init\s+location=(-?\d+)\s+box\s*{_BR}"),
}


class ModelSyntaxError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def grammar() -> str:
    return resources.files(__package__).joinpath("model_grammar.ebnf").read_text()


def _numbers(text: str, lineno: int) -> list[float]:
    toks = text.split()
    for tok in toks:
        if not _NUM_RE.fullmatch(tok):
            raise ModelSyntaxError(lineno, f"bad number {tok!r}")
    return [float(t) for t in toks]


def _matrix(text: str, lineno: int) -> np.ndarray:
    rows = [_numbers(r, lineno) for r in text[1:-1].split(";")]
    if not rows or any(len(r) == 0 for r in rows) or len({len(r) for r in rows}) != 1:
        raise ModelSyntaxError(lineno, "malformed matrix")
    return np.array(rows)


def _vector(text: str, lineno: int) -> np.ndarray:
    vals = _numbers(text[1:-1], lineno)
    if not vals:
        raise ModelSyntaxError(lineno, "empty vector")
    return np.array(vals)


def _boxspec(text: str, lineno: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = [], []
    for part in text[1:-1].split(";"):
        pieces = part.split(",") if "," in part else part.split("..")
        if len(pieces) != 2:
            raise ModelSyntaxError(lineno, f"bad interval {part.strip()!r}")
        a, b = (_numbers(p, lineno) for p in pieces)
        if len(a) != 1 or len(b) != 1:
            raise ModelSyntaxError(lineno, f"bad interval {part.strip()!r}")
        lo.append(a[0])
        hi.append(b[0])
    return np.array(lo), np.array(hi)


def _halfspace(coeffs: str, rhs: str, lineno: int) -> HalfSpace:
    a = _numbers(coeffs, lineno)
    if not any(a):
        raise ModelSyntaxError(lineno, "constraint normal is zero")
    return HalfSpace(np.array(a), float(rhs))


def parse_model(text: str) -> HybridAutomaton:
    """Parse and validate a model; raises ModelSyntaxError or ModelError."""
    dim = None
    variables = None
    name = "model"
    locations = []
    transitions = []
    init = None
    current = None  # ("location", dict) or ("transition", dict)
    last_line = 0

    def close():
        nonlocal current
        if current is None:
            return
        kind, d = current
        try:
            if kind == "location":
                if "dyn" not in d:
                    raise ModelSyntaxError(d["line"], "location without flow line")
                locations.append(Location(d["id"], d["name"], d["dyn"], tuple(d["inv"]), tuple(d["tags"])))
            else:
                M = d.get("M", np.eye(dim))
                v = d.get("v", np.zeros(dim))
                transitions.append(Transition(d["src"], d["dst"], tuple(d["guard"]), M, v))
        except ModelError as e:
            raise ModelError(f"line {d['line']}: {e}") from None
        current = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        last_line = lineno
        key = line.split(None, 1)[0]
        pat = _LINES.get(key)
        m = pat.fullmatch(line) if pat else None
        if m is None:
            raise ModelSyntaxError(lineno, f"cannot parse {line!r}")
        if key != "dim" and dim is None:
            raise ModelSyntaxError(lineno, "model must start with 'dim'")
        if key not in ("dim", "vars") and variables is None:
            raise ModelSyntaxError(lineno, "'vars' must follow 'dim'")

        if key == "dim":
            if dim is not None:
                raise ModelSyntaxError(lineno, "duplicate 'dim'")
            dim = int(m.group(1))
        elif key == "vars":
            if variables is not None:
                raise ModelSyntaxError(lineno, "duplicate 'vars'")
            variables = tuple(m.group(1).split())
            if len(variables) != dim:
                raise ModelError(f"line {lineno}: {len(variables)} variables for dim {dim}")
        elif key == "name":
            name = m.group(1)
        elif key in ("location", "transition", "init"):
            close()
            if key == "location":
                current = ("location", {"id": int(m.group(1)), "name": m.group(2) or f"loc{m.group(1)}",
                                        "inv": [], "tags": [], "line": lineno})
            elif key == "transition":
                current = ("transition", {"src": int(m.group(1)), "dst": int(m.group(2)),
                                          "guard": [], "line": lineno})
            else:
                if init is not None:
                    raise ModelSyntaxError(lineno, "duplicate 'init'")
                lo, hi = _boxspec(m.group(2), lineno)
                init = (int(m.group(1)), lo, hi, lineno)
        elif key in ("flow", "inv", "tag"):
            if current is None or current[0] != "location":
                raise ModelSyntaxError(lineno, f"'{key}' outside a location block")
            d = current[1]
            if key == "flow":
                if "dyn" in d:
                    raise ModelSyntaxError(lineno, "duplicate flow line")
                A = _matrix(m.group(1), lineno)
                if m.group(2) is not None:
                    inp = FixedInput(_vector(m.group(2), lineno))
                else:
                    lo, hi = _boxspec(m.group(3), lineno)
                    try:
                        inp = SetInput(Box(lo, hi))
                    except ValueError as e:
                        raise ModelError(f"line {lineno}: {e}") from None
                try:
                    d["dyn"] = Dynamics(A, inp)
                except ModelError as e:
                    raise ModelError(f"line {lineno}: {e}") from None
            elif key == "inv":
                d["inv"].append(_halfspace(m.group(1), m.group(2), lineno))
            else:
                d["tags"].append(m.group(1))
        else:  # guard, map
            if current is None or current[0] != "transition":
                raise ModelSyntaxError(lineno, f"'{key}' outside a transition block")
            d = current[1]
            if key == "guard":
                d["guard"].append(_halfspace(m.group(1), m.group(2), lineno))
            else:
                if "M" in d:
                    raise ModelSyntaxError(lineno, "duplicate map line")
                d["M"] = _matrix(m.group(1), lineno)
                d["v"] = _vector(m.group(2), lineno)

    if dim is None:
        raise ModelSyntaxError(max(last_line, 1), "empty model")
    if variables is None:
        raise ModelSyntaxError(last_line, "missing 'vars'")
    close()
    if init is None:
        raise ModelSyntaxError(last_line, "missing 'init'")
    loc_id, lo, hi, init_line = init
    if lo.size != dim:
        raise ModelError(f"line {init_line}: initial box has dimension {lo.size}, expected {dim}")
    try:
        init_set = Box(lo, hi)
    except ValueError as e:
        raise ModelError(f"line {init_line}: empty initial set ({e})") from None
    return HybridAutomaton(dim, variables, locations, transitions, loc_id, init_set, name=name)


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_matrix(M: np.ndarray) -> str:
    return "[" + "; ".join(" ".join(_fmt(x) for x in row) for row in M) + "]"


def _fmt_vector(v: np.ndarray) -> str:
    return "[" + " ".join(_fmt(x) for x in v) + "]"


def _fmt_box(lo, hi) -> str:
    return "[" + "; ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(lo, hi)) + "]"


def _fmt_halfspace(kw: str, hs: HalfSpace) -> str:
    return f"{kw} " + " ".join(_fmt(x) for x in hs.normal) + f" <= {_fmt(hs.offset)}"


def render(ha: HybridAutomaton) -> str:
    """Serialize ``ha`` so that ``parse_model(render(ha)) == ha``."""
    out = [f"dim {ha.dim}", "vars " + " ".join(ha.variables), f"name {ha.name}"]
    for loc in ha.locations:
        out.append(f"location {loc.id} name={loc.name}")
        inp = loc.dynamics.input
        if isinstance(inp, FixedInput):
            flow = f"u = {_fmt_vector(inp.u)}"
        else:
            flow = f"U = box {_fmt_box(inp.U.lower, inp.U.upper)}"
        out.append(f"  flow A = {_fmt_matrix(loc.dynamics.A)}  {flow}")
        out.extend("  " + _fmt_halfspace("inv", hs) for hs in loc.invariant)
        out.extend(f"  tag {t}" for t in loc.tags)
    for t in ha.transitions:
        out.append(f"transition {t.source} -> {t.target}")
        out.extend("  " + _fmt_halfspace("guard", hs) for hs in t.guard)
        out.append(f"  map M = {_fmt_matrix(t.M)}  v = {_fmt_vector(t.v)}")
    out.append(f"init location={ha.init_loc} box {_fmt_box(ha.init_set.lower, ha.init_set.upper)}")
    return "\n".join(out) + "\n"
