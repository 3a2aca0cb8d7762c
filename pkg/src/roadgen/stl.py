"""Signal temporal logic: concrete grammar, AST, and discrete-time monitor.

The fragment is

    phi := true | f ~ c | !phi | phi & phi | phi | phi | phi -> phi
         | F[a,b] phi | G[a,b] phi | phi U[a,b] phi

with ~ one of < <= > >=, F/G optionally untimed (read as "over the rest of
the trace"), and U always windowed. Implication is desugared to !phi | psi
at parse time. Semantics are pointwise over the shared sample grid of a
Trace: a window t + [a, b] selects exactly the samples whose timestamps
fall inside it, with no interpolation. The quantitative semantics is the
usual max/min robustness; an empty window makes G vacuously true and F/U
false, encoded with a large finite sentinel so arithmetic stays total.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .signals import SampledSignal, Trace

__all__ = [
    "Interval",
    "TrueFormula",
    "Pred",
    "Not",
    "And",
    "Or",
    "Implies",
    "Eventually",
    "Always",
    "Until",
    "Verdict",
    "StlSyntaxError",
    "UnknownOperator",
    "MalformedInterval",
    "UnboundSignal",
    "parse_stl",
    "format_stl",
    "monitor_bool",
    "monitor_robust",
    "monitor",
    "BIG",
]

# sentinel standing in for +/- infinity on empty temporal windows
BIG = 1e9

COMPARATORS = ("<=", ">=", "<", ">")


class StlSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class UnknownOperator(StlSyntaxError):
    pass


class MalformedInterval(ValueError):
    pass


class UnboundSignal(KeyError):
    pass


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise MalformedInterval("interval bounds must be finite")
        if a < 0 or b < 0:
            raise MalformedInterval(f"interval bounds must be nonnegative, got [{a},{b}]")
        if a > b:
            raise MalformedInterval(f"interval must satisfy a <= b, got [{a},{b}]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class TrueFormula:
    pass


@dataclass(frozen=True)
class Pred:
    signal_name: str
    comparator: str
    threshold: float

    def __post_init__(self):
        if self.comparator not in COMPARATORS:
            raise ValueError(f"bad comparator {self.comparator!r}")
        if not self.signal_name:
            raise ValueError("empty signal name")
        if not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")


@dataclass(frozen=True)
class Not:
    child: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


def Implies(left, right) -> Or:
    """Sugar: phi -> psi is !phi | psi."""
    return Or(Not(left), right)


@dataclass(frozen=True)
class Eventually:
    interval: Interval | None
    child: object


@dataclass(frozen=True)
class Always:
    interval: Interval | None
    child: object


@dataclass(frozen=True)
class Until:
    interval: Interval
    left: object
    right: object


@dataclass(frozen=True)
class Verdict:
    satisfied: bool
    robustness: float


# ---------------------------------------------------------------------------
# lexer / parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(\.\d+)?([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<implies>->)
  | (?P<cmp><=|>=|<|>)
  | (?P<minus>-)
  | (?P<punct>[()\[\],!&|])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise StlSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        if kind != "ws":
            tok_kind = raw if kind == "punct" else kind
            tokens.append(_Token(tok_kind, raw, line, col))
        newlines = raw.count("\n")
        if newlines:
            line += newlines
            col = len(raw) - raw.rfind("\n")
        else:
            col += len(raw)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise StlSyntaxError(f"expected {kind!r}, found {tok.text or 'end of input'!r}",
                                 tok.line, tok.col)
        return tok

    def parse(self):
        formula = self.parse_implies()
        tok = self.peek()
        if tok.kind != "eof":
            raise StlSyntaxError(f"unexpected trailing input {tok.text!r}", tok.line, tok.col)
        return formula

    # precedence: ! > U > & > | > ->
    def parse_implies(self):
        left = self.parse_or()
        if self.peek().kind == "implies":
            self.next()
            right = self.parse_implies()
            return Implies(left, right)
        return left

    def parse_or(self):
        left = self.parse_and()
        while self.peek().kind == "|":
            self.next()
            left = Or(left, self.parse_and())
        return left

    def parse_and(self):
        left = self.parse_until()
        while self.peek().kind == "&":
            self.next()
            left = And(left, self.parse_until())
        return left

    def parse_until(self):
        left = self.parse_unary()
        while self.peek().kind == "ident" and self.peek().text == "U":
            self.next()
            interval = self.parse_window(required=True)
            self.expect("(")
            right = self.parse_implies()
            self.expect(")")
            left = Until(interval, left, right)
        return left

    def parse_unary(self):
        tok = self.peek()
        if tok.kind == "!":
            self.next()
            return Not(self.parse_unary())
        if tok.kind == "(":
            self.next()
            inner = self.parse_implies()
            self.expect(")")
            return inner
        if tok.kind == "ident":
            if tok.text == "true":
                self.next()
                return TrueFormula()
            if tok.text in ("F", "G"):
                self.next()
                interval = self.parse_window(required=False)
                self.expect("(")
                child = self.parse_implies()
                self.expect(")")
                return Eventually(interval, child) if tok.text == "F" else Always(interval, child)
            return self.parse_predicate()
        raise StlSyntaxError(f"expected a formula, found {tok.text or 'end of input'!r}",
                             tok.line, tok.col)

    def parse_predicate(self):
        name_tok = self.expect("ident")
        nxt = self.peek()
        if nxt.kind in ("(", "["):
            raise UnknownOperator(f"unknown temporal operator {name_tok.text!r}",
                                  name_tok.line, name_tok.col)
        if nxt.kind != "cmp":
            raise StlSyntaxError(f"expected a comparator after {name_tok.text!r}, "
                                 f"found {nxt.text or 'end of input'!r}", nxt.line, nxt.col)
        cmp_tok = self.next()
        value = self.parse_number()
        return Pred(name_tok.text, cmp_tok.text, value)

    def parse_number(self) -> float:
        sign = 1.0
        if self.peek().kind == "minus":
            self.next()
            sign = -1.0
        tok = self.expect("number")
        return sign * float(tok.text)

    def parse_window(self, required: bool) -> Interval | None:
        if self.peek().kind != "[":
            if required:
                tok = self.peek()
                raise StlSyntaxError("U requires a time window [a,b]", tok.line, tok.col)
            return None
        self.next()
        a = self.parse_number()
        self.expect(",")
        b = self.parse_number()
        self.expect("]")
        return Interval(a, b)


def parse_stl(text: str):
    """Parse concrete STL syntax into an AST."""
    return _Parser(text).parse()


def format_stl(formula) -> str:
    """Canonical concrete syntax; parse(format_stl(f)) is structurally f."""
    if isinstance(formula, TrueFormula):
        return "true"
    if isinstance(formula, Pred):
        return f"{formula.signal_name} {formula.comparator} {formula.threshold!r}"
    if isinstance(formula, Not):
        return f"!({format_stl(formula.child)})"
    if isinstance(formula, And):
        return f"({format_stl(formula.left)} & {format_stl(formula.right)})"
    if isinstance(formula, Or):
        return f"({format_stl(formula.left)} | {format_stl(formula.right)})"
    if isinstance(formula, (Eventually, Always)):
        op = "F" if isinstance(formula, Eventually) else "G"
        win = "" if formula.interval is None else f"[{formula.interval.a!r},{formula.interval.b!r}]"
        return f"{op}{win}({format_stl(formula.child)})"
    if isinstance(formula, Until):
        win = f"[{formula.interval.a!r},{formula.interval.b!r}]"
        return f"(({format_stl(formula.left)}) U{win}({format_stl(formula.right)}))"
    raise TypeError(f"not a formula: {formula!r}")


# ---------------------------------------------------------------------------
# monitors

def _signal_values(trace: Trace, name: str) -> np.ndarray:
    if name not in trace.signals:
        raise UnboundSignal(name)
    return trace.signals[name].values


def _window_bounds(ts: np.ndarray, i: int, interval: Interval | None) -> tuple[int, int]:
    """Index range [lo, hi) of samples with timestamp in ts[i] + [a, b]."""
    if interval is None:
        return i, len(ts)
    lo = int(np.searchsorted(ts, ts[i] + interval.a, side="left"))
    hi = int(np.searchsorted(ts, ts[i] + interval.b, side="right"))
    return lo, hi


def _sat_all(formula, trace: Trace) -> np.ndarray:
    """Boolean satisfaction of `formula` at every sample index."""
    ts = trace.timestamps
    n = len(ts)
    if isinstance(formula, TrueFormula):
        return np.ones(n, dtype=bool)
    if isinstance(formula, Pred):
        v = _signal_values(trace, formula.signal_name)
        c = formula.threshold
        return {"<": v < c, "<=": v <= c, ">": v > c, ">=": v >= c}[formula.comparator]
    if isinstance(formula, Not):
        return ~_sat_all(formula.child, trace)
    if isinstance(formula, And):
        return _sat_all(formula.left, trace) & _sat_all(formula.right, trace)
    if isinstance(formula, Or):
        return _sat_all(formula.left, trace) | _sat_all(formula.right, trace)
    if isinstance(formula, (Eventually, Always)):
        child = _sat_all(formula.child, trace)
        vacuous = isinstance(formula, Always)
        if formula.interval is None:
            # suffix any/all over the remaining horizon
            op = np.logical_or if isinstance(formula, Eventually) else np.logical_and
            return op.accumulate(child[::-1])[::-1]
        out = np.empty(n, dtype=bool)
        for i in range(n):
            lo, hi = _window_bounds(ts, i, formula.interval)
            if lo >= hi:
                out[i] = vacuous
            elif vacuous:
                out[i] = bool(child[lo:hi].all())
            else:
                out[i] = bool(child[lo:hi].any())
        return out
    if isinstance(formula, Until):
        left = _sat_all(formula.left, trace)
        right = _sat_all(formula.right, trace)
        out = np.zeros(n, dtype=bool)
        for i in range(n):
            lo, hi = _window_bounds(ts, i, formula.interval)
            ok = False
            all_left = True
            for j in range(i, hi):
                all_left = all_left and bool(left[j])
                if j >= lo and right[j] and all_left:
                    ok = True
                    break
                if not all_left:
                    break
            out[i] = ok
        return out
    raise TypeError(f"not a formula: {formula!r}")


def _rho_all(formula, trace: Trace) -> np.ndarray:
    """Quantitative robustness of `formula` at every sample index."""
    ts = trace.timestamps
    n = len(ts)
    if isinstance(formula, TrueFormula):
        return np.full(n, math.inf)
    if isinstance(formula, Pred):
        v = _signal_values(trace, formula.signal_name)
        c = formula.threshold
        return v - c if formula.comparator in (">", ">=") else c - v
    if isinstance(formula, Not):
        return -_rho_all(formula.child, trace)
    if isinstance(formula, And):
        return np.minimum(_rho_all(formula.left, trace), _rho_all(formula.right, trace))
    if isinstance(formula, Or):
        return np.maximum(_rho_all(formula.left, trace), _rho_all(formula.right, trace))
    if isinstance(formula, (Eventually, Always)):
        child = _rho_all(formula.child, trace)
        is_always = isinstance(formula, Always)
        if formula.interval is None:
            op = np.minimum if is_always else np.maximum
            return op.accumulate(child[::-1])[::-1]
        out = np.empty(n)
        for i in range(n):
            lo, hi = _window_bounds(ts, i, formula.interval)
            if lo >= hi:
                out[i] = BIG if is_always else -BIG
            else:
                out[i] = child[lo:hi].min() if is_always else child[lo:hi].max()
        return out
    if isinstance(formula, Until):
        left = _rho_all(formula.left, trace)
        right = _rho_all(formula.right, trace)
        out = np.full(n, -BIG)
        for i in range(n):
            lo, hi = _window_bounds(ts, i, formula.interval)
            best = -math.inf
            run = math.inf
            for j in range(i, hi):
                run = min(run, left[j])
                if j >= lo:
                    best = max(best, min(right[j], run))
            out[i] = -BIG if lo >= hi else best
        return out
    raise TypeError(f"not a formula: {formula!r}")


def _check_index(trace: Trace, t_index: int) -> None:
    if not (0 <= t_index < len(trace)):
        raise IndexError(f"t_index {t_index} outside trace of length {len(trace)}")


def monitor_bool(formula, trace: Trace, t_index: int = 0) -> bool:
    """Discrete-time boolean satisfaction of `formula` at sample t_index."""
    _check_index(trace, t_index)
    return bool(_sat_all(formula, trace)[t_index])


def monitor_robust(formula, trace: Trace, t_index: int = 0) -> float:
    """Quantitative robustness of `formula` at sample t_index."""
    _check_index(trace, t_index)
    return float(_rho_all(formula, trace)[t_index])


def monitor(formula, trace: Trace) -> Verdict:
    """Both semantics at the start of the trace."""
    return Verdict(satisfied=monitor_bool(formula, trace, 0),
                   robustness=monitor_robust(formula, trace, 0))
