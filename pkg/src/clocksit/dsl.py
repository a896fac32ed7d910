"""Text formats: action theories (``.bat``), formulas, Golog programs
(``.gpr``), situations, two-counter machines (``.2cm``) and timed automata
(``.ta``).  Every parse error carries a :class:`SourceSpan`.

Theory syntax::

    bat coffee {
      objects Pot, Mug1, Mug2;
      rigids wantStrong/1;
      actions sBrew/1, eBrew/1;
      fluents brew/1, isFull/1;
      clocks c_brew/1, c_glob/0;
      init wantStrong(Mug1);
      poss eBrew(p) := brew(p) & c_brew(p) >= 1;
      ssa brew(p) := a == sBrew(p) | brew(p) & !(a == eBrew(p));
      reset c_brew(p) := a == sBrew(p);
    }

``wait`` is always declared implicitly.  Connectives ``! & | -> <->``,
quantifiers ``forall x, y. phi`` / ``exists x. phi``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .encoders import (Constraint, Dec, FunctionalSSA, GeneralBAT, Halt, Inc,
                       Switch, TimedAutomaton, TwoCounterMachine, Update)
from .golog import (Act, Choice, Conc, Pick, Program, Seq, Star, Test,
                    if_then_else, while_do)
from .model import (BAT, FALSE, TRUE, WAIT, ActionEq, ActionSchema, And, Atom,
                    Axiom, ClockCmp, ClockRelation, Const, Equal, Exists,
                    Forall, Formula, GroundAction, Iff, Implies, Not, NumCmp,
                    Obj, Or, Poss, Situation, SituationRelation, SourceSpan,
                    Symbol, TimeQuantifier, Var, format_rational, validate_bat)

__all__ = [
    "DslError", "SourceSpan", "parse_bat", "parse_general_bat", "parse_formula",
    "parse_program", "parse_situation", "parse_2cm", "parse_ta",
    "serialize_bat", "serialize_general_bat", "serialize_program",
    "serialize_2cm", "serialize_ta", "format_formula",
]


class DslError(Exception):
    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.message = message
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


# ------------------------------------------------------------------ lexer

@dataclass(frozen=True)
class Token:
    kind: str  # name, num, op, eof
    value: str
    span: SourceSpan


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op><->|->|:=|==|!=|<=|>=|\|\||[<>=!&|(){}\[\],;.:*?/+\-])
""", re.VERBOSE)


def tokenize(text: str, file: str = "<input>") -> list:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DslError(f"unexpected character {text[pos]!r}",
                           SourceSpan(file, line, col, 1))
        kind = m.lastgroup
        value = m.group()
        if kind in ("num", "name", "op"):
            tokens.append(Token(kind, value, SourceSpan(file, line, col, len(value))))
        nl = value.count("\n")
        if nl:
            line += nl
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(file, line, col, 0)))
    return tokens


# ---------------------------------------------------------------- symbols

class Symbols:
    """Name resolution context for formulas and programs."""

    def __init__(self, objects=(), preds=None, clocks=None, actions=None):
        self.objects = set(objects)
        self.preds = dict(preds or {})
        self.clocks = dict(clocks or {})
        self.actions = dict(actions or {})

    @classmethod
    def of(cls, bat) -> "Symbols":
        if isinstance(bat, GeneralBAT):
            return cls(bat.objects, {s.name: s.arity for s in bat.fluents},
                       {s.name: s.arity for s in bat.functions},
                       {s.name: s.arity for s in bat.actions})
        return cls(bat.objects, {s.name: s.arity for s in bat.fluents + bat.rigids},
                   {s.name: s.arity for s in bat.clocks},
                   {s.name: s.arity for s in bat.actions})


CMP_OPS = ("<", "<=", "=", ">=", ">")
KEYWORDS = {"forall", "exists", "true", "false", "a", "poss", "nil", "test",
            "pick", "if", "then", "else", "fi", "while", "do", "done"}
FORMULA_STOP = {"then", "do", "fi", "done", "else"}


class Parser:
    def __init__(self, text: str, file: str = "<input>", symbols: Optional[Symbols] = None):
        self.tokens = tokenize(text, file)
        self.pos = 0
        self.file = file
        self.sym = symbols or Symbols()
        self.action_var = False  # whether `a == A(..)` is allowed
        self.allow_rational = False

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def at(self, *values: str) -> bool:
        t = self.tok
        return t.kind in ("op", "name") and t.value in values

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, msg: str, tok: Optional[Token] = None):
        raise DslError(msg, (tok or self.tok).span)

    def expect(self, value: str) -> Token:
        if not self.at(value):
            shown = self.tok.value or "end of input"
            self.error(f"expected '{value}', found '{shown}'")
        return self.advance()

    def name(self, what: str = "name") -> Token:
        if self.tok.kind != "name":
            shown = self.tok.value or "end of input"
            self.error(f"expected {what}, found '{shown}'")
        return self.advance()

    def natural(self, what: str = "number") -> int:
        t = self.tok
        if t.kind != "num" or "." in t.value:
            self.error(f"expected a natural number for {what}")
        self.advance()
        return int(t.value)

    def number(self, what: str) -> Fraction:
        """Natural number, or a rational when ``allow_rational``; a decimal
        or fraction is reported as a non-natural bound."""
        neg = False
        start = self.tok
        if self.allow_rational and self.at("-"):
            self.advance()
            neg = True
        t = self.tok
        if t.kind != "num":
            self.error(f"expected a number for {what}")
        self.advance()
        value = Fraction(t.value)
        if self.at("/") and self.peek().kind == "num":
            self.advance()
            value /= Fraction(self.advance().value)
        if neg:
            value = -value
        if not self.allow_rational and (value.denominator != 1 or "." in t.value):
            raise DslError(f"{what} must be a natural number", start.span)
        return value

    def done(self):
        if self.tok.kind != "eof":
            self.error(f"unexpected '{self.tok.value}'")

    # -- formulas
    def formula(self, bound: frozenset = frozenset()) -> Formula:
        return self._iff(bound)

    def _iff(self, bound):
        left = self._impl(bound)
        while self.at("<->"):
            t = self.advance()
            left = Iff(left, self._impl(bound), span=t.span)
        return left

    def _impl(self, bound):
        left = self._or(bound)
        if self.at("->"):
            t = self.advance()
            return Implies(left, self._impl(bound), span=t.span)
        return left

    def _or(self, bound):
        start = self.tok
        parts = [self._and(bound)]
        while self.at("|"):
            self.advance()
            parts.append(self._and(bound))
        return parts[0] if len(parts) == 1 else Or(tuple(parts), span=start.span)

    def _and(self, bound):
        start = self.tok
        parts = [self._unary(bound)]
        while self.at("&"):
            self.advance()
            parts.append(self._unary(bound))
        return parts[0] if len(parts) == 1 else And(tuple(parts), span=start.span)

    def _unary(self, bound):
        t = self.tok
        if self.at("!"):
            self.advance()
            return Not(self._unary(bound), span=t.span)
        if self.at("forall", "exists"):
            self.advance()
            names = [self.name("variable")]
            while self.at(","):
                self.advance()
                names.append(self.name("variable"))
            self.expect(".")
            inner = bound
            for n in names:
                if n.value in self.sym.objects:
                    self.error(f"variable {n.value} shadows an object", n)
                inner = inner | {n.value}
            body = self._iff(inner)
            cls = Forall if t.value == "forall" else Exists
            for n in reversed(names):
                body = cls(n.value, body, span=n.span)
            return body
        return self._primary(bound)

    def _term(self, bound, tok: Optional[Token] = None):
        t = tok or self.name("term")
        if t.value in bound:
            return Var(t.value)
        if t.value in self.sym.objects:
            return Obj(t.value)
        self.error(f"unknown symbol {t.value}", t)

    def _args(self, bound) -> tuple:
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self._term(bound))
            while self.at(","):
                self.advance()
                args.append(self._term(bound))
        self.expect(")")
        return tuple(args)

    def _opt_args(self, bound) -> tuple:
        return self._args(bound) if self.at("(") else ()

    def _check_arity(self, tok: Token, table: dict, args: tuple, what: str):
        if table[tok.value] != len(args):
            self.error(f"arity mismatch: {what} {tok.value} takes "
                       f"{table[tok.value]} argument(s), got {len(args)}", tok)

    def _primary(self, bound):
        t = self.tok
        if self.at("("):
            self.advance()
            f = self._iff(bound)
            self.expect(")")
            return f
        if self.at("true"):
            self.advance()
            return Const(True, span=t.span)
        if self.at("false"):
            self.advance()
            return Const(False, span=t.span)
        if t.kind == "num" or (self.allow_rational and self.at("-")):
            left = self.number("time constant")
            op = self._cmp_op()
            right = self.number("time constant")
            return NumCmp(left, op, right, span=t.span)
        if self.at("a") and self.peek().value == "==" and "a" not in bound:
            if not self.action_var:
                self.error("action equality is only allowed in SSA and reset bodies")
            self.advance()
            self.advance()
            at = self.name("action")
            if at.value not in self.sym.actions:
                self.error(f"unknown symbol {at.value}", at)
            args = self._opt_args(bound)
            self._check_arity(at, self.sym.actions, args, "action")
            return ActionEq(at.value, args, span=t.span)
        if self.at("poss") and self.peek().value == "(":
            self.advance()
            self.expect("(")
            at = self.name("action")
            if at.value not in self.sym.actions:
                self.error(f"unknown symbol {at.value}", at)
            args = self._opt_args(bound)
            self._check_arity(at, self.sym.actions, args, "action")
            self.expect(")")
            return Poss(at.value, args, span=t.span)
        nt = self.name("formula")
        if nt.value in self.sym.clocks and nt.value not in bound:
            args = self._opt_args(bound)
            self._check_arity(nt, self.sym.clocks, args, "clock")
            op = self._cmp_op()
            if self.tok.kind == "name" and self.tok.value in self.sym.clocks:
                rt = self.advance()
                rargs = self._opt_args(bound)
                self._check_arity(rt, self.sym.clocks, rargs, "clock")
                return ClockRelation(nt.value, args, op, rt.value, rargs, span=nt.span)
            bound_value = self.number("clock bound")
            return ClockCmp(nt.value, args, op, bound_value, span=nt.span)
        if nt.value in self.sym.preds and nt.value not in bound:
            args = self._opt_args(bound)
            self._check_arity(nt, self.sym.preds, args, "predicate")
            return Atom(nt.value, args, span=nt.span)
        left = self._term(bound, nt)
        if self.at("=", "!="):
            op = self.advance().value
            right = self._term(bound)
            eq = Equal(left, right, span=nt.span)
            return eq if op == "=" else Not(eq, span=nt.span)
        self.error(f"expected a comparison after term {nt.value}", nt)

    def _cmp_op(self) -> str:
        if not self.at(*CMP_OPS):
            self.error("expected a comparison operator")
        return self.advance().value

    # -- programs
    def program(self, bound: frozenset = frozenset()) -> Program:
        return self._conc(bound)

    def _conc(self, bound):
        left = self._choice(bound)
        if self.at("||"):
            t = self.advance()
            return Conc(left, self._conc(bound), span=t.span)
        return left

    def _choice(self, bound):
        left = self._seq(bound)
        if self.at("|"):
            t = self.advance()
            return Choice(left, self._choice(bound), span=t.span)
        return left

    _SEQ_END = {")", "]", "done", "fi", "else", "then", "||", "|", ""}

    def _seq(self, bound):
        left = self._postfix(bound)
        if self.at(";"):
            t = self.advance()
            if self.tok.kind == "eof" or self.at(*self._SEQ_END):
                return left  # trailing separator
            return Seq(left, self._seq(bound), span=t.span)
        return left

    def _postfix(self, bound):
        p = self._prog_primary(bound)
        while self.at("*"):
            t = self.advance()
            p = Star(p, span=t.span)
        return p

    def _prog_primary(self, bound):
        t = self.tok
        if self.at("(", "["):
            close = ")" if t.value == "(" else "]"
            self.advance()
            p = self._conc(bound)
            self.expect(close)
            return p
        if self.at("nil"):
            self.advance()
            return Test(TRUE, span=t.span)
        if self.at("test") or self.at("?"):
            self.advance()
            self.expect("(")
            f = self.formula(bound)
            self.expect(")")
            return Test(f, span=t.span)
        if self.at("if"):
            self.advance()
            cond = self.formula(bound)
            if not self.at("then", "do"):
                self.expect("then")
            self.advance()
            then = self._conc(bound)
            self.expect("else")
            other = self._conc(bound)
            self.expect("fi")
            return if_then_else(cond, then, other)
        if self.at("while"):
            self.advance()
            cond = self.formula(bound)
            self.expect("do")
            body = self._conc(bound)
            self.expect("done")
            return while_do(cond, body)
        if self.at("pick"):
            self.advance()
            v = self.name("variable")
            if v.value in self.sym.objects:
                self.error(f"variable {v.value} shadows an object", v)
            self.expect(".")
            body = self._conc(bound | {v.value})
            return Pick(v.value, body, span=t.span)
        at = self.name("program")
        if at.value not in self.sym.actions:
            self.error(f"unknown symbol {at.value}", at)
        if at.value == WAIT:
            self.expect("(")
            if not self.at(")"):
                self.error("wait in a program takes no duration")
            self.expect(")")
            return Act(WAIT, (), span=at.span)
        args = self._opt_args(bound)
        self._check_arity(at, self.sym.actions, args, "action")
        return Act(at.value, args, span=at.span)

    # -- situations
    def ground_action(self) -> GroundAction:
        at = self.name("action")
        if at.value not in self.sym.actions:
            self.error(f"unknown symbol {at.value}", at)
        if at.value == WAIT:
            self.expect("(")
            old = self.allow_rational
            self.allow_rational = True
            d = self.number("wait duration")
            self.allow_rational = old
            if d < 0:
                self.error("wait duration must be nonnegative", at)
            self.expect(")")
            return GroundAction(WAIT, (), d)
        args = self._opt_args(frozenset())
        self._check_arity(at, self.sym.actions, args, "action")
        return GroundAction(at.value, tuple(o.name for o in args))


# ----------------------------------------------------------- BAT parsing

def _symbols_list(p: Parser) -> list:
    out = []
    while not p.at(";"):
        t = p.name("symbol")
        arity = 0
        if p.at("/"):
            p.advance()
            arity = p.natural("arity")
        out.append((t, arity))
        if not p.at(","):
            break
        p.advance()
        if p.at(";"):
            p.error("expected symbol, found ';'")
    p.expect(";")
    return out


def _params(p: Parser) -> list:
    names = []
    if p.at("("):
        p.advance()
        if not p.at(")"):
            names.append(p.name("parameter"))
            while p.at(","):
                p.advance()
                names.append(p.name("parameter"))
        p.expect(")")
    return names


def _skip_statement(p: Parser):
    depth = 0
    while True:
        t = p.tok
        if t.kind == "eof":
            p.error("unterminated statement")
        if t.value == "{":
            depth += 1
        elif t.value == "}":
            if depth == 0:
                p.error("expected ';'")
            depth -= 1
        elif t.value == ";" and depth == 0:
            p.advance()
            return
        p.advance()


@dataclass
class _RawBat:
    name: str
    header: Token
    general: bool
    decls: dict  # kind -> list of (Token, arity)
    function_init: dict
    init_pos: list
    axioms: list  # (kind, name token, param tokens, body position)


_SECTIONS = ("objects", "rigids", "actions", "fluents", "clocks", "functions",
             "init", "poss", "ssa", "reset", "fssa", "goal", "general")


def _scan_bat(p: Parser) -> _RawBat:
    header = p.expect("bat")
    name = ""
    if p.tok.kind == "name":
        name = p.advance().value
    p.expect("{")
    raw = _RawBat(name, header, False, {}, {}, [], [])
    while not p.at("}"):
        t = p.tok
        if t.kind != "name" or t.value not in _SECTIONS:
            p.error(f"unknown section '{t.value or 'end of input'}'")
        p.advance()
        if t.value == "general":
            p.expect(":")
            v = p.name("true or false")
            raw.general = v.value == "true"
            p.expect(";")
        elif t.value in ("objects",):
            names = [p.name("object")]
            while p.at(","):
                p.advance()
                names.append(p.name("object"))
            p.expect(";")
            raw.decls.setdefault("objects", []).extend((n, 0) for n in names)
        elif t.value in ("rigids", "actions", "fluents", "clocks"):
            raw.decls.setdefault(t.value, []).extend(_symbols_list(p))
        elif t.value == "functions":
            while True:
                n = p.name("function")
                arity = 0
                if p.at("/"):
                    p.advance()
                    arity = p.natural("arity")
                p.expect("=")
                p.allow_rational = True
                v = p.number("initial value")
                p.allow_rational = False
                raw.decls.setdefault("functions", []).append((n, arity))
                raw.function_init[n.value] = v
                if not p.at(","):
                    break
                p.advance()
            p.expect(";")
        elif t.value == "init":
            raw.init_pos.append(p.pos)
            _skip_statement(p)
        elif t.value == "goal":
            raw.axioms.append(("goal", t, [], p.pos))
            _skip_statement(p)
        else:
            n = p.name("symbol")
            params = _params(p)
            p.expect(":=")
            raw.axioms.append((t.value, n, params, p.pos))
            _skip_statement(p)
    p.expect("}")
    p.done()
    return raw


def _declare(raw: _RawBat, p: Parser, general: bool):
    if "actions" not in raw.decls:
        raise DslError("missing actions block", raw.header.span)
    seen = {}
    for kind in ("objects", "rigids", "actions", "fluents", "clocks", "functions"):
        for tok, _ in raw.decls.get(kind, []):
            if tok.value in KEYWORDS:
                p.error(f"'{tok.value}' is reserved", tok)
            if tok.value == WAIT:
                p.error("wait is declared implicitly", tok)
            if tok.value in seen:
                p.error(f"duplicate declaration of {tok.value}", tok)
            seen[tok.value] = kind
    if general and raw.decls.get("clocks"):
        p.error("general theories declare numeric fluents under 'functions'",
                raw.decls["clocks"][0][0])
    if not general:
        for kind in ("functions",):
            if raw.decls.get(kind):
                p.error("'functions' is only allowed in general theories",
                        raw.decls[kind][0][0])
    objects = tuple(t.value for t, _ in raw.decls.get("objects", []))
    syms = {k: tuple(Symbol(t.value, a) for t, a in raw.decls.get(k, []))
            for k in ("rigids", "actions", "fluents", "clocks", "functions")}
    actions = tuple(ActionSchema(s.name, s.arity) for s in syms["actions"])
    actions += (ActionSchema(WAIT, 0, True),)
    return objects, syms, actions


def _parse_init(raw: _RawBat, p: Parser) -> frozenset:
    atoms = set()
    for pos in raw.init_pos:
        p.pos = pos
        while not p.at(";"):
            t = p.name("ground atom")
            if t.value not in p.sym.preds:
                if t.value in p.sym.clocks:
                    p.error(f"clock {t.value} is initialised to zero implicitly", t)
                p.error(f"unknown symbol {t.value}", t)
            args = p._opt_args(frozenset())
            p._check_arity(t, p.sym.preds, args, "predicate")
            atoms.add((t.value, tuple(a.name for a in args)))
            if not p.at(","):
                break
            p.advance()
        p.expect(";")
    return frozenset(atoms)


def _axiom_body(p: Parser, kind: str, name: Token, params: list, pos: int,
                table: dict, what: str):
    if name.value not in table:
        p.error(f"unknown symbol {name.value}", name)
    if table[name.value] != len(params):
        p.error(f"arity mismatch: {what} {name.value} takes {table[name.value]} "
                f"parameter(s), got {len(params)}", name)
    pnames = [t.value for t in params]
    if len(set(pnames)) != len(pnames):
        p.error("repeated parameter", name)
    for t in params:
        if t.value in p.sym.objects:
            p.error(f"parameter {t.value} shadows an object", t)
    p.pos = pos
    p.action_var = kind in ("ssa", "reset", "fssa")
    return tuple(pnames), frozenset(pnames)


def _parse_update(p: Parser, fname: str) -> Update:
    # f | f + k | f - k | f / 2 | 2 * f | k
    if p.tok.kind == "num":
        k = p.number("constant")
        if p.at("*"):
            p.advance()
            t = p.name("function")
            if t.value != fname or k != 2:
                p.error("only '2 * f' scaling is supported", t)
            return Update("double")
        return Update("const", k)
    t = p.name("update")
    if t.value != fname:
        p.error(f"update must refer to {fname}", t)
    if p.at("(") and p.peek().value == ")":
        p.advance()
        p.advance()
    if p.at("+", "-"):
        op = p.advance().value
        k = p.number("increment")
        return Update("add" if op == "+" else "sub", k)
    if p.at("/"):
        p.advance()
        k = p.number("divisor")
        if k != 2:
            p.error("only 'f / 2' is supported")
        return Update("half")
    return Update("same")


def _build(text: str, file: str, general: bool, validate: bool = True):
    p = Parser(text, file)
    raw = _scan_bat(p)
    if raw.general != general:
        if raw.general:
            raise DslError("general theory (numeric fluents) is not a clocked "
                           "theory; the clocked engine cannot run it", raw.header.span)
        raise DslError("not a general theory (missing 'general: true;')", raw.header.span)
    objects, syms, actions = _declare(raw, p, general)
    clocks = syms["functions"] if general else syms["clocks"]
    p.sym = Symbols(objects, {s.name: s.arity for s in syms["fluents"] + syms["rigids"]},
                    {s.name: s.arity for s in clocks},
                    {s.name: s.arity for s in actions})
    if general:
        p.allow_rational = True
    init = _parse_init(raw, p)
    poss, ssa, reset, fssa = {}, {}, {}, {}
    spans = {}
    goal = FALSE
    fluent_table = {s.name: s.arity for s in syms["fluents"]}
    clock_table = {s.name: s.arity for s in clocks}
    action_table = {s.name: s.arity for s in syms["actions"]}
    for kind, name, params, pos in raw.axioms:
        if kind == "goal":
            if not general:
                p.error("'goal' is only allowed in general theories", name)
            p.pos = pos
            p.action_var = False
            goal = p.formula()
            p.expect(";")
            continue
        table, target, what = {
            "poss": (action_table, poss, "action"),
            "ssa": (fluent_table, ssa, "fluent"),
            "reset": (clock_table, reset, "clock"),
            "fssa": (clock_table, fssa, "function"),
        }[kind]
        if kind == "fssa" and not general:
            p.error("'fssa' is only allowed in general theories", name)
        if kind == "reset" and general:
            p.error("'reset' is only allowed in clocked theories", name)
        pnames, bound = _axiom_body(p, kind, name, params, pos, table, what)
        if name.value in target:
            p.error(f"duplicate {kind} for {name.value}", name)
        spans[(kind, name.value)] = name.span
        if kind == "fssa":
            p.expect("{")
            cases, default = [], Update("same")
            while not p.at("}"):
                if p.at("else"):
                    p.advance()
                    default = _parse_update(p, name.value)
                    p.expect(";")
                    continue
                p.expect("when")
                cond = p.formula(bound)
                p.expect("then")
                cases.append((cond, _parse_update(p, name.value)))
                p.expect(";")
            p.expect("}")
            p.expect(";")
            fssa[name.value] = FunctionalSSA(pnames, tuple(cases), default)
            continue
        body = p.formula(bound)
        p.expect(";")
        target[name.value] = Axiom(pnames, body)
    p.action_var = False
    if general:
        g = GeneralBAT(objects, actions, syms["fluents"], syms["functions"],
                       dict(raw.function_init), init, poss, ssa, fssa, goal, raw.name)
        for s in syms["actions"]:
            if s.name not in poss:
                raise DslError(f"missing precondition for {s.name}", raw.header.span)
        for s in syms["fluents"]:
            if s.name not in ssa:
                raise DslError(f"missing SSA for {s.name}", raw.header.span)
        return g
    bat = BAT(objects, actions, syms["fluents"], syms["rigids"], syms["clocks"],
              init, poss, ssa, reset, raw.name)
    problems = validate_bat(bat) if validate else []
    if problems:
        v = problems[0]
        span = (spans.get(("poss", v.symbol)) or spans.get(("ssa", v.symbol))
                or spans.get(("reset", v.symbol)) or raw.header.span)
        raise DslError(v.message + f" ({v.symbol})", span)
    return bat


def parse_bat(text: str, file: str = "<input>", validate: bool = True) -> BAT:
    """Parse a clocked action theory; with ``validate`` the first structural
    violation is raised as a :class:`DslError`."""
    return _build(text, file, general=False, validate=validate)


def parse_general_bat(text: str, file: str = "<input>") -> GeneralBAT:
    return _build(text, file, general=True)


def _check_clocked(f: Formula, span):
    from .model import walk
    for node in walk(f):
        if isinstance(node, ClockRelation):
            raise DslError("formula not clocked: clocks may only be compared "
                           "with natural numbers", node.span or span)


def parse_formula(text: str, bat, file: str = "<formula>") -> Formula:
    p = Parser(text, file, Symbols.of(bat))
    if isinstance(bat, GeneralBAT):
        p.allow_rational = True
    start = p.tok
    f = p.formula()
    p.done()
    if not isinstance(bat, GeneralBAT):
        _check_clocked(f, start.span)
    return f


def parse_program(text: str, bat, file: str = "<program>") -> Program:
    p = Parser(text, file, Symbols.of(bat))
    start = p.tok
    prog = p.program()
    p.done()
    _check_program_clocked(prog, start.span)
    return prog


def _check_program_clocked(prog, span):
    if isinstance(prog, Test):
        _check_clocked(prog.cond, prog.span or span)
    for attr in ("first", "second", "left", "right", "body"):
        child = getattr(prog, attr, None)
        if isinstance(child, Program):
            _check_program_clocked(child, span)


def parse_situation(text: str, bat, file: str = "<situation>") -> Situation:
    """``S0``, ``a1; a2; ...`` or ``do([a1; a2], S0)``."""
    p = Parser(text, file, Symbols.of(bat))
    acts = []
    wrapped = False
    if p.at("do") and p.peek().value == "(":
        p.advance()
        p.expect("(")
        p.expect("[")
        wrapped = True
    if p.at("S0"):
        p.advance()
    elif not (p.tok.kind == "eof" or (wrapped and p.at("]"))):
        acts.append(p.ground_action())
        while p.at(";", ","):
            p.advance()
            if p.tok.kind == "eof" or p.at("]"):
                break
            acts.append(p.ground_action())
    if wrapped:
        p.expect("]")
        p.expect(",")
        p.expect("S0")
        p.expect(")")
    p.done()
    return Situation(tuple(acts))


# ------------------------------------------------------ 2CM and TA formats

def parse_2cm(text: str, file: str = "<2cm>") -> TwoCounterMachine:
    """One instruction per line: ``p: inc c1 goto q``,
    ``p: dec c2 goto q else r`` or ``p: HALT``.  The first line starts."""
    instructions = {}
    spans = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = re.split(r"//|#", line, maxsplit=1)[0].strip()
        if not body:
            continue
        span = SourceSpan(file, lineno, 1, len(line))
        m = re.fullmatch(
            r"(\w+)\s*:\s*(?:(?P<halt>HALT|halt)"
            r"|inc\s+c(?P<ic>\d+)\s+goto\s+(?P<iq>\w+)"
            r"|dec\s+c(?P<dc>\d+)\s+goto\s+(?P<dq>\w+)\s+else\s+(?P<dr>\w+))\s*;?",
            body)
        if m is None:
            raise DslError("syntax error in instruction", span)
        label = m.group(1)
        if label in instructions:
            raise DslError(f"duplicate label {label}", span)
        if m.group("halt"):
            ins = Halt()
        elif m.group("ic"):
            ins = Inc(int(m.group("ic")), m.group("iq"))
        else:
            ins = Dec(int(m.group("dc")), m.group("dq"), m.group("dr"))
        if not isinstance(ins, Halt) and ins.counter not in (1, 2):
            raise DslError("counter must be c1 or c2", span)
        instructions[label] = ins
        spans[label] = span
    if not instructions:
        raise DslError("empty machine", SourceSpan(file, 1, 1, 0))
    try:
        return TwoCounterMachine(instructions, next(iter(instructions)))
    except ValueError as e:
        label = str(e).split(":")[0]
        raise DslError(str(e), spans.get(label, SourceSpan(file, 1, 1, 0))) from None


def serialize_2cm(m: TwoCounterMachine) -> str:
    lines = []
    order = [m.start] + [l for l in m.instructions if l != m.start]
    for label in order:
        ins = m.instructions[label]
        if isinstance(ins, Halt):
            lines.append(f"{label}: HALT")
        elif isinstance(ins, Inc):
            lines.append(f"{label}: inc c{ins.counter} goto {ins.next}")
        else:
            lines.append(f"{label}: dec c{ins.counter} goto {ins.if_pos} else {ins.if_zero}")
    return "\n".join(lines) + "\n"


def parse_ta(text: str, file: str = "<ta>") -> TimedAutomaton:
    p = Parser(text, file)
    locations, initial, finals, clocks, switches = [], [], [], [], []
    while p.tok.kind != "eof":
        kw = p.name("statement")
        if kw.value == "location":
            n = p.name("location")
            if n.value in locations:
                p.error(f"duplicate location {n.value}", n)
            locations.append(n.value)
            while p.at("init", "final"):
                flag = p.advance().value
                (initial if flag == "init" else finals).append(n.value)
        elif kw.value == "clock":
            n = p.name("clock")
            if n.value in clocks:
                p.error(f"duplicate clock {n.value}", n)
            clocks.append(n.value)
        elif kw.value == "switch":
            src = p.name("location")
            p.expect("->")
            dst = p.name("location")
            label = ""
            guard, resets = [], []
            if p.at("on"):
                p.advance()
                label = p.name("label").value
            if p.at("when"):
                p.advance()
                if p.at("true"):
                    p.advance()
                else:
                    while True:
                        x = p.name("clock")
                        minus = None
                        if p.at("-"):
                            p.advance()
                            minus = p.name("clock").value
                        op = p._cmp_op()
                        guard.append(Constraint(x.value, op, p.natural("guard bound"), minus))
                        if not p.at("&"):
                            break
                        p.advance()
            if p.at("reset"):
                p.advance()
                p.expect("{")
                if not p.at("}"):
                    resets.append(p.name("clock").value)
                    while p.at(","):
                        p.advance()
                        resets.append(p.name("clock").value)
                p.expect("}")
            for t, l in ((src, src.value), (dst, dst.value)):
                if l not in locations:
                    p.error(f"unknown location {l}", t)
            switches.append(Switch(src.value, label, tuple(guard), tuple(resets), dst.value))
        else:
            p.error(f"unknown statement '{kw.value}'", kw)
        p.expect(";")
    if len(initial) != 1:
        raise DslError("exactly one initial location required", SourceSpan(file, 1, 1, 0))
    try:
        return TimedAutomaton(tuple(locations), initial[0], tuple(finals),
                              tuple(clocks), tuple(switches))
    except ValueError as e:
        raise DslError(str(e), SourceSpan(file, 1, 1, 0)) from None


def serialize_ta(ta: TimedAutomaton) -> str:
    out = []
    for l in ta.locations:
        flags = (" init" if l == ta.initial else "") + (" final" if l in ta.finals else "")
        out.append(f"location {l}{flags};")
    for x in ta.clocks:
        out.append(f"clock {x};")
    for sw in ta.switches:
        s = f"switch {sw.source} -> {sw.target}"
        if sw.label:
            s += f" on {sw.label}"
        if sw.guard:
            parts = []
            for c in sw.guard:
                lhs = f"{c.clock} - {c.minus}" if c.minus else c.clock
                parts.append(f"{lhs} {c.op} {c.bound}")
            s += " when " + " & ".join(parts)
        if sw.resets:
            s += " reset {" + ", ".join(sw.resets) + "}"
        out.append(s + ";")
    return "\n".join(out) + "\n"


# ------------------------------------------------------------ serializers

def _terms(args) -> str:
    return ", ".join(t.name for t in args)


def _call(name: str, args) -> str:
    return f"{name}({_terms(args)})"


_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4, Not: 5}


def _prec(f: Formula) -> int:
    if isinstance(f, (Exists, Forall, TimeQuantifier)):
        return 0
    return _PREC.get(type(f), 6)


def format_formula(f: Formula) -> str:
    def wrap(g, need):
        s = fmt(g)
        return f"({s})" if _prec(g) < need else s

    def fmt(g) -> str:
        if isinstance(g, Const):
            return "true" if g.value else "false"
        if isinstance(g, Atom):
            return _call(g.pred, g.args)
        if isinstance(g, Equal):
            return f"{g.left.name} = {g.right.name}"
        if isinstance(g, ClockCmp):
            return f"{_call(g.clock, g.args)} {g.op} {format_rational(g.bound)}"
        if isinstance(g, NumCmp):
            return f"{format_rational(g.left)} {g.op} {format_rational(g.right)}"
        if isinstance(g, ClockRelation):
            return f"{_call(g.left, g.left_args)} {g.op} {_call(g.right, g.right_args)}"
        if isinstance(g, ActionEq):
            return f"a == {_call(g.schema, g.args)}"
        if isinstance(g, Poss):
            return f"poss({_call(g.schema, g.args)})"
        if isinstance(g, Not):
            if isinstance(g.body, (Equal, ClockCmp, NumCmp, ClockRelation, ActionEq)):
                return f"!({fmt(g.body)})"
            return "!" + wrap(g.body, 5)
        if isinstance(g, And):
            return " & ".join(wrap(p, 5) for p in g.parts)
        if isinstance(g, Or):
            return " | ".join(wrap(p, 4) for p in g.parts)
        if isinstance(g, Implies):
            return f"{wrap(g.left, 3)} -> {wrap(g.right, 2)}"
        if isinstance(g, Iff):
            return f"{wrap(g.left, 1)} <-> {wrap(g.right, 2)}"
        if isinstance(g, (Exists, Forall)):
            kw = "forall" if isinstance(g, Forall) else "exists"
            return f"{kw} {g.var}. {fmt(g.body)}"
        if isinstance(g, TimeQuantifier):
            kw = "forall" if g.universal else "exists"
            return f"{kw} {g.var}:time. {fmt(g.body)}"
        if isinstance(g, SituationRelation):
            return {"prec": "s1 < s2", "eq": "s1 = s2"}.get(g.kind, "exists s. ...")
        raise TypeError(g)

    return fmt(f)


def _sig(syms) -> str:
    return ", ".join(f"{s.name}/{s.arity}" for s in syms)


def _axiom_line(kind: str, name: str, ax: Axiom) -> str:
    return f"  {kind} {name}({', '.join(ax.params)}) := {format_formula(ax.body)};"


def serialize_bat(bat: BAT) -> str:
    lines = [f"bat {bat.name} {{" if bat.name else "bat {"]
    if bat.objects:
        lines.append(f"  objects {', '.join(bat.objects)};")
    if bat.rigids:
        lines.append(f"  rigids {_sig(bat.rigids)};")
    user_actions = [s for s in bat.actions if not s.is_wait]
    lines.append(f"  actions {_sig(user_actions)};" if user_actions else "  actions;")
    if bat.fluents:
        lines.append(f"  fluents {_sig(bat.fluents)};")
    if bat.clocks:
        lines.append(f"  clocks {_sig(bat.clocks)};")
    if bat.init:
        atoms = [f"{n}({', '.join(args)})" for n, args in _init_order(bat.init, bat)]
        lines.append(f"  init {', '.join(atoms)};")
    for s in user_actions:
        if s.name in bat.poss:
            lines.append(_axiom_line("poss", s.name, bat.poss[s.name]))
    for s in bat.fluents:
        if s.name in bat.ssa:
            lines.append(_axiom_line("ssa", s.name, bat.ssa[s.name]))
    for s in bat.clocks:
        if s.name in bat.reset:
            lines.append(_axiom_line("reset", s.name, bat.reset[s.name]))
    lines.append("}")
    return "\n".join(lines) + "\n"


def _init_order(init, bat) -> list:
    order = {s.name: i for i, s in enumerate(tuple(bat.rigids) + tuple(bat.fluents))}
    objs = {o: i for i, o in enumerate(bat.objects)}
    return sorted(init, key=lambda a: (order.get(a[0], -1), a[0],
                                       tuple(objs.get(o, -1) for o in a[1])))


def _format_update(name: str, u: Update) -> str:
    return {
        "same": name,
        "add": f"{name} + {format_rational(u.value)}",
        "sub": f"{name} - {format_rational(u.value)}",
        "half": f"{name} / 2",
        "double": f"2 * {name}",
        "const": format_rational(u.value),
    }[u.kind]


def serialize_general_bat(g: GeneralBAT) -> str:
    lines = [f"bat {g.name} {{" if g.name else "bat {", "  general: true;"]
    if g.objects:
        lines.append(f"  objects {', '.join(g.objects)};")
    user_actions = [s for s in g.actions if not s.is_wait]
    lines.append(f"  actions {_sig(user_actions)};" if user_actions else "  actions;")
    if g.fluents:
        lines.append(f"  fluents {_sig(g.fluents)};")
    if g.functions:
        inits = ", ".join(f"{s.name}/{s.arity} = {format_rational(g.function_init.get(s.name, 0))}"
                          for s in g.functions)
        lines.append(f"  functions {inits};")
    if g.init:
        atoms = [f"{n}({', '.join(args)})" for n, args in sorted(g.init)]
        lines.append(f"  init {', '.join(atoms)};")
    for s in user_actions:
        lines.append(_axiom_line("poss", s.name, g.poss[s.name]))
    for s in g.fluents:
        lines.append(_axiom_line("ssa", s.name, g.ssa[s.name]))
    for s in g.functions:
        fs = g.fssa.get(s.name)
        if fs is None:
            continue
        lines.append(f"  fssa {s.name}({', '.join(fs.params)}) := {{")
        for cond, u in fs.cases:
            lines.append(f"    when {format_formula(cond)} then {_format_update(s.name, u)};")
        lines.append(f"    else {_format_update(s.name, fs.default)};")
        lines.append("  };")
    if g.goal != FALSE:
        lines.append(f"  goal {format_formula(g.goal)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


_PPREC = {Conc: 1, Choice: 2, Seq: 3, Star: 4}


def _pprec(p: Program) -> int:
    if isinstance(p, Pick):
        return 0
    return _PPREC.get(type(p), 5)


def serialize_program(prog: Program) -> str:
    def wrap(q, need):
        s = fmt(q)
        return f"({s})" if _pprec(q) < need else s

    def fmt(q) -> str:
        if isinstance(q, Act):
            if q.name == WAIT:
                return "wait()"
            return _call(q.name, q.args)
        if isinstance(q, Test):
            if q.cond == TRUE:
                return "nil"
            return f"test({format_formula(q.cond)})"
        if isinstance(q, Seq):
            return f"{wrap(q.first, 4)}; {wrap(q.second, 3)}"
        if isinstance(q, Choice):
            return f"{wrap(q.left, 3)} | {wrap(q.right, 2)}"
        if isinstance(q, Conc):
            return f"{wrap(q.left, 2)} || {wrap(q.right, 1)}"
        if isinstance(q, Star):
            return f"{wrap(q.body, 5)}*"
        if isinstance(q, Pick):
            return f"pick {q.var}. {fmt(q.body)}"
        raise TypeError(q)

    return fmt(prog)
