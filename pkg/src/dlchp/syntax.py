"""Concrete syntax: lexer, parser, and printer, round-trip guaranteed.

ASCII surface syntax (see README for the full grammar):

  terms      x  x'  gt  3  -2  1/2  e1+e2  e1-e2  e1*e2  (p)'  @ch
             val(te) time(te) chan(te) len(te)
  traces     h  eps  <ch,v,t>  te1+te2 (concatenation)  te|{c,d}  te|~{c}  te[e]
  formulas   = >= <= < > !=   ! & | -> <->   forall v (..)  exists v (..)
             [a] psi  <a> psi  [a]_{A, C} psi  <a>_{A, C} psi  true false
             #nat(e) #goedel(Z,n,i,x) #slice(h,e,h2)
  programs   x := p   x := *   ?chi   {x'=p, y'=q & chi}   a; b   a ++ b
             {a}*   a || b   ch(h)!p   ch(h)?x   skip

Identifiers may contain letters, digits, '_', '.', and a trailing prime.
An identifier whose last dot-segment starts with 'h' (or '_h') names a
trace variable; everything else is a real variable.  Channel names are
identifiers in channel position.  Line comments start with `//`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

from . import core
from .core import (
    EPS,
    Add,
    And,
    Assign,
    At,
    AcBox,
    AcDia,
    Box,
    ChanLit,
    ChanOf,
    Channel,
    ChannelSet,
    Choice,
    Concat,
    Const,
    Dia,
    Differential,
    Epsilon,
    EventTerm,
    Forall,
    LenOf,
    MACRO_NAMES,
    MacroAtom,
    Mul,
    Not,
    ODE,
    Parallel,
    Project,
    RRel,
    RVar,
    RandomAssign,
    Receive,
    Seq,
    Send,
    Star,
    TRel,
    TVar,
    Test,
    TimeOf,
    ValOf,
    is_polynomial,
    is_real_term,
    is_trace_term,
)
from .analysis import Diagnostic, SourceSpan, fv, is_folra

RESERVED = {
    "forall",
    "exists",
    "true",
    "false",
    "eps",
    "skip",
    "val",
    "time",
    "chan",
    "len",
}


class SyntaxIssue(Exception):
    def __init__(self, diagnostics):
        self.diagnostics = diagnostics
        super().__init__("; ".join(d.message for d in diagnostics))


class SortError(SyntaxIssue):
    pass


def _err(msg, span) -> SyntaxIssue:
    return SyntaxIssue([Diagnostic("error", "SYNTAX", msg, span)])


def _sort_err(msg, span) -> SortError:
    return SortError([Diagnostic("error", "SORT", msg, span)])


# ---------------------------------------------------------------------------
# lexer

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<number>\d+(\.\d+)?(/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*'?)
  | (?P<op><->|->|:=|\+\+|\|\||\|-|<=|>=|!=|[()\[\]{}<>,;?!*+\-=|&@#_:.'~$])
    """,
    re.VERBOSE,
)


class Token(NamedTuple):
    kind: str  # 'num' | 'id' | 'op' | 'eof'
    text: str
    value: Optional[Fraction]
    line: int
    col: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan("<input>", self.line, self.col, max(1, len(self.text)))


def tokenize(text: str, filename: str = "<input>") -> list:
    toks = []
    append = toks.append
    pos, line, col = 0, 1, 1
    n = len(text)
    match = _TOKEN.match
    while pos < n:
        m = match(text, pos)
        if not m:
            raise _err("unexpected character %r" % text[pos], SourceSpan(filename, line, col))
        lexeme = m.group(0)
        kind = m.lastgroup
        if kind == "op":
            append(Token("op", lexeme, None, line, col))
        elif kind == "ident":
            append(Token("id", lexeme, None, line, col))
        elif kind == "number":
            if "/" in lexeme:
                num_, den = lexeme.split("/")
                val = Fraction(num_) / Fraction(den)
            else:
                val = Fraction(lexeme)
            append(Token("num", lexeme, val, line, col))
        nl = lexeme.count("\n")
        if nl:
            line += nl
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    append(Token("eof", "", None, line, col))
    return toks


def is_trace_name(name: str) -> bool:
    seg = name.rsplit(".", 1)[-1]
    return seg.startswith("h") or seg.startswith("_h")


def mk_var(name: str):
    if is_trace_name(name):
        return TVar(name)
    if name.endswith("'"):
        return RVar(name[:-1], True)
    return RVar(name)


# ---------------------------------------------------------------------------
# parser


class Parser:
    def __init__(self, toks, filename="<input>", defs=None, defs_cache=None):
        self.toks = toks
        self.i = 0
        self.filename = filename
        self.defs = defs or {}
        self.defs_cache = defs_cache if defs_cache is not None else {}

    def resolve_ref(self, kind: str):
        tok = self.expect_id()
        name = tok.text
        key = (name, kind)
        hit = self.defs_cache.get(key)
        if hit is not None:
            return hit
        if name not in self.defs:
            raise _err("undefined $%s" % name, tok.span)
        sub = Parser(
            tokenize(self.defs[name], "$" + name),
            "$" + name,
            defs=self.defs,
            defs_cache=self.defs_cache,
        )
        if kind == "formula":
            out = sub.formula()
        elif kind == "program":
            out = sub.program()
        else:
            out = sub.term()
        sub.done()
        self.defs_cache[key] = out
        return out

    # -- token plumbing

    def peek(self, k=0) -> Token:
        try:
            return self.toks[self.i + k]
        except IndexError:
            return self.toks[-1]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text) -> bool:
        t = self.toks[self.i]
        return t.text == text and t.kind == "op"

    def at_id(self, text=None) -> bool:
        t = self.toks[self.i]
        return t.kind == "id" and (text is None or t.text == text)

    def expect(self, text) -> Token:
        if not self.at(text):
            raise _err("expected %r, found %r" % (text, self.peek().text or "end of input"), self.peek().span)
        return self.next()

    def expect_id(self) -> Token:
        t = self.peek()
        if t.kind != "id":
            raise _err("expected identifier, found %r" % (t.text or "end of input"), t.span)
        if t.text in RESERVED:
            raise _err("reserved word %r cannot be used as a name" % t.text, t.span)
        return self.next()

    def done(self):
        t = self.peek()
        if t.kind != "eof":
            raise _err("trailing input starting at %r" % t.text, t.span)

    # -- terms

    def term(self):
        left = self.term_mul()
        while self.at("+") or self.at("-"):
            op = self.next().text
            right = self.term_mul()
            if op == "-":
                if is_trace_term(left) or is_trace_term(right):
                    raise _sort_err("'-' is not defined on traces", self.peek().span)
                right = core.neg(right)
                left = Add(left, right)
            else:
                if is_trace_term(left) != is_trace_term(right):
                    raise _sort_err("'+' operands must have the same sort", self.peek().span)
                left = Concat(left, right) if is_trace_term(left) else Add(left, right)
        return left

    def term_mul(self):
        left = self.term_unary()
        while self.at("*"):
            # `x := *` never reaches here: '*' after ':=' is handled upstream
            self.next()
            right = self.term_unary()
            if is_trace_term(left) or is_trace_term(right):
                raise _sort_err("'*' is not defined on traces", self.peek().span)
            left = Mul(left, right)
        return left

    def term_unary(self):
        if self.at("-"):
            span = self.next().span
            t = self.term_unary()
            if is_trace_term(t):
                raise _sort_err("'-' is not defined on traces", span)
            return core.neg(t)
        return self.term_postfix()

    def term_postfix(self):
        t = self.term_atom()
        while True:
            if self.at("["):
                self.next()
                idx = self.term()
                self.expect("]")
                if not is_trace_term(t):
                    raise _sort_err("access applies to trace terms", self.peek().span)
                if not is_real_term(idx):
                    raise _sort_err("access index must be a real term", self.peek().span)
                t = At(t, idx)
            elif self.at("|") and (self.peek(1).text in ("{", "~")):
                self.next()
                cs = self.chanset()
                if not is_trace_term(t):
                    raise _sort_err("projection applies to trace terms", self.peek().span)
                t = Project(t, cs)
            else:
                return t

    def term_atom(self):
        t = self.peek()
        if self.at("$"):
            self.next()
            return self.resolve_ref("term")
        if t.kind == "num":
            self.next()
            return Const(t.value)
        if self.at("@"):
            self.next()
            name = self.chan_name()
            return ChanLit(name)
        if self.at("<"):
            return self.event()
        if self.at("("):
            self.next()
            inner = self.term()
            self.expect(")")
            if self.at("'"):
                self.next()
                if not is_polynomial(inner):
                    raise _sort_err("differential applies to polynomials only", t.span)
                if any(v.primed for v in fv(inner)):
                    raise _sort_err("differentials range over unprimed polynomials", t.span)
                return Differential(inner)
            return inner
        if t.kind == "id":
            if t.text == "eps":
                self.next()
                return EPS
            if t.text in ("val", "time", "chan", "len"):
                self.next()
                self.expect("(")
                arg = self.term()
                self.expect(")")
                if not is_trace_term(arg):
                    raise _sort_err("%s applies to trace terms" % t.text, t.span)
                return {"val": ValOf, "time": TimeOf, "chan": ChanOf, "len": LenOf}[t.text](arg)
            if t.text in RESERVED:
                raise _err("reserved word %r in term position" % t.text, t.span)
            self.next()
            return mk_var(t.text)
        raise _err("expected a term, found %r" % (t.text or "end of input"), t.span)

    def event(self):
        lt = self.expect("<")
        ch = self.chan_name()
        self.expect(",")
        val = self.term()
        self.expect(",")
        stamp = self.term()
        self.expect(">")
        if not (is_real_term(val) and is_real_term(stamp)):
            raise _sort_err("event value and timestamp must be real terms", lt.span)
        if not (is_polynomial(val) and is_polynomial(stamp)):
            raise _sort_err("event value and timestamp must be polynomials", lt.span)
        return EventTerm(ch, val, stamp)

    def chan_name(self) -> Channel:
        t = self.peek()
        if t.kind == "num":
            if t.value.denominator != 1 or t.value < 0:
                raise _err("numeric channel must be a natural number", t.span)
            self.next()
            return Channel(str(t.value.numerator))
        tok = self.expect_id()
        if tok.text.endswith("'"):
            raise _err("channel names cannot be primed", tok.span)
        return Channel(tok.text)

    def chanset(self) -> ChannelSet:
        cof = False
        if self.at("~"):
            self.next()
            cof = True
        self.expect("{")
        chans = set()
        if not self.at("}"):
            chans.add(self.chan_name())
            while self.at(","):
                self.next()
                chans.add(self.chan_name())
        self.expect("}")
        return ChannelSet(frozenset(chans), cof)

    # -- formulas

    def formula(self):
        return self.f_iff()

    def f_iff(self):
        left = self.f_imp()
        if self.at("<->"):
            self.next()
            right = self.f_iff()
            return core.Iff(left, right)
        return left

    def f_imp(self):
        left = self.f_or()
        if self.at("->"):
            self.next()
            right = self.f_imp()
            return core.Imp(left, right)
        return left

    def f_or(self):
        left = self.f_and()
        while self.at("|") and not (self.peek(1).text in ("{", "~")):
            self.next()
            left = core.Or(left, self.f_and())
        return left

    def f_and(self):
        left = self.f_unary()
        while self.at("&"):
            self.next()
            left = And(left, self.f_unary())
        return left

    def f_unary(self):
        t = self.peek()
        if self.at("!") and not self._looks_like_send():
            self.next()
            return Not(self.f_unary())
        if t.kind == "id" and t.text in ("forall", "exists"):
            self.next()
            v = mk_var(self.expect_id().text)
            body = self.f_unary()
            return Forall(v, body) if t.text == "forall" else core.Exists(v, body)
        if self.at("["):
            self.next()
            prog = self.program()
            self.expect("]")
            return self._modality(Box, AcBox, prog)
        if self.at("<") and self._diamond_ahead():
            self.next()
            prog = self.program()
            self.expect(">")
            return self._modality(Dia, AcDia, prog)
        return self.f_atom()

    def _looks_like_send(self) -> bool:
        return False

    def _diamond_ahead(self) -> bool:
        # '<' starts a diamond unless it opens an event literal `<ch, v, t>`
        one, two = self.peek(1), self.peek(2)
        if one.kind in ("id", "num") and two.kind == "op" and two.text == ",":
            return False
        return True

    def _modality(self, plain, ac, prog):
        if self.at_id("_") or self.at("_"):
            self.next()
            self.expect("{")
            assume = self.formula()
            self.expect(",")
            commit = self.formula()
            self.expect("}")
            post = self.f_unary()
            return ac(prog, assume, commit, post)
        post = self.f_unary()
        return plain(prog, post)

    def f_atom(self):
        t = self.peek()
        if self.at("$"):
            self.next()
            return self.resolve_ref("formula")
        if t.kind == "id" and t.text == "true":
            self.next()
            return core.TT()
        if t.kind == "id" and t.text == "false":
            self.next()
            return core.FF()
        if self.at("#"):
            self.next()
            name = self.expect_id().text
            if name not in MACRO_NAMES:
                raise _err("unknown reserved predicate #%s" % name, t.span)
            self.expect("(")
            args = [self.term()]
            while self.at(","):
                self.next()
                args.append(self.term())
            self.expect(")")
            if len(args) != MACRO_NAMES[name]:
                raise _err("#%s expects %d arguments" % (name, MACRO_NAMES[name]), t.span)
            return MacroAtom(name, tuple(args))
        if self.at("("):
            save = self.i
            self.next()
            try:
                inner = self.formula()
                self.expect(")")
                if self._tok_is_relop():
                    raise _err("relation after parenthesized formula", self.peek().span)
                return inner
            except SyntaxIssue:
                self.i = save
        return self.f_relation()

    def _tok_is_relop(self):
        return self.peek().kind == "op" and self.peek().text in ("=", ">=", "<=", "<", ">", "!=")

    def f_relation(self):
        start = self.peek().span
        left = self.term()
        t = self.peek()
        if not self._tok_is_relop():
            raise _err("expected a relation, found %r" % (t.text or "end of input"), t.span)
        op = self.next().text
        right = self.term()
        lt, rt = is_trace_term(left), is_trace_term(right)
        if isinstance(left, (TVar,)) or isinstance(right, (TVar,)):
            pass
        if lt != rt:
            raise _sort_err("relation operands must have the same sort", start)
        if lt:
            if op == "=":
                return TRel("=", left, right)
            if op == "<=":
                return TRel("<=", left, right)
            if op == ">=":
                return TRel("<=", right, left)
            if op == "!=":
                return Not(TRel("=", left, right))
            if op == "<":
                return core.StrictPrefix(left, right)
            if op == ">":
                return core.StrictPrefix(right, left)
        if op == "=":
            return RRel("=", left, right)
        if op == ">=":
            return RRel(">=", left, right)
        if op == "<=":
            return RRel(">=", right, left)
        if op == "<":
            return Not(RRel(">=", left, right))
        if op == ">":
            return Not(RRel(">=", right, left))
        if op == "!=":
            return Not(RRel("=", left, right))
        raise _err("unknown relation %r" % op, t.span)

    # -- programs

    def program(self):
        left = self.p_choice()
        while self.at("||"):
            self.next()
            left = Parallel(left, self.p_choice())
        return left

    def p_choice(self):
        left = self.p_seq()
        while self.at("++"):
            self.next()
            left = Choice(left, self.p_seq())
        return left

    def p_seq(self):
        left = self.p_atom()
        while self.at(";"):
            self.next()
            left = Seq(left, self.p_atom())
        return left

    def p_atom(self):
        t = self.peek()
        if self.at("$"):
            self.next()
            return self._maybe_star(self.resolve_ref("program"))
        if t.kind == "id" and t.text == "skip":
            self.next()
            return core.SKIP
        if self.at("?"):
            self.next()
            cond = self.f_unary()
            if not is_folra(cond):
                raise _sort_err("tests must be first-order real arithmetic", t.span)
            return Test(cond)
        if self.at("{"):
            save = self.i
            self.next()
            try:
                ode = self.ode_body(t.span)
                return self._maybe_star(ode)
            except SyntaxIssue:
                self.i = save
            self.next()
            prog = self.program()
            self.expect("}")
            return self._maybe_star(prog)
        if t.kind == "id":
            name = t.text
            one = self.peek(1)
            if one.kind == "op" and one.text == "(" and not name.endswith("'"):
                # communication: ch(h)!term or ch(h)?x
                self.next()
                self.next()
                rec = self.expect_id().text
                if not is_trace_name(rec):
                    raise _sort_err("recorder %r must be a trace variable" % rec, t.span)
                self.expect(")")
                if self.at("!"):
                    self.next()
                    p = self.term()
                    if not (is_real_term(p) and is_polynomial(p)):
                        raise _sort_err("sent values must be polynomials", t.span)
                    return Send(Channel(name), TVar(rec), p)
                if self.at("?"):
                    self.next()
                    x = self.expect_id().text
                    if is_trace_name(x):
                        raise _sort_err("received values go to real variables", t.span)
                    return Receive(Channel(name), TVar(rec), mk_var(x))
                raise _err("expected '!' or '?' after channel", self.peek().span)
            if name in RESERVED:
                raise _err("reserved word %r in program position" % name, t.span)
            # assignment
            self.next()
            v = mk_var(name)
            if isinstance(v, TVar):
                raise _sort_err("trace variables cannot be assigned", t.span)
            self.expect(":=")
            if self.at("*"):
                self.next()
                return RandomAssign(v)
            p = self.term()
            if not (is_real_term(p) and is_polynomial(p)):
                raise _sort_err("assigned terms must be polynomials", t.span)
            return Assign(v, p)
        raise _err("expected a program, found %r" % (t.text or "end of input"), t.span)

    def _maybe_star(self, prog):
        if self.at("*"):
            self.next()
            return Star(prog)
        return prog

    def ode_body(self, span):
        eqs = []
        while True:
            tok = self.expect_id()
            if not tok.text.endswith("'"):
                raise _err("expected a primed variable in evolution", tok.span)
            v = mk_var(tok.text)
            if not isinstance(v, RVar):
                raise _sort_err("evolutions range over real variables", tok.span)
            self.expect("=")
            rhs = self.term()
            if not (is_real_term(rhs) and is_polynomial(rhs)):
                raise _sort_err("evolution right-hand sides must be polynomials", tok.span)
            eqs.append((v.unprime(), rhs))
            if self.at(","):
                self.next()
                continue
            break
        domain = core.TT()
        if self.at("&"):
            self.next()
            domain = self.formula()
            if not is_folra(domain):
                raise _sort_err("evolution domains must be first-order real arithmetic", span)
        self.expect("}")
        seen = set()
        for v, _ in eqs:
            if v in seen:
                raise _err("duplicate evolution for %s'" % v.name, span)
            seen.add(v)
        return ODE(tuple(eqs), domain)


def parse(text: str, kind: str, filename: str = "<input>", check: bool = True):
    """Parse a term, program, or formula; the AST is in normalized core form.

    With check=True (the default) well-formedness violations raise; callers
    that want the diagnostics as data pass check=False and run validate().
    """
    toks = tokenize(text, filename)
    p = Parser(toks, filename)
    if kind == "term":
        out = p.term()
    elif kind == "formula":
        out = p.formula()
    elif kind == "program":
        out = p.program()
    else:
        raise ValueError("unknown kind %r" % kind)
    p.done()
    if check:
        from .analysis import validate

        diags = validate(out)
        if diags:
            raise SyntaxIssue(diags)
    return out


# ---------------------------------------------------------------------------
# printer

_REFS = []


class _with_refs:
    """Printing context: registered subtrees print as $NAME."""

    def __init__(self, refs):
        self.refs = refs or {}

    def __enter__(self):
        _REFS.append(self.refs)

    def __exit__(self, *exc):
        _REFS.pop()


def _ref_of(node):
    if _REFS:
        return _REFS[-1].get(node)
    return None


_T_ADD, _T_MUL, _T_TIGHT = 0, 1, 2
_F_IFF, _F_IMP, _F_OR, _F_AND, _F_UNARY, _F_ATOM = 0, 1, 2, 3, 4, 5
_P_PAR, _P_CHOICE, _P_SEQ, _P_ATOM = 0, 1, 2, 3


def _frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else "%d/%d" % (v.numerator, v.denominator)


def print_term(t, prec=_T_ADD) -> str:
    name = _ref_of(t)
    if name is not None:
        return "$" + name
    if isinstance(t, Const):
        s = _frac(t.value)
        return s if t.value >= 0 or prec <= _T_ADD else "(%s)" % s
    if isinstance(t, (RVar, TVar)):
        return t.name
    if isinstance(t, ChanLit):
        return "@%s" % t.chan.name
    if isinstance(t, Epsilon):
        return "eps"
    if isinstance(t, Add):
        l = print_term(t.left, _T_ADD)
        r = t.right
        if isinstance(r, Const) and r.value < 0:
            s = "%s-%s" % (l, _frac(-r.value))
        elif isinstance(r, Mul) and r.left == Const(Fraction(-1)) and not isinstance(r.right, Const):
            s = "%s-%s" % (l, print_term(r.right, _T_MUL))
        else:
            s = "%s+%s" % (l, print_term(r, _T_MUL))
        return s if prec <= _T_ADD else "(%s)" % s
    if isinstance(t, Concat):
        s = "%s+%s" % (print_term(t.left, _T_ADD), print_term(t.right, _T_MUL))
        return s if prec <= _T_ADD else "(%s)" % s
    if isinstance(t, Mul):
        if t.left == Const(Fraction(-1)) and not isinstance(t.right, Const):
            s = "-%s" % print_term(t.right, _T_TIGHT)
            return s if prec <= _T_ADD else "(%s)" % s
        s = "%s*%s" % (print_term(t.left, _T_MUL), print_term(t.right, _T_TIGHT))
        return s if prec <= _T_MUL else "(%s)" % s
    if isinstance(t, Differential):
        return "(%s)'" % print_term(t.poly, _T_ADD)
    if isinstance(t, ValOf):
        return "val(%s)" % print_term(t.trace, _T_ADD)
    if isinstance(t, TimeOf):
        return "time(%s)" % print_term(t.trace, _T_ADD)
    if isinstance(t, ChanOf):
        return "chan(%s)" % print_term(t.trace, _T_ADD)
    if isinstance(t, LenOf):
        return "len(%s)" % print_term(t.trace, _T_ADD)
    if isinstance(t, EventTerm):
        return "<%s, %s, %s>" % (
            t.chan.name,
            print_term(t.value, _T_ADD),
            print_term(t.stamp, _T_ADD),
        )
    if isinstance(t, Project):
        return "%s|%s" % (print_term(t.trace, _T_TIGHT), print_chanset(t.chans))
    if isinstance(t, At):
        return "%s[%s]" % (print_term(t.trace, _T_TIGHT), print_term(t.index, _T_ADD))
    raise TypeError("not a term: %r" % (t,))


def print_chanset(cs: ChannelSet) -> str:
    names = ",".join(c.name for c in cs.sorted_members())
    return ("~{%s}" if cs.cofinite else "{%s}") % names


def _match_imp(f):
    if isinstance(f, Not) and isinstance(f.body, And) and isinstance(f.body.right, Not):
        return f.body.left, f.body.right.body
    return None


def _match_or(f):
    if (
        isinstance(f, Not)
        and isinstance(f.body, And)
        and isinstance(f.body.left, Not)
        and isinstance(f.body.right, Not)
    ):
        return f.body.left.body, f.body.right.body
    return None


def _match_iff(f):
    if isinstance(f, And):
        a = _match_imp(f.left)
        b = _match_imp(f.right)
        if a and b and a[0] == b[1] and a[1] == b[0]:
            return a
    return None


def _match_exists(f):
    if isinstance(f, Not) and isinstance(f.body, Forall) and isinstance(f.body.body, Not):
        return f.body.var, f.body.body.body
    return None


_TRUE = core.TT()
_FALSE = core.FF()


def print_formula(f, prec=_F_IFF) -> str:
    name = _ref_of(f)
    if name is not None:
        return "$" + name
    if f == _TRUE:
        return "true"
    if f == _FALSE:
        return "false"
    m = _match_iff(f)
    if m:
        s = "%s <-> %s" % (print_formula(m[0], _F_IMP), print_formula(m[1], _F_IFF))
        return s if prec <= _F_IFF else "(%s)" % s
    m = _match_or(f)
    if m:
        s = "%s | %s" % (print_formula(m[0], _F_OR), print_formula(m[1], _F_AND))
        return s if prec <= _F_OR else "(%s)" % s
    m = _match_exists(f)
    if m:
        s = "exists %s %s" % (m[0].name, print_formula(m[1], _F_UNARY))
        return s if prec <= _F_UNARY else "(%s)" % s
    m = _match_imp(f)
    if m:
        s = "%s -> %s" % (print_formula(m[0], _F_OR), print_formula(m[1], _F_IMP))
        return s if prec <= _F_IMP else "(%s)" % s
    if isinstance(f, And):
        s = "%s & %s" % (print_formula(f.left, _F_AND), print_formula(f.right, _F_UNARY))
        return s if prec <= _F_AND else "(%s)" % s
    if isinstance(f, Not):
        if isinstance(f.body, (RRel, TRel)) and f.body.op == "=":
            return "%s != %s" % (print_term(f.body.left), print_term(f.body.right))
        if isinstance(f.body, RRel) and f.body.op == ">=":
            return "%s < %s" % (print_term(f.body.left), print_term(f.body.right))
        return "!%s" % print_formula(f.body, _F_ATOM)
    if isinstance(f, Forall):
        return _wrap("forall %s %s" % (f.var.name, print_formula(f.body, _F_UNARY)), prec)
    if isinstance(f, Box):
        return _wrap("[%s] %s" % (print_program(f.prog), print_formula(f.post, _F_UNARY)), prec)
    if isinstance(f, Dia):
        return _wrap("<%s> %s" % (print_program(f.prog), print_formula(f.post, _F_UNARY)), prec)
    if isinstance(f, AcBox):
        return _wrap(
            "[%s]_{%s, %s} %s"
            % (
                print_program(f.prog),
                print_formula(f.assume),
                print_formula(f.commit),
                print_formula(f.post, _F_UNARY),
            ),
            prec,
        )
    if isinstance(f, AcDia):
        return _wrap(
            "<%s>_{%s, %s} %s"
            % (
                print_program(f.prog),
                print_formula(f.assume),
                print_formula(f.commit),
                print_formula(f.post, _F_UNARY),
            ),
            prec,
        )
    if isinstance(f, RRel):
        return "%s %s %s" % (print_term(f.left), f.op, print_term(f.right))
    if isinstance(f, TRel):
        return "%s %s %s" % (print_term(f.left), f.op, print_term(f.right))
    if isinstance(f, MacroAtom):
        return "#%s(%s)" % (f.name, ", ".join(print_term(a) for a in f.args))
    raise TypeError("not a formula: %r" % (f,))


def _wrap(s, prec):
    return s if prec <= _F_UNARY else "(%s)" % s


def print_program(p, prec=_P_PAR) -> str:
    name = _ref_of(p)
    if name is not None:
        return "$" + name
    if p == core.SKIP:
        return "skip"
    if isinstance(p, Star):
        inner = _ref_of(p.body)
        if inner is not None:
            return "{$%s}*" % inner
    if p == core.SKIP:
        return "skip"
    if isinstance(p, Assign):
        return "%s := %s" % (p.var.name, print_term(p.term))
    if isinstance(p, RandomAssign):
        return "%s := *" % p.var.name
    if isinstance(p, Test):
        return "?%s" % print_formula(p.cond, _F_ATOM)
    if isinstance(p, ODE):
        eqs = ", ".join("%s'=%s" % (x.name, print_term(q)) for x, q in p.eqs)
        if p.domain == _TRUE:
            return "{%s}" % eqs
        return "{%s & %s}" % (eqs, print_formula(p.domain))
    if isinstance(p, Seq):
        s = "%s; %s" % (print_program(p.left, _P_SEQ), print_program(p.right, _P_ATOM))
        return s if prec <= _P_SEQ else "{%s}" % s
    if isinstance(p, Choice):
        s = "%s ++ %s" % (print_program(p.left, _P_CHOICE), print_program(p.right, _P_SEQ))
        return s if prec <= _P_CHOICE else "{%s}" % s
    if isinstance(p, Parallel):
        s = "%s || %s" % (print_program(p.left, _P_PAR), print_program(p.right, _P_CHOICE))
        return s if prec <= _P_PAR else "{%s}" % s
    if isinstance(p, Star):
        return "{%s}*" % print_program(p.body, _P_PAR)
    if isinstance(p, Send):
        return "%s(%s)!%s" % (p.chan.name, p.recorder.name, print_term(p.term, _T_ADD))
    if isinstance(p, Receive):
        return "%s(%s)?%s" % (p.chan.name, p.recorder.name, p.var.name)
    raise TypeError("not a program: %r" % (p,))


def print_expr(e) -> str:
    from .core import is_formula, is_program

    if is_formula(e):
        return print_formula(e)
    if is_program(e):
        return print_program(e)
    return print_term(e)
