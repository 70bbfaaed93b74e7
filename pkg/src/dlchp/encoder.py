"""Formula-to-formula compilers for the constructive completeness machinery.

* render_transition: the transition relation of a program between symbolic
  state vectors with an intermediate/final marker.  Loop clauses access the
  compressed state sequence through the reserved predicates #nat, #goedel,
  #slice (uninterpreted in emitted formulas; the test harness gives them an
  executable desk-scale meaning).
* strongest_commitment / strongest_postcondition: the receptive
  characterizations of all environment-variations of reachable intermediate
  and final states.
* trace_simplify: rewrites a base-logic formula so that every trace
  comparison is an equality over simple trace terms (variables, events, the
  empty trace, indexed access); prefixing, concatenation, and projection are
  re-expressed through indexed access.

The nested backward box in the domain-constrained evolution clause is kept
verbatim; flattening it is future work.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import core
from .core import (
    FF,
    GT,
    GTP,
    TT,
    Add,
    And,
    At,
    AcDia,
    Box,
    ChanLit,
    ChanOf,
    ChannelSet,
    Concat,
    Const,
    Dia,
    EventTerm,
    Forall,
    Ge,
    Iff,
    Imp,
    LenOf,
    Lt,
    MacroAtom,
    Mul,
    Not,
    ODE,
    Or,
    Prefix,
    Project,
    RRel,
    RVar,
    TRel,
    TVar,
    TimeOf,
    ValOf,
    and_all,
    exists_all,
    is_real_term,
    is_trace_term,
    neg,
    num,
    or_all,
    sub,
)
from .core import (
    Assign,
    Choice,
    Epsilon,
    Parallel,
    RandomAssign,
    Receive,
    Send,
    Seq,
    Star,
    Test,
)
from .analysis import (
    accessed_channels,
    channels,
    fv,
    is_com_fod,
    recorder,
    validate,
    var_set,
)
from .subst import fresh, names_of, substitute


class NotComFod(Exception):
    pass


class _Names:
    """Deterministic fresh-name pool."""

    def __init__(self, *exprs):
        self.used = set()
        for e in exprs:
            if e is None:
                continue
            self.used |= names_of(e)

    def real(self, base="k") -> RVar:
        v = fresh("real", self.used, base)
        self.used.add(v.name)
        return v

    def trace(self, base="h") -> TVar:
        v = fresh("trace", self.used, base)
        self.used.add(v.name)
        return v

    def like(self, v):
        if isinstance(v, TVar):
            return self.trace("w." + v.name)
        out = fresh("real", self.used, "w." + v.name)
        self.used.add(out.name)
        return out


# ---------------------------------------------------------------------------
# transition rendition (Fig. 6 shape)


@dataclass(frozen=True)
class Rendition:
    prog: object
    vvec: tuple
    wvec: tuple
    fin: object  # formula marker (true/false constants or an atom)
    body: object


def _marker(fin):
    if fin is True or fin == "true":
        return TT()
    if fin is False or fin == "false":
        return FF()
    if isinstance(fin, RVar):
        return RRel("=", fin, num(1))
    return fin  # already a formula


def _ite(mark, not_fin, if_fin):
    if mark == TT():
        return if_fin
    if mark == FF():
        return not_fin
    return Or(And(Not(mark), not_fin), And(mark, if_fin))


def render_transition(prog, fin="var", vvec=None, wvec=None, names: Optional[_Names] = None):
    """Fig.-6-shaped transition formula between vvec (initial) and wvec
    (reached); fin is 'true', 'false', 'var', a marker variable, or a
    formula."""
    if names is None:
        names = _Names(prog)
    if vvec is None:
        vs = set(var_set(prog)) | {GT, GTP, recorder(prog)}
        vvec = _sorted_vec(vs)
    if GT not in vvec or GTP not in vvec or recorder(prog) not in vvec:
        raise ValueError("state vector must contain gt, gt', and the recorder")
    if wvec is None:
        wvec = tuple(names.like(v) for v in vvec)
    if fin == "var":
        fvvar = names.real("fin")
        mark = RRel("=", fvvar, num(1))
    else:
        mark = _marker(fin)
    names.used |= {v.name for v in vvec} | {w.name for w in wvec}
    body = _render(prog, tuple(vvec), tuple(wvec), mark, names)
    return Rendition(prog, tuple(vvec), tuple(wvec), mark, body)


def _sorted_vec(vs):
    reals = sorted((v for v in vs if isinstance(v, RVar)), key=lambda v: v.name)
    traces = sorted((v for v in vs if isinstance(v, TVar)), key=lambda v: v.name)
    return tuple(reals + traces)


def _eqv(vvec, wvec, subs=None):
    subs = subs or {}
    conj = []
    for v, w in zip(vvec, wvec):
        conj.append(core.Eq(w, subs.get(v, v)))
    return and_all(conj)


def _rec_comp(prog, vvec):
    rec = recorder(prog)
    return rec if rec in vvec else None


def _render(prog, vvec, wvec, mark, names):
    if isinstance(prog, Assign):
        return _ite(mark, _eqv(vvec, wvec), _eqv(vvec, wvec, {prog.var: prog.term}))
    if isinstance(prog, RandomAssign):
        return _ite(mark, _eqv(vvec, wvec), core.Exists(prog.var, _eqv(vvec, wvec)))
    if isinstance(prog, Test):
        return _ite(mark, _eqv(vvec, wvec), And(prog.cond, _eqv(vvec, wvec)))
    if isinstance(prog, ODE):
        if prog.domain == TT():
            return _ite(mark, _eqv(vvec, wvec), Dia(prog, _eqv(vvec, wvec)))
        g = names.real("g")
        fwd = ODE(prog.eqs + ((g, num(1)),), TT())
        bwd = ODE(tuple((x, neg(p)) for x, p in prog.eqs) + ((g, num(-1)),), TT())
        inner = Dia(
            fwd,
            And(_eqv(vvec, wvec), Box(bwd, Imp(Ge(g, num(0)), prog.domain))),
        )
        return _ite(
            mark,
            _eqv(vvec, wvec),
            core.Exists(g, And(RRel("=", g, num(0)), inner)),
        )
    if isinstance(prog, Send):
        h = prog.recorder
        app = Concat(h, EventTerm(prog.chan, prog.term, GT))
        full = _eqv(vvec, wvec, {h: app})
        return _ite(mark, Or(_eqv(vvec, wvec), full), full)
    if isinstance(prog, Receive):
        h = prog.recorder
        y = names.real("y")
        inter = Or(
            _eqv(vvec, wvec),
            core.Exists(y, _eqv(vvec, wvec, {h: Concat(h, EventTerm(prog.chan, y, GT))})),
        )
        final = core.Exists(
            prog.var,
            _eqv(vvec, wvec, {h: Concat(h, EventTerm(prog.chan, prog.var, GT))}),
        )
        return _ite(mark, inter, final)
    if isinstance(prog, Choice):
        return Or(
            _render(prog.left, vvec, wvec, mark, names),
            _render(prog.right, vvec, wvec, mark, names),
        )
    if isinstance(prog, Seq):
        uvec = tuple(names.like(v) for v in vvec)
        first = And(Not(mark), _render(prog.left, vvec, wvec, FF(), names))
        through = exists_all(
            uvec,
            And(
                _render(prog.left, vvec, uvec, TT(), names),
                _render(prog.right, uvec, wvec, mark, names),
            ),
        )
        return Or(first, through)
    if isinstance(prog, Star):
        return _render_star(prog, vvec, wvec, mark, names)
    if isinstance(prog, Parallel):
        return _render_par(prog, vvec, wvec, mark, names)
    raise TypeError("not a program: %r" % (prog,))


def _render_star(prog: Star, vvec, wvec, mark, names):
    n = names.real("n")
    i = names.real("i")
    wr = names.real("Wr")
    wt = names.trace("hW")
    idx = names.trace("hI")
    reals = [v for v in vvec if isinstance(v, RVar)]
    trcs = [v for v in vvec if isinstance(v, TVar)]
    m = len(reals)

    def state_eq(k_term, xs):
        conj = []
        for j, x in enumerate(x for x in xs if isinstance(x, RVar)):
            pos = Add(Mul(sub(k_term, num(1)), num(m)), num(j + 1))
            conj.append(MacroAtom("goedel", (wr, Mul(n, num(m)), pos, x)))
        for x in (x for x in xs if isinstance(x, TVar)):
            conj.append(MacroAtom("slice", (wt, ValOf(At(idx, sub(k_term, num(1)))), x)))
        return and_all(conj)

    ua = tuple(names.like(v) for v in vvec)
    ub = tuple(names.like(v) for v in vvec)
    pass_mark = Or(And(Ge(i, num(1)), Ge(sub(n, num(2)), i)), mark)
    trans = exists_all(
        ua + ub,
        and_all(
            [
                state_eq(i, ua),
                state_eq(Add(i, num(1)), ub),
                _render(prog.body, ua, ub, pass_mark, names),
            ]
        ),
    )
    chain = Forall(
        i,
        Imp(
            and_all([MacroAtom("nat", (i,)), Ge(i, num(1)), Ge(sub(n, num(1)), i)]),
            trans,
        ),
    )
    body = and_all(
        [
            RRel("=", n, LenOf(idx)),
            state_eq(num(1), vvec),
            state_eq(n, wvec),
            chain,
        ]
    )
    return core.Exists(
        n,
        and_all(
            [
                MacroAtom("nat", (n,)),
                Ge(n, num(1)),
                exists_all([wr, wt, idx], body),
            ]
        ),
    )


def _render_par(prog: Parallel, vvec, wvec, mark, names):
    a, b = prog.left, prog.right
    rec = recorder(prog)
    hab = names.trace("hab")
    wa = tuple(names.like(v) for v in vvec)
    wb = tuple(names.like(v) for v in vvec)
    fa, fb = names.real("fin"), names.real("fin")
    ma, mb = RRel("=", fa, num(1)), RRel("=", fb, num(1))
    w_of = dict(zip(vvec, wvec))

    def phi(gamma, wg, mg):
        conj = [_render(gamma, vvec, wg, mg, names)]
        keep = set(var_set(gamma)) | {GT, GTP}
        for v, wgv in zip(vvec, wg):
            if isinstance(v, RVar) and v in keep:
                conj.append(RRel("=", wgv, w_of[v]))
        if rec in vvec:
            wg_rec = wg[vvec.index(rec)]
            conj.append(TRel("=", wg_rec, Concat(rec, Project(hab, channels(gamma)))))
        return and_all(conj)

    conj = []
    if rec in vvec:
        conj.append(TRel("=", w_of[rec], Concat(rec, hab)))
    conj += [phi(a, wa, ma), phi(b, wb, mb)]
    ga = [wa[vvec.index(GT)], wa[vvec.index(GTP)]]
    gb = [wb[vvec.index(GT)], wb[vvec.index(GTP)]]
    conj.append(And(RRel("=", ga[0], gb[0]), RRel("=", ga[1], gb[1])))
    conj.append(TRel("=", Project(hab, channels(prog)), hab))
    conj.append(Iff(mark, And(ma, mb)))
    return exists_all([hab] + list(wa) + list(wb) + [fa, fb], and_all(conj))


# ---------------------------------------------------------------------------
# strongest commitment / postcondition (receptive specifications)


def _env_match(rec, h0, ha, he, target_eq, alpha, cs: ChannelSet):
    """forall ha (rec = h0 . ha -> exists he (target(he) and
    he | (CN(alpha) u cs^c) = ha))"""
    win = channels(alpha).union(cs.complement())
    return Forall(
        ha,
        Imp(
            TRel("=", rec, Concat(h0, ha)),
            core.Exists(he, And(target_eq(he), TRel("=", Project(he, win), ha))),
        ),
    )


def strongest_commitment(alpha, pre, assume, cs: ChannelSet):
    """Characterizes the intermediate state-variations of (assume, alpha)
    from states satisfying pre, receptive for environment channels cs."""
    return _strongest(alpha, pre, assume, cs, post=False)


def strongest_postcondition(alpha, pre, assume, cs: ChannelSet):
    """Characterizes the final state-variations of (assume, alpha)."""
    return _strongest(alpha, pre, assume, cs, post=True)


def _strongest(alpha, pre, assume, cs, post: bool):
    diags = validate(AcDia(alpha, assume, TT(), TT()))
    if diags:
        from .kernel import SideConditionViolated

        raise SideConditionViolated(diags[0].code, diags[0].message)
    rec = recorder(alpha)
    names = _Names(alpha, pre, assume)
    names.used.add(rec.name)
    cv = accessed_channels(And(pre, assume), frozenset({rec})).union(channels(alpha)).union(
        cs.complement()
    )
    h0 = names.trace("h0")
    ha = names.trace("ha")
    he = names.trace("he")
    fix_h0 = lambda inner: Forall(h0, Imp(TRel("=", h0, rec), inner))
    if not post:
        hv = names.trace("hv")
        commit = _env_match(rec, h0, ha, he, lambda he_: TRel("=", hv, Concat(h0, he_)), alpha, cs)
        inner = core.Exists(rec, And(pre, fix_h0(AcDia(alpha, assume, commit, FF()))))
        return Forall(hv, Imp(TRel("=", hv, Project(rec, cv)), inner))
    vs = set(fv(pre)) | set(fv(assume)) | set(var_set(alpha)) | {rec}
    vvec = _sorted_vec(vs)
    wvec = tuple(names.like(v) for v in vvec)

    def target_eq(he_):
        conj = []
        for v, w in zip(vvec, wvec):
            if v == rec:
                conj.append(TRel("=", w, Concat(h0, he_)))
            else:
                conj.append(core.Eq(w, v))
        return and_all(conj)

    post_f = _env_match(rec, h0, ha, he, target_eq, alpha, cs)
    inner = exists_all(vvec, And(pre, fix_h0(AcDia(alpha, assume, FF(), post_f))))
    guards = []
    for v, w in zip(vvec, wvec):
        if v == rec:
            guards.append((w, Project(rec, cv)))
        else:
            guards.append((w, v))
    out = inner
    for w, tgt in reversed(guards):
        out = Forall(w, Imp(core.Eq(w, tgt), out))
    return out


# ---------------------------------------------------------------------------
# trace-simple normalization


_TRACE_OPS = (ChanOf, ValOf, TimeOf, LenOf)


def is_simple_trace_term(t) -> bool:
    if isinstance(t, (TVar, Epsilon)):
        return True
    if isinstance(t, EventTerm):
        return True
    if isinstance(t, At):
        return isinstance(t.trace, TVar) and isinstance(t.index, RVar)
    return False


def is_trace_simple(f) -> bool:
    """Every trace comparison an equality over simple terms; operators only
    on trace variables; no prefixing, concatenation, or projection left."""
    ok = [True]

    def walk_term(t):
        if isinstance(t, (Concat, Project)):
            ok[0] = False
            return
        if isinstance(t, _TRACE_OPS):
            if not isinstance(t.trace, TVar):
                ok[0] = False
            return
        if isinstance(t, At):
            if not (isinstance(t.trace, TVar) and isinstance(t.index, RVar)):
                ok[0] = False
            return
        for c in core.children(t):
            if not isinstance(c, (RVar, TVar, core.Channel)):
                walk_term(c)

    def walk(f):
        if isinstance(f, TRel):
            if f.op != "=" or not (is_simple_trace_term(f.left) and is_simple_trace_term(f.right)):
                ok[0] = False
            return
        if isinstance(f, RRel):
            walk_term(f.left)
            walk_term(f.right)
            return
        if isinstance(f, MacroAtom):
            for a in f.args:
                walk_term(a)
            return
        if isinstance(f, Not):
            walk(f.body)
            return
        if isinstance(f, And):
            walk(f.left)
            walk(f.right)
            return
        if isinstance(f, Forall):
            walk(f.body)
            return
        if isinstance(f, (Box, Dia)):
            walk(f.post)
            return
        ok[0] = False

    walk(f)
    return ok[0]


def trace_simplify(phi):
    if not is_com_fod(phi):
        raise NotComFod("trace_simplify expects a base-logic formula")
    names = _Names(phi)
    return _simp(phi, names, 0)


_MAX_SIMP_DEPTH = 400


def _simp(f, names, depth):
    if depth > _MAX_SIMP_DEPTH:
        raise NotComFod("normalization recursion exceeded its bound")
    if isinstance(f, Not):
        return Not(_simp(f.body, names, depth + 1))
    if isinstance(f, And):
        return And(_simp(f.left, names, depth + 1), _simp(f.right, names, depth + 1))
    if isinstance(f, Forall):
        return Forall(f.var, _simp(f.body, names, depth + 1))
    if isinstance(f, (Box, Dia)):
        return f  # pure continuous-evolution modality, no trace content
    if isinstance(f, MacroAtom):
        return f
    if isinstance(f, TRel) and f.op == "<=":
        lo = Ge(LenOf(f.right), LenOf(f.left))
        k = names.real("k")
        body = Imp(
            And(Ge(k, num(0)), Lt(k, LenOf(f.left))),
            TRel("=", At(f.left, k), At(f.right, k)),
        )
        return _simp(And(lo, Forall(k, body)), names, depth + 1)
    if isinstance(f, (RRel, TRel)):
        return _simp_rel(f, names, depth)
    raise NotComFod("unsupported connective in %r" % (f,))


def _simp_rel(rel, names, depth):
    # (11): factor operators applied to non-variable traces
    spot = _find(rel, lambda t: isinstance(t, _TRACE_OPS + (Project,)) and not isinstance(t.trace, TVar))
    if spot is not None:
        occ, rebuild = spot
        h = names.trace()
        return core.Exists(
            h,
            And(
                _simp(TRel("=", h, occ.trace), names, depth + 1),
                _simp(rebuild(_with_trace(occ, h)), names, depth + 1),
            ),
        )
    # (12): normalize access arguments to variables
    spot = _find(
        rel,
        lambda t: isinstance(t, At)
        and not (isinstance(t.trace, TVar) and isinstance(t.index, RVar)),
    )
    if spot is not None:
        occ, rebuild = spot
        h = occ.trace if isinstance(occ.trace, TVar) else names.trace()
        k = occ.index if isinstance(occ.index, RVar) else names.real("k")
        conj = []
        if h is not occ.trace:
            conj.append(_simp(TRel("=", h, occ.trace), names, depth + 1))
        if k is not occ.index:
            conj.append(_simp(RRel("=", k, occ.index), names, depth + 1))
        conj.append(_simp(rebuild(At(h, k)), names, depth + 1))
        evs = [v for v in (h, k) if v is not occ.trace and v is not occ.index]
        return exists_all(evs, and_all(conj))
    # dagger: two-variable concatenation equations
    m = _concat_eq(rel)
    if m is not None:
        h, h1, h2 = m
        j = names.real("j")
        a = RRel("=", LenOf(h), Add(LenOf(h1), LenOf(h2)))
        left = Forall(
            j,
            Imp(
                And(Ge(j, num(0)), Lt(j, LenOf(h1))),
                TRel("=", At(h, j), At(h1, j)),
            ),
        )
        right = Forall(
            j,
            Imp(
                And(Ge(j, num(0)), Lt(j, LenOf(h2))),
                _simp(TRel("=", At(h, Add(j, LenOf(h1))), At(h2, j)), names, depth + 1),
            ),
        )
        return and_all([a, left, right])
    # (14): factor remaining concatenations
    spot = _find(rel, lambda t: isinstance(t, Concat))
    if spot is not None:
        occ, rebuild = spot
        h, h1, h2 = names.trace(), names.trace(), names.trace()
        return exists_all(
            [h, h1, h2],
            and_all(
                [
                    _simp(TRel("=", h1, occ.left), names, depth + 1),
                    _simp(TRel("=", h2, occ.right), names, depth + 1),
                    _simp(TRel("=", h, Concat(h1, h2)), names, depth + 1),
                    _simp(rebuild(h), names, depth + 1),
                ]
            ),
        )
    # ddagger: projection equations over variables
    m = _proj_eq(rel)
    if m is not None:
        return _expand_proj(m, names, depth)
    # remaining projections (inside a non-equation relation)
    spot = _find(rel, lambda t: isinstance(t, Project))
    if spot is not None:
        occ, rebuild = spot
        h = names.trace()
        return core.Exists(
            h,
            And(
                _simp(TRel("=", h, occ), names, depth + 1),
                _simp(rebuild(h), names, depth + 1),
            ),
        )
    # normalize trace equations to variable = term
    if isinstance(rel, TRel) and not isinstance(rel.left, TVar) and isinstance(rel.right, TVar):
        return _simp_rel(TRel("=", rel.right, rel.left), names, depth)
    if (
        isinstance(rel, TRel)
        and not isinstance(rel.left, TVar)
        and not isinstance(rel.right, TVar)
        and not (is_simple_trace_term(rel.left) and is_simple_trace_term(rel.right))
    ):
        h = names.trace()
        return core.Exists(
            h,
            And(
                _simp(TRel("=", h, rel.left), names, depth + 1),
                _simp(TRel("=", h, rel.right), names, depth + 1),
            ),
        )
    return rel


def _with_trace(op, h):
    return type(op)(h, op.chans) if isinstance(op, Project) else type(op)(h)


def _concat_eq(rel):
    if not (isinstance(rel, TRel) and rel.op == "="):
        return None
    l, r = rel.left, rel.right
    if isinstance(l, TVar) and isinstance(r, Concat) and isinstance(r.left, TVar) and isinstance(r.right, TVar):
        return l, r.left, r.right
    if isinstance(r, TVar) and isinstance(l, Concat) and isinstance(l.left, TVar) and isinstance(l.right, TVar):
        return r, l.left, l.right
    return None


def _proj_eq(rel):
    if not (isinstance(rel, TRel) and rel.op == "="):
        return None
    l, r = rel.left, rel.right
    if isinstance(l, TVar) and isinstance(r, Project) and isinstance(r.trace, TVar):
        return l, r.trace, r.chans
    if isinstance(r, TVar) and isinstance(l, Project) and isinstance(l.trace, TVar):
        return r, l.trace, l.chans
    return None


def _member(term, cs: ChannelSet):
    if cs.cofinite:
        return and_all([Not(RRel("=", term, ChanLit(c))) for c in cs.sorted_members()])
    return or_all([RRel("=", term, ChanLit(c)) for c in cs.sorted_members()])


def _expand_proj(m, names, depth):
    h, h0, cs = m
    idx = names.trace("hI")
    i = names.real("i")
    k = names.real("k")
    ordered = Forall(
        i,
        Forall(
            k,
            Imp(
                and_all([Ge(i, num(0)), Lt(i, k), Lt(k, LenOf(idx))]),
                _simp(Lt(ValOf(At(idx, i)), ValOf(At(idx, k))), names, depth + 1),
            ),
        ),
    )
    picked = Forall(
        k,
        Imp(
            And(Ge(k, num(0)), Lt(k, LenOf(idx))),
            _simp(
                And(
                    TRel("=", At(h, k), At(h0, ValOf(At(idx, k)))),
                    _member(ChanOf(At(h0, ValOf(At(idx, k)))), cs),
                ),
                names,
                depth + 1,
            ),
        ),
    )
    rest = Forall(
        k,
        Imp(
            And(Ge(k, num(0)), Lt(k, LenOf(h0))),
            Imp(
                Forall(i, Imp(And(Ge(i, num(0)), Lt(i, LenOf(idx))), _simp(Not(RRel("=", ValOf(At(idx, i)), k)), names, depth + 1))),
                _simp(Not(_member(ChanOf(At(h0, k)), cs)), names, depth + 1),
            ),
        ),
    )
    return core.Exists(
        idx,
        and_all([RRel("=", LenOf(idx), LenOf(h)), ordered, picked, rest]),
    )


def _find(rel, pred):
    """Outermost subterm satisfying pred, with a rebuild function for the
    relation; deterministic left-to-right scan."""

    def scan(t, rebuild):
        if pred(t):
            return t, rebuild
        kids = _term_kids(t)
        for i, c in enumerate(kids):
            got = scan(c, lambda nc, i=i, t=t: rebuild(_replace_kid(t, i, nc)))
            if got is not None:
                return got
        return None

    for side, mk in (
        (rel.left, lambda nt: type(rel)(rel.op, nt, rel.right)),
        (rel.right, lambda nt: type(rel)(rel.op, rel.left, nt)),
    ):
        got = scan(side, mk)
        if got is not None:
            return got
    return None


def _term_kids(t):
    if isinstance(t, (Add, Mul, Concat)):
        return (t.left, t.right)
    if isinstance(t, _TRACE_OPS):
        return (t.trace,)
    if isinstance(t, Project):
        return (t.trace,)
    if isinstance(t, At):
        return (t.trace, t.index)
    if isinstance(t, EventTerm):
        return (t.value, t.stamp)
    return ()


def _replace_kid(t, i, nc):
    if isinstance(t, (Add, Mul, Concat)):
        return type(t)(nc if i == 0 else t.left, nc if i == 1 else t.right)
    if isinstance(t, _TRACE_OPS):
        return type(t)(nc)
    if isinstance(t, Project):
        return Project(nc, t.chans)
    if isinstance(t, At):
        return At(nc if i == 0 else t.trace, nc if i == 1 else t.index)
    if isinstance(t, EventTerm):
        return EventTerm(t.chan, nc if i == 0 else t.value, nc if i == 1 else t.stamp)
    raise TypeError("no children: %r" % (t,))
