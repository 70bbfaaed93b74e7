"""The trusted proof kernel.

Instantiates the axiom schemata and rules of the calculus from explicit
bindings (no unification), checks every side condition via the static
analyses, and replays proof scripts to verdicts.  Syntactic equality of
normalized formulas is the only formula identity; scripts rename bound
variables explicitly.

Axioms: assign nondetAssign test boxesDual dbDual acdbDual acComposition
acChoice acIteration acInduction hExtension Aclosure acNoCom send acCom
comDual Aweak acModalMP thereandback acConvergence acDropComp acLivePar
uniInstance faDist vacuousQuanti iG subsR.  Rules: MP forall acG.
Pseudo-steps: prop (propositional tautology), oracle (recorded base-logic
assumption, restricted to first-order trace/arithmetic facts and
ODE-modality facts).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import core
from .core import (
    FF,
    GT,
    GTP,
    TT,
    And,
    Assign,
    AcBox,
    AcDia,
    Box,
    ChannelSet,
    Choice,
    Concat,
    Dia,
    EventTerm,
    Exists,
    Forall,
    Ge,
    Gt,
    Iff,
    Imp,
    Le,
    Mul,
    Not,
    ODE,
    Or,
    Parallel,
    Prefix,
    Project,
    RRel,
    RVar,
    RandomAssign,
    Receive,
    Seq,
    Send,
    Star,
    StrictPrefix,
    TRel,
    TVar,
    Test,
    and_all,
    is_formula,
    is_polynomial,
    is_program,
    is_real_term,
    is_trace_term,
    neg,
    num,
    sub,
)
from .analysis import (
    accessed_channels,
    bv,
    channels,
    check_noninterference,
    fv,
    is_com_fod,
    is_folra,
    recorder,
    validate,
    var_set,
)
from .subst import InadmissibleInModality, SortMismatch, fresh, names_of, substitute


class KernelError(Exception):
    pass


class MissingSlot(KernelError):
    pass


class SideConditionViolated(KernelError):
    def __init__(self, code, witness=None):
        self.code = code
        self.witness = witness
        super().__init__("%s%s" % (code, " (%s)" % _wname(witness) if witness is not None else ""))


def _wname(w):
    return getattr(w, "name", w)


class PremiseMismatch(KernelError):
    pass


@dataclass(frozen=True)
class Schema:
    slots: tuple  # ((name, kind), ...)
    build: object
    note: str = ""


def _get(b, name, kinds):
    if name not in b:
        raise MissingSlot(name)
    val = b[name]
    ok = False
    for k in kinds:
        if k == "formula" and is_formula(val):
            ok = True
        elif k == "program" and is_program(val):
            ok = True
        elif k == "rvar" and isinstance(val, RVar):
            ok = True
        elif k == "tvar" and isinstance(val, TVar):
            ok = True
        elif k == "rterm" and is_real_term(val):
            ok = True
        elif k == "tterm" and is_trace_term(val):
            ok = True
        elif k == "chanset" and isinstance(val, ChannelSet):
            ok = True
        elif k == "channel" and isinstance(val, core.Channel):
            ok = True
    if not ok:
        raise SortMismatch("slot %s: expected %s" % (name, "/".join(kinds)))
    return val


def _check_fresh(v, exprs, what="variable"):
    """Footnote freshness: v may not occur at all in the given expressions."""
    for e in exprs:
        if e is None:
            continue
        if v.name in names_of(e):
            raise SideConditionViolated("freshness", v)


def _subst_sc(e, v, r):
    try:
        return substitute(e, v, r)
    except (InadmissibleInModality, SortMismatch) as ex:
        raise SideConditionViolated("substitution", str(ex))


def _poly(p, what):
    if not is_polynomial(p):
        raise SideConditionViolated("polynomial", what)
    return p


# ---------------------------------------------------------------------------
# axiom builders


def _ax_assign(b):
    x = _get(b, "x", ["rvar"])
    p = _poly(_get(b, "p", ["rterm"]), "p")
    psi = _get(b, "psi", ["formula"])
    return Iff(Box(Assign(x, p), psi), _subst_sc(psi, x, p))


def _ax_nondet_assign(b):
    x = _get(b, "x", ["rvar"])
    psi = _get(b, "psi", ["formula"])
    return Iff(Box(RandomAssign(x), psi), Forall(x, psi))


def _ax_test(b):
    chi = _get(b, "chi", ["formula"])
    psi = _get(b, "psi", ["formula"])
    if not is_folra(chi):
        raise SideConditionViolated("test-folra", None)
    return Iff(Box(Test(chi), psi), Imp(chi, psi))


def _ax_boxes_dual(b):
    a = _get(b, "alpha", ["program"])
    psi = _get(b, "psi", ["formula"])
    return Iff(Box(a, psi), AcBox(a, TT(), TT(), psi))


def _ax_db_dual(b):
    a = _get(b, "alpha", ["program"])
    psi = _get(b, "psi", ["formula"])
    return Iff(Dia(a, psi), Not(Box(a, Not(psi))))


def _ax_acdb_dual(b):
    a = _get(b, "alpha", ["program"])
    A, C, psi = (_get(b, k, ["formula"]) for k in ("A", "C", "psi"))
    return Iff(AcDia(a, A, C, psi), Not(AcBox(a, A, Not(C), Not(psi))))


def _ax_ac_composition(b):
    a = _get(b, "alpha", ["program"])
    b2 = _get(b, "beta", ["program"])
    A, C, psi = (_get(b, k, ["formula"]) for k in ("A", "C", "psi"))
    return Iff(AcBox(Seq(a, b2), A, C, psi), AcBox(a, A, C, AcBox(b2, A, C, psi)))


def _ax_ac_choice(b):
    a = _get(b, "alpha", ["program"])
    b2 = _get(b, "beta", ["program"])
    A, C, psi = (_get(b, k, ["formula"]) for k in ("A", "C", "psi"))
    return Iff(
        AcBox(Choice(a, b2), A, C, psi), And(AcBox(a, A, C, psi), AcBox(b2, A, C, psi))
    )


def _kernel0(A, C, psi):
    """[alpha^0]_{A,C} psi with alpha^0 == ?true, emitted literally."""
    return AcBox(Test(TT()), A, C, psi)


def _ax_ac_iteration(b):
    a = _get(b, "alpha", ["program"])
    A, C, psi = (_get(b, k, ["formula"]) for k in ("A", "C", "psi"))
    loop = AcBox(Star(a), A, C, psi)
    return Iff(loop, And(_kernel0(A, C, psi), AcBox(a, A, C, loop)))


def _ax_ac_induction(b):
    a = _get(b, "alpha", ["program"])
    A, C, psi = (_get(b, k, ["formula"]) for k in ("A", "C", "psi"))
    loop = AcBox(Star(a), A, C, psi)
    step = AcBox(Star(a), A, TT(), Imp(psi, AcBox(a, A, C, psi)))
    return Iff(loop, And(_kernel0(A, C, psi), step))


def _ax_h_extension(b):
    a = _get(b, "alpha", ["program"])
    cs = _get(b, "cs", ["chanset"])
    h0 = _get(b, "h0", ["tvar"])
    _check_fresh(h0, [a])
    rec = recorder(a)
    proj = Project(rec, cs)
    ext = Prefix(h0, proj)
    return Imp(TRel("=", h0, proj), AcBox(a, TT(), ext, ext))


def _closure(A, rec, cs, h0, hq, strict):
    rel = StrictPrefix(hq, Project(rec, cs)) if strict else Prefix(hq, Project(rec, cs))
    return Forall(hq, Imp(And(Prefix(h0, hq), rel), substitute(A, rec, hq)))


def _ax_a_closure(b):
    a = _get(b, "alpha", ["program"])
    A, C, psi = (_get(b, k, ["formula"]) for k in ("A", "C", "psi"))
    cs = _get(b, "cs", ["chanset"])
    h0 = _get(b, "h0", ["tvar"])
    hq = _get(b, "hq", ["tvar"])
    _check_fresh(h0, [a, A, C, psi])
    _check_fresh(hq, [a, A, C, psi, h0])
    if not accessed_channels(A).issubset(cs):
        raise SideConditionViolated("closure-channels", accessed_channels(A))
    rec = recorder(a)
    proj = Project(rec, cs)
    clo_s = _closure(A, rec, cs, h0, hq, True)
    clo_w = _closure(A, rec, cs, h0, hq, False)
    head = AcBox(a, A, clo_s, clo_w)
    equiv = Iff(AcBox(a, A, C, psi), AcBox(a, TT(), Imp(clo_s, C), Imp(clo_w, psi)))
    return Imp(TRel("=", h0, proj), And(head, equiv))


def _ax_ac_no_com(b):
    a = _get(b, "alpha", ["program"])
    A, C, psi = (_get(b, k, ["formula"]) for k in ("A", "C", "psi"))
    cn = channels(a)
    if not cn.is_empty():
        raise SideConditionViolated("CN-nonempty", cn.sorted_members()[0])
    return Iff(AcBox(a, A, C, psi), And(C, Imp(A, Box(a, psi))))


def _ax_send(b):
    ch = _get(b, "ch", ["channel"])
    h = _get(b, "h", ["tvar"])
    p = _poly(_get(b, "p", ["rterm"]), "p")
    psi = _get(b, "psi", ["formula"])
    h0 = _get(b, "h0", ["tvar"])
    _check_fresh(h0, [p, psi, h])
    ev = EventTerm(ch, p, GT)
    return Iff(
        Box(Send(ch, h, p), psi),
        Forall(h0, Imp(TRel("=", h0, Concat(h, ev)), _subst_sc(psi, h, h0))),
    )


def _ax_ac_com(b):
    ch = _get(b, "ch", ["channel"])
    h = _get(b, "h", ["tvar"])
    p = _poly(_get(b, "p", ["rterm"]), "p")
    A, C, psi = (_get(b, k, ["formula"]) for k in ("A", "C", "psi"))
    snd = Send(ch, h, p)
    return Iff(
        AcBox(snd, A, C, psi),
        AcBox(Test(TT()), A, C, Box(snd, AcBox(Test(TT()), A, C, psi))),
    )


def _ax_com_dual(b):
    ch = _get(b, "ch", ["channel"])
    h = _get(b, "h", ["tvar"])
    x = _get(b, "x", ["rvar"])
    A, C, psi = (_get(b, k, ["formula"]) for k in ("A", "C", "psi"))
    return Iff(
        AcBox(Receive(ch, h, x), A, C, psi),
        Box(RandomAssign(x), AcBox(Send(ch, h, x), A, C, psi)),
    )


def _ax_a_weak(b):
    a = _get(b, "alpha", ["program"])
    A = _get(b, "A", ["formula"])
    Aw = _get(b, "Aweak", ["formula"])
    C, psi = (_get(b, k, ["formula"]) for k in ("C", "psi"))
    guard = AcBox(a, TT(), Imp(And(C, Aw), A), TT())
    return Imp(And(guard, AcBox(a, A, C, psi)), AcBox(a, Aw, C, psi))


def _ax_ac_modal_mp(b):
    a = _get(b, "alpha", ["program"])
    A = _get(b, "A", ["formula"])
    C1, C2 = _get(b, "C1", ["formula"]), _get(b, "C2", ["formula"])
    p1, p2 = _get(b, "psi1", ["formula"]), _get(b, "psi2", ["formula"])
    return Imp(
        AcBox(a, A, Imp(C1, C2), Imp(p1, p2)),
        Imp(AcBox(a, A, C1, p1), AcBox(a, A, C2, p2)),
    )


def _ax_thereandback(b):
    ode = _get(b, "ode", ["program"])
    if not isinstance(ode, ODE):
        raise SideConditionViolated("not-an-evolution", None)
    psi = _get(b, "psi", ["formula"])
    g = _get(b, "g", ["rvar"])
    g0 = _get(b, "g0", ["rvar"])
    if g.primed or g0.primed:
        raise SideConditionViolated("clock-unprimed", g)
    _check_fresh(g, [ode, psi, g0])
    _check_fresh(RVar(g.base, True), [ode, psi, g0])
    _check_fresh(g0, [ode, psi])
    fwd = ODE(((g, num(1)),) + ode.eqs, TT())
    bwd = ODE(((g, num(-1)),) + tuple((x, neg(p)) for x, p in ode.eqs), TT())
    inner = Imp(Box(bwd, Imp(Ge(g, g0), ode.domain)), psi)
    return Iff(Box(ode, psi), Forall(g0, Imp(RRel("=", g0, g), Box(fwd, inner))))


def _ax_ac_convergence(b):
    a = _get(b, "alpha", ["program"])
    A = _get(b, "A", ["formula"])
    phi = _get(b, "phi", ["formula"])
    v = _get(b, "v", ["rvar"])
    _check_fresh(v, [a, A])
    step = Forall(
        v,
        Imp(Gt(v, num(0)), Imp(phi, AcDia(a, A, FF(), _subst_sc(phi, v, sub(v, num(1)))))),
    )
    lhs = AcBox(Star(a), A, TT(), step)
    goal = AcDia(Star(a), A, FF(), Exists(v, And(Le(v, num(0)), phi)))
    return Imp(lhs, Forall(v, Imp(phi, goal)))


def _ax_ac_drop_comp(b):
    a = _get(b, "alpha", ["program"])
    b2 = _get(b, "beta", ["program"])
    A, C, psi = (_get(b, k, ["formula"]) for k in ("A", "C", "psi"))
    par = _get(b, "par", ["program"])
    # parallel composition commutes: beta may be injected on either side
    if par not in (Parallel(a, b2), Parallel(b2, a)):
        raise SideConditionViolated("parallel-shape", None)
    rec = recorder(par)
    ok, witness = check_noninterference(b2, A, C, psi, a, rec)
    if not ok:
        raise SideConditionViolated("noninterference", witness)
    return Imp(AcBox(a, A, C, psi), AcBox(par, A, C, psi))


def _ax_ac_live_par(b):
    a = _get(b, "alpha", ["program"])
    b2 = _get(b, "beta", ["program"])
    C = _get(b, "C", ["formula"])
    psi = _get(b, "psi", ["formula"])
    par = Parallel(a, b2)
    rec = recorder(par)
    avoid = set(names_of(par)) | set(names_of(C)) | set(names_of(psi)) | {rec.name}
    h0 = fresh("trace", avoid, "h0")
    avoid.add(h0.name)
    hab = fresh("trace", avoid, "hab")
    avoid.add(hab.name)

    def zvec(prog):
        xs = sorted((x for x in var_set(prog) if isinstance(x, RVar)), key=lambda x: x.name)
        zs = []
        for x in xs:
            z = fresh("real", avoid, "z." + x.name)
            avoid.add(z.name)
            zs.append((x, z))
        return zs

    za, zb = zvec(a), zvec(b2)
    i = 0
    while True:
        gbase = "g" if i == 0 else "g_%d" % i
        if gbase not in avoid and (gbase + "'") not in avoid:
            break
        i += 1
    g = RVar(gbase)
    gp = RVar(gbase, True)
    avoid.add(g.name)
    avoid.add(gp.name)
    fin = fresh("real", avoid, "fin")
    fin_atom = RRel("=", fin, num(1))
    whole = Concat(h0, hab)

    def commit_of(prog):
        return and_all(
            [
                Not(fin_atom),
                TRel("=", rec, Concat(h0, Project(hab, channels(prog)))),
                _subst_sc(C, rec, whole),
            ]
        )

    def post_of(prog, zs):
        tail = psi
        for x, z in za:
            tail = _subst_sc(tail, x, z)
        for x, z in zb:
            tail = _subst_sc(tail, x, z)
        tail = _subst_sc(tail, rec, whole)
        conj = [fin_atom, TRel("=", rec, Concat(h0, Project(hab, channels(prog))))]
        conj += [RRel("=", z, x) for x, z in zs]
        conj += [RRel("=", GT, g), RRel("=", GTP, gp)]
        conj.append(tail)
        return and_all(conj)

    body = and_all(
        [
            TRel("=", h0, rec),
            TRel("=", Project(hab, channels(par)), hab),
            AcDia(a, TT(), commit_of(a), post_of(a, za)),
            AcDia(b2, TT(), commit_of(b2), post_of(b2, zb)),
        ]
    )
    evs = [h0, hab] + [z for _, z in za] + [z for _, z in zb] + [g, gp, fin]
    return Imp(core.exists_all(evs, body), AcDia(par, TT(), C, psi))


def _ax_uni_instance(b):
    v = _get(b, "v", ["rvar", "tvar"])
    psi = _get(b, "psi", ["formula"])
    e = _get(b, "e", ["rterm", "tterm"])
    if isinstance(v, RVar) != is_real_term(e):
        raise SortMismatch("slot e must match the sort of v")
    return Imp(Forall(v, psi), _subst_sc(psi, v, e))


def _ax_fa_dist(b):
    v = _get(b, "v", ["rvar", "tvar"])
    phi = _get(b, "phi", ["formula"])
    psi = _get(b, "psi", ["formula"])
    return Imp(Forall(v, Imp(phi, psi)), Imp(Forall(v, phi), Forall(v, psi)))


def _ax_vacuous_quanti(b):
    v = _get(b, "v", ["rvar", "tvar"])
    psi = _get(b, "psi", ["formula"])
    if v in fv(psi):
        raise SideConditionViolated("vacuous", v)
    return Imp(psi, Forall(v, psi))


def _ax_ig(b):
    v0 = _get(b, "v0", ["rvar", "tvar"])
    e = _get(b, "e", ["rterm", "tterm"])
    psi = _get(b, "psi", ["formula"])
    if isinstance(v0, RVar) != is_real_term(e):
        raise SortMismatch("slot e must match the sort of v0")
    if v0 in fv(psi) or v0 in fv(e):
        raise SideConditionViolated("freshness", v0)
    return Imp(Forall(v0, Imp(core.Eq(v0, e), psi)), psi)


def _ax_subs_r(b):
    v0 = _get(b, "v0", ["rvar", "tvar"])
    v = _get(b, "v", ["rvar", "tvar"])
    psi = _get(b, "psi", ["formula"])
    if isinstance(v0, RVar) != isinstance(v, RVar):
        raise SortMismatch("v0 and v must have the same sort")
    return Imp(core.Eq(v0, v), Imp(psi, _subst_sc(psi, v0, v)))


AXIOMS = {
    "assign": Schema((("x", "rvar"), ("p", "rterm"), ("psi", "formula")), _ax_assign),
    "nondetAssign": Schema((("x", "rvar"), ("psi", "formula")), _ax_nondet_assign),
    "test": Schema((("chi", "formula"), ("psi", "formula")), _ax_test),
    "boxesDual": Schema((("alpha", "program"), ("psi", "formula")), _ax_boxes_dual),
    "dbDual": Schema((("alpha", "program"), ("psi", "formula")), _ax_db_dual),
    "acdbDual": Schema(
        (("alpha", "program"), ("A", "formula"), ("C", "formula"), ("psi", "formula")),
        _ax_acdb_dual,
    ),
    "acComposition": Schema(
        (("alpha", "program"), ("beta", "program"), ("A", "formula"), ("C", "formula"), ("psi", "formula")),
        _ax_ac_composition,
    ),
    "acChoice": Schema(
        (("alpha", "program"), ("beta", "program"), ("A", "formula"), ("C", "formula"), ("psi", "formula")),
        _ax_ac_choice,
    ),
    "acIteration": Schema(
        (("alpha", "program"), ("A", "formula"), ("C", "formula"), ("psi", "formula")),
        _ax_ac_iteration,
    ),
    "acInduction": Schema(
        (("alpha", "program"), ("A", "formula"), ("C", "formula"), ("psi", "formula")),
        _ax_ac_induction,
    ),
    "hExtension": Schema(
        (("alpha", "program"), ("cs", "chanset"), ("h0", "tvar")), _ax_h_extension
    ),
    "Aclosure": Schema(
        (
            ("alpha", "program"),
            ("A", "formula"),
            ("C", "formula"),
            ("psi", "formula"),
            ("cs", "chanset"),
            ("h0", "tvar"),
            ("hq", "tvar"),
        ),
        _ax_a_closure,
    ),
    "acNoCom": Schema(
        (("alpha", "program"), ("A", "formula"), ("C", "formula"), ("psi", "formula")),
        _ax_ac_no_com,
    ),
    "send": Schema(
        (("ch", "channel"), ("h", "tvar"), ("p", "rterm"), ("psi", "formula"), ("h0", "tvar")),
        _ax_send,
    ),
    "acCom": Schema(
        (("ch", "channel"), ("h", "tvar"), ("p", "rterm"), ("A", "formula"), ("C", "formula"), ("psi", "formula")),
        _ax_ac_com,
    ),
    "comDual": Schema(
        (("ch", "channel"), ("h", "tvar"), ("x", "rvar"), ("A", "formula"), ("C", "formula"), ("psi", "formula")),
        _ax_com_dual,
    ),
    "Aweak": Schema(
        (("alpha", "program"), ("A", "formula"), ("Aweak", "formula"), ("C", "formula"), ("psi", "formula")),
        _ax_a_weak,
    ),
    "acModalMP": Schema(
        (
            ("alpha", "program"),
            ("A", "formula"),
            ("C1", "formula"),
            ("C2", "formula"),
            ("psi1", "formula"),
            ("psi2", "formula"),
        ),
        _ax_ac_modal_mp,
    ),
    "thereandback": Schema(
        (("ode", "program"), ("psi", "formula"), ("g", "rvar"), ("g0", "rvar")),
        _ax_thereandback,
    ),
    "acConvergence": Schema(
        (("alpha", "program"), ("A", "formula"), ("phi", "formula"), ("v", "rvar")),
        _ax_ac_convergence,
    ),
    "acDropComp": Schema(
        (
            ("alpha", "program"),
            ("beta", "program"),
            ("A", "formula"),
            ("C", "formula"),
            ("psi", "formula"),
            ("par", "program"),
        ),
        _ax_ac_drop_comp,
    ),
    "acLivePar": Schema(
        (("alpha", "program"), ("beta", "program"), ("C", "formula"), ("psi", "formula")),
        _ax_ac_live_par,
    ),
    "uniInstance": Schema((("v", "var"), ("psi", "formula"), ("e", "term")), _ax_uni_instance),
    "faDist": Schema((("v", "var"), ("phi", "formula"), ("psi", "formula")), _ax_fa_dist),
    "vacuousQuanti": Schema((("v", "var"), ("psi", "formula")), _ax_vacuous_quanti),
    "iG": Schema((("v0", "var"), ("e", "term"), ("psi", "formula")), _ax_ig),
    "subsR": Schema((("v0", "var"), ("v", "var"), ("psi", "formula")), _ax_subs_r),
}

RULES = {"MP": 2, "forall": 1, "acG": 1}

SLOT_KINDS = {
    "var": ("rvar", "tvar"),
    "term": ("rterm", "tterm"),
    "rvar": ("rvar",),
    "tvar": ("tvar",),
    "rterm": ("rterm",),
    "tterm": ("tterm",),
    "formula": ("formula",),
    "program": ("program",),
    "chanset": ("chanset",),
    "channel": ("channel",),
}


def instantiate_axiom(axiom_id: str, binding: dict):
    if axiom_id not in AXIOMS:
        raise KernelError("unknown axiom %r" % axiom_id)
    schema = AXIOMS[axiom_id]
    for name, _ in schema.slots:
        if name not in binding:
            raise MissingSlot(name)
    for name in binding:
        if name not in {n for n, _ in schema.slots}:
            raise KernelError("axiom %s has no slot %r" % (axiom_id, name))
    b = dict(binding)
    for name, kind in schema.slots:
        b[name] = _get(binding, name, list(SLOT_KINDS[kind]))
    out = schema.build(b)
    diags = validate(out)
    if diags:
        raise SideConditionViolated(diags[0].code, diags[0].message)
    return out


def apply_rule(rule_id: str, premises: list, binding: dict):
    if rule_id == "MP":
        if len(premises) != 2:
            raise PremiseMismatch("MP needs two premises")
        phi, impl = premises
        m = _imp_parts(impl)
        if m is None or m[0] != phi:
            raise PremiseMismatch("second premise must be an implication from the first")
        return m[1]
    if rule_id == "forall":
        if len(premises) != 1:
            raise PremiseMismatch("forall needs one premise")
        v = _get(binding, "v", ["rvar", "tvar"])
        return Forall(v, premises[0])
    if rule_id == "acG":
        if len(premises) != 1:
            raise PremiseMismatch("acG needs one premise")
        a = _get(binding, "alpha", ["program"])
        A = _get(binding, "A", ["formula"])
        C = _get(binding, "C", ["formula"])
        psi = _get(binding, "psi", ["formula"])
        if premises[0] != And(C, psi):
            raise PremiseMismatch("premise must be the conjunction of commitment and postcondition")
        out = AcBox(a, A, C, psi)
        diags = validate(out)
        if diags:
            raise SideConditionViolated(diags[0].code, diags[0].message)
        return out
    raise KernelError("unknown rule %r" % rule_id)


def _imp_parts(f):
    if isinstance(f, Not) and isinstance(f.body, And) and isinstance(f.body.right, Not):
        return f.body.left, f.body.right.body
    return None


# ---------------------------------------------------------------------------
# propositional tautology checking

_MAX_PROP_ATOMS = 64


def is_prop_taut(f) -> bool:
    """Tautology after abstracting maximal non-propositional subformulas to
    atoms (identical atoms by syntactic equality)."""
    atoms = {}
    tree = _abstract(f, atoms)
    if len(atoms) > _MAX_PROP_ATOMS:
        raise KernelError(
            "propositional abstraction has too many atoms (%d)" % len(atoms)
        )
    return not _sat(("not", tree))


def _sat(tree) -> bool:
    """Satisfiability by splitting on atoms with partial evaluation."""
    tree = _psimp(tree, None, None)
    if tree == ("true",):
        return True
    if tree == ("false",):
        return False
    atom = _pick_atom(tree)
    return _sat(_psimp(tree, atom, True)) or _sat(_psimp(tree, atom, False))


def _psimp(tree, atom, val):
    tag = tree[0]
    if tag == "atom":
        if atom is not None and tree[1] == atom:
            return ("true",) if val else ("false",)
        return tree
    if tag in ("true", "false"):
        return tree
    if tag == "not":
        b = _psimp(tree[1], atom, val)
        if b == ("true",):
            return ("false",)
        if b == ("false",):
            return ("true",)
        if b[0] == "not":
            return b[1]
        return ("not", b)
    l = _psimp(tree[1], atom, val)
    if l == ("false",):
        return ("false",)
    r = _psimp(tree[2], atom, val)
    if r == ("false",):
        return ("false",)
    if l == ("true",):
        return r
    if r == ("true",):
        return l
    return ("and", l, r)


def _pick_atom(tree):
    while True:
        tag = tree[0]
        if tag == "atom":
            return tree[1]
        if tag == "not":
            tree = tree[1]
            continue
        tree = tree[1]


_TRUE_ATOM = TT()


def _abstract(f, atoms):
    if isinstance(f, And):
        return ("and", _abstract(f.left, atoms), _abstract(f.right, atoms))
    if isinstance(f, Not):
        return ("not", _abstract(f.body, atoms))
    if f == _TRUE_ATOM:
        # the canonical truth constant is transparent (it is valid, so
        # valuating it true in every assignment is sound)
        return ("true",)
    if f not in atoms:
        atoms[f] = len(atoms)
    return ("atom", atoms[f])


def _peval(tree, vals) -> bool:
    tag = tree[0]
    if tag == "atom":
        return vals[tree[1]]
    if tag == "true":
        return True
    if tag == "not":
        return not _peval(tree[1], vals)
    return _peval(tree[1], vals) and _peval(tree[2], vals)


# ---------------------------------------------------------------------------
# proof scripts


@dataclass(frozen=True)
class Step:
    label: str
    kind: str  # 'axiom' | 'rule' | 'prop' | 'oracle'
    rule_id: Optional[str]
    binding: tuple  # ((name, value), ...)
    premises: tuple  # labels
    conclusion: object


@dataclass(frozen=True)
class ProofScript:
    name: str
    steps: tuple


@dataclass(frozen=True)
class Verdict:
    status: str  # 'proved' | 'failed'
    theorem: Optional[object]
    assumptions: tuple
    steps: int
    millis: float
    failed_at: Optional[str] = None
    message: Optional[str] = None


def check_proof(script: ProofScript) -> Verdict:
    """Replays every step and compares the recomputed formula against the
    stated conclusion; never raises on malformed scripts."""
    t0 = time.perf_counter()
    seen = {}
    assumptions = []

    def fail(step, msg):
        return Verdict(
            "failed",
            None,
            tuple(assumptions),
            len(script.steps),
            (time.perf_counter() - t0) * 1000.0,
            failed_at=step.label,
            message=msg,
        )

    last = None
    for step in script.steps:
        if step.label in seen:
            return fail(step, "duplicate label %r" % step.label)
        try:
            if step.kind == "axiom":
                got = instantiate_axiom(step.rule_id, dict(step.binding))
                if got != step.conclusion:
                    return fail(step, "stated conclusion differs from the instantiated axiom")
            elif step.kind == "rule":
                prems = []
                for lbl in step.premises:
                    if lbl not in seen:
                        return fail(step, "premise %r does not name an earlier step" % lbl)
                    prems.append(seen[lbl])
                got = apply_rule(step.rule_id, prems, dict(step.binding))
                if got != step.conclusion:
                    return fail(step, "stated conclusion differs from the rule application")
            elif step.kind == "prop":
                if not is_prop_taut(step.conclusion):
                    return fail(step, "not a propositional tautology")
            elif step.kind == "oracle":
                if not is_com_fod(step.conclusion):
                    return fail(step, "oracle formula outside the base-logic fragment")
                assumptions.append(step.conclusion)
            else:
                return fail(step, "unknown step kind %r" % step.kind)
            if step.kind in ("prop", "oracle"):
                # axiom/rule conclusions equal the validated recomputation
                diags = validate(step.conclusion)
                if diags:
                    return fail(step, "%s: %s" % (diags[0].code, diags[0].message))
        except KernelError as ex:
            return fail(step, str(ex))
        except Exception as ex:  # malformed input must not crash the kernel
            return fail(step, "%s: %s" % (type(ex).__name__, ex))
        seen[step.label] = step.conclusion
        last = step.conclusion
    if last is None:
        return Verdict("failed", None, (), 0, (time.perf_counter() - t0) * 1000.0, message="empty script")
    return Verdict(
        "proved",
        last,
        tuple(assumptions),
        len(script.steps),
        (time.perf_counter() - t0) * 1000.0,
    )
