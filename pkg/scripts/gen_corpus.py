"""Regenerates the shipped corpus: the derived-axiom replay scripts, the
convoy case study, the semantics program corpus, and the normalization
formula corpus.  Run from the repository root:

    python scripts/gen_corpus.py
"""
from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from proofgen import (
    PB,
    _closure_of,
    ac_boxes_dist,
    ac_dia_mono,
    ac_invariant,
    ac_loop_simple,
    ac_mono,
    ac_mono_taut,
    box_a_of,
    drop_ghost,
    gen_ctx,
    mutual_a_weak,
)

from dlchp import core
from dlchp.core import (
    FF,
    GT,
    TT,
    And,
    AcBox,
    AcDia,
    Box,
    Channel,
    ChannelSet,
    Choice,
    Dia,
    Forall,
    Iff,
    Imp,
    Not,
    Or,
    Parallel,
    Prefix,
    Project,
    RVar,
    Seq,
    Star,
    TRel,
    TVar,
    Test,
    and_all,
)
from dlchp.analysis import fv, recorder
from dlchp.kernel import check_proof
from dlchp.scripts import parse_proof, write_proof
from dlchp.subst import substitute
from dlchp.syntax import parse, print_formula, print_program

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS = os.path.join(ROOT, "corpus")


def fparse(s):
    return parse(s, "formula")


def pparse(s):
    return parse(s, "program")


def emit(subdir: str, name: str, script, defs=None, expect_assumptions=None):
    from dlchp.scripts import auto_defs

    text = write_proof(script, defs=auto_defs(script) if defs is None else defs)
    back = parse_proof(text)
    assert back == script, "writer/reader mismatch for %s" % name
    v = check_proof(back)
    assert v.status == "proved", "%s failed at %s: %s" % (name, v.failed_at, v.message)
    if expect_assumptions is not None:
        assert len(v.assumptions) == expect_assumptions, (
            name,
            len(v.assumptions),
        )
    path = os.path.join(CORPUS, subdir, name)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    print("wrote %-34s %4d steps %2d assumptions" % (
        os.path.relpath(path, ROOT), len(script.steps), len(v.assumptions)))


# ---------------------------------------------------------------------------
# the 11 derived axioms and rules (Fig.-4 layer)

ALPHA = pparse("c(h)!z")
A1 = fparse("x >= 0")
A2 = fparse("x >= 0 & y >= 0")
C1 = fparse("y >= 0")
C2 = fparse("y >= 0 | x >= 0")
P1 = fparse("x >= 0 & y >= 0")
P2 = fparse("y >= 0")


def gen_acMono():
    pb = PB("acMono")
    la = pb.prop(Imp(A2, A1))
    lc = pb.prop(Imp(C1, C2))
    lp = pb.prop(Imp(P1, P2))
    ac_mono(pb, ALPHA, A1, C1, P1, A2, C2, P2, la, lc, lp)
    emit("derived", "acMono.proof", pb.checked_script(), expect_assumptions=0)


def gen_acDiaMono():
    pb = PB("acDiaMono")
    la = pb.prop(Imp(A2, A1))
    lc = pb.prop(Imp(C1, C2))
    lp = pb.prop(Imp(P1, P2))
    ac_dia_mono(pb, ALPHA, A2, C1, P1, A1, C2, P2, la, lc, lp)
    emit("derived", "acDiaMono.proof", pb.checked_script(), expect_assumptions=0)


def gen_acBoxesDist():
    pb = PB("acBoxesDist")
    ac_boxes_dist(pb, ALPHA, A1, C1, P1, C2, P2)
    emit("derived", "acBoxesDist.proof", pb.checked_script(), expect_assumptions=0)


def gen_mutualAweak():
    pb = PB("mutualAweak")
    a = fparse("z >= 0")
    mutual_a_weak(pb, ALPHA, a, A1, A2, C1, C2, P1)
    emit("derived", "mutualAweak.proof", pb.checked_script(), expect_assumptions=0)


def gen_diasDual():
    pb = PB("diasDual")
    psi = fparse("x >= 0")
    d_db = pb.axiom("dbDual", alpha=ALPHA, psi=psi)
    d_box = pb.axiom("boxesDual", alpha=ALPHA, psi=Not(psi))
    b1 = ac_mono_taut(pb, ALPHA, TT(), TT(), Not(psi), TT(), Not(FF()), Not(psi))
    b2 = ac_mono_taut(pb, ALPHA, TT(), Not(FF()), Not(psi), TT(), TT(), Not(psi))
    d_ac = pb.axiom("acdbDual", alpha=ALPHA, A=TT(), C=FF(), psi=psi)
    target = Iff(Dia(ALPHA, psi), AcDia(ALPHA, TT(), FF(), psi))
    pb.propmp(target, d_db, d_box, b1, b2, d_ac)
    emit("derived", "diasDual.proof", pb.checked_script(), expect_assumptions=0)


def gen_acDiaNoCom():
    pb = PB("acDiaNoCom")
    alpha = pparse("q := 1")
    a, c, psi = A1, C1, P2
    d_ac = pb.axiom("acdbDual", alpha=alpha, A=a, C=c, psi=psi)
    d_no = pb.axiom("acNoCom", alpha=alpha, A=a, C=Not(c), psi=Not(psi))
    d_db = pb.axiom("dbDual", alpha=alpha, psi=psi)
    target = Iff(AcDia(alpha, a, c, psi), Or(c, And(a, Dia(alpha, psi))))
    pb.propmp(target, d_ac, d_no, d_db)
    emit("derived", "acDiaNoCom.proof", pb.checked_script(), expect_assumptions=0)


def gen_acSplitDia():
    pb = PB("acSplitDia")
    alpha, a, c, psi = ALPHA, A1, C1, P2
    d0 = pb.axiom("acdbDual", alpha=alpha, A=a, C=c, psi=psi)
    d1 = pb.axiom("acdbDual", alpha=alpha, A=a, C=c, psi=FF())
    d2 = pb.axiom("acdbDual", alpha=alpha, A=a, C=FF(), psi=psi)
    dist = ac_boxes_dist(pb, alpha, a, Not(c), Not(FF()), Not(FF()), Not(psi))
    b1 = ac_mono_taut(
        pb, alpha, a, Not(c), Not(psi), a, And(Not(c), Not(FF())), And(Not(FF()), Not(psi))
    )
    b2 = ac_mono_taut(
        pb, alpha, a, And(Not(c), Not(FF())), And(Not(FF()), Not(psi)), a, Not(c), Not(psi)
    )
    target = Iff(
        AcDia(alpha, a, c, psi),
        Or(AcDia(alpha, a, c, FF()), AcDia(alpha, a, FF(), psi)),
    )
    pb.propmp(target, d0, d1, d2, dist, b1, b2)
    emit("derived", "acSplitDia.proof", pb.checked_script(), expect_assumptions=0)


def gen_acArrival():
    pb = PB("acArrival")
    alpha = ALPHA
    a = fparse("val(h|{c}) >= 0")
    c, psi = fparse("x >= 0"), fparse("y >= 0")
    kern = Test(TT())
    ind = pb.axiom("acInduction", alpha=alpha, A=a, C=Not(c), psi=Not(psi))
    d0 = pb.axiom("acdbDual", alpha=Star(alpha), A=a, C=c, psi=psi)
    d1 = pb.axiom("acdbDual", alpha=kern, A=a, C=c, psi=psi)
    d3 = pb.axiom("acdbDual", alpha=alpha, A=a, C=c, psi=psi)
    x_in = Imp(Not(psi), AcBox(alpha, a, Not(c), Not(psi)))
    x_tgt = And(Not(psi), AcDia(alpha, a, c, psi))
    lp1 = pb.propmp(Imp(x_in, Not(x_tgt)), d3)
    lp2 = pb.propmp(Imp(Not(x_tgt), x_in), d3)
    la = pb.prop(Imp(a, a))
    b1 = ac_mono(
        pb, Star(alpha), a, TT(), x_in, a, Not(FF()), Not(x_tgt),
        la, pb.prop(Imp(TT(), Not(FF()))), lp1,
    )
    b2 = ac_mono(
        pb, Star(alpha), a, Not(FF()), Not(x_tgt), a, TT(), x_in,
        la, pb.prop(Imp(Not(FF()), TT())), lp2,
    )
    d2 = pb.axiom("acdbDual", alpha=Star(alpha), A=a, C=FF(), psi=x_tgt)
    target = Iff(
        AcDia(Star(alpha), a, c, psi),
        Or(AcDia(kern, a, c, psi), AcDia(Star(alpha), a, FF(), x_tgt)),
    )
    pb.propmp(target, ind, d0, d1, b1, b2, d2)
    emit("derived", "acArrival.proof", pb.checked_script(), expect_assumptions=0)


def gen_acInvariant():
    pb = PB("acInvariant")
    alpha = pparse("q := 1")
    a = fparse("z = 1")
    c = fparse("y >= 0 | z = 1")
    psi = fparse("y >= 0")
    noc = pb.axiom("acNoCom", alpha=alpha, A=a, C=c, psi=psi)
    asg = pb.axiom("assign", x=RVar("q"), p=core.num(1), psi=psi)
    lstep = pb.propmp(Imp(psi, AcBox(alpha, a, c, psi)), noc, asg)
    ac_invariant(pb, alpha, a, c, psi, lstep)
    emit("derived", "acInvariant.proof", pb.checked_script(), expect_assumptions=0)


def _send_box_kernel(pb: PB, snd, a, c, theta, h1):
    """Derive idA: context-free implication body for [snd]_{A,C}theta with
    commitment/postcondition handled propositionally by the caller.
    Returns (acCom-iff, outer-kernel iffs, send-iff, inner-kernel iffs)."""
    ch, h, term = snd.chan, snd.recorder, snd.term
    kern = Test(TT())
    x_com = pb.axiom("acCom", ch=ch, h=h, p=term, A=a, C=c, psi=theta)
    inner = AcBox(kern, a, c, theta)
    x_no_i = pb.axiom("acNoCom", alpha=kern, A=a, C=c, psi=theta)
    x_tst_i = pb.axiom("test", chi=TT(), psi=theta)
    x_snd = pb.axiom("send", ch=ch, h=h, p=term, psi=inner, h0=h1)
    inner1 = substitute(inner, h, h1)
    x_no_i1 = pb.axiom(
        "acNoCom", alpha=kern, A=substitute(a, h, h1), C=substitute(c, h, h1), psi=substitute(theta, h, h1)
    )
    x_tst_i1 = pb.axiom("test", chi=TT(), psi=substitute(theta, h, h1))
    box_snd = Box(snd, inner)
    x_no_o = pb.axiom("acNoCom", alpha=kern, A=a, C=c, psi=box_snd)
    x_tst_o = pb.axiom("test", chi=TT(), psi=box_snd)
    return x_com, x_no_o, x_tst_o, x_snd, x_no_i1, x_tst_i1, x_no_i, x_tst_i, inner1


def gen_acLoop():
    pb = PB("acLoop")
    alpha = ALPHA  # c(h)!z
    a = fparse("val(h|{c}) >= 0")
    inv = fparse("z >= 0")
    psi = fparse("z >= 0 & val(h|{c}) >= 0")
    g = fparse("z >= 0")
    cs = ChannelSet.finite({Channel("c")})
    h0, hq, h1 = TVar("h0"), TVar("h'"), TVar("h1")
    rec = TVar("h")

    # premise 1: G -> true & I
    l_init = pb.prop(Imp(g, And(TT(), inv)))

    # premise 2: I -> [c(h)!z]_{A,true} I
    parts = _send_box_kernel(pb, ALPHA, a, TT(), inv, h1)
    x_com, x_no_o, x_tst_o, x_snd, x_no_i1, x_tst_i1, x_no_i, x_tst_i, inner1 = parts
    ev = core.Concat(rec, core.EventTerm(Channel("c"), RVar("z"), GT))
    leaf = pb.propmp(Imp(inv, Imp(TRel("=", h1, ev), inner1)), x_no_i1, x_tst_i1)
    allh = gen_ctx(pb, inv, h1, leaf)
    l_pres = pb.propmp(
        Imp(inv, AcBox(ALPHA, a, TT(), inv)),
        allh, x_snd, x_no_o, x_tst_o, x_com,
    )

    # premise 3: I & A -> psi is propositional for this instance
    l_use_raw = pb.prop(Imp(And(inv, a), psi))

    # [alpha*]_{A,true} A via history invariance and assumption closure
    clo_w = _closure_of(a, rec, cs, h0, hq, False)
    orc = pb.oracle(Imp(And(Prefix(h0, Project(rec, cs)), clo_w), a))
    pA = box_a_of(pb, Star(alpha), a, cs, h0, hq, orc)

    invar = ac_invariant(pb, alpha, a, TT(), inv, l_pres)
    dist = ac_boxes_dist(pb, Star(alpha), a, TT(), inv, TT(), a)
    la = pb.prop(Imp(a, a))
    lc = pb.prop(Imp(And(TT(), TT()), TT()))
    lp = pb.propmp(Imp(And(inv, a), psi), l_use_raw)
    mono = ac_mono(
        pb, Star(alpha), a, And(TT(), TT()), And(inv, a), a, TT(), psi, la, lc, lp
    )
    pb.propmp(Imp(g, AcBox(Star(alpha), a, TT(), psi)), l_init, invar, pA, dist, mono)
    emit("derived", "acLoop.proof", pb.checked_script(), expect_assumptions=1)


def gen_acParComp():
    pb = PB("acParComp")
    a1p = pparse("c(h)!z")
    a2p = pparse("d(h)?u")
    par = Parallel(a1p, a2p)
    aa = TT()
    c1 = fparse("x >= 0 -> x >= 0")
    p1 = fparse("x >= 0 | !(x >= 0)")
    c2 = fparse("y >= 0 -> y >= 0")
    p2 = fparse("y >= 0 | !(y >= 0)")
    ck = And(Imp(And(aa, c1), TT()), Imp(And(aa, c2), TT()))
    l_ck = pb.prop(ck)
    # premises: the two local contracts derive by Goedel generalization
    g1 = pb.rule("acG", [pb.prop(And(c1, p1))], alpha=a1p, A=TT(), C=c1, psi=p1)
    g2 = pb.rule("acG", [pb.prop(And(c2, p2))], alpha=a2p, A=TT(), C=c2, psi=p2)
    # inject each into the parallel composition
    i1 = pb.axiom("acDropComp", alpha=a1p, beta=a2p, A=TT(), C=c1, psi=p1, par=par)
    i2 = pb.axiom("acDropComp", alpha=a2p, beta=a1p, A=TT(), C=c2, psi=p2, par=par)
    m1 = ac_mono_taut(pb, par, TT(), c1, p1, And(TT(), TT()), c1, p1)
    m2 = ac_mono_taut(pb, par, TT(), c2, p2, And(TT(), TT()), c2, p2)
    dist = ac_boxes_dist(pb, par, And(TT(), TT()), c1, p1, c2, p2)
    gck = pb.rule("acG", [pb.propmp(And(ck, TT()), l_ck)], alpha=par, A=TT(), C=ck, psi=TT())
    mw = mutual_a_weak(pb, par, aa, TT(), TT(), c1, c2, And(p1, p2))
    target = AcBox(par, aa, And(c1, c2), And(p1, p2))
    pb.propmp(target, g1, g2, i1, i2, m1, m2, dist, gck, mw)
    emit("derived", "acParComp.proof", pb.checked_script(), expect_assumptions=0)


def gen_derived():
    gen_acMono()
    gen_acDiaMono()
    gen_acBoxesDist()
    gen_mutualAweak()
    gen_diasDual()
    gen_acDiaNoCom()
    gen_acSplitDia()
    gen_acArrival()
    gen_acInvariant()
    gen_acLoop()
    gen_acParComp()


if __name__ == "__main__":
    gen_derived()
    from convoygen import gen_convoy
    from programgen import gen_programs, gen_formulas

    gen_convoy()
    gen_programs()
    gen_formulas()
