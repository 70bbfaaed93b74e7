"""Generates the convoy case study: two cars adjusting speed over lossy
velocity announcements and regular position measurements.

Ships three scripts: the parallel decomposition, and the two
loop-invariant subproofs (follower and leader).  Every first-order side
goal is an oracle step; everything modal is derived from the primitive
axioms.
"""
from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from proofgen import PB, ac_boxes_dist, ac_invariant, ac_mono, ac_mono_taut

from dlchp import core
from dlchp.core import (
    FF,
    GT,
    TT,
    Add,
    And,
    AcBox,
    Assign,
    Box,
    Channel,
    ChannelSet,
    Choice,
    Concat,
    Const,
    EventTerm,
    Forall,
    Ge,
    Iff,
    Imp,
    Lt,
    Mul,
    Not,
    ODE,
    Or,
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
    and_all,
    num,
)
from dlchp.analysis import fv, recorder
from dlchp.kernel import check_proof
from dlchp.subst import fresh, names_of, substitute
from dlchp.syntax import parse, print_formula, print_program

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS = os.path.join(ROOT, "corpus")


# ---------------------------------------------------------------------------
# the model

VEL, POS = Channel("vel"), Channel("pos")
H, H0 = TVar("h"), TVar("h0")
vtar, vf, xf, w, d, m = (RVar(n) for n in ("vtar", "vf", "xf", "w", "d", "m"))
vl, xl, ep, maxv, x0, gt0 = (RVar(n) for n in ("vl", "xl", "ep", "maxv", "x0", "gt0"))

guard_v = Not(Ge(Mul(ep, maxv), d))  # d > ep*maxv
guard_d = Ge(Mul(ep, maxv), d)  # d <= ep*maxv

VELO = Seq(
    Receive(VEL, H, vtar),
    Choice(Seq(Test(guard_v), Assign(vf, vtar)), Test(Not(guard_v))),
)
DIST = Seq(
    Receive(POS, H, m),
    Seq(
        Assign(d, core.sub(m, xf)),
        Seq(
            Choice(
                Seq(
                    Test(guard_d),
                    Seq(RandomAssign(vf), Test(And(Ge(vf, num(0)), Lt(Mul(vf, ep), d)))),
                ),
                Test(Not(guard_d)),
            ),
            Assign(w, num(0)),
        ),
    ),
)
PLANTF = ODE(((xf, vf), (w, num(1)), (GT, num(1))), Ge(ep, w))
BODYF = Seq(Choice(VELO, DIST), PLANTF)
FOLLOWER = Star(BODYF)

COMM = Seq(
    RandomAssign(vl),
    Seq(
        Test(And(Ge(vl, num(0)), Ge(maxv, vl))),
        Choice(Send(VEL, H, vl), Test(TT())),
    ),
)
UPD = Send(POS, H, xl)
PLANTL = ODE(((xl, vl), (GT, num(1))), TT())
BODYL = Seq(Choice(COMM, UPD), PLANTL)
LEADER = Star(BODYL)
CONVOY = Parallel(FOLLOWER, LEADER)


def _withdefault(chan: Channel, dflt, hole):
    """phi(op-with-default): case split on whether the projection moved."""
    pr, pr0 = Project(H, ChannelSet.finite({chan})), Project(H0, ChannelSet.finite({chan}))
    return Or(
        And(TRel("=", pr, pr0), hole(dflt)),
        And(Not(TRel("=", pr, pr0)), hole(core.ValOf(pr))),
    )


ASSUME = _withdefault(VEL, num(0), lambda v: And(Ge(v, num(0)), Ge(maxv, v)))
COMMIT = ASSUME

PSI_F = _withdefault(POS, x0, lambda v: Lt(xf, v))
PSI_L = _withdefault(POS, x0, lambda v: Ge(xl, v))

EXT = And(
    TRel("<=", Project(H0, ChannelSet.finite({VEL})), Project(H, ChannelSet.finite({VEL}))),
    TRel("<=", Project(H0, ChannelSet.finite({POS})), Project(H, ChannelSet.finite({POS}))),
)

# potential form: even riding at the current speed to the deadline stays behind
P_SAFE = _withdefault(POS, x0, lambda v: Lt(Add(xf, Mul(Add(ep, core.neg(w)), vf)), v))
# budget form: the measured distance still covers the rest of the window
B_SAFE = _withdefault(
    POS,
    x0,
    lambda v: Ge(Mul(v, ep), Add(Mul(xf, ep), Mul(Add(ep, core.neg(w)), d))),
)

INV_F = and_all(
    [
        EXT,
        Not(Ge(num(0), ep)),  # ep > 0
        Ge(w, num(0)),
        Ge(ep, w),
        Ge(vf, num(0)),
        Ge(d, Mul(vf, ep)),
        Ge(maxv, vf),
        P_SAFE,
        B_SAFE,
    ]
)

INV_L = and_all([EXT, Ge(vl, num(0)), PSI_L, COMMIT])

PRE = and_all(
    [
        Not(Ge(num(0), ep)),
        RRel("=", w, num(0)),
        Ge(vf, num(0)),
        Ge(d, Mul(vf, ep)),
        Ge(maxv, vf),
        Ge(vl, num(0)),
        Lt(Add(xf, d), xl),
    ]
)

GAMMA = and_all([TRel("=", H0, H), RRel("=", x0, xl), PRE])


# ---------------------------------------------------------------------------
# congruence helpers and the flattening engine


def acbox_cong(pb: PB, prog, a, c, x, x2, l_iff) -> str:
    la = pb.prop(Imp(a, a))
    lc = pb.prop(Imp(c, c))
    l1 = pb.propmp(Imp(x, x2), l_iff)
    l2 = pb.propmp(Imp(x2, x), l_iff)
    m1 = ac_mono(pb, prog, a, c, x, a, c, x2, la, lc, l1)
    m2 = ac_mono(pb, prog, a, c, x2, a, c, x, la, lc, l2)
    return pb.propmp(Iff(AcBox(prog, a, c, x), AcBox(prog, a, c, x2)), m1, m2)


def box_cong(pb: PB, prog, x, x2, l_iff) -> str:
    b1 = pb.axiom("boxesDual", alpha=prog, psi=x)
    b2 = pb.axiom("boxesDual", alpha=prog, psi=x2)
    ac = acbox_cong(pb, prog, TT(), TT(), x, x2, l_iff)
    return pb.propmp(Iff(Box(prog, x), Box(prog, x2)), b1, b2, ac)


def q_cong(pb: PB, v, x, x2, l_iff) -> str:
    l1 = pb.propmp(Imp(x, x2), l_iff)
    g1 = pb.rule("forall", [l1], v=v)
    d1 = pb.mp(g1, pb.axiom("faDist", v=v, phi=x, psi=x2))
    l2 = pb.propmp(Imp(x2, x), l_iff)
    g2 = pb.rule("forall", [l2], v=v)
    d2 = pb.mp(g2, pb.axiom("faDist", v=v, phi=x2, psi=x))
    return pb.propmp(Iff(Forall(v, x), Forall(v, x2)), d1, d2)


class Flattener:
    """Reduces [prog]_{A,C}psi for loop-free communication-closed programs
    to an equivalent first-order formula, emitting the axiom steps; ODE
    boxes are bridged by solution oracles."""

    def __init__(self, pb: PB, avoid_names):
        self.pb = pb
        self.used = set(avoid_names)
        self.memo = {}
        self.oracles = []

    def _fresh(self, kind, base):
        v = fresh(kind, self.used, base)
        self.used.add(v.name)
        return v

    def flatten(self, box: AcBox):
        if box in self.memo:
            return self.memo[box]
        out = self._flatten(box)
        self.memo[box] = out
        return out

    def _flatten(self, box: AcBox):
        pb = self.pb
        prog, a, c, psi = box.prog, box.assume, box.commit, box.post
        if isinstance(psi, AcBox):
            fp, lp = self.flatten(psi)
            lc = acbox_cong(pb, prog, a, c, psi, fp, lp)
            f2, l2 = self.flatten(AcBox(prog, a, c, fp))
            return f2, pb.propmp(Iff(box, f2), lc, l2)
        if isinstance(prog, Test):
            l1 = pb.axiom("acNoCom", alpha=prog, A=a, C=c, psi=psi)
            l2 = pb.axiom("test", chi=prog.cond, psi=psi)
            flat = And(c, Imp(a, Imp(prog.cond, psi)))
            return flat, pb.propmp(Iff(box, flat), l1, l2)
        if isinstance(prog, Assign):
            l1 = pb.axiom("acNoCom", alpha=prog, A=a, C=c, psi=psi)
            l2 = pb.axiom("assign", x=prog.var, p=prog.term, psi=psi)
            flat = And(c, Imp(a, substitute(psi, prog.var, prog.term)))
            return flat, pb.propmp(Iff(box, flat), l1, l2)
        if isinstance(prog, RandomAssign):
            l1 = pb.axiom("acNoCom", alpha=prog, A=a, C=c, psi=psi)
            l2 = pb.axiom("nondetAssign", x=prog.var, psi=psi)
            flat = And(c, Imp(a, Forall(prog.var, psi)))
            return flat, pb.propmp(Iff(box, flat), l1, l2)
        if isinstance(prog, ODE):
            l1 = pb.axiom("acNoCom", alpha=prog, A=a, C=c, psi=psi)
            sol = self._solution(prog, psi)
            lo = pb.oracle(Iff(Box(prog, psi), sol))
            self.oracles.append(pb.formulas[lo])
            flat = And(c, Imp(a, sol))
            return flat, pb.propmp(Iff(box, flat), l1, lo)
        if isinstance(prog, Seq):
            l0 = pb.axiom(
                "acComposition", alpha=prog.left, beta=prog.right, A=a, C=c, psi=psi
            )
            inner = AcBox(prog.right, a, c, psi)
            f2, l2 = self.flatten(AcBox(prog.left, a, c, inner))
            return f2, pb.propmp(Iff(box, f2), l0, l2)
        if isinstance(prog, Choice):
            l0 = pb.axiom("acChoice", alpha=prog.left, beta=prog.right, A=a, C=c, psi=psi)
            f1, l1 = self.flatten(AcBox(prog.left, a, c, psi))
            f2, l2 = self.flatten(AcBox(prog.right, a, c, psi))
            flat = And(f1, f2)
            return flat, pb.propmp(Iff(box, flat), l0, l1, l2)
        if isinstance(prog, Send):
            return self._flatten_send(box)
        if isinstance(prog, Receive):
            l0 = pb.axiom(
                "comDual", ch=prog.chan, h=prog.recorder, x=prog.var, A=a, C=c, psi=psi
            )
            snd = AcBox(Send(prog.chan, prog.recorder, prog.var), a, c, psi)
            fs, ls = self.flatten(snd)
            lb = box_cong(pb, RandomAssign(prog.var), snd, fs, ls)
            ln = pb.axiom("nondetAssign", x=prog.var, psi=fs)
            flat = Forall(prog.var, fs)
            return flat, pb.propmp(Iff(box, flat), l0, lb, ln)
        raise AssertionError("flattener does not handle %r" % (prog,))

    def _flatten_send(self, box: AcBox):
        pb = self.pb
        snd, a, c, psi = box.prog, box.assume, box.commit, box.post
        hvar = snd.recorder
        kern = Test(TT())
        l0 = pb.axiom("acCom", ch=snd.chan, h=hvar, p=snd.term, A=a, C=c, psi=psi)
        y = AcBox(kern, a, c, psi)
        h1 = self._fresh("trace", "h1")
        lsnd = pb.axiom("send", ch=snd.chan, h=hvar, p=snd.term, psi=y, h0=h1)
        y1 = substitute(y, hvar, h1)
        fy1, ly1 = self.flatten(y1)
        ev = Concat(hvar, EventTerm(snd.chan, snd.term, GT))
        body, body2 = Imp(TRel("=", h1, ev), y1), Imp(TRel("=", h1, ev), fy1)
        lbody = pb.propmp(Iff(body, body2), ly1)
        lq = q_cong(pb, h1, body, body2, lbody)
        outer = AcBox(kern, a, c, Box(snd, y))
        lk1 = pb.axiom("acNoCom", alpha=kern, A=a, C=c, psi=Box(snd, y))
        lk2 = pb.axiom("test", chi=TT(), psi=Box(snd, y))
        flat = And(c, Imp(a, Imp(TT(), Forall(h1, body2))))
        return flat, pb.propmp(Iff(box, flat), l0, lk1, lk2, lsnd, lq)

    def _solution(self, ode: ODE, post):
        t = self._fresh("real", "t")
        sub_t = post
        for x, rhs in ode.eqs:
            sub_t = substitute(sub_t, x, Add(x, Mul(t, rhs)))
        if ode.domain == TT():
            return Forall(t, Imp(Ge(t, num(0)), sub_t))
        s = self._fresh("real", "s")
        dom_s = ode.domain
        for x, rhs in ode.eqs:
            dom_s = substitute(dom_s, x, Add(x, Mul(s, rhs)))
        guard = Forall(s, Imp(And(Ge(s, num(0)), Ge(t, s)), dom_s))
        return Forall(t, Imp(Ge(t, num(0)), Imp(guard, sub_t)))


# ---------------------------------------------------------------------------
# the subproofs


def _loop_proof(pb: PB, body, a, c, inv, psi, gamma, l_use):
    """gamma -> [body*]_{a,c}psi with invariant inv; returns the label and
    the list of oracle formulas introduced."""
    fl = Flattener(pb, names_of(AcBox(Star(body), a, c, And(inv, And(psi, gamma)))))
    flat, l_flat = fl.flatten(AcBox(body, a, c, inv))
    o_pres = pb.oracle(Imp(inv, flat))
    fl.oracles.append(pb.formulas[o_pres])
    l_pres = pb.propmp(Imp(inv, AcBox(body, a, c, inv)), o_pres, l_flat)
    o_init = pb.oracle(Imp(gamma, And(c, inv)))
    fl.oracles.append(pb.formulas[o_init])
    invar = ac_invariant(pb, body, a, c, inv, l_pres)
    la = pb.prop(Imp(a, a))
    lc = pb.prop(Imp(c, c))
    mono = ac_mono(pb, Star(body), a, c, inv, a, c, psi, la, lc, l_use)
    lbl = pb.propmp(Imp(gamma, AcBox(Star(body), a, c, psi)), o_init, invar, mono)
    return lbl, fl.oracles


def follower_proof(pb: PB):
    o_use = pb.oracle(Imp(INV_F, PSI_F))
    lbl, oracles = _loop_proof(pb, BODYF, ASSUME, TT(), INV_F, PSI_F, GAMMA, o_use)
    return lbl, [pb.formulas[o_use]] + oracles


def leader_proof(pb: PB):
    l_use = pb.prop(Imp(INV_L, PSI_L))
    lbl, oracles = _loop_proof(pb, BODYL, TT(), COMMIT, INV_L, PSI_L, GAMMA, l_use)
    return lbl, oracles


def decompose_proof(pb: PB):
    t_f, or_f = follower_proof(pb)
    t_l, or_l = leader_proof(pb)
    inj_f = pb.axiom(
        "acDropComp", alpha=FOLLOWER, beta=LEADER, A=ASSUME, C=TT(), psi=PSI_F, par=CONVOY
    )
    inj_l = pb.axiom(
        "acDropComp", alpha=LEADER, beta=FOLLOWER, A=TT(), C=COMMIT, psi=PSI_L, par=CONVOY
    )
    # Goedel step for the assumption-discharge guard of Aweak
    c_guard = Imp(And(And(TT(), COMMIT), TT()), ASSUME)
    gd = pb.prop(And(c_guard, TT()))
    g_guard = pb.rule("acG", [gd], alpha=CONVOY, A=TT(), C=c_guard, psi=TT())
    # move the leader contract under the follower's assumption
    m_asm = ac_mono_taut(pb, CONVOY, TT(), COMMIT, PSI_L, ASSUME, COMMIT, PSI_L)
    dist = ac_boxes_dist(pb, CONVOY, ASSUME, TT(), PSI_F, COMMIT, PSI_L)
    aweak = pb.axiom(
        "Aweak", alpha=CONVOY, A=ASSUME, Aweak=TT(), C=And(TT(), COMMIT), psi=And(PSI_F, PSI_L)
    )
    tri1 = pb.oracle(Imp(COMMIT, TT()))
    tri2 = pb.oracle(Imp(And(PSI_F, PSI_L), Lt(xf, xl)))
    la = pb.prop(Imp(TT(), TT()))
    lc = pb.propmp(Imp(And(TT(), COMMIT), TT()), tri1)
    mono2 = ac_mono(
        pb, CONVOY, TT(), And(TT(), COMMIT), And(PSI_F, PSI_L), TT(), TT(), Lt(xf, xl),
        la, lc, tri2,
    )
    bdual = pb.axiom("boxesDual", alpha=CONVOY, psi=Lt(xf, xl))
    safety = Box(CONVOY, Lt(xf, xl))
    t_gam = pb.propmp(
        Imp(GAMMA, safety), t_f, t_l, inj_f, inj_l, g_guard, m_asm, dist, aweak, mono2, bdual
    )
    # discharge the ghost variables
    inner = Imp(TRel("=", H0, H), Imp(PRE, safety))
    r1 = pb.propmp(Imp(RRel("=", x0, xl), inner), t_gam)
    g1 = pb.rule("forall", [r1], v=x0)
    i1 = pb.mp(g1, pb.axiom("iG", v0=x0, e=xl, psi=inner))
    r2 = pb.propmp(Imp(TRel("=", H0, H), Imp(PRE, safety)), i1)
    g2 = pb.rule("forall", [r2], v=H0)
    i2 = pb.mp(g2, pb.axiom("iG", v0=H0, e=H, psi=Imp(PRE, safety)))
    return i2, or_f + or_l + [pb.formulas[tri1], pb.formulas[tri2]]


# ---------------------------------------------------------------------------
# emission


def _emit(name, script, expected_oracles=None):
    from dlchp.scripts import auto_defs, parse_proof, write_proof

    text = write_proof(script, defs=auto_defs(script))
    back = parse_proof(text)
    assert back == script, "%s: writer/reader mismatch" % name
    v = check_proof(back)
    assert v.status == "proved", "%s failed at %s: %s" % (name, v.failed_at, v.message)
    if expected_oracles is not None:
        assert list(v.assumptions) == expected_oracles, (
            name,
            len(v.assumptions),
            len(expected_oracles),
        )
    path = os.path.join(CORPUS, "convoy", name)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(
        "wrote %-34s %4d steps %2d assumptions"
        % (os.path.relpath(path, ROOT), len(script.steps), len(v.assumptions))
    )


def gen_convoy():
    pb = PB("convoyFollower")
    _, oracles = follower_proof(pb)
    _emit("follower.proof", pb.checked_script(), oracles)

    pb = PB("convoyLeader")
    _, oracles = leader_proof(pb)
    _emit("leader.proof", pb.checked_script(), oracles)

    pb = PB("convoyDecompose")
    _, oracles = decompose_proof(pb)
    _emit("decompose.proof", pb.checked_script(), oracles)

    progs = {
        "velo.dlchp": VELO,
        "dist.dlchp": DIST,
        "follower.dlchp": FOLLOWER,
        "leader.dlchp": LEADER,
        "convoy.dlchp": CONVOY,
    }
    for fname, prog in progs.items():
        with open(os.path.join(CORPUS, "convoy", fname), "w", encoding="utf-8") as fh:
            fh.write(print_program(prog) + "\n")
    with open(os.path.join(CORPUS, "convoy", "safety.dlchp"), "w", encoding="utf-8") as fh:
        fh.write(print_formula(Imp(PRE, Box(CONVOY, Lt(xf, xl)))) + "\n")
    print("wrote convoy .dlchp items")


if __name__ == "__main__":
    gen_convoy()
