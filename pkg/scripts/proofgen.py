"""Proof-construction library for generating the shipped corpus.

Builds Hilbert-style proof scripts step by step through the kernel itself,
so every stated conclusion is exactly what replay recomputes.  Derived
rules (monotony, distribution, loop rules, ...) are generation-time macros
that expand into primitive steps.
"""
from __future__ import annotations

from dlchp import core
from dlchp.core import (
    FF,
    TT,
    And,
    AcBox,
    AcDia,
    Box,
    Forall,
    Iff,
    Imp,
    Not,
    Or,
    Parallel,
    Prefix,
    Project,
    RVar,
    Star,
    TRel,
    TVar,
    Test,
    and_all,
)
from dlchp.analysis import fv, recorder
from dlchp.kernel import (
    AXIOMS,
    ProofScript,
    Step,
    apply_rule,
    check_proof,
    instantiate_axiom,
    is_prop_taut,
)


class PB:
    """Proof builder: emits kernel-checked steps; label bookkeeping."""

    def __init__(self, name: str):
        self.name = name
        self.steps = []
        self.formulas = {}
        self._n = 0
        self._prop_memo = {}

    def _label(self) -> str:
        self._n += 1
        return "s%d" % self._n

    def _emit(self, kind, rid, binding, premises, conclusion) -> str:
        lbl = self._label()
        self.steps.append(Step(lbl, kind, rid, tuple(binding), tuple(premises), conclusion))
        self.formulas[lbl] = conclusion
        return lbl

    def axiom(self, rid: str, **binding) -> str:
        ordered = tuple((k, binding[k]) for k, _ in AXIOMS[rid].slots)
        out = instantiate_axiom(rid, dict(ordered))
        return self._emit("axiom", rid, ordered, (), out)

    def rule(self, rid: str, premises, **binding) -> str:
        prems = [self.formulas[p] for p in premises]
        ordered = tuple(sorted(binding.items()))
        out = apply_rule(rid, prems, dict(ordered))
        return self._emit("rule", rid, ordered, tuple(premises), out)

    def prop(self, f) -> str:
        if f in self._prop_memo:
            return self._prop_memo[f]
        assert is_prop_taut(f), "not a tautology: %s" % (f,)
        lbl = self._emit("prop", None, (), (), f)
        self._prop_memo[f] = lbl
        return lbl

    def oracle(self, f) -> str:
        return self._emit("oracle", None, (), (), f)

    def mp(self, l_phi: str, l_imp: str) -> str:
        return self.rule("MP", [l_phi, l_imp])

    def propmp(self, target, *labels) -> str:
        """Derive target propositionally from the given steps: emits the
        tautology l1 -> (l2 -> ... -> target) and modus-ponens it away."""
        chain = target
        for lbl in reversed(labels):
            chain = Imp(self.formulas[lbl], chain)
        cur = self.prop(chain)
        for lbl in labels:
            cur = self.mp(lbl, cur)
        return cur

    def script(self) -> ProofScript:
        return ProofScript(self.name, tuple(self.steps))

    def checked_script(self) -> ProofScript:
        s = self.script()
        v = check_proof(s)
        assert v.status == "proved", "%s: failed at %s: %s" % (
            self.name,
            v.failed_at,
            v.message,
        )
        return s


def ac_mono(pb: PB, alpha, a1, c1, p1, a2, c2, p2, la, lc, lp) -> str:
    """From la: A2->A1, lc: C1->C2, lp: psi1->psi2 derive
    [alpha]_{A1,C1}psi1 -> [alpha]_{A2,C2}psi2 (acG + acModalMP + Aweak)."""
    guard_c = Imp(And(c2, a2), a1)
    d1 = pb.propmp(And(guard_c, TT()), la)
    g1 = pb.rule("acG", [d1], alpha=alpha, A=TT(), C=guard_c, psi=TT())
    d2 = pb.propmp(And(Imp(c1, c2), Imp(p1, p2)), lc, lp)
    g2 = pb.rule("acG", [d2], alpha=alpha, A=a1, C=Imp(c1, c2), psi=Imp(p1, p2))
    ammp = pb.axiom("acModalMP", alpha=alpha, A=a1, C1=c1, C2=c2, psi1=p1, psi2=p2)
    m1 = pb.mp(g2, ammp)
    aweak = pb.axiom("Aweak", alpha=alpha, A=a1, Aweak=a2, C=c2, psi=p2)
    target = Imp(AcBox(alpha, a1, c1, p1), AcBox(alpha, a2, c2, p2))
    return pb.propmp(target, g1, m1, aweak)


def ac_mono_taut(pb: PB, alpha, a1, c1, p1, a2, c2, p2) -> str:
    """ac_mono whose three premises are propositional tautologies."""
    la = pb.prop(Imp(a2, a1))
    lc = pb.prop(Imp(c1, c2))
    lp = pb.prop(Imp(p1, p2))
    return ac_mono(pb, alpha, a1, c1, p1, a2, c2, p2, la, lc, lp)


def ac_boxes_dist(pb: PB, alpha, a, c1, p1, c2, p2) -> str:
    """[alpha]_{A,C1&C2}(psi1&psi2) <-> [alpha]_{A,C1}psi1 & [alpha]_{A,C2}psi2."""
    whole = AcBox(alpha, a, And(c1, c2), And(p1, p2))
    b1 = AcBox(alpha, a, c1, p1)
    b2 = AcBox(alpha, a, c2, p2)
    fwd1 = ac_mono_taut(pb, alpha, a, And(c1, c2), And(p1, p2), a, c1, p1)
    fwd2 = ac_mono_taut(pb, alpha, a, And(c1, c2), And(p1, p2), a, c2, p2)
    fwd = pb.propmp(Imp(whole, And(b1, b2)), fwd1, fwd2)
    up = ac_mono_taut(pb, alpha, a, c1, p1, a, Imp(c2, And(c1, c2)), Imp(p2, And(p1, p2)))
    k = pb.axiom(
        "acModalMP",
        alpha=alpha,
        A=a,
        C1=c2,
        C2=And(c1, c2),
        psi1=p2,
        psi2=And(p1, p2),
    )
    bwd = pb.propmp(Imp(And(b1, b2), whole), up, k)
    return pb.propmp(Iff(whole, And(b1, b2)), fwd, bwd)


def mutual_a_weak(pb: PB, alpha, a, a1, a2, c1, c2, psi) -> str:
    """[alpha]_{true,Ck}true & [alpha]_{A1&A2,C1&C2}psi -> [alpha]_{A,C1&C2}psi
    where Ck == (A&C1->A2)&(A&C2->A1)."""
    ck = And(Imp(And(a, c1), a2), Imp(And(a, c2), a1))
    bridge = Imp(And(And(c1, c2), a), And(a1, a2))
    mono = ac_mono_taut(pb, alpha, TT(), ck, TT(), TT(), bridge, TT())
    aw = pb.axiom("Aweak", alpha=alpha, A=And(a1, a2), Aweak=a, C=And(c1, c2), psi=psi)
    target = Imp(
        And(AcBox(alpha, TT(), ck, TT()), AcBox(alpha, And(a1, a2), And(c1, c2), psi)),
        AcBox(alpha, a, And(c1, c2), psi),
    )
    return pb.propmp(target, mono, aw)


def ac_dia_mono(pb: PB, alpha, a1, c1, p1, a2, c2, p2, la, lc, lp) -> str:
    """From la: A1->A2, lc: C1->C2, lp: psi1->psi2 derive
    <alpha>_{A1,C1}psi1 -> <alpha>_{A2,C2}psi2 (duality + acMono)."""
    nla = pb.propmp(Imp(a1, a2), la)
    nlc = pb.propmp(Imp(Not(c2), Not(c1)), lc)
    nlp = pb.propmp(Imp(Not(p2), Not(p1)), lp)
    mono = ac_mono(
        pb, alpha, a2, Not(c2), Not(p2), a1, Not(c1), Not(p1), nla, nlc, nlp
    )
    d1 = pb.axiom("acdbDual", alpha=alpha, A=a1, C=c1, psi=p1)
    d2 = pb.axiom("acdbDual", alpha=alpha, A=a2, C=c2, psi=p2)
    target = Imp(AcDia(alpha, a1, c1, p1), AcDia(alpha, a2, c2, p2))
    return pb.propmp(target, mono, d1, d2)


def ac_invariant(pb: PB, alpha, a, c, psi, lstep) -> str:
    """From lstep: psi -> [alpha]_{A,C}psi derive C & psi -> [alpha*]_{A,C}psi."""
    step_f = Imp(psi, AcBox(alpha, a, c, psi))
    g = pb.propmp(And(TT(), step_f), lstep)
    boxed = pb.rule("acG", [g], alpha=Star(alpha), A=a, C=TT(), psi=step_f)
    ind = pb.axiom("acInduction", alpha=alpha, A=a, C=c, psi=psi)
    noc = pb.axiom("acNoCom", alpha=Test(TT()), A=a, C=c, psi=psi)
    tst = pb.axiom("test", chi=TT(), psi=psi)
    target = Imp(And(c, psi), AcBox(Star(alpha), a, c, psi))
    return pb.propmp(target, boxed, ind, noc, tst)


def ac_loop_simple(pb: PB, gctx, alpha, a, c, inv, psi, l_init, l_pres, l_use) -> str:
    """l_init: G -> C & I;  l_pres: I -> [alpha]_{A,C}I;  l_use: I -> psi
    ==> G -> [alpha*]_{A,C}psi."""
    invar = ac_invariant(pb, alpha, a, c, inv, l_pres)
    la = pb.prop(Imp(a, a))
    lc = pb.prop(Imp(c, c))
    mono = ac_mono(pb, Star(alpha), a, c, inv, a, c, psi, la, lc, l_use)
    target = Imp(gctx, AcBox(Star(alpha), a, c, psi))
    return pb.propmp(target, l_init, invar, mono)


def box_a_of(pb: PB, alpha, a, cs, h0, hq, l_oracle) -> str:
    """Derive [alpha]_{A,true}A via hExtension + Aclosure, where l_oracle
    proves (h0 <= rec|cs & closure_weak) -> A.  Returns the label."""
    rec = recorder(alpha)
    proj = Project(rec, cs)
    ext = Prefix(h0, proj)
    e1 = pb.axiom("hExtension", alpha=alpha, cs=cs, h0=h0)
    e2 = ac_mono_taut(pb, alpha, TT(), ext, ext, a, TT(), ext)
    a1 = pb.axiom("Aclosure", alpha=alpha, A=a, C=TT(), psi=TT(), cs=cs, h0=h0, hq=hq)
    clo_s = _closure_of(a, rec, cs, h0, hq, True)
    clo_w = _closure_of(a, rec, cs, h0, hq, False)
    a2 = ac_mono_taut(pb, alpha, a, clo_s, clo_w, a, TT(), clo_w)
    dist = ac_boxes_dist(pb, alpha, a, TT(), ext, TT(), clo_w)
    la = pb.prop(Imp(a, a))
    lc = pb.prop(Imp(And(TT(), TT()), TT()))
    lp = pb.propmp(Imp(And(ext, clo_w), a), l_oracle)
    mono = ac_mono(pb, alpha, a, And(TT(), TT()), And(ext, clo_w), a, TT(), a, la, lc, lp)
    guarded = pb.propmp(
        Imp(TRel("=", h0, proj), AcBox(alpha, a, TT(), a)), e1, e2, a1, a2, dist, mono
    )
    gen = pb.rule("forall", [guarded], v=h0)
    ig = pb.axiom("iG", v0=h0, e=proj, psi=AcBox(alpha, a, TT(), a))
    return pb.mp(gen, ig)


def _closure_of(a, rec, cs, h0, hq, strict):
    from dlchp.subst import substitute

    rel = (
        And(Prefix(hq, Project(rec, cs)), Not(TRel("=", hq, Project(rec, cs))))
        if strict
        else Prefix(hq, Project(rec, cs))
    )
    return Forall(hq, Imp(And(Prefix(h0, hq), rel), substitute(a, rec, hq)))


def gen_ctx(pb: PB, gctx, v, l_imp) -> str:
    """From l_imp: G -> X with v not free in G, derive G -> forall v X."""
    x = _imp_rhs(pb.formulas[l_imp])
    assert v not in fv(gctx), "context captures %s" % v.name
    gen = pb.rule("forall", [l_imp], v=v)
    fad = pb.axiom("faDist", v=v, phi=gctx, psi=x)
    dist = pb.mp(gen, fad)
    vac = pb.axiom("vacuousQuanti", v=v, psi=gctx)
    return pb.propmp(Imp(gctx, Forall(v, x)), dist, vac)


def drop_ghost(pb: PB, v0, e, body, l_imp) -> str:
    """From l_imp: (v0 = e) -> body with v0 fresh for e and body, derive body."""
    gen = pb.rule("forall", [l_imp], v=v0)
    ig = pb.axiom("iG", v0=v0, e=e, psi=body)
    return pb.mp(gen, ig)


def _imp_rhs(f):
    assert isinstance(f, Not) and isinstance(f.body, And) and isinstance(f.body.right, Not)
    return f.body.right.body


def chain_iff(pb: PB, target, *labels) -> str:
    return pb.propmp(target, *labels)
