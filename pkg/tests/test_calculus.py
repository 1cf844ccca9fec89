import pytest

from polyseq.syntax import (
    Atom, Forall, Or, Signature, Var, parse_formula,
)
from polyseq.sequent import Dom, LF, Rel, Sequent, validate
from polyseq.calculus import (
    CheckResult, Proof, RuleApp, RuleError, Variant, applicable, check_proof,
    closing_rule, parse_proof, premises, render_proof,
)

SIG_FIG2 = Signature({}, {"p": 0, "q": 0, "r": 1})
SIG_DS = Signature({}, {"p": 1})


def F(text, sig=SIG_FIG2):
    return parse_formula(text, sig)


# ---------------------------------------------------------------------------
# The constant-domain example proof, built bottom-up
# ---------------------------------------------------------------------------

FIG2_GOAL = Sequent.make(suc=[LF("w", F("forall x.(p | r(x)) -> (p | (q -> forall x.r(x)))"))])


def fig2_steps():
    """(sequent, rule instance) pairs from the goal upward."""
    A = F("forall x.(p | r(x))")
    s0 = FIG2_GOAL
    i0 = RuleApp("implR", principal=s0.suc[0], label="u")
    s1 = Sequent.make(rel=[Rel("w", "u")], ant=[LF("u", A)],
                      suc=[LF("u", F("p | (q -> forall x.r(x))"))])
    i1 = RuleApp("orR", principal=LF("u", F("p | (q -> forall x.r(x))")))
    s2 = Sequent.make(rel=[Rel("w", "u")], ant=[LF("u", A)],
                      suc=[LF("u", F("p")), LF("u", F("q -> forall x.r(x)"))])
    i2 = RuleApp("implR", principal=LF("u", F("q -> forall x.r(x)")), label="v")
    s3 = Sequent.make(rel=[Rel("w", "u"), Rel("u", "v")],
                      ant=[LF("u", A), LF("v", F("q"))],
                      suc=[LF("u", F("p")), LF("v", F("forall x.r(x)"))])
    i3 = RuleApp("forallR", principal=LF("v", F("forall x.r(x)")), label="w1", var="x")
    s4 = Sequent.make(rel=[Rel("w", "u"), Rel("u", "v"), Rel("v", "w1")],
                      dom=[Dom("w1", "x")],
                      ant=[LF("u", A), LF("v", F("q"))],
                      suc=[LF("u", F("p")), LF("w1", F("r(x)"))])
    i4 = RuleApp("forallL", principal=LF("u", A), label="u", term=Var("x"))
    s5 = s4.add(ant=[LF("u", F("p | r(x)"))])
    i5 = RuleApp("orL", principal=LF("u", F("p | r(x)")))
    s6a = s4.add(ant=[LF("u", F("p"))])
    s6b = s4.add(ant=[LF("u", F("r(x)"))])
    return [(s0, i0, [s1]), (s1, i1, [s2]), (s2, i2, [s3]), (s3, i3, [s4]),
            (s4, i4, [s5]), (s5, i5, [s6a, s6b])], (s6a, s6b)


def fig2_proof():
    steps, (s6a, s6b) = fig2_steps()
    leaf_a = Proof(s6a, RuleApp("ax", actives=(LF("u", F("p")), LF("u", F("p")))))
    leaf_b = Proof(s6b, RuleApp("ax", actives=(LF("u", F("r(x)")), LF("w1", F("r(x)")))))
    (s5, i5, _) = steps[5]
    node5 = Proof(s5, i5, (leaf_a, leaf_b))
    node = node5
    for s, inst, _ in reversed(steps[:5]):
        node = Proof(s, inst, (node,))
    return node


def test_fig2_premises_bottom_up():
    steps, _ = fig2_steps()
    for s, inst, want in steps:
        got = premises(s, inst, Variant.CD, SIG_FIG2)
        assert len(got) == len(want)
        for g, w in zip(got, want):
            assert g.alpha_eq(w), f"{g} != {w}"


def test_fig2_forallL_requires_availability_under_id():
    steps, _ = fig2_steps()
    s4, i4 = steps[4][0], steps[4][1]
    with pytest.raises(RuleError, match="not available"):
        premises(s4, i4, Variant.ID, SIG_FIG2)


def test_fig2_proof_checks_under_cd():
    p = fig2_proof()
    res = check_proof(p, Variant.CD, SIG_FIG2)
    assert res.ok, res
    assert p.rule_multiset() == {"ax": 2, "orL": 1, "forallL": 1, "forallR": 1,
                                 "implR": 2, "orR": 1}


def test_fig2_proof_fails_under_id():
    res = check_proof(fig2_proof(), Variant.ID, SIG_FIG2)
    assert not res.ok
    assert "not available" in res.message


# ---------------------------------------------------------------------------
# The domain-shift example proof
# ---------------------------------------------------------------------------


def ds_proof():
    goal = Sequent.make(suc=[LF("w", F("forall x.((p(x) -< exists y.p(y)) -> bot)", SIG_DS))])
    body = F("(p(x) -< exists y.p(y)) -> bot", SIG_DS)
    i0 = RuleApp("forallR", principal=goal.suc[0], label="u", var="x")
    s1 = Sequent.make(rel=[Rel("w", "u")], dom=[Dom("u", "x")], suc=[LF("u", body)])
    i1 = RuleApp("implR", principal=LF("u", body), label="v")
    s2 = Sequent.make(rel=[Rel("w", "u"), Rel("u", "v")], dom=[Dom("u", "x")],
                      ant=[LF("v", F("p(x) -< exists y.p(y)", SIG_DS))],
                      suc=[LF("v", F("bot", SIG_DS))])
    i2 = RuleApp("exclL", principal=s2.ant[0], label="u1")
    s3 = Sequent.make(rel=[Rel("w", "u"), Rel("u", "v"), Rel("u1", "v")],
                      dom=[Dom("u", "x")],
                      ant=[LF("u1", F("p(x)", SIG_DS))],
                      suc=[LF("u1", F("exists y.p(y)", SIG_DS)), LF("v", F("bot", SIG_DS))])
    i3 = RuleApp("ds", principal=LF("u1", F("p(x)", SIG_DS)))
    s4 = s3.add(dom=[Dom("u1", "x")])
    i4 = RuleApp("existsR", principal=LF("u1", F("exists y.p(y)", SIG_DS)), term=Var("x"))
    s5 = s4.add(suc=[LF("u1", F("p(x)", SIG_DS))])
    leaf = Proof(s5, RuleApp("ax", actives=(LF("u1", F("p(x)", SIG_DS)),
                                            LF("u1", F("p(x)", SIG_DS)))))
    node = leaf
    for s, inst in [(s4, i4), (s3, i3), (s2, i2), (s1, i1), (goal, i0)]:
        node = Proof(s, inst, (node,))
    return node


def test_ds_example_premises():
    p = ds_proof()
    # the ds step makes x available so existsR may instantiate with it
    res = check_proof(p, Variant.ID, SIG_DS)
    assert res.ok, res
    assert p.rule_multiset()["ds"] == 1


def test_ds_node_illegal_under_cd_and_no_ds():
    p = ds_proof()
    for variant in (Variant.CD, Variant.ID_NO_DS):
        res = check_proof(p, variant, SIG_DS)
        assert not res.ok
        assert "ds illegal" in res.message


def test_existsR_blocked_without_ds():
    # without the domain-shift step the witness x stays unavailable
    p = ds_proof()
    s3 = p.premises[0].premises[0].premises[0].conclusion
    inst = RuleApp("existsR", principal=LF("u1", F("exists y.p(y)", SIG_DS)), term=Var("x"))
    with pytest.raises(RuleError, match="not available"):
        premises(s3, inst, Variant.ID, SIG_DS)


def test_stuck_quantifier_shift_derivation():
    # the universal formula at u cannot be instantiated with x: the only
    # domain atom for x sits at v, and u is not reachable from v
    sig = Signature({}, {"p": 1, "q": 0})
    s = Sequent.make(rel=[Rel("w", "u"), Rel("u", "v")], dom=[Dom("v", "x")],
                     ant=[LF("u", F("forall x.(p(x) | q)", sig))],
                     suc=[LF("v", F("p(x)", sig)), LF("u", F("q", sig))])
    inst = RuleApp("forallL", principal=s.ant[0], label="u", term=Var("x"))
    with pytest.raises(RuleError, match="not available"):
        premises(s, inst, Variant.ID, sig)
    # under constant domains the same instance is fine
    assert len(premises(s, inst, Variant.CD, sig)) == 1


# ---------------------------------------------------------------------------
# checker rejections
# ---------------------------------------------------------------------------


def test_checker_rejects_one_sided_ax():
    s = Sequent.make(suc=[LF("w", F("p", Signature({}, {"p": 0})))])
    bad = Proof(s, RuleApp("ax", actives=(LF("w", Atom("p")), LF("w", Atom("p")))))
    res = check_proof(bad, Variant.ID)
    assert not res.ok


def test_checker_rejects_unreachable_ax():
    sig = Signature({}, {"p": 0})
    s = Sequent.make(rel=[Rel("w", "u")], ant=[LF("u", F("p", sig))],
                     suc=[LF("w", F("p", sig))])
    bad = Proof(s, RuleApp("ax", actives=(s.ant[0], s.suc[0])))
    res = check_proof(bad, Variant.ID)
    assert not res.ok and "reachable" in res.message


def test_checker_rejects_stale_freshness():
    sig = Signature({}, {"p": 0, "q": 0})
    s = Sequent.make(rel=[Rel("w", "u")], ant=[LF("u", F("q", sig))],
                     suc=[LF("w", F("p -> p", sig))])
    inst = RuleApp("implR", principal=s.suc[0], label="u")  # u already occurs
    with pytest.raises(RuleError, match="not fresh"):
        premises(s, inst, Variant.ID, sig)


def test_checker_reports_path():
    p = fig2_proof()
    # corrupt the right orL branch: swap its leaf for a wrong one
    bad_leaf = Proof(p.conclusion, RuleApp("ax", actives=(LF("u", F("p")), LF("u", F("p")))))
    node5 = p.premises[0].premises[0].premises[0].premises[0].premises[0]
    bad5 = Proof(node5.conclusion, node5.rule, (node5.premises[0], bad_leaf))
    bad = bad5
    steps, _ = fig2_steps()
    for s, inst, _ in reversed(steps[:5]):
        bad = Proof(s, inst, (bad,))
    res = check_proof(bad, Variant.CD, SIG_FIG2)
    assert not res.ok
    assert res.path == (0, 0, 0, 0, 0, 1)


# ---------------------------------------------------------------------------
# applicable
# ---------------------------------------------------------------------------


def test_applicable_top_right():
    s = Sequent.make(suc=[LF("w", F("top", Signature({}, {})))])
    rules = {a.rule for a in applicable(s, Variant.ID)}
    assert "topR" in rules


def test_applicable_fig2_root():
    rules = {a.rule for a in applicable(FIG2_GOAL, Variant.CD)}
    assert rules == {"implR"}


def test_applicable_formula_free_sequent():
    s = Sequent.make(rel=[Rel("w", "u")], dom=[Dom("w", "x")])
    assert applicable(s, Variant.CD) == []
    # under increasing domains only nothing fires either: ds needs an atom
    assert applicable(s, Variant.ID) == []


def test_applicable_enumerates_reachability_targets():
    sig = Signature({}, {"p": 0, "q": 0})
    s = Sequent.make(rel=[Rel("w", "u"), Rel("u", "v")],
                     ant=[LF("w", F("p -> q", sig))], suc=[LF("v", F("q", sig))])
    targets = {a.label for a in applicable(s, Variant.ID) if a.rule == "implL"}
    assert targets == {"w", "u", "v"}


def test_closing_rule_priority():
    sig = Signature({}, {"p": 0})
    s = Sequent.make(ant=[LF("w", F("bot", sig))], suc=[LF("w", F("p", sig))])
    assert closing_rule(s).rule == "botL"


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def test_proof_text_roundtrip():
    for proof, variant, sig in [(fig2_proof(), Variant.CD, SIG_FIG2),
                                (ds_proof(), Variant.ID, SIG_DS)]:
        text = render_proof(proof)
        back, _ = parse_proof(text)
        assert back == proof
        assert render_proof(back) == text
        assert check_proof(back, variant, sig).ok
