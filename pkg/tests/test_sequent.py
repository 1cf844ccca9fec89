import itertools

import pytest
from hypothesis import given, settings, strategies as st

from polyseq.syntax import App, Atom, Signature, Var, alpha_eq, parse_formula
from polyseq.sequent import (
    Dom, LF, Rel, Sequent, SequentError, available_vars, is_available, iso,
    parse_sequent, reachable, relabel_sequent, render_sequent, sequent_subst,
    strictly_reachable, validate,
)

SIG = Signature({"a": 0, "f": 2, "g": 1}, {"p": 1, "q": 1, "phi": 0, "psi": 0,
                                           "theta": 0, "tau": 0, "chi": 0, "xi": 0})


def F(text):
    return parse_formula(text, SIG)


def test_validate_display_example():
    # three-branch polytree: two parents of w, one child of w
    s = Sequent.make(
        rel=[Rel("u'", "w"), Rel("u", "w"), Rel("w", "v")],
        dom=[Dom("u'", "x"), Dom("u", "x"), Dom("u", "y"), Dom("w", "z"), Dom("v", "y")],
        ant=[LF("w", F("phi")), LF("w", F("psi")), LF("v", F("theta"))],
        suc=[LF("u'", F("tau")), LF("u", F("chi")), LF("v", F("xi"))],
    )
    assert validate(s) == []


def test_validate_directed_cycle():
    s = Sequent.make(rel=[Rel("w", "u"), Rel("u", "w")])
    assert any("cycle" in p for p in validate(s))


def test_validate_undirected_cycle():
    s = Sequent.make(rel=[Rel("w", "u"), Rel("v", "u"), Rel("w", "v")])
    assert any("cycle" in p for p in validate(s))


def test_validate_label_cover():
    s = Sequent.make(rel=[Rel("w", "u")], ant=[LF("v", F("phi"))])
    assert any("anchored" in p for p in validate(s))
    s2 = Sequent.make(ant=[LF("v", F("phi"))], suc=[LF("w", F("psi"))])
    assert any("one label" in p for p in validate(s2))
    assert any("one label" in p for p in validate(Sequent.make()))


def _random_edge_sets():
    labels = ["w", "u", "v"]
    pairs = [(a, b) for a in labels for b in labels if a != b]
    return st.lists(st.sampled_from(pairs), min_size=0, max_size=4).map(
        lambda ps: [Rel(a, b) for a, b in ps]
    )


@given(_random_edge_sets())
def test_validate_matches_union_find_oracle(rels):
    s = Sequent.make(rel=rels, ant=[LF("w", F("phi"))] if not rels else [])
    ok = not validate(s)
    # oracle: undirected simple graph must be a tree on its vertices
    verts = {r.frm for r in rels} | {r.to for r in rels}
    edges = [(r.frm, r.to) for r in rels]
    undirected = {frozenset(e) for e in edges}
    is_tree = (
        len(edges) == len(undirected)  # no parallel/anti-parallel duplicates
        and all(len(e) == 2 for e in undirected)
        and len(undirected) == max(len(verts), 1) - 1
        and _connected(verts, undirected)
    )
    if rels:
        assert ok == is_tree
    else:
        assert ok  # single-label sequent


def _connected(verts, undirected):
    if not verts:
        return True
    seen = {next(iter(sorted(verts)))}
    frontier = list(seen)
    adj = {v: set() for v in verts}
    for e in undirected:
        a, b = tuple(e)
        adj[a].add(b)
        adj[b].add(a)
    while frontier:
        x = frontier.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                frontier.append(y)
    return seen == verts


# -- reachability -------------------------------------------------------------

def test_reachable_reflexive_on_empty_relation():
    assert reachable([], "w", "w")
    assert not strictly_reachable([], "w", "w")


def test_reachable_propagation_example():
    rel = [Rel("u", "w"), Rel("w", "v")]
    assert reachable(rel, "u", "v")
    assert not reachable(rel, "v", "w")
    assert strictly_reachable(rel, "u", "w")


def _polytrees(max_nodes=5):
    @st.composite
    def build(draw):
        n = draw(st.integers(1, max_nodes))
        labels = [f"w{i}" for i in range(n)]
        rels = []
        for i in range(1, n):
            parent = draw(st.integers(0, i - 1))
            if draw(st.booleans()):
                rels.append(Rel(labels[parent], labels[i]))
            else:
                rels.append(Rel(labels[i], labels[parent]))
        return labels, rels
    return build()


@given(_polytrees())
def test_reachable_matches_warshall_closure(tree):
    labels, rels = tree
    closure = {(a, a) for a in labels}
    closure |= {(r.frm, r.to) for r in rels}
    for k in labels:
        for i in labels:
            for j in labels:
                if (i, k) in closure and (k, j) in closure:
                    closure.add((i, j))
    for a in labels:
        for b in labels:
            assert reachable(rels, a, b) == ((a, b) in closure)


@given(_polytrees())
def test_reachable_is_an_order_on_polytrees(tree):
    labels, rels = tree
    for a in labels:
        assert reachable(rels, a, a)
        for b in labels:
            for c in labels:
                if reachable(rels, a, b) and reachable(rels, b, c):
                    assert reachable(rels, a, c)
            if a != b:
                assert not (reachable(rels, a, b) and reachable(rels, b, a))


# -- availability -------------------------------------------------------------

PROP_EX = Sequent.make(
    rel=[Rel("u", "w"), Rel("w", "v")],
    dom=[Dom("w", "x"), Dom("u", "y"), Dom("v", "z")],
    ant=[LF("w", F("forall x.p(x)")), LF("w", F("p(f(y, y))")), LF("w", F("p(z)"))],
    suc=[LF("u", F("q(x) -< q(x)")), LF("v", F("p(y)"))],
)


def test_available_vars_example():
    assert available_vars(PROP_EX, "w") == {"x", "y"}
    assert available_vars(PROP_EX, "u") == {"y"}
    assert available_vars(PROP_EX, "v") == {"x", "y", "z"}


def test_available_vars_empty_domain():
    s = Sequent.make(ant=[LF("w", F("phi"))])
    assert available_vars(s, "w") == set()
    with pytest.raises(SequentError):
        available_vars(s, "nope")


def test_is_available_examples():
    assert is_available(App("f", (Var("y"), Var("y"))), PROP_EX, "w")
    assert not is_available(Var("z"), PROP_EX, "w")
    for lab in ("w", "u", "v"):
        assert is_available(App("a"), PROP_EX, lab)


@given(_polytrees(), st.sets(st.sampled_from(["x", "y", "z"]), max_size=3))
def test_available_vars_brute_force(tree, vs):
    labels, rels = tree
    dom = [Dom(labels[i % len(labels)], v) for i, v in enumerate(sorted(vs))]
    s = Sequent.make(rel=rels, dom=dom,
                     ant=[LF(labels[0], F("phi"))])
    for w in labels:
        expect = {d.var for d in dom if reachable(rels, d.label, w)}
        assert available_vars(s, w) == expect
        for u in labels:
            if reachable(rels, w, u):
                assert available_vars(s, w) <= available_vars(s, u)


# -- term substitution on sequents ---------------------------------------------

def test_sequent_subst_worked_example():
    s = Sequent.make(
        rel=[Rel("w", "u")],
        dom=[Dom("w", "x"), Dom("u", "x"), Dom("u", "y")],
        ant=[LF("w", F("p(x)"))],
        suc=[LF("u", F("forall y.q(f(x, y))"))],
    )
    out = sequent_subst(s, App("f", (Var("y"), Var("z"))), "x")
    assert sorted(map(str, out.dom)) == ["u:y", "u:y", "u:z", "w:y", "w:z"]
    assert out.ant == (LF("w", F("p(f(y, z))")),)
    got = out.suc[0]
    assert got.label == "u"
    assert alpha_eq(got.formula, F("forall v.q(f(f(y, z), v))"))


def test_sequent_subst_identity():
    assert sequent_subst(PROP_EX, Var("x"), "x").alpha_eq(PROP_EX)


def test_sequent_subst_constant_deletes_atoms():
    s = Sequent.make(rel=[Rel("w", "u")], dom=[Dom("w", "x"), Dom("u", "y")],
                     ant=[LF("w", F("p(x)"))])
    out = sequent_subst(s, App("a"), "x")
    assert out.dom == (Dom("u", "y"),)
    assert out.ant == (LF("w", F("p(a)")),)


def test_sequent_subst_keeps_atom_labels():
    out = sequent_subst(PROP_EX, App("g", (Var("x"),)), "y")
    assert {d.label for d in out.dom} == {d.label for d in PROP_EX.dom}


# -- isomorphism ----------------------------------------------------------------

def test_iso_identity_and_renaming():
    assert iso(PROP_EX, PROP_EX) == {l: l for l in PROP_EX.labels()}
    renamed = relabel_sequent(PROP_EX, {"w": "m", "u": "n", "v": "k"})
    mapping = iso(PROP_EX, renamed)
    assert mapping == {"w": "m", "u": "n", "v": "k"}


def test_iso_chain_vs_fork():
    chain = Sequent.make(rel=[Rel("a", "b"), Rel("b", "c")], ant=[LF("a", F("phi"))])
    fork = Sequent.make(rel=[Rel("a", "b"), Rel("a", "c")], ant=[LF("a", F("phi"))])
    assert iso(chain, fork) is None
    # exhaustive check over all bijections agrees
    for perm in itertools.permutations("abc"):
        m = dict(zip("abc", perm))
        assert relabel_sequent(chain, m).alpha_key() != fork.alpha_key()


# -- text format -----------------------------------------------------------------

def test_sequent_text_roundtrip():
    text = render_sequent(PROP_EX)
    parsed, _ = parse_sequent(text, constants=["a"])
    assert parsed == PROP_EX
    assert render_sequent(parsed) == text


def test_parse_sequent_simple():
    s, sig = parse_sequent("R: w<u ; T: w:x ; w: p(x) |- u: p(x)")
    assert s.rel == (Rel("w", "u"),)
    assert s.dom == (Dom("w", "x"),)
    assert s.ant == (LF("w", Atom("p", (Var("x"),))),)
    assert sig.predicates == {"p": 1}


def test_parse_sequent_empty_segments():
    s, _ = parse_sequent("|- w: top")
    assert not s.rel and not s.dom and not s.ant
    assert len(s.suc) == 1
