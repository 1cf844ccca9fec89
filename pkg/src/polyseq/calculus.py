"""Rule schemas for the two polytree calculi, rule application, and an
independent proof checker.

Rules are applied bottom-up: ``premises(s, app, variant)`` returns the
premise sequents a rule instance demands above conclusion ``s``.  A proof is
a finite tree of rule instances; ``check_proof`` re-derives every node's
premises from scratch, so it accepts exactly the closure of ``premises``
regardless of how a proof was produced.

The increasing-domain variant gates quantifier instantiation by availability
and has the domain-shift rule ``ds``; the constant-domain variant drops both
(any well-formed term may instantiate) and the ``id-no-ds`` variant is the
increasing-domain calculus without ``ds``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from . import syntax
from .syntax import (
    And, Atom, Bot, Excl, Exists, Forall, Formula, Impl, Or, Signature, Term, Top,
    alpha_normal, free_vars, fresh_name, render, subst, vt,
)
from .sequent import (
    Dom, LF, Rel, Sequent, SequentError, is_available, parse_sequent, reachable,
    render_sequent, validate,
)


class Variant(Enum):
    ID = "id"
    CD = "cd"
    ID_NO_DS = "id-no-ds"

    @property
    def has_ds(self) -> bool:
        return self is Variant.ID

    @property
    def checks_availability(self) -> bool:
        return self is not Variant.CD


LEFT_RULES = {"ds", "andL", "orL", "implL", "exclL", "existsL", "forallL"}
RIGHT_RULES = {"andR", "orR", "implR", "exclR", "existsR", "forallR"}
LEAF_RULES = {"ax", "botL", "topR"}
ALL_RULES = LEFT_RULES | RIGHT_RULES | LEAF_RULES
# rules whose premises do not contain the principal formula
CONSUMING_RULES = {"andL", "orL", "existsL", "exclL", "andR", "orR", "implR", "forallR"}


class RuleError(Exception):
    pass


@dataclass(frozen=True)
class RuleApp:
    """One rule instance.

    ``principal`` is the labeled formula the rule acts on (absent for the
    leaf rules, which record their active formulas instead).  ``label`` is
    the fresh label of implR/exclL/forallR or the second label of
    implL/exclR/forallL; ``var`` the fresh variable of existsL/forallR;
    ``term`` the instantiation term of existsR/forallL.  A cut node stores
    its two active formulas.
    """

    rule: str
    principal: Optional[LF] = None
    label: Optional[str] = None
    var: Optional[str] = None
    term: Optional[Term] = None
    actives: tuple[LF, ...] = ()

    def witness_text(self) -> str:
        parts = []
        if self.label is not None:
            parts.append(f"label:{self.label}")
        if self.var is not None:
            parts.append(f"var:{self.var}")
        if self.term is not None:
            parts.append(f"term:{self.term}")
        for a in self.actives:
            parts.append(f"active:{a}")
        return ", ".join(parts)


@dataclass(frozen=True)
class Proof:
    conclusion: Sequent
    rule: RuleApp
    premises: tuple["Proof", ...] = ()

    def __post_init__(self):
        h = 1 + max((p.height for p in self.premises), default=0)
        object.__setattr__(self, "height", h)
        object.__setattr__(self, "size", 1 + sum(p.size for p in self.premises))

    def iter_nodes(self):
        yield self
        for p in self.premises:
            yield from p.iter_nodes()

    def rule_multiset(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for n in self.iter_nodes():
            out[n.rule.rule] = out.get(n.rule.rule, 0) + 1
        return out

    def has_cut(self) -> bool:
        return any(n.rule.rule == "cut" for n in self.iter_nodes())


# ---------------------------------------------------------------------------
# Rule application (bottom-up)
# ---------------------------------------------------------------------------


def _need_principal(s: Sequent, app: RuleApp, side: str) -> LF:
    p = app.principal
    if p is None:
        raise RuleError(f"{app.rule}: missing principal")
    pool = s.ant if side == "ant" else s.suc
    if p not in pool:
        raise RuleError(f"{app.rule}: principal {p} not in {'antecedent' if side == 'ant' else 'consequent'}")
    return p


def _check_fresh_label(s: Sequent, label: str, rule: str):
    if label in s.labels():
        raise RuleError(f"{rule}: label {label} is not fresh")


def _check_fresh_var(s: Sequent, var: str, rule: str):
    used = s.variables()
    if var in used:
        raise RuleError(f"{rule}: variable {var} is not fresh")


def _check_term_wf(t: Term, sig: Optional[Signature], rule: str):
    if sig is None:
        return
    def go(t: Term):
        if isinstance(t, syntax.App):
            ar = sig.functions.get(t.func)
            if ar is None or ar != len(t.args):
                raise RuleError(f"{rule}: term {t} not well formed over the signature")
            for a in t.args:
                go(a)
    go(t)


def premises(s: Sequent, app: RuleApp, variant: Variant,
             sig: Optional[Signature] = None) -> list[Sequent]:
    """The premise sequents of one rule instance applied to ``s``.

    Raises :class:`RuleError` when a side condition fails: reachability for
    ax/implL/exclR/forallL, freshness for existsL/implR/exclL/forallR,
    availability for existsR/forallL under increasing domains.
    """
    r = app.rule
    if r == "ax":
        la, ra = app.actives
        if not isinstance(la.formula, Atom) or la.formula != ra.formula:
            raise RuleError("ax: active formulas must be identical atoms")
        if la not in s.ant or ra not in s.suc:
            raise RuleError("ax: active formulas not present")
        if not reachable(s.rel, la.label, ra.label):
            raise RuleError(f"ax: {ra.label} not reachable from {la.label}")
        return []
    if r == "botL":
        (a,) = app.actives
        if a.formula != syntax.BOT or a not in s.ant:
            raise RuleError("botL: antecedent bottom not present")
        return []
    if r == "topR":
        (a,) = app.actives
        if a.formula != syntax.TOP or a not in s.suc:
            raise RuleError("topR: consequent top not present")
        return []

    if r == "ds":
        if not variant.has_ds:
            raise RuleError(f"ds illegal in variant {variant.value}")
        p = _need_principal(s, app, "ant")
        if not isinstance(p.formula, Atom):
            raise RuleError("ds: principal must be an atom")
        new = [Dom(p.label, x) for x in sorted(vt_args(p.formula))]
        return [s.add(dom=new)]

    if r == "andL":
        p = _need_principal(s, app, "ant")
        f = _expect(p.formula, And, r)
        return [s.remove(ant=[p]).add(ant=[LF(p.label, f.left), LF(p.label, f.right)])]
    if r == "orR":
        p = _need_principal(s, app, "suc")
        f = _expect(p.formula, Or, r)
        return [s.remove(suc=[p]).add(suc=[LF(p.label, f.left), LF(p.label, f.right)])]
    if r == "orL":
        p = _need_principal(s, app, "ant")
        f = _expect(p.formula, Or, r)
        base = s.remove(ant=[p])
        return [base.add(ant=[LF(p.label, f.left)]), base.add(ant=[LF(p.label, f.right)])]
    if r == "andR":
        p = _need_principal(s, app, "suc")
        f = _expect(p.formula, And, r)
        base = s.remove(suc=[p])
        return [base.add(suc=[LF(p.label, f.left)]), base.add(suc=[LF(p.label, f.right)])]

    if r == "implR":
        p = _need_principal(s, app, "suc")
        f = _expect(p.formula, Impl, r)
        u = _need_label(app, r)
        _check_fresh_label(s, u, r)
        return [s.remove(suc=[p]).add(rel=[Rel(p.label, u)],
                                      ant=[LF(u, f.left)], suc=[LF(u, f.right)])]
    if r == "exclL":
        p = _need_principal(s, app, "ant")
        f = _expect(p.formula, Excl, r)
        u = _need_label(app, r)
        _check_fresh_label(s, u, r)
        return [s.remove(ant=[p]).add(rel=[Rel(u, p.label)],
                                      ant=[LF(u, f.left)], suc=[LF(u, f.right)])]
    if r == "implL":
        p = _need_principal(s, app, "ant")
        f = _expect(p.formula, Impl, r)
        u = _need_label(app, r)
        if not reachable(s.rel, p.label, u):
            raise RuleError(f"implL: {u} not reachable from {p.label}")
        return [s.add(suc=[LF(u, f.left)]), s.add(ant=[LF(u, f.right)])]
    if r == "exclR":
        p = _need_principal(s, app, "suc")
        f = _expect(p.formula, Excl, r)
        w = _need_label(app, r)
        if not reachable(s.rel, w, p.label):
            raise RuleError(f"exclR: {p.label} not reachable from {w}")
        return [s.add(suc=[LF(w, f.left)]), s.add(ant=[LF(w, f.right)])]

    if r == "existsL":
        p = _need_principal(s, app, "ant")
        f = _expect(p.formula, Exists, r)
        y = _need_var(app, r)
        _check_fresh_var(s, y, r)
        return [s.remove(ant=[p]).add(dom=[Dom(p.label, y)],
                                      ant=[LF(p.label, subst(f.body, syntax.Var(y), f.var))])]
    if r == "forallR":
        p = _need_principal(s, app, "suc")
        f = _expect(p.formula, Forall, r)
        u, y = _need_label(app, r), _need_var(app, r)
        _check_fresh_label(s, u, r)
        _check_fresh_var(s, y, r)
        return [s.remove(suc=[p]).add(rel=[Rel(p.label, u)], dom=[Dom(u, y)],
                                      suc=[LF(u, subst(f.body, syntax.Var(y), f.var))])]
    if r == "existsR":
        p = _need_principal(s, app, "suc")
        f = _expect(p.formula, Exists, r)
        t = _need_term(app, r)
        _check_term_wf(t, sig, r)
        if variant.checks_availability and not is_available(t, s, p.label):
            raise RuleError(f"existsR: term {t} not available at {p.label}")
        return [s.add(suc=[LF(p.label, subst(f.body, t, f.var))])]
    if r == "forallL":
        p = _need_principal(s, app, "ant")
        f = _expect(p.formula, Forall, r)
        u, t = _need_label(app, r), _need_term(app, r)
        _check_term_wf(t, sig, r)
        if not reachable(s.rel, p.label, u):
            raise RuleError(f"forallL: {u} not reachable from {p.label}")
        if variant.checks_availability and not is_available(t, s, u):
            raise RuleError(f"forallL: term {t} not available at {u}")
        return [s.add(ant=[LF(u, subst(f.body, t, f.var))])]

    if r == "cut":
        la, ra = app.actives  # la on the right of the left premise, ra on the left of the right premise
        if not syntax.alpha_eq(la.formula, ra.formula):
            raise RuleError("cut: active formulas differ")
        if not reachable(s.rel, la.label, ra.label):
            raise RuleError(f"cut: {ra.label} not reachable from {la.label}")
        return [s.add(suc=[la]), s.add(ant=[ra])]

    raise RuleError(f"unknown rule {r}")


def vt_args(atom: Atom) -> frozenset[str]:
    return syntax.vt_many(atom.args)


def _expect(f: Formula, cls, rule: str):
    if not isinstance(f, cls):
        raise RuleError(f"{rule}: principal has the wrong shape: {render(f)}")
    return f


def _need_label(app: RuleApp, rule: str) -> str:
    if app.label is None:
        raise RuleError(f"{rule}: missing label witness")
    return app.label


def _need_var(app: RuleApp, rule: str) -> str:
    if app.var is None:
        raise RuleError(f"{rule}: missing variable witness")
    return app.var


def _need_term(app: RuleApp, rule: str) -> Term:
    if app.term is None:
        raise RuleError(f"{rule}: missing term witness")
    return app.term


# ---------------------------------------------------------------------------
# Proof checking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    path: tuple[int, ...] = ()
    message: str = ""

    def __bool__(self):
        return self.ok


def check_proof(proof: Proof, variant: Variant, sig: Optional[Signature] = None,
                allow_cut: bool = False) -> CheckResult:
    """Verify a proof tree node by node.

    Every sequent must be a well-formed polytree sequent, every leaf a
    genuine initial rule instance, and every internal node's recorded
    premises must match the schema-derived ones up to multiset equality and
    renaming of bound variables.  Cut nodes are rejected unless
    ``allow_cut`` is set.
    """
    return _check(proof, variant, sig, allow_cut, ())


def _check(p: Proof, variant: Variant, sig, allow_cut: bool, path) -> CheckResult:
    bad = validate(p.conclusion)
    if bad:
        return CheckResult(False, path, "; ".join(bad))
    r = p.rule.rule
    if r == "cut" and not allow_cut:
        return CheckResult(False, path, "cut node rejected (checker runs cut-free)")
    if r not in ALL_RULES and r != "cut":
        return CheckResult(False, path, f"unknown rule {r}")
    try:
        expected = premises(p.conclusion, p.rule, variant, sig)
    except (RuleError, SequentError) as e:
        return CheckResult(False, path, str(e))
    if len(expected) != len(p.premises):
        return CheckResult(False, path, f"{r}: expected {len(expected)} premises, found {len(p.premises)}")
    for i, (want, sub) in enumerate(zip(expected, p.premises)):
        if not want.alpha_eq(sub.conclusion):
            return CheckResult(False, path + (i,),
                               f"premise mismatch: expected {render_sequent(want)!r}, "
                               f"found {render_sequent(sub.conclusion)!r}")
        res = _check(sub, variant, sig, allow_cut, path + (i,))
        if not res.ok:
            return res
    return CheckResult(True)


# ---------------------------------------------------------------------------
# Applicable-rule enumeration
# ---------------------------------------------------------------------------


def closing_rule(s: Sequent) -> Optional[RuleApp]:
    """A leaf rule instance closing ``s``, if one exists."""
    for lf in s.ant:
        if lf.formula == syntax.BOT:
            return RuleApp("botL", actives=(lf,))
    for lf in s.suc:
        if lf.formula == syntax.TOP:
            return RuleApp("topR", actives=(lf,))
    suc_atoms = [lf for lf in s.suc if isinstance(lf.formula, Atom)]
    for la in s.ant:
        if not isinstance(la.formula, Atom):
            continue
        for ra in suc_atoms:
            if la.formula == ra.formula and reachable(s.rel, la.label, ra.label):
                return RuleApp("ax", actives=(la, ra))
    return None


def fresh_label(s: Sequent, base: str = "u", extra: Iterable[str] = ()) -> str:
    return fresh_name(base, s.labels() | set(extra))


def fresh_var(s: Sequent, base: str, extra: Iterable[str] = ()) -> str:
    return fresh_name(base, s.variables() | set(extra))


def applicable(s: Sequent, variant: Variant) -> list[RuleApp]:
    """Every rule instance whose side conditions hold on ``s``.

    Quantifier instantiation terms are left symbolic (``term=None``); label
    pairs for implL/exclR/forallL are enumerated concretely, as are closing
    leaf instances.
    """
    out: list[RuleApp] = []
    labels = sorted(s.labels())
    close = closing_rule(s)
    if close:
        out.append(close)
    for lf in s.ant:
        f = lf.formula
        if isinstance(f, Atom) and variant.has_ds:
            out.append(RuleApp("ds", principal=lf))
        elif isinstance(f, And):
            out.append(RuleApp("andL", principal=lf))
        elif isinstance(f, Or):
            out.append(RuleApp("orL", principal=lf))
        elif isinstance(f, Impl):
            for u in labels:
                if reachable(s.rel, lf.label, u):
                    out.append(RuleApp("implL", principal=lf, label=u))
        elif isinstance(f, Excl):
            out.append(RuleApp("exclL", principal=lf, label=fresh_label(s)))
        elif isinstance(f, Exists):
            out.append(RuleApp("existsL", principal=lf, var=fresh_var(s, f.var)))
        elif isinstance(f, Forall):
            for u in labels:
                if reachable(s.rel, lf.label, u):
                    out.append(RuleApp("forallL", principal=lf, label=u, term=None))
    for lf in s.suc:
        f = lf.formula
        if isinstance(f, And):
            out.append(RuleApp("andR", principal=lf))
        elif isinstance(f, Or):
            out.append(RuleApp("orR", principal=lf))
        elif isinstance(f, Impl):
            out.append(RuleApp("implR", principal=lf, label=fresh_label(s)))
        elif isinstance(f, Excl):
            for w in labels:
                if reachable(s.rel, w, lf.label):
                    out.append(RuleApp("exclR", principal=lf, label=w))
        elif isinstance(f, Exists):
            out.append(RuleApp("existsR", principal=lf, term=None))
        elif isinstance(f, Forall):
            out.append(RuleApp("forallR", principal=lf,
                               label=fresh_label(s), var=fresh_var(s, f.var)))
    return out


# ---------------------------------------------------------------------------
# Proof text format
# ---------------------------------------------------------------------------
#
# One node per line, preorder, depth-prefixed:
#
#   0 implR ; principal=w: p -> q ; witnesses=label:u ; sequent=|- w: p -> q
#   1 ax ; principal= ; witnesses=active:u: p, active:u: p ; sequent=... ; leaf


def render_proof(p: Proof) -> str:
    lines: list[str] = []

    def go(n: Proof, depth: int):
        princ = str(n.rule.principal) if n.rule.principal else ""
        fields = [
            f"{depth} {n.rule.rule}",
            f"principal={princ}",
            f"witnesses={n.rule.witness_text()}",
        ]
        if not n.premises:
            fields.append("leaf")
        # the sequent comes last because its own text may contain " ; "
        fields.append(f"sequent={render_sequent(n.conclusion)}")
        lines.append(" ; ".join(fields))
        for q in n.premises:
            go(q, depth + 1)

    go(p, 0)
    return "\n".join(lines) + "\n"


class ProofParseError(Exception):
    pass


def parse_proof(text: str, sig: Optional[Signature] = None) -> tuple[Proof, Signature]:
    entries = []
    inferred = Signature() if sig is None else sig
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [seg.strip() for seg in line.split(" ; ")]
        head = parts[0].split(None, 1)
        if len(head) != 2 or not head[0].isdigit():
            raise ProofParseError(f"line {lineno}: expected '<depth> <rule>'")
        depth, rule = int(head[0]), head[1].strip()
        fields = {}
        rest = parts[1:]
        while rest:
            seg = rest.pop(0)
            if seg == "leaf":
                continue
            if "=" not in seg:
                raise ProofParseError(f"line {lineno}: bad field {seg!r}")
            k, v = seg.split("=", 1)
            if k.strip() == "sequent":
                # the sequent swallows the rest of the line
                v = " ; ".join([v] + rest)
                rest = []
            fields[k.strip()] = v
        if "sequent" not in fields:
            raise ProofParseError(f"line {lineno}: missing sequent")
        seq, inferred = parse_sequent(fields["sequent"], None, ())
        # carry the accumulating signature forward for term parsing
        principal = None
        if fields.get("principal"):
            label, ftext = fields["principal"].split(":", 1)
            principal = LF(label.strip(),
                           syntax.parse_formula(ftext, inferred))
        label = var = term = None
        actives: list[LF] = []
        wtext = fields.get("witnesses", "")
        for item in _split_witnesses(wtext):
            k, v = item.split(":", 1)
            k = k.strip()
            if k == "label":
                label = v.strip()
            elif k == "var":
                var = v.strip()
            elif k == "term":
                term = _parse_term(v.strip(), inferred)
            elif k == "active":
                al, af = v.split(":", 1)
                actives.append(LF(al.strip(), syntax.parse_formula(af, inferred)))
            else:
                raise ProofParseError(f"line {lineno}: unknown witness {k!r}")
        app = RuleApp(rule, principal=principal, label=label, var=var,
                      term=term, actives=tuple(actives))
        entries.append((depth, seq, app, lineno))

    if not entries:
        raise ProofParseError("empty proof")

    def build(i: int, depth: int) -> tuple[Proof, int]:
        d, seq, app, lineno = entries[i]
        if d != depth:
            raise ProofParseError(f"line {lineno}: expected depth {depth}, found {d}")
        kids = []
        j = i + 1
        while j < len(entries) and entries[j][0] == depth + 1:
            kid, j = build(j, depth + 1)
            kids.append(kid)
        return Proof(seq, app, tuple(kids)), j

    root, end = build(0, 0)
    if end != len(entries):
        raise ProofParseError(f"line {entries[end][3]}: dangling node")
    return root, inferred


def _split_witnesses(text: str) -> list[str]:
    out = []
    depth = 0
    cur: list[str] = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [s.strip() for s in out if s.strip()]


def _parse_term(text: str, sig: Signature) -> Term:
    # reuse the formula parser in term position via a dummy unary predicate
    from .syntax import _Parser
    p = _Parser(text, None)
    p.funcs = dict(sig.functions)
    t = p.term()
    if p.peek()[0] != "eof":
        raise ProofParseError(f"trailing input in term {text!r}")
    return t
