"""Polytree sequents: structure, reachability, availability, substitution.

A sequent is four multisets: relational atoms ``w<u``, domain atoms ``w:x``,
antecedent labeled formulas and consequent labeled formulas.  The relational
atoms must form a polytree (connected, no directed or undirected cycle) and
every label used elsewhere must occur in them (or, with no relational atoms,
there is exactly one label overall).

Multisets are kept as sorted tuples so printing and equality are
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Iterable, Mapping, Optional, Sequence

from .syntax import (
    Formula,
    Signature,
    SyntaxError_,
    Term,
    _Parser,
    alpha_normal,
    free_vars,
    render,
    subst,
    vt,
)


@dataclass(frozen=True)
class Rel:
    frm: str
    to: str

    def __str__(self):
        return f"{self.frm}<{self.to}"


@dataclass(frozen=True)
class Dom:
    label: str
    var: str

    def __str__(self):
        return f"{self.label}:{self.var}"


@dataclass(frozen=True)
class LF:
    """A labeled formula."""

    label: str
    formula: Formula

    def __str__(self):
        return f"{self.label}: {render(self.formula)}"


def _lf_key(lf: LF) -> tuple:
    return (lf.label, render(alpha_normal(lf.formula)), render(lf.formula))


class SequentError(Exception):
    pass


@dataclass(frozen=True)
class Sequent:
    rel: tuple[Rel, ...]
    dom: tuple[Dom, ...]
    ant: tuple[LF, ...]
    suc: tuple[LF, ...]

    @staticmethod
    def make(rel: Iterable[Rel] = (), dom: Iterable[Dom] = (),
             ant: Iterable[LF] = (), suc: Iterable[LF] = ()) -> "Sequent":
        return Sequent(
            tuple(sorted(rel, key=lambda r: (r.frm, r.to))),
            tuple(sorted(dom, key=lambda d: (d.label, d.var))),
            tuple(sorted(ant, key=_lf_key)),
            tuple(sorted(suc, key=_lf_key)),
        )

    # -- basic views -------------------------------------------------------

    def labels(self) -> frozenset[str]:
        out = set()
        for r in self.rel:
            out.add(r.frm)
            out.add(r.to)
        for d in self.dom:
            out.add(d.label)
        for lf in self.ant + self.suc:
            out.add(lf.label)
        return frozenset(out)

    def rel_labels(self) -> frozenset[str]:
        out = set()
        for r in self.rel:
            out.add(r.frm)
            out.add(r.to)
        return frozenset(out)

    def variables(self) -> frozenset[str]:
        """Variables occurring in domain atoms or free in some formula."""
        out = {d.var for d in self.dom}
        for lf in self.ant + self.suc:
            out |= free_vars(lf.formula)
        return frozenset(out)

    # -- multiset edits (all return new sequents) --------------------------

    def add(self, rel: Iterable[Rel] = (), dom: Iterable[Dom] = (),
            ant: Iterable[LF] = (), suc: Iterable[LF] = ()) -> "Sequent":
        return Sequent.make(self.rel + tuple(rel), self.dom + tuple(dom),
                            self.ant + tuple(ant), self.suc + tuple(suc))

    def remove(self, rel: Iterable[Rel] = (), dom: Iterable[Dom] = (),
               ant: Iterable[LF] = (), suc: Iterable[LF] = ()) -> "Sequent":
        return Sequent.make(
            _msub(self.rel, rel), _msub(self.dom, dom),
            _msub(self.ant, ant), _msub(self.suc, suc))

    def count_ant(self, lf: LF) -> int:
        return sum(1 for x in self.ant if x == lf)

    def count_suc(self, lf: LF) -> int:
        return sum(1 for x in self.suc if x == lf)

    # -- comparison up to renaming of bound variables ----------------------

    def alpha_key(self) -> tuple:
        return (
            self.rel,
            self.dom,
            tuple(sorted((lf.label, render(alpha_normal(lf.formula))) for lf in self.ant)),
            tuple(sorted((lf.label, render(alpha_normal(lf.formula))) for lf in self.suc)),
        )

    def alpha_eq(self, other: "Sequent") -> bool:
        return self.alpha_key() == other.alpha_key()

    def __str__(self):
        return render_sequent(self)


def _msub(base: Sequence, items: Iterable) -> list:
    out = list(base)
    for it in items:
        try:
            out.remove(it)
        except ValueError:
            raise SequentError(f"not present in multiset: {it}")
    return out


# ---------------------------------------------------------------------------
# Polytree validation
# ---------------------------------------------------------------------------


def validate(s: Sequent) -> list[str]:
    """Check the polytree and label-cover invariants.

    Returns a list of violation descriptions; an empty list means the sequent
    is well formed.
    """
    problems = []
    rl = s.rel_labels()
    other = {d.label for d in s.dom} | {lf.label for lf in s.ant + s.suc}
    if s.rel:
        stray = other - rl
        if stray:
            problems.append(f"labels not anchored in the relation: {', '.join(sorted(stray))}")
    else:
        if len(other) != 1:
            problems.append(f"without relational atoms exactly one label is allowed, found {len(other)}")

    # duplicate edges are already an undirected cycle
    seen = set()
    for r in s.rel:
        if (r.frm, r.to) in seen:
            problems.append(f"duplicate relational atom {r}")
        seen.add((r.frm, r.to))
        if r.frm == r.to:
            problems.append(f"self-loop {r}")

    # undirected acyclicity + connectedness via union-find
    parent: dict[str, str] = {l: l for l in rl}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    cycle_found = False
    for r in s.rel:
        if r.frm == r.to:
            continue
        a, b = find(r.frm), find(r.to)
        if a == b:
            if not cycle_found:
                problems.append(f"undirected cycle through edge {r}")
                cycle_found = True
        else:
            parent[a] = b
    if rl and len({find(l) for l in rl}) > 1:
        problems.append("relation graph is disconnected")
    return problems


def is_valid(s: Sequent) -> bool:
    return not validate(s)


# ---------------------------------------------------------------------------
# Reachability and availability
# ---------------------------------------------------------------------------


def strictly_reachable(rel: Iterable[Rel], w: str, u: str) -> bool:
    """True iff a nonempty directed path leads from ``w`` to ``u``."""
    adj: dict[str, list[str]] = {}
    for r in rel:
        adj.setdefault(r.frm, []).append(r.to)
    seen = set()
    stack = list(adj.get(w, []))
    while stack:
        x = stack.pop()
        if x == u:
            return True
        if x in seen:
            continue
        seen.add(x)
        stack.extend(adj.get(x, []))
    return False


def reachable(rel: Iterable[Rel], w: str, u: str) -> bool:
    return w == u or strictly_reachable(rel, w, u)


def available_vars(s: Sequent, w: str) -> frozenset[str]:
    """The variables usable at ``w``: those with a domain atom at some label
    from which ``w`` is reachable."""
    if w not in s.labels():
        raise SequentError(f"unknown label {w}")
    return frozenset(d.var for d in s.dom if reachable(s.rel, d.label, w))


def is_available(t: Term, s: Sequent, w: str) -> bool:
    """A term is available at ``w`` when all its variables are; closed terms
    are available everywhere."""
    return vt(t) <= available_vars(s, w)


# ---------------------------------------------------------------------------
# Term substitution on sequents
# ---------------------------------------------------------------------------


def sequent_subst(s: Sequent, t: Term, x: str) -> Sequent:
    """Substitute ``t`` for ``x`` in every formula; each domain atom ``w:x``
    is replaced by one atom ``w:y`` per variable ``y`` of ``t`` (so
    substituting a closed term deletes them)."""
    tv = sorted(vt(t))
    dom: list[Dom] = []
    for d in s.dom:
        if d.var == x:
            dom.extend(Dom(d.label, y) for y in tv)
        else:
            dom.append(d)
    return Sequent.make(
        s.rel,
        dom,
        (LF(lf.label, subst(lf.formula, t, x)) for lf in s.ant),
        (LF(lf.label, subst(lf.formula, t, x)) for lf in s.suc),
    )


def relabel_sequent(s: Sequent, mapping: Mapping[str, str]) -> Sequent:
    f = lambda l: mapping.get(l, l)
    return Sequent.make(
        (Rel(f(r.frm), f(r.to)) for r in s.rel),
        (Dom(f(d.label), d.var) for d in s.dom),
        (LF(f(lf.label), lf.formula) for lf in s.ant),
        (LF(f(lf.label), lf.formula) for lf in s.suc),
    )


# ---------------------------------------------------------------------------
# Isomorphism
# ---------------------------------------------------------------------------


def iso(s1: Sequent, s2: Sequent) -> Optional[dict[str, str]]:
    """A label bijection carrying s1 onto s2 (exact multisets, formulas
    compared up to bound-variable renaming), or None."""
    l1, l2 = sorted(s1.labels()), sorted(s2.labels())
    if len(l1) != len(l2):
        return None
    if len(s1.rel) != len(s2.rel) or len(s1.dom) != len(s2.dom):
        return None
    if len(s1.ant) != len(s2.ant) or len(s1.suc) != len(s2.suc):
        return None
    key2 = s2.alpha_key()
    # brute-force with degree pruning; sequents in practice are small
    deg1 = {l: _degrees(s1, l) for l in l1}
    deg2 = {l: _degrees(s2, l) for l in l2}
    for perm in permutations(l2):
        mapping = dict(zip(l1, perm))
        if any(deg1[a] != deg2[b] for a, b in mapping.items()):
            continue
        if relabel_sequent(s1, mapping).alpha_key() == key2:
            return mapping
    return None


def _degrees(s: Sequent, l: str) -> tuple[int, int, int, int, int]:
    return (
        sum(1 for r in s.rel if r.frm == l),
        sum(1 for r in s.rel if r.to == l),
        sum(1 for d in s.dom if d.label == l),
        sum(1 for lf in s.ant if lf.label == l),
        sum(1 for lf in s.suc if lf.label == l),
    )


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------
#
#   R: w<u, u<v ; T: w:x, u:y ; w: p(x), v: q |- u: r(x)
#
# Empty R/T segments are omitted; the formula part always carries "|-".


def render_sequent(s: Sequent) -> str:
    parts = []
    if s.rel:
        parts.append("R: " + ", ".join(str(r) for r in s.rel))
    if s.dom:
        parts.append("T: " + ", ".join(str(d) for d in s.dom))
    ant = ", ".join(str(lf) for lf in s.ant)
    suc = ", ".join(str(lf) for lf in s.suc)
    parts.append(f"{ant} |- {suc}".strip())
    return " ; ".join(parts)


def parse_sequent(text: str, sig: Optional[Signature] = None,
                  constants: Iterable[str] = ()) -> tuple[Sequent, Signature]:
    """Parse the sequent text format.  With ``sig=None`` the signature is
    inferred across all formulas."""
    segments = [seg.strip() for seg in text.split(";")]
    rel: list[Rel] = []
    dom: list[Dom] = []
    ant: list[LF] = []
    suc: list[LF] = []
    funcs: dict[str, int] = dict(sig.functions) if sig else {c: 0 for c in constants}
    preds: dict[str, int] = dict(sig.predicates) if sig else {}
    seen_turnstile = False

    def parse_lf(item: str) -> LF:
        nonlocal funcs, preds
        if ":" not in item:
            raise SequentError(f"labeled formula expected, got {item!r}")
        label, ftext = item.split(":", 1)
        label = label.strip()
        if not label.isidentifier():
            raise SequentError(f"bad label {label!r}")
        p = _Parser(ftext, None if sig is None else Signature(funcs, preds))
        if sig is None:
            p.funcs, p.preds = funcs, preds
        try:
            phi = p.parse()
        except SyntaxError_ as e:
            raise SequentError(f"in formula at label {label}: {e}") from e
        if sig is None:
            funcs, preds = p.funcs, p.preds
        return LF(label, phi)

    for seg in segments:
        if not seg:
            continue
        if seg.startswith("R:"):
            for item in seg[2:].split(","):
                item = item.strip()
                if not item:
                    continue
                if "<" not in item:
                    raise SequentError(f"bad relational atom {item!r}")
                a, b = (x.strip() for x in item.split("<", 1))
                rel.append(Rel(a, b))
        elif seg.startswith("T:"):
            for item in seg[2:].split(","):
                item = item.strip()
                if not item:
                    continue
                if ":" not in item:
                    raise SequentError(f"bad domain atom {item!r}")
                a, b = (x.strip() for x in item.split(":", 1))
                dom.append(Dom(a, b))
        elif "|-" in seg:
            seen_turnstile = True
            left, right = seg.split("|-", 1)
            for item in _split_top(left):
                ant.append(parse_lf(item))
            for item in _split_top(right):
                suc.append(parse_lf(item))
        else:
            raise SequentError(f"unrecognized segment {seg!r}")
    if not seen_turnstile:
        raise SequentError("missing |-")
    return Sequent.make(rel, dom, ant, suc), Signature(funcs, preds)


def _split_top(text: str) -> list[str]:
    """Split a comma-separated list, ignoring commas inside parentheses."""
    out = []
    depth = 0
    cur = []
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
