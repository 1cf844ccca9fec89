"""Finite Kripke models and the semantic oracle.

Models come in two classes: increasing domains (``D`` grows along the
preorder) and constant domains (``D`` identical everywhere).  Function
symbols must respect domains: constants lie in every world's domain, and an
application's value lies in ``D(w)`` exactly when its arguments do.
Predicate interpretations are monotone along the preorder.

``find_countermodel`` searches the canonical enumeration of models up to
given bounds for a triple falsifying a sequent; ``sample_model`` draws a
well-formed model pseudo-randomly for fuzzing.  Nothing here claims
completeness: a ``None`` from the search means only "no countermodel within
bounds".
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Mapping, Optional, Sequence

from .syntax import (
    And, App, Atom, Bot, Excl, Exists, Forall, Formula, Impl, Or, Signature,
    Term, Top, Var, free_vars,
)
from .sequent import LF, Sequent
from .calculus import Variant

El = Hashable


@dataclass(frozen=True)
class Model:
    worlds: tuple[str, ...]
    leq: frozenset[tuple[str, str]]
    universe: tuple[El, ...]
    dom: Mapping[str, frozenset[El]]
    funcs: Mapping[str, Mapping[tuple, El]]
    preds: Mapping[tuple[str, str], frozenset[tuple]]  # (world, predicate)
    sig: Signature

    def __post_init__(self):
        object.__setattr__(self, "_cache", {})

    def le(self, w: str, u: str) -> bool:
        return (w, u) in self.leq

    def succs(self, w: str) -> list[str]:
        return [u for u in self.worlds if self.le(w, u)]

    def preds_of(self, w: str) -> list[str]:
        return [u for u in self.worlds if self.le(u, w)]

    def pred_set(self, w: str, p: str) -> frozenset:
        return self.preds.get((w, p), frozenset())


class ModelError(Exception):
    pass


def check_model(m: Model, variant: Variant) -> list[str]:
    """All violated well-formedness conditions, by name, with a witness."""
    out = []
    ws = set(m.worlds)
    if not ws:
        out.append("empty world set")
        return out
    for w in m.worlds:
        if (w, w) not in m.leq:
            out.append(f"reflexivity fails at {w}")
    for (a, b) in m.leq:
        for c in m.worlds:
            if (b, c) in m.leq and (a, c) not in m.leq:
                out.append(f"transitivity fails via {a}<={b}<={c}")
    for w in m.worlds:
        dw = m.dom.get(w)
        if not dw:
            out.append(f"empty domain at {w}")
    if set().union(*[m.dom[w] for w in m.worlds]) != set(m.universe):
        out.append("universe is not the union of the domains")
    for (a, b) in m.leq:
        if not m.dom[a] <= m.dom[b]:
            out.append(f"increasing-domain condition fails along {a}<={b}")
    if variant is Variant.CD:
        base = m.dom[m.worlds[0]]
        for w in m.worlds:
            if m.dom[w] != base:
                out.append(f"constant-domain condition fails at {w}")
    for fname, ar in m.sig.functions.items():
        table = m.funcs.get(fname, {})
        for args in itertools.product(m.universe, repeat=ar):
            if args not in table:
                out.append(f"function {fname} undefined on {args}")
                continue
            val = table[args]
            if val not in m.universe:
                out.append(f"function {fname} maps outside the universe on {args}")
            for w in m.worlds:
                inside = all(a in m.dom[w] for a in args)
                if inside and val not in m.dom[w]:
                    out.append(f"domain closure fails: {fname}{args} leaves D({w})")
                if not inside and val in m.dom[w]:
                    out.append(f"domain reflection fails: {fname}{args} enters D({w})")
    for pname, ar in m.sig.predicates.items():
        for w in m.worlds:
            ext = m.pred_set(w, pname)
            for tup in ext:
                if len(tup) != ar or any(a not in m.dom[w] for a in tup):
                    out.append(f"predicate {pname} at {w} mentions {tup} outside D({w})^{ar}")
        for (a, b) in m.leq:
            if not m.pred_set(a, pname) <= m.pred_set(b, pname):
                out.append(f"monotonicity fails for {pname} along {a}<={b}")
    return out


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def eval_term(m: Model, alpha: Mapping[str, El], t: Term) -> El:
    match t:
        case Var(name):
            return alpha[name]
        case App(f, args):
            vals = tuple(eval_term(m, alpha, a) for a in args)
            try:
                return m.funcs[f][vals]
            except KeyError:
                raise ModelError(f"function {f} undefined on {vals}")
    raise TypeError(t)


def eval_formula(m: Model, w: str, alpha: Mapping[str, El], phi: Formula) -> bool:
    key = (w, phi, tuple(sorted((v, alpha[v]) for v in free_vars(phi))))
    cache = m._cache  # type: ignore[attr-defined]
    hit = cache.get(key)
    if hit is not None:
        return hit
    match phi:
        case Atom(p, args):
            vals = tuple(eval_term(m, alpha, a) for a in args)
            out = vals in m.pred_set(w, p)
        case Bot():
            out = False
        case Top():
            out = True
        case Or(l, r):
            out = eval_formula(m, w, alpha, l) or eval_formula(m, w, alpha, r)
        case And(l, r):
            out = eval_formula(m, w, alpha, l) and eval_formula(m, w, alpha, r)
        case Excl(l, r):
            out = any(
                eval_formula(m, u, alpha, l) and not eval_formula(m, u, alpha, r)
                for u in m.preds_of(w)
            )
        case Impl(l, r):
            out = all(
                (not eval_formula(m, u, alpha, l)) or eval_formula(m, u, alpha, r)
                for u in m.succs(w)
            )
        case Exists(x, body):
            out = any(eval_formula(m, w, {**alpha, x: a}, body) for a in sorted_els(m.dom[w]))
        case Forall(x, body):
            out = all(
                eval_formula(m, u, {**alpha, x: a}, body)
                for u in m.succs(w)
                for a in sorted_els(m.dom[u])
            )
        case _:
            raise TypeError(phi)
    cache[key] = out
    return out


def sorted_els(els: Iterable[El]) -> list:
    return sorted(els, key=repr)


def eval_sequent(m: Model, iota: Mapping[str, str], alpha: Mapping[str, El],
                 s: Sequent) -> bool:
    """A sequent is satisfied unless the interpretation respects the
    relational atoms, realizes every domain atom, and makes the whole
    antecedent true while every consequent formula is false."""
    for r in s.rel:
        if not m.le(iota[r.frm], iota[r.to]):
            return True
    for d in s.dom:
        if alpha[d.var] not in m.dom[iota[d.label]]:
            return True
    for lf in s.ant:
        if not eval_formula(m, iota[lf.label], alpha, lf.formula):
            return True
    for lf in s.suc:
        if eval_formula(m, iota[lf.label], alpha, lf.formula):
            return True
    return False


def falsifying_assignment(m: Model, s: Sequent) -> Optional[tuple[dict, dict]]:
    """Search all interpretations and assignments for a falsifying pair."""
    labels = sorted(s.labels())
    varnames = sorted(s.variables())
    default = sorted_els(m.universe)[0]
    for iota_vals in itertools.product(m.worlds, repeat=len(labels)):
        iota = dict(zip(labels, iota_vals))
        if any(not m.le(iota[r.frm], iota[r.to]) for r in s.rel):
            continue
        for alpha_vals in itertools.product(sorted_els(m.universe), repeat=len(varnames)):
            alpha = dict(zip(varnames, alpha_vals))
            alpha.setdefault("", default)
            if not eval_sequent(m, iota, alpha, s):
                return iota, alpha
    return None


def holds_everywhere(m: Model, phi: Formula) -> bool:
    s = Sequent.make(suc=[LF("w0", phi)])
    return falsifying_assignment(m, s) is None


# ---------------------------------------------------------------------------
# Model enumeration and sampling
# ---------------------------------------------------------------------------


def _preorders(worlds: Sequence[str]) -> Iterator[frozenset[tuple[str, str]]]:
    n = len(worlds)
    diag = [(w, w) for w in worlds]
    offdiag = [(a, b) for a in worlds for b in worlds if a != b]
    for bits in itertools.product((False, True), repeat=len(offdiag)):
        rel = set(diag) | {p for p, b in zip(offdiag, bits) if b}
        if all((a, c) in rel
               for (a, b) in rel for (b2, c) in rel if b == b2):
            yield frozenset(rel)


def _domain_choices(worlds, leq, universe, variant) -> Iterator[dict]:
    subsets = [frozenset(c)
               for r in range(1, len(universe) + 1)
               for c in itertools.combinations(universe, r)]
    if variant is Variant.CD:
        full = frozenset(universe)
        yield {w: full for w in worlds}
        return
    for choice in itertools.product(subsets, repeat=len(worlds)):
        dom = dict(zip(worlds, choice))
        if set().union(*choice) != set(universe):
            continue
        if all(dom[a] <= dom[b] for (a, b) in leq):
            yield dom


def _profile(dom: Mapping[str, frozenset], worlds, e) -> frozenset[str]:
    return frozenset(w for w in worlds if e in dom[w])


def _function_tables(sig, worlds, dom, universe) -> Iterator[dict]:
    """All interpretations satisfying the domain closure conditions."""
    names = sorted(sig.functions)
    full = [e for e in universe if _profile(dom, worlds, e) == frozenset(worlds)]

    def options(name):
        ar = sig.functions[name]
        if ar == 0:
            return [{(): e} for e in full]
        tables = []
        argtuples = list(itertools.product(universe, repeat=ar))
        # value profile must equal the meet of the argument profiles
        cand = []
        for args in argtuples:
            prof = frozenset(worlds)
            for a in args:
                prof &= _profile(dom, worlds, a)
            cand.append([e for e in universe if _profile(dom, worlds, e) == prof])
        for vals in itertools.product(*cand):
            tables.append(dict(zip(argtuples, vals)))
        return tables

    pools = [options(n) for n in names]
    if any(not p for p in pools):
        return
    for combo in itertools.product(*pools):
        yield dict(zip(names, combo))


def _upward_closed_sets(worlds, leq) -> list[frozenset[str]]:
    out = []
    for bits in itertools.product((False, True), repeat=len(worlds)):
        sel = {w for w, b in zip(worlds, bits) if b}
        if all(b in sel for a in sel for (a2, b) in leq if a2 == a):
            out.append(frozenset(sel))
    return out


def _pred_tables(sig, worlds, leq, dom, universe) -> Iterator[dict]:
    names = sorted(sig.predicates)
    ups = _upward_closed_sets(worlds, leq)
    slots = []   # (pred, tuple) with its list of legal world-sets
    for p in names:
        ar = sig.predicates[p]
        for tup in itertools.product(universe, repeat=ar):
            legal = [up for up in ups
                     if all(all(a in dom[w] for a in tup) for w in up)]
            slots.append(((p, tup), legal))
    for combo in itertools.product(*[legal for _, legal in slots]):
        table: dict[tuple[str, str], set] = {}
        for ((p, tup), _), up in zip(slots, combo):
            for w in up:
                table.setdefault((w, p), set()).add(tup)
        yield {k: frozenset(v) for k, v in table.items()}


def enumerate_models(sig: Signature, max_worlds: int, max_universe: int,
                     variant: Variant) -> Iterator[Model]:
    """Canonical deterministic enumeration of all models up to the bounds."""
    for nw in range(1, max_worlds + 1):
        worlds = tuple(f"#w{i}" for i in range(nw))
        for nu in range(1, max_universe + 1):
            universe = tuple(range(nu))
            for leq in sorted(_preorders(worlds), key=sorted):
                for dom in _domain_choices(worlds, leq, universe, variant):
                    for funcs in _function_tables(sig, worlds, dom, universe):
                        for preds in _pred_tables(sig, worlds, leq, dom, universe):
                            yield Model(worlds, leq, universe, dom, funcs, preds, sig)


def sample_model(rng: random.Random, sig: Signature, max_worlds: int = 3,
                 max_universe: int = 3, variant: Variant = Variant.ID) -> Model:
    """Draw a well-formed model; every condition is enforced constructively.

    Restricted to constants and unary functions: with wider arities the
    domain-closure condition cannot always be met on small universes.
    """
    if any(ar > 1 for ar in sig.functions.values()):
        raise ValueError("sample_model supports only constants and unary functions")
    nw = rng.randint(1, max_worlds)
    worlds = tuple(f"#w{i}" for i in range(nw))
    nu = rng.randint(1, max_universe)
    universe = tuple(range(nu))
    # random preorder: transitive closure of random edges
    leq = {(w, w) for w in worlds}
    for a in worlds:
        for b in worlds:
            if a != b and rng.random() < 0.4:
                leq.add((a, b))
    changed = True
    while changed:
        changed = False
        for (a, b) in list(leq):
            for (b2, c) in list(leq):
                if b == b2 and (a, c) not in leq:
                    leq.add((a, c))
                    changed = True
    # domains: with constants present, keep element 0 everywhere
    anchor = {0} if sig.has_constant() or variant is Variant.CD else set()
    if variant is Variant.CD:
        dom = {w: frozenset(universe) for w in worlds}
    else:
        while True:
            dom = {}
            for w in worlds:
                base = set(anchor) or {rng.choice(universe)}
                extra = {e for e in universe if rng.random() < 0.5}
                dom[w] = frozenset(base | extra)
            for _ in range(nw * nw):
                for (a, b) in leq:
                    dom[b] = dom[b] | dom[a]
            if set().union(*dom.values()) == set(universe):
                break
    # functions: value drawn from the class with the right domain profile
    funcs = {}
    for fname in sorted(sig.functions):
        ar = sig.functions[fname]
        table = {}
        for args in itertools.product(universe, repeat=ar):
            prof = frozenset(worlds)
            for a in args:
                prof &= _profile(dom, worlds, a)
            pool = [e for e in universe if _profile(dom, worlds, e) == prof]
            # for constants prof is the full world set (domains were anchored);
            # for unary symbols the argument itself is always in the pool
            table[args] = rng.choice(pool)
        funcs[fname] = table
    # predicates: per tuple, a random upward-closed world set within domains
    ups = _upward_closed_sets(worlds, leq)
    preds: dict[tuple[str, str], set] = {}
    for pname in sorted(sig.predicates):
        ar = sig.predicates[pname]
        for tup in itertools.product(universe, repeat=ar):
            legal = [up for up in ups
                     if all(all(a in dom[w] for a in tup) for w in up)]
            up = rng.choice(legal)
            for w in up:
                preds.setdefault((w, pname), set()).add(tup)
    m = Model(worlds, frozenset(leq), universe, dom, funcs,
              {k: frozenset(v) for k, v in preds.items()}, sig)
    return m


def find_countermodel(s: Sequent, sig: Signature, max_worlds: int,
                      max_universe: int, variant: Variant
                      ) -> Optional[tuple[Model, dict, dict]]:
    """Exhaustive search up to the bounds for (model, interpretation,
    assignment) falsifying ``s``; ``None`` means none exists within bounds."""
    for m in enumerate_models(sig, max_worlds, max_universe, variant):
        hit = falsifying_assignment(m, s)
        if hit is not None:
            iota, alpha = hit
            return m, iota, alpha
    return None


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------


def render_model(m: Model, iota: Optional[Mapping[str, str]] = None,
                 alpha: Optional[Mapping[str, El]] = None,
                 note: str = "") -> str:
    lines = []
    if note:
        lines.append(f"# {note}")
    lines.append("worlds: " + " ".join(m.worlds))
    strict = sorted((a, b) for (a, b) in m.leq if a != b)
    lines.append("order: " + ", ".join(f"{a}<={b}" for a, b in strict))
    lines.append("universe: " + " ".join(repr(e) for e in m.universe))
    for w in m.worlds:
        lines.append(f"domain {w}: " + " ".join(repr(e) for e in sorted_els(m.dom[w])))
    for f in sorted(m.funcs):
        table = m.funcs[f]
        entries = ", ".join(f"({', '.join(map(repr, k))}) => {v!r}"
                            for k, v in sorted(table.items(), key=repr))
        lines.append(f"fun {f}: {entries}")
    for p in sorted(m.sig.predicates):
        for w in m.worlds:
            ext = m.pred_set(w, p)
            entries = " ".join(f"({', '.join(map(repr, t))})" for t in sorted(ext, key=repr))
            lines.append(f"pred {p} @ {w}: {entries}")
    if iota is not None:
        lines.append("interp: " + ", ".join(f"{k} => {v}" for k, v in sorted(iota.items())))
    if alpha is not None:
        lines.append("assign: " + ", ".join(f"{k} => {v!r}" for k, v in sorted(alpha.items())))
    return "\n".join(lines) + "\n"


def parse_model(text: str, sig: Signature) -> tuple[Model, dict, dict]:
    import ast

    worlds: tuple = ()
    leq: set = set()
    universe: tuple = ()
    dom: dict = {}
    funcs: dict = {}
    preds: dict = {}
    iota: dict = {}
    alpha: dict = {}

    def parse_el(tok: str):
        return ast.literal_eval(tok)

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(":")
        key = key.strip()
        rest = rest.strip()
        if key == "worlds":
            worlds = tuple(rest.split())
            leq |= {(w, w) for w in worlds}
        elif key == "order":
            for item in filter(None, (x.strip() for x in rest.split(","))):
                a, b = (x.strip() for x in item.split("<="))
                leq.add((a, b))
        elif key == "universe":
            universe = tuple(parse_el(t) for t in rest.split())
        elif key.startswith("domain "):
            w = key.split(None, 1)[1]
            dom[w] = frozenset(parse_el(t) for t in rest.split())
        elif key.startswith("fun "):
            f = key.split(None, 1)[1]
            table = {}
            for item in _split_entries(rest):
                argpart, _, valpart = item.partition("=>")
                args = tuple(parse_el(t.strip())
                             for t in argpart.strip().strip("()").split(",") if t.strip())
                table[args] = parse_el(valpart.strip())
            funcs[f] = table
        elif key.startswith("pred "):
            p, _, w = key[5:].partition("@")
            p, w = p.strip(), w.strip()
            ext = set()
            for chunk in rest.split(")"):
                chunk = chunk.strip()
                if not chunk.startswith("("):
                    continue
                inner = chunk[1:].strip()
                ext.add(tuple(parse_el(t.strip()) for t in inner.split(",") if t.strip()))
            preds[(w, p)] = frozenset(ext)
        elif key == "interp":
            for item in filter(None, (x.strip() for x in rest.split(","))):
                k, _, v = item.partition("=>")
                iota[k.strip()] = v.strip()
        elif key == "assign":
            for item in filter(None, (x.strip() for x in rest.split(","))):
                k, _, v = item.partition("=>")
                alpha[k.strip()] = parse_el(v.strip())
        else:
            raise ModelError(f"unrecognized model line: {line!r}")
    return Model(worlds, frozenset(leq), universe, dom, funcs, preds, sig), iota, alpha


def _split_entries(text: str) -> list[str]:
    out, depth, cur = [], 0, []
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
