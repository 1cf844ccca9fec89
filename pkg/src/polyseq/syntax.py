"""The object language: terms, formulas, parsing, and substitution.

Terms are variables and applications of function symbols (constants are
the arity-0 functions).  Formulas are first-order with two implication-like
connectives: ``->`` (implication) and ``-<`` (exclusion, the residual of
disjunction).  All values are immutable and hashable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Union


class SyntaxError_(Exception):
    """Parse/lexical/arity error with a source position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.message = message
        self.pos = pos


# ---------------------------------------------------------------------------
# Signatures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    """Function and predicate symbols with their arities.

    Arity-0 functions are the constants.  Signatures used for proving must
    contain at least one constant so the term universe is never empty; use
    :meth:`ensure_constant` to guarantee this.
    """

    functions: Mapping[str, int] = field(default_factory=dict)
    predicates: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for name, ar in {**self.functions, **self.predicates}.items():
            if ar < 0:
                raise ValueError(f"negative arity for {name}")
        object.__setattr__(self, "functions", MappingProxyType(dict(self.functions)))
        object.__setattr__(self, "predicates", MappingProxyType(dict(self.predicates)))

    def constants(self) -> list[str]:
        return sorted(n for n, a in self.functions.items() if a == 0)

    def has_constant(self) -> bool:
        return any(a == 0 for a in self.functions.values())

    def ensure_constant(self, hint: str = "c") -> "Signature":
        """Return a signature that has at least one constant."""
        if self.has_constant():
            return self
        name = hint
        i = 0
        while name in self.functions or name in self.predicates:
            i += 1
            name = f"{hint}{i}"
        return Signature({**self.functions, name: 0}, dict(self.predicates))

    def merge(self, other: "Signature") -> "Signature":
        funcs = dict(self.functions)
        preds = dict(self.predicates)
        for n, a in other.functions.items():
            if funcs.setdefault(n, a) != a:
                raise ValueError(f"arity clash for function {n}")
        for n, a in other.predicates.items():
            if preds.setdefault(n, a) != a:
                raise ValueError(f"arity clash for predicate {n}")
        return Signature(funcs, preds)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("v", self.name)))

    def __hash__(self):
        return self._h  # type: ignore[attr-defined]

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class App:
    func: str
    args: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("a", self.func, self.args)))

    def __hash__(self):
        return self._h  # type: ignore[attr-defined]

    def __str__(self):
        if not self.args:
            return self.func
        return f"{self.func}({', '.join(str(a) for a in self.args)})"


Term = Union[Var, App]


def vt(t: Term) -> frozenset[str]:
    """Variables occurring in a term."""
    match t:
        case Var(name):
            return frozenset({name})
        case App(_, args):
            out: frozenset[str] = frozenset()
            for a in args:
                out |= vt(a)
            return out
    raise TypeError(t)


def vt_many(ts: Iterable[Term]) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    for t in ts:
        out |= vt(t)
    return out


def term_depth(t: Term) -> int:
    match t:
        case Var(_):
            return 0
        case App(_, args):
            return 0 if not args else 1 + max(term_depth(a) for a in args)
    raise TypeError(t)


def subst_term(t: Term, repl: Term, x: str) -> Term:
    match t:
        case Var(name):
            return repl if name == x else t
        case App(f, args):
            return App(f, tuple(subst_term(a, repl, x) for a in args))
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------


class Formula:
    """Base class; all nodes are frozen dataclasses below."""

    __slots__ = ()

    def __str__(self):
        return render(self)


@dataclass(frozen=True)
class Atom(Formula):
    pred: str
    args: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("At", self.pred, self.args)))

    def __hash__(self):
        return self._h  # type: ignore[attr-defined]


@dataclass(frozen=True)
class Bot(Formula):
    def __hash__(self):
        return hash("Bot")


@dataclass(frozen=True)
class Top(Formula):
    def __hash__(self):
        return hash("Top")


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("And", self.left, self.right)))

    def __hash__(self):
        return self._h  # type: ignore[attr-defined]


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("Or", self.left, self.right)))

    def __hash__(self):
        return self._h  # type: ignore[attr-defined]


@dataclass(frozen=True)
class Impl(Formula):
    left: Formula
    right: Formula

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("Impl", self.left, self.right)))

    def __hash__(self):
        return self._h  # type: ignore[attr-defined]


@dataclass(frozen=True)
class Excl(Formula):
    left: Formula
    right: Formula

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("Excl", self.left, self.right)))

    def __hash__(self):
        return self._h  # type: ignore[attr-defined]


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("Ex", self.var, self.body)))

    def __hash__(self):
        return self._h  # type: ignore[attr-defined]


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("Fa", self.var, self.body)))

    def __hash__(self):
        return self._h  # type: ignore[attr-defined]


BOT = Bot()
TOP = Top()

_BINARY = {And: "&", Or: "|", Impl: "->", Excl: "-<"}
_QUANT = {Exists: "exists", Forall: "forall"}


def free_vars(phi: Formula) -> frozenset[str]:
    """The set of variables with a free occurrence in ``phi``."""
    match phi:
        case Atom(_, args):
            return vt_many(args)
        case Bot() | Top():
            return frozenset()
        case And(l, r) | Or(l, r) | Impl(l, r) | Excl(l, r):
            return free_vars(l) | free_vars(r)
        case Exists(x, body) | Forall(x, body):
            return free_vars(body) - {x}
    raise TypeError(phi)


def bound_vars(phi: Formula) -> frozenset[str]:
    match phi:
        case Atom() | Bot() | Top():
            return frozenset()
        case And(l, r) | Or(l, r) | Impl(l, r) | Excl(l, r):
            return bound_vars(l) | bound_vars(r)
        case Exists(x, body) | Forall(x, body):
            return bound_vars(body) | {x}
    raise TypeError(phi)


def complexity(phi: Formula) -> int:
    """Connective count: atoms and constants weigh 0, binders and binary
    connectives weigh 1 plus their parts."""
    match phi:
        case Atom() | Bot() | Top():
            return 0
        case And(l, r) | Or(l, r) | Impl(l, r) | Excl(l, r):
            return complexity(l) + complexity(r) + 1
        case Exists(_, body) | Forall(_, body):
            return complexity(body) + 1
    raise TypeError(phi)


_FRESH_RE = re.compile(r"^(.*?)'\d+$")


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    """Deterministic fresh name: strip any counter suffix from ``base`` and
    append the first unused ``'<n>`` suffix."""
    avoid = set(avoid)
    m = _FRESH_RE.match(base)
    root = m.group(1) if m else base
    if base not in avoid:
        return base
    i = 1
    while f"{root}'{i}" in avoid:
        i += 1
    return f"{root}'{i}"


def subst(phi: Formula, t: Term, x: str) -> Formula:
    """Capture-avoiding substitution of ``t`` for free ``x``.

    Bound variables are renamed (deterministically) only when capture would
    otherwise occur.
    """
    match phi:
        case Atom(p, args):
            return Atom(p, tuple(subst_term(a, t, x) for a in args))
        case Bot() | Top():
            return phi
        case And(l, r):
            return And(subst(l, t, x), subst(r, t, x))
        case Or(l, r):
            return Or(subst(l, t, x), subst(r, t, x))
        case Impl(l, r):
            return Impl(subst(l, t, x), subst(r, t, x))
        case Excl(l, r):
            return Excl(subst(l, t, x), subst(r, t, x))
        case Exists(y, body) | Forall(y, body):
            ctor = Exists if isinstance(phi, Exists) else Forall
            if y == x or x not in free_vars(body):
                return phi
            if y in vt(t):
                y2 = fresh_name(y, vt(t) | free_vars(body) | {x})
                body = subst(body, Var(y2), y)
                return ctor(y2, subst(body, t, x))
            return ctor(y, subst(body, t, x))
    raise TypeError(phi)


def alpha_eq(a: Formula, b: Formula) -> bool:
    return _alpha(a, b, {}, {})


def _alpha(a: Formula, b: Formula, ea: dict, eb: dict) -> bool:
    if type(a) is not type(b):
        return False
    match a:
        case Atom(p, args):
            if p != b.pred or len(args) != len(b.args):
                return False
            return all(_alpha_term(s, t, ea, eb) for s, t in zip(args, b.args))
        case Bot() | Top():
            return True
        case And(l, r) | Or(l, r) | Impl(l, r) | Excl(l, r):
            return _alpha(l, b.left, ea, eb) and _alpha(r, b.right, ea, eb)
        case Exists(x, body) | Forall(x, body):
            mark = len(ea) + len(eb)
            ea2 = {**ea, x: mark}
            eb2 = {**eb, b.var: mark}
            return _alpha(body, b.body, ea2, eb2)
    raise TypeError(a)


def _alpha_term(s: Term, t: Term, ea: dict, eb: dict) -> bool:
    if type(s) is not type(t):
        return False
    if isinstance(s, Var):
        if s.name in ea or t.name in eb:
            return ea.get(s.name) == eb.get(t.name)
        return s.name == t.name
    return s.func == t.func and len(s.args) == len(t.args) and all(
        _alpha_term(a, b, ea, eb) for a, b in zip(s.args, t.args)
    )


def alpha_normal(phi: Formula) -> Formula:
    """Rename bound variables to canonical names ``@1, @2, ...`` in traversal
    order.  Two formulas are alpha-equivalent iff their normal forms are
    equal, which makes the normal form usable as a multiset key."""
    counter = [0]

    def go(f: Formula, env: dict[str, str]) -> Formula:
        match f:
            case Atom(p, args):
                return Atom(p, tuple(_rename_term(a, env) for a in args))
            case Bot() | Top():
                return f
            case And(l, r):
                return And(go(l, env), go(r, env))
            case Or(l, r):
                return Or(go(l, env), go(r, env))
            case Impl(l, r):
                return Impl(go(l, env), go(r, env))
            case Excl(l, r):
                return Excl(go(l, env), go(r, env))
            case Exists(x, body) | Forall(x, body):
                counter[0] += 1
                nx = f"@{counter[0]}"
                ctor = Exists if isinstance(f, Exists) else Forall
                return ctor(nx, go(body, {**env, x: nx}))
        raise TypeError(f)

    return go(phi, {})


def _rename_term(t: Term, env: dict[str, str]) -> Term:
    match t:
        case Var(name):
            return Var(env.get(name, name))
        case App(f, args):
            return App(f, tuple(_rename_term(a, env) for a in args))
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

# Precedence levels, loosest to tightest: -> (0, right assoc), -< (1, left
# assoc), | (2), & (3), primary (4).  Quantifiers are primaries whose body is
# the next primary, so "forall x.(p | q) -> r" has the implication at top.


def render(phi: Formula, prec: int = 0) -> str:
    match phi:
        case Atom(p, args):
            return p if not args else f"{p}({', '.join(str(a) for a in args)})"
        case Bot():
            return "bot"
        case Top():
            return "top"
        case Impl(l, r):
            s = f"{render(l, 1)} -> {render(r, 0)}"
            return f"({s})" if prec > 0 else s
        case Excl(l, r):
            s = f"{render(l, 1)} -< {render(r, 2)}"
            return f"({s})" if prec > 1 else s
        case Or(l, r):
            s = f"{render(l, 3)} | {render(r, 2)}"
            return f"({s})" if prec > 2 else s
        case And(l, r):
            s = f"{render(l, 4)} & {render(r, 3)}"
            return f"({s})" if prec > 3 else s
        case Exists(x, body):
            return f"exists {x}.{render(body, 4)}"
        case Forall(x, body):
            return f"forall {x}.{render(body, 4)}"
    raise TypeError(phi)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_']*)|(?P<arrow>->)|(?P<excl>-<)"
    r"|(?P<amp>&)|(?P<pipe>\|)|(?P<lpar>\()|(?P<rpar>\))|(?P<comma>,)|(?P<dot>\.))"
)

_KEYWORDS = {"bot", "top", "forall", "exists"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m or m.end() == m.start():
            if text[i:].strip() == "":
                break
            raise SyntaxError_(f"unexpected character {text[i:].lstrip()[0]!r}", i)
        kind = m.lastgroup
        val = m.group(kind)
        toks.append((kind, val, m.start(kind)))
        i = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    """Recursive-descent parser.  With ``sig=None`` the parser infers a
    signature from usage: heads in formula position become predicates, applied
    heads in term position become functions, bare names become variables
    unless declared as constants."""

    def __init__(self, text: str, sig: Optional[Signature], constants: Iterable[str] = ()):
        self.toks = _tokenize(text)
        self.i = 0
        self.sig = sig
        self.inferring = sig is None
        self.funcs: dict[str, int] = dict(sig.functions) if sig else {c: 0 for c in constants}
        self.preds: dict[str, int] = dict(sig.predicates) if sig else {}
        self.bound: list[str] = []

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str):
        k, v, p = self.next()
        if k != kind:
            raise SyntaxError_(f"expected {kind}, found {v or 'end of input'!r}", p)
        return v, p

    def parse(self) -> Formula:
        phi = self.impl()
        k, v, p = self.peek()
        if k != "eof":
            raise SyntaxError_(f"unexpected {v!r}", p)
        return phi

    def impl(self) -> Formula:
        left = self.excl()
        if self.peek()[0] == "arrow":
            self.next()
            return Impl(left, self.impl())
        return left

    def excl(self) -> Formula:
        out = self.disj()
        while self.peek()[0] == "excl":
            self.next()
            out = Excl(out, self.disj())
        return out

    def disj(self) -> Formula:
        out = self.conj()
        while self.peek()[0] == "pipe":
            self.next()
            out = Or(out, self.conj())
        return out

    def conj(self) -> Formula:
        out = self.primary()
        while self.peek()[0] == "amp":
            self.next()
            out = And(out, self.primary())
        return out

    def primary(self) -> Formula:
        k, v, p = self.peek()
        if k == "lpar":
            self.next()
            phi = self.impl()
            self.expect("rpar")
            return phi
        if k != "ident":
            raise SyntaxError_(f"expected a formula, found {v or 'end of input'!r}", p)
        if v == "bot":
            self.next()
            return BOT
        if v == "top":
            self.next()
            return TOP
        if v in ("forall", "exists"):
            self.next()
            x, xp = self.expect("ident")
            if x in _KEYWORDS:
                raise SyntaxError_(f"{x!r} cannot be a variable", xp)
            self.expect("dot")
            self.bound.append(x)
            body = self.primary()
            self.bound.pop()
            return Forall(x, body) if v == "forall" else Exists(x, body)
        return self.atom()

    def atom(self) -> Formula:
        name, p = self.expect("ident")
        args: tuple = ()
        if self.peek()[0] == "lpar":
            args = self.termlist()
        ar = len(args)
        if self.inferring:
            if self.preds.setdefault(name, ar) != ar:
                raise SyntaxError_(f"predicate {name} used with arity {ar} and {self.preds[name]}", p)
        else:
            if name not in self.preds:
                raise SyntaxError_(f"unknown predicate {name}", p)
            if self.preds[name] != ar:
                raise SyntaxError_(f"predicate {name} expects {self.preds[name]} arguments, got {ar}", p)
        return Atom(name, args)

    def termlist(self) -> tuple:
        self.expect("lpar")
        args = [self.term()]
        while self.peek()[0] == "comma":
            self.next()
            args.append(self.term())
        self.expect("rpar")
        return tuple(args)

    def term(self) -> Term:
        name, p = self.expect("ident")
        if name in _KEYWORDS:
            raise SyntaxError_(f"{name!r} cannot appear in a term", p)
        if self.peek()[0] == "lpar":
            args = self.termlist()
            ar = len(args)
            if self.inferring:
                if self.funcs.setdefault(name, ar) != ar:
                    raise SyntaxError_(f"function {name} used with arity {ar} and {self.funcs[name]}", p)
            else:
                if name not in self.funcs:
                    raise SyntaxError_(f"unknown function {name}", p)
                if self.funcs[name] != ar:
                    raise SyntaxError_(f"function {name} expects {self.funcs[name]} arguments, got {ar}", p)
            return App(name, args)
        # bare identifier: bound variable, declared constant, or free variable
        if name in self.bound:
            return Var(name)
        if name in self.funcs:
            if self.funcs[name] != 0:
                raise SyntaxError_(f"function {name} expects {self.funcs[name]} arguments, got 0", p)
            return App(name, ())
        return Var(name)


def parse_formula(text: str, sig: Signature) -> Formula:
    """Parse ``text`` against a fixed signature.  Unknown or wrongly applied
    symbols raise :class:`SyntaxError_` with a position."""
    return _Parser(text, sig).parse()


def parse_and_infer(text: str, constants: Iterable[str] = ()) -> tuple[Formula, Signature]:
    """Parse ``text``, inferring the signature from usage."""
    p = _Parser(text, None, constants)
    phi = p.parse()
    return phi, Signature(p.funcs, p.preds)
