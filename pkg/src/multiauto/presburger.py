"""Linear integer arithmetic: terms, formulas, Cooper elimination, periodic sets.

Formulas are immutable trees over integer-valued variables.  The atoms are
``t <= 0``, ``t = 0`` and ``d | t`` for a linear term ``t``; everything else
is built with the boolean connectives and the two quantifiers.  Quantifier
elimination follows Cooper's method (divisibility atoms, no DNF expansion),
preceded by an equality-substitution pass that removes the bulk of the
variables introduced by the formula builders.

One-free-variable formulas over the naturals are lowered to a canonical
:class:`UltimatelyPeriodicSet`.

Every node caches its hash and free-variable set at construction time; the
elimination loop leans on that heavily.
"""

from __future__ import annotations

import math
import os
from functools import reduce
from itertools import count

__all__ = [
    "Term",
    "Formula",
    "TRUE",
    "FALSE",
    "Le",
    "Eq",
    "Dvd",
    "Not",
    "And",
    "Or",
    "Exists",
    "Forall",
    "var",
    "const",
    "le",
    "ge",
    "eq",
    "dvd",
    "lnot",
    "land",
    "lor",
    "exists",
    "forall",
    "free_vars",
    "node_count",
    "substitute",
    "evaluate",
    "eliminate",
    "solution_set",
    "UltimatelyPeriodicSet",
    "ups_member",
    "ups_equal",
    "to_sexpr",
    "UnboundVariable",
    "BudgetExceeded",
]


class UnboundVariable(Exception):
    """A free variable of the formula has no assignment."""


class BudgetExceeded(Exception):
    """Quantifier elimination grew past the configured node budget."""

    def __init__(self, stage: str, size: int, budget: int):
        super().__init__(f"{stage}: formula size {size} exceeds budget {budget}")
        self.stage = stage


DEFAULT_BUDGET = 10**6


def _resolve_budget(budget):
    if budget is not None:
        return budget
    return int(os.environ.get("MULTIAUTO_QE_BUDGET", DEFAULT_BUDGET))

EMPTY = frozenset()


# ---------------------------------------------------------------------------
# Terms


class Term:
    """Linear term ``const + sum(coef * var)``; zero coefficients are dropped."""

    __slots__ = ("const", "coeffs", "_h")

    def __init__(self, const: int = 0, coeffs: tuple = ()):
        self.const = const
        self.coeffs = coeffs
        self._h = hash((const, coeffs))

    @staticmethod
    def make(const: int, coeffs: dict) -> "Term":
        return Term(const, tuple(sorted((v, c) for v, c in coeffs.items() if c != 0)))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        return (
            isinstance(other, Term)
            and self._h == other._h
            and self.const == other.const
            and self.coeffs == other.coeffs
        )

    def coeff(self, v: str) -> int:
        for name, c in self.coeffs:
            if name == v:
                return c
        return 0

    def drop(self, v: str) -> "Term":
        return Term(self.const, tuple(p for p in self.coeffs if p[0] != v))

    def __add__(self, other):
        other = _as_term(other)
        acc = dict(self.coeffs)
        for v, c in other.coeffs:
            acc[v] = acc.get(v, 0) + c
        return Term.make(self.const + other.const, acc)

    def __sub__(self, other):
        return self + _as_term(other) * -1

    def __mul__(self, k: int):
        if k == 0:
            return Term(0)
        if k == 1:
            return self
        return Term(self.const * k, tuple((v, c * k) for v, c in self.coeffs))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def eval(self, asg: dict) -> int:
        total = self.const
        for v, c in self.coeffs:
            if v not in asg:
                raise UnboundVariable(v)
            total += c * asg[v]
        return total

    def subst(self, v: str, t: "Term") -> "Term":
        c = self.coeff(v)
        if c == 0:
            return self
        return self.drop(v) + t * c

    def __str__(self):
        parts = []
        for v, c in self.coeffs:
            parts.append(v if c == 1 else f"(* {c} {v})")
        if self.const != 0 or not parts:
            parts.append(str(self.const))
        if len(parts) == 1:
            return parts[0]
        return "(+ " + " ".join(parts) + ")"

    def __repr__(self):
        return f"Term({self})"


def _as_term(x) -> Term:
    if isinstance(x, Term):
        return x
    if isinstance(x, int):
        return Term(x)
    raise TypeError(f"not a term: {x!r}")


def var(name: str) -> Term:
    return Term(0, ((name, 1),))


def const(k: int) -> Term:
    return Term(k)


# ---------------------------------------------------------------------------
# Formula nodes


class Formula:
    """Base of all formula nodes; hash and free variables cached on creation."""

    __slots__ = ("fv", "_h")

    def __hash__(self):
        return self._h

    def __repr__(self):
        return to_sexpr(self)


class _Top(Formula):
    __slots__ = ()

    def __init__(self):
        self.fv = EMPTY
        self._h = hash("true")

    def __eq__(self, other):
        return other is self

    __hash__ = Formula.__hash__


class _Bot(Formula):
    __slots__ = ()

    def __init__(self):
        self.fv = EMPTY
        self._h = hash("false")

    def __eq__(self, other):
        return other is self

    __hash__ = Formula.__hash__


TRUE = _Top()
FALSE = _Bot()


class Le(Formula):
    """``t <= 0``."""

    __slots__ = ("t",)

    def __init__(self, t: Term):
        self.t = t
        self.fv = frozenset(v for v, _ in t.coeffs)
        self._h = hash(("le", t._h))

    def __eq__(self, other):
        return type(other) is Le and self._h == other._h and self.t == other.t

    __hash__ = Formula.__hash__


class Eq(Formula):
    """``t = 0``."""

    __slots__ = ("t",)

    def __init__(self, t: Term):
        self.t = t
        self.fv = frozenset(v for v, _ in t.coeffs)
        self._h = hash(("eq", t._h))

    def __eq__(self, other):
        return type(other) is Eq and self._h == other._h and self.t == other.t

    __hash__ = Formula.__hash__


class Dvd(Formula):
    """``d | t`` with modulus ``d >= 2``."""

    __slots__ = ("d", "t")

    def __init__(self, d: int, t: Term):
        self.d = d
        self.t = t
        self.fv = frozenset(v for v, _ in t.coeffs)
        self._h = hash(("dvd", d, t._h))

    def __eq__(self, other):
        return (
            type(other) is Dvd
            and self._h == other._h
            and self.d == other.d
            and self.t == other.t
        )

    __hash__ = Formula.__hash__


class Not(Formula):
    __slots__ = ("f",)

    def __init__(self, f: Formula):
        self.f = f
        self.fv = f.fv
        self._h = hash(("not", f._h))

    def __eq__(self, other):
        return type(other) is Not and self._h == other._h and self.f == other.f

    __hash__ = Formula.__hash__


class _Junction(Formula):
    __slots__ = ("args",)
    _tag = ""

    def __init__(self, args: tuple):
        self.args = args
        fv = EMPTY
        for a in args:
            fv = fv | a.fv
        self.fv = fv
        self._h = hash((self._tag, tuple(a._h for a in args)))

    def __eq__(self, other):
        return (
            type(other) is type(self) and self._h == other._h and self.args == other.args
        )

    __hash__ = Formula.__hash__


class And(_Junction):
    __slots__ = ()
    _tag = "and"


class Or(_Junction):
    __slots__ = ()
    _tag = "or"


class _Quant(Formula):
    __slots__ = ("v", "f")
    _tag = ""

    def __init__(self, v: str, f: Formula):
        self.v = v
        self.f = f
        self.fv = f.fv - {v}
        self._h = hash((self._tag, v, f._h))

    def __eq__(self, other):
        return (
            type(other) is type(self)
            and self._h == other._h
            and self.v == other.v
            and self.f == other.f
        )

    __hash__ = Formula.__hash__


class Exists(_Quant):
    __slots__ = ()
    _tag = "exists"


class Forall(_Quant):
    __slots__ = ()
    _tag = "forall"


def free_vars(f: Formula) -> frozenset:
    return f.fv


# ---------------------------------------------------------------------------
# Smart constructors (light normalization, constant folding)


def le(t, rhs=None) -> Formula:
    """``t <= 0``, or ``t <= rhs`` when ``rhs`` is given."""
    t = _as_term(t)
    if rhs is not None:
        t = t - _as_term(rhs)
    if not t.coeffs:
        return TRUE if t.const <= 0 else FALSE
    g = reduce(math.gcd, (abs(c) for _, c in t.coeffs))
    if g > 1:
        # g*s + c <= 0  <=>  s <= floor(-c/g)
        t = Term(-((-t.const) // g), tuple((v, c // g) for v, c in t.coeffs))
    return Le(t)


def ge(t, rhs=0) -> Formula:
    return le(_as_term(rhs) - _as_term(t))


def eq(t, rhs=None) -> Formula:
    t = _as_term(t)
    if rhs is not None:
        t = t - _as_term(rhs)
    if not t.coeffs:
        return TRUE if t.const == 0 else FALSE
    g = reduce(math.gcd, (abs(c) for _, c in t.coeffs))
    if t.const % g != 0:
        return FALSE
    if g > 1:
        t = Term(t.const // g, tuple((v, c // g) for v, c in t.coeffs))
    if t.coeffs[0][1] < 0:
        t = -t
    return Eq(t)


def dvd(d: int, t) -> Formula:
    t = _as_term(t)
    d = abs(d)
    if d == 0:
        return eq(t)
    t = Term.make(t.const % d, {v: c % d for v, c in t.coeffs})
    if not t.coeffs:
        return TRUE if t.const % d == 0 else FALSE
    g = reduce(math.gcd, [d, t.const] + [c for _, c in t.coeffs])
    if g > 1:
        d //= g
        t = Term(t.const // g, tuple((v, c // g) for v, c in t.coeffs))
    if d == 1:
        return TRUE
    return Dvd(d, t)


def lnot(f: Formula) -> Formula:
    if f is TRUE:
        return FALSE
    if f is FALSE:
        return TRUE
    if isinstance(f, Not):
        return f.f
    return Not(f)


def _flatten(fs, absorb, dual, node_type):
    args = []
    seen = set()
    stack = list(fs)
    stack.reverse()
    while stack:
        f = stack.pop()
        if isinstance(f, (list, tuple)):
            stack.extend(reversed(f))
            continue
        if f is absorb:
            continue
        if f is dual:
            return dual, None
        if type(f) is node_type:
            stack.extend(reversed(f.args))
            continue
        if f not in seen:
            seen.add(f)
            args.append(f)
    return None, args


def _subsume_bounds(args, keep_max):
    """Keep only the strongest (And) or weakest (Or) bound per direction."""
    best: dict = {}
    for a in args:
        if isinstance(a, Le):
            k = a.t.coeffs
            if k not in best or (
                (a.t.const > best[k]) if keep_max else (a.t.const < best[k])
            ):
                best[k] = a.t.const
    if len(best) == sum(1 for a in args if isinstance(a, Le)):
        return args
    out, done = [], set()
    for a in args:
        if isinstance(a, Le):
            k = a.t.coeffs
            if k in done:
                continue
            done.add(k)
            out.append(Le(Term(best[k], k)))
        else:
            out.append(a)
    return out


def land(*fs) -> Formula:
    bail, args = _flatten(fs, TRUE, FALSE, And)
    if bail is not None:
        return bail
    args = _subsume_bounds(args, keep_max=True)
    if not args:
        return TRUE
    if len(args) == 1:
        return args[0]
    return And(tuple(args))


def lor(*fs) -> Formula:
    bail, args = _flatten(fs, FALSE, TRUE, Or)
    if bail is not None:
        return bail
    args = _subsume_bounds(args, keep_max=False)
    if not args:
        return FALSE
    if len(args) == 1:
        return args[0]
    return Or(tuple(args))


def exists(v, f: Formula) -> Formula:
    if isinstance(v, (list, tuple)):
        for name in reversed(v):
            f = exists(name, f)
        return f
    if v not in f.fv:
        return f
    return Exists(v, f)


def forall(v, f: Formula) -> Formula:
    if isinstance(v, (list, tuple)):
        for name in reversed(v):
            f = forall(name, f)
        return f
    if v not in f.fv:
        return f
    return Forall(v, f)


def node_count(f: Formula) -> int:
    if isinstance(f, Not):
        return 1 + node_count(f.f)
    if isinstance(f, _Junction):
        return 1 + sum(node_count(a) for a in f.args)
    if isinstance(f, _Quant):
        return 1 + node_count(f.f)
    return 1


def substitute(f: Formula, v: str, t: Term) -> Formula:
    """Replace free occurrences of variable ``v`` by term ``t``."""
    if v not in f.fv:
        return f
    if isinstance(f, Le):
        return le(f.t.subst(v, t))
    if isinstance(f, Eq):
        return eq(f.t.subst(v, t))
    if isinstance(f, Dvd):
        return dvd(f.d, f.t.subst(v, t))
    if isinstance(f, Not):
        return lnot(substitute(f.f, v, t))
    if isinstance(f, And):
        return land(*[substitute(a, v, t) for a in f.args])
    if isinstance(f, Or):
        return lor(*[substitute(a, v, t) for a in f.args])
    if isinstance(f, Exists):
        if f.v == v:
            return f
        return exists(f.v, substitute(f.f, v, t))
    if isinstance(f, Forall):
        if f.v == v:
            return f
        return forall(f.v, substitute(f.f, v, t))
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Evaluation (bounded quantifiers: the differential-testing oracle)


def evaluate(f: Formula, asg: dict, domain_bound: int = 64) -> bool:
    """Truth value of ``f``; quantifiers range over the naturals [0, domain_bound].

    Exact whenever ``f`` is quantifier-free, or when every quantified
    variable is explicitly bounded by at most ``domain_bound``.
    """
    if f is TRUE:
        return True
    if f is FALSE:
        return False
    if isinstance(f, Le):
        return f.t.eval(asg) <= 0
    if isinstance(f, Eq):
        return f.t.eval(asg) == 0
    if isinstance(f, Dvd):
        return f.t.eval(asg) % f.d == 0
    if isinstance(f, Not):
        return not evaluate(f.f, asg, domain_bound)
    if isinstance(f, And):
        return all(evaluate(a, asg, domain_bound) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, asg, domain_bound) for a in f.args)
    if isinstance(f, Exists):
        inner = dict(asg)
        for x in range(0, domain_bound + 1):
            inner[f.v] = x
            if evaluate(f.f, inner, domain_bound):
                return True
        return False
    if isinstance(f, Forall):
        inner = dict(asg)
        for x in range(0, domain_bound + 1):
            inner[f.v] = x
            if not evaluate(f.f, inner, domain_bound):
                return False
        return True
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Quantifier elimination


def _nnf(f: Formula, neg: bool) -> Formula:
    if f is TRUE:
        return FALSE if neg else TRUE
    if f is FALSE:
        return TRUE if neg else FALSE
    if isinstance(f, Le):
        # not(t <= 0)  <=>  -t + 1 <= 0
        return le(-f.t + Term(1)) if neg else f
    if isinstance(f, Eq):
        if neg:
            return lor(le(f.t + Term(1)), le(-f.t + Term(1)))
        return f
    if isinstance(f, Dvd):
        return Not(f) if neg else f
    if isinstance(f, Not):
        return _nnf(f.f, not neg)
    if isinstance(f, And):
        parts = [_nnf(a, neg) for a in f.args]
        return lor(*parts) if neg else land(*parts)
    if isinstance(f, Or):
        parts = [_nnf(a, neg) for a in f.args]
        return land(*parts) if neg else lor(*parts)
    raise ValueError("nnf expects a quantifier-free formula")


def _lcm(a: int, b: int) -> int:
    return abs(a * b) // math.gcd(a, b)


def _eq_conjunct(f: Formula, v: str):
    conj = f.args if isinstance(f, And) else (f,)
    for a in conj:
        if isinstance(a, Eq) and a.t.coeff(v) != 0:
            return a
    return None


def _subst_eq(f: Formula, v: str, a: int, rest: Term) -> Formula:
    """Eliminate ``exists v`` given a conjunct ``a*v = rest`` with ``a > 0``."""

    def go(g: Formula) -> Formula:
        if v not in g.fv:
            return g
        b = None
        if isinstance(g, (Le, Eq, Dvd)):
            b = g.t.coeff(v)
            scaled = g.t.drop(v) * a + rest * b
        if isinstance(g, Le):
            return le(scaled)
        if isinstance(g, Eq):
            return eq(scaled)
        if isinstance(g, Dvd):
            return dvd(g.d * a, scaled)
        if isinstance(g, Not):
            return lnot(go(g.f))
        if isinstance(g, And):
            return land(*[go(x) for x in g.args])
        if isinstance(g, Or):
            return lor(*[go(x) for x in g.args])
        raise TypeError(f"unexpected node under substitution: {g!r}")

    return land(dvd(a, rest), go(f))


def _map_atoms(f: Formula, fn):
    if isinstance(f, (Le, Eq, Dvd)):
        return fn(f)
    if isinstance(f, Not):
        return lnot(_map_atoms(f.f, fn))
    if isinstance(f, And):
        return land(*[_map_atoms(a, fn) for a in f.args])
    if isinstance(f, Or):
        return lor(*[_map_atoms(a, fn) for a in f.args])
    return f


def _atoms_on(f: Formula, v: str, out: list) -> None:
    if v not in f.fv:
        return
    if isinstance(f, (Le, Eq, Dvd)):
        out.append(f)
    elif isinstance(f, Not):
        _atoms_on(f.f, v, out)
    elif isinstance(f, _Junction):
        for a in f.args:
            _atoms_on(a, v, out)


_fresh = count()


def _fresh_var(tag: str) -> str:
    return f"_{tag}{next(_fresh)}"


def _cooper_one(v: str, f: Formula, budget: int) -> Formula:
    """Eliminate ``exists v`` from quantifier-free NNF ``f`` (Cooper's method)."""

    def lower_eq(a):
        if isinstance(a, Eq) and a.t.coeff(v) != 0:
            return land(Le(a.t), Le(-a.t))
        return a

    f = _map_atoms(f, lower_eq)
    if v not in f.fv:
        return f
    atoms: list = []
    _atoms_on(f, v, atoms)
    m = 1
    for a in atoms:
        c = a.t.coeff(v)
        if c != 0:
            m = _lcm(m, c)

    u = _fresh_var("c")
    uvar = var(u)

    def unit(a):
        c = a.t.coeff(v)
        if c == 0:
            return a
        k = m // abs(c)
        t = a.t.drop(v) * k + uvar * (1 if c > 0 else -1)
        if isinstance(a, Le):
            return Le(t)
        if isinstance(a, Eq):
            return Eq(t)
        return Dvd(a.d * k, t)

    body = land(_map_atoms(f, unit), dvd(m, uvar))
    if not isinstance(body, Formula):  # pragma: no cover
        raise AssertionError
    lowers: list[Term] = []
    uppers: list[Term] = []
    delta = 1
    atoms = []
    _atoms_on(body, u, atoms)
    for a in atoms:
        if isinstance(a, Le):
            c = a.t.coeff(u)
            if c > 0:
                uppers.append(-(a.t.drop(u)))  # u <= bound
            else:
                lowers.append(a.t.drop(u))  # u >= bound
        elif isinstance(a, Dvd):
            delta = _lcm(delta, a.d)

    disjuncts: list[Formula] = []
    size = 0
    # bounds are non-strict (b <= u), so witnesses are b + j for j in [0, delta)
    if len(lowers) <= len(uppers):
        base = _minus_inf(body, u)
        for j in range(delta):
            for g in [substitute(base, u, Term(j))] + [
                substitute(body, u, b + Term(j)) for b in lowers
            ]:
                if g is not FALSE:
                    disjuncts.append(g)
                    size += node_count(g)
            if size > budget:
                raise BudgetExceeded("cooper", size, budget)
    else:
        base = _plus_inf(body, u)
        for j in range(delta):
            for g in [substitute(base, u, Term(-j))] + [
                substitute(body, u, b - Term(j)) for b in uppers
            ]:
                if g is not FALSE:
                    disjuncts.append(g)
                    size += node_count(g)
            if size > budget:
                raise BudgetExceeded("cooper", size, budget)
    return lor(*disjuncts)


def _minus_inf(f: Formula, v: str) -> Formula:
    if v not in f.fv:
        return f
    if isinstance(f, Le):
        return TRUE if f.t.coeff(v) > 0 else FALSE
    if isinstance(f, Eq):
        return FALSE
    if isinstance(f, (Dvd, Not)):
        return f
    if isinstance(f, And):
        return land(*[_minus_inf(a, v) for a in f.args])
    if isinstance(f, Or):
        return lor(*[_minus_inf(a, v) for a in f.args])
    raise TypeError(f"unexpected node: {f!r}")


def _plus_inf(f: Formula, v: str) -> Formula:
    if v not in f.fv:
        return f
    if isinstance(f, Le):
        return FALSE if f.t.coeff(v) > 0 else TRUE
    if isinstance(f, Eq):
        return FALSE
    if isinstance(f, (Dvd, Not)):
        return f
    if isinstance(f, And):
        return land(*[_plus_inf(a, v) for a in f.args])
    if isinstance(f, Or):
        return lor(*[_plus_inf(a, v) for a in f.args])
    raise TypeError(f"unexpected node: {f!r}")


def _neg_key(k):
    return tuple((v, -c) for v, c in k)


def _ctx_add(ctx, k, c):
    """Record k.x + c <= 0; returns False on contradiction with the context."""
    prev = ctx.get(k)
    if prev is None or c > prev:
        ctx[k] = c
    opp = ctx.get(_neg_key(k))
    return not (opp is not None and ctx[k] + opp > 0)


def _ctx_test_le(ctx, k, c):
    """TRUE if implied, FALSE if contradicted, None otherwise."""
    prev = ctx.get(k)
    if prev is not None and c <= prev:
        return True
    opp = ctx.get(_neg_key(k))
    if opp is not None and c + opp > 0:
        return False
    return None


def simplify(f: Formula, _ctx=None) -> Formula:
    """Prune atoms implied or contradicted by their conjunctive context.

    Only bounds with identical coefficient vectors interact, which is cheap
    and catches the bulk of the redundancy produced by elimination.
    """
    ctx = {} if _ctx is None else _ctx
    if isinstance(f, Le):
        r = _ctx_test_le(ctx, f.t.coeffs, f.t.const)
        return f if r is None else (TRUE if r else FALSE)
    if isinstance(f, Eq):
        k, c = f.t.coeffs, f.t.const
        a = _ctx_test_le(ctx, k, c)
        b = _ctx_test_le(ctx, _neg_key(k), -c)
        if a is False or b is False:
            return FALSE
        if a is True and b is True:
            return TRUE
        return f
    if isinstance(f, And):
        local = dict(ctx)
        args = []
        changed = False
        for a in f.args:
            if isinstance(a, (Le, Eq)):
                g = simplify(a, local)
                if g is FALSE:
                    return FALSE
                if g is TRUE:
                    changed = True
                    continue
                ok = True
                if isinstance(g, Le):
                    ok = _ctx_add(local, g.t.coeffs, g.t.const)
                else:
                    ok = _ctx_add(local, g.t.coeffs, g.t.const) and _ctx_add(
                        local, _neg_key(g.t.coeffs), -g.t.const
                    )
                if not ok:
                    return FALSE
                args.append(g)
                changed = changed or g is not a
            else:
                args.append(a)
        out = []
        for a in args:
            if isinstance(a, (Le, Eq)):
                out.append(a)
                continue
            g = simplify(a, local)
            if g is FALSE:
                return FALSE
            changed = changed or g is not a
            if g is not TRUE:
                out.append(g)
        return land(*out) if changed else f
    if isinstance(f, Or):
        args = []
        changed = False
        for a in f.args:
            g = simplify(a, ctx)
            if g is TRUE:
                return TRUE
            changed = changed or g is not a
            if g is not FALSE:
                args.append(g)
        return lor(*args) if changed else f
    if isinstance(f, Not):
        g = simplify(f.f, ctx)
        return lnot(g) if g is not f.f else f
    if isinstance(f, _Quant):
        sub = {k: c for k, c in ctx.items() if all(v != f.v for v, _ in k)}
        g = simplify(f.f, sub)
        if g is f.f:
            return f
        return (exists if isinstance(f, Exists) else forall)(f.v, g)
    return f


def _elim_exists(v: str, f: Formula, budget: int) -> Formula:
    f = _nnf(f, False)
    if v not in f.fv:
        return f
    if isinstance(f, Or):
        return lor(*[_elim_exists(v, a, budget) for a in f.args])
    if isinstance(f, And):
        inside = [a for a in f.args if v in a.fv]
        outside = [a for a in f.args if v not in a.fv]
        if outside:
            return land(land(*outside), _elim_exists(v, land(*inside), budget))
        if _eq_conjunct(f, v) is None:
            # No pinning equality: distribute over the smallest disjunctive
            # conjunct mentioning v, so elimination works branch by branch
            # instead of handing Cooper one huge conjunction.
            ors = [a for a in f.args if isinstance(a, Or) and v in a.fv]
            if ors:
                pick = min(ors, key=lambda a: len(a.args))
                rest = [a for a in f.args if a is not pick]
                parts = []
                for arm in pick.args:
                    g = simplify(land(arm, *rest))
                    parts.append(_elim_exists(v, g, budget))
                out = simplify(lor(*parts))
                n = node_count(out)
                if n > budget:
                    raise BudgetExceeded("eliminate", n, budget)
                return out
    eqa = _eq_conjunct(f, v)
    if eqa is not None:
        a = eqa.t.coeff(v)
        rest = -(eqa.t.drop(v))
        if a < 0:
            a, rest = -a, -rest
        others = (
            land(*[x for x in f.args if x is not eqa]) if isinstance(f, And) else TRUE
        )
        return _subst_eq(others, v, a, rest)
    return _cooper_one(v, f, budget)


def eliminate(f: Formula, budget: int = None) -> Formula:
    """Equivalent quantifier-free formula (Cooper elimination, bottom-up).

    ``budget`` caps intermediate formula size in AST nodes; when omitted it
    comes from the MULTIAUTO_QE_BUDGET environment variable (default 10**6).
    """
    budget = _resolve_budget(budget)
    if isinstance(f, Not):
        return lnot(eliminate(f.f, budget))
    if isinstance(f, And):
        return land(*[eliminate(a, budget) for a in f.args])
    if isinstance(f, Or):
        return lor(*[eliminate(a, budget) for a in f.args])
    if isinstance(f, Exists):
        # Quantifiers range over the naturals: relativize with v >= 0 so the
        # (integer) Cooper core and the equality-pinning shortcut agree with
        # bounded evaluation.
        body = land(simplify(eliminate(f.f, budget)), ge(var(f.v), 0))
        out = simplify(_elim_exists(f.v, body, budget))
    elif isinstance(f, Forall):
        inner = eliminate(f.f, budget)
        body = land(_nnf(simplify(inner), True), ge(var(f.v), 0))
        out = simplify(lnot(_elim_exists(f.v, body, budget)))
    else:
        return f
    n = node_count(out)
    if n > budget:
        raise BudgetExceeded("eliminate", n, budget)
    return out


# ---------------------------------------------------------------------------
# Ultimately periodic sets


class UltimatelyPeriodicSet:
    """Canonical normal form of a Presburger-definable subset of the naturals.

    Membership of ``n < threshold`` is read off ``low``; for ``n >= threshold``
    it is ``n % period in residues``.  Construct through :meth:`from_bits` (or
    call :meth:`canonical`) to get the minimal period and threshold.
    """

    __slots__ = ("threshold", "period", "low", "residues")

    def __init__(self, threshold: int, period: int, low, residues):
        if period < 1:
            raise ValueError("period must be >= 1")
        if threshold < 0:
            raise ValueError("threshold must be >= 0")
        self.threshold = threshold
        self.period = period
        self.low = tuple(bool(b) for b in low)
        self.residues = frozenset(residues)
        if len(self.low) != threshold:
            raise ValueError("low bits must cover exactly [0, threshold)")
        if any(r < 0 or r >= period for r in self.residues):
            raise ValueError("residues must lie in [0, period)")

    @staticmethod
    def from_bits(bits, threshold: int, period: int) -> "UltimatelyPeriodicSet":
        """Build from membership bits valid on ``[0, threshold + period)``."""
        bits = [bool(b) for b in bits]
        if len(bits) < threshold + period:
            raise ValueError("need bits up to threshold + period")
        residues = frozenset(
            (threshold + i) % period for i in range(period) if bits[threshold + i]
        )
        return UltimatelyPeriodicSet(
            threshold, period, bits[:threshold], residues
        ).canonical()

    def canonical(self) -> "UltimatelyPeriodicSet":
        p = self.period
        residues = self.residues
        for q in range(1, p + 1):
            if p % q != 0:
                continue
            classes = {r % q for r in residues}
            if all((r in residues) == (r % q in classes) for r in range(p)):
                p, residues = q, frozenset(classes)
                break
        low = list(self.low)
        t = len(low)
        while t > 0 and low[t - 1] == ((t - 1) % p in residues):
            t -= 1
        return UltimatelyPeriodicSet(t, p, low[:t], residues)

    def member(self, n: int) -> bool:
        if n < 0:
            raise ValueError("naturals only")
        if n < self.threshold:
            return self.low[n]
        return n % self.period in self.residues

    def __eq__(self, other):
        return (
            isinstance(other, UltimatelyPeriodicSet)
            and self.threshold == other.threshold
            and self.period == other.period
            and self.low == other.low
            and self.residues == other.residues
        )

    def __hash__(self):
        return hash((self.threshold, self.period, self.low, self.residues))

    def __str__(self):
        bits = "".join("1" if b else "0" for b in self.low)
        res = ",".join(str(r) for r in sorted(self.residues))
        return f"t={self.threshold} p={self.period} low={bits} residues={{{res}}}"

    __repr__ = __str__


def ups_member(u: UltimatelyPeriodicSet, n: int) -> bool:
    return u.member(n)


def ups_equal(a: UltimatelyPeriodicSet, b: UltimatelyPeriodicSet) -> bool:
    return a.canonical() == b.canonical()


def solution_set(
    f: Formula, free_var: str, budget: int = None
) -> UltimatelyPeriodicSet:
    """Solutions in the naturals of a one-free-variable formula, canonicalized."""
    if not f.fv <= {free_var}:
        raise ValueError(f"unexpected free variables: {sorted(f.fv - {free_var})}")
    g = eliminate(land(f, ge(var(free_var), 0)), budget)
    threshold = 0
    period = 1
    atoms: list = []
    _atoms_on(g, free_var, atoms)
    for a in atoms:
        if isinstance(a, (Le, Eq)):
            c = a.t.coeff(free_var)
            threshold = max(threshold, abs(a.t.const) // abs(c) + 1)
        elif isinstance(a, Dvd):
            period = _lcm(period, a.d)
    bits = [evaluate(g, {free_var: n}) for n in range(threshold + period)]
    return UltimatelyPeriodicSet.from_bits(bits, threshold, period)


# ---------------------------------------------------------------------------
# Printing


def to_sexpr(f: Formula) -> str:
    """Deterministic s-expression rendering, used by golden tests and the CLI."""
    if f is TRUE:
        return "true"
    if f is FALSE:
        return "false"
    if isinstance(f, Le):
        return f"(<= {f.t} 0)"
    if isinstance(f, Eq):
        return f"(= {f.t} 0)"
    if isinstance(f, Dvd):
        return f"(divides {f.d} {f.t})"
    if isinstance(f, Not):
        return f"(not {to_sexpr(f.f)})"
    if isinstance(f, And):
        return "(and " + " ".join(to_sexpr(a) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(to_sexpr(a) for a in f.args) + ")"
    if isinstance(f, Exists):
        return f"(exists {f.v} {to_sexpr(f.f)})"
    if isinstance(f, Forall):
        return f"(forall {f.v} {to_sexpr(f.f)})"
    raise TypeError(f"not a formula: {f!r}")


def vector_eval(f: Formula, env: dict):
    """Evaluate a quantifier-free formula over numpy arrays.

    ``env`` maps every free variable to an integer numpy array; the arrays
    must be mutually broadcastable (lay a grid out as outer-product axes,
    e.g. shapes ``(n,1,1)``, ``(1,m,1)``, ``(1,1,k)``).  Returns a boolean
    array of the broadcast shape.  Atoms accumulate per-shape partial sums
    and finish with one broadcast comparison, so the full integer grid is
    never materialized -- this is what makes exhaustive grid checks cheap.
    """
    import numpy as np

    cache: dict = {}

    def term_parts(t: Term):
        buckets: dict = {}
        for v, c in t.coeffs:
            arr = np.asarray(env[v])
            key = arr.shape
            buckets[key] = buckets.get(key, 0) + c * arr
        return sorted(buckets.values(), key=lambda a: a.size)

    def compare(t: Term, op):
        parts = term_parts(t)
        if not parts:
            return np.bool_(op(t.const, 0))
        left = parts[-1]
        rhs = -t.const
        for p in parts[:-1]:
            rhs = rhs - p
        return op(left, rhs)

    def go(g: Formula):
        out = cache.get(g)
        if out is not None:
            return out
        if g is TRUE:
            out = np.bool_(True)
        elif g is FALSE:
            out = np.bool_(False)
        elif isinstance(g, Le):
            out = compare(g.t, np.less_equal)
        elif isinstance(g, Eq):
            out = compare(g.t, np.equal)
        elif isinstance(g, Dvd):
            parts = term_parts(g.t)
            total = g.t.const
            for p in parts:
                total = total + p
            out = np.equal(np.mod(total, g.d), 0)
        elif isinstance(g, Not):
            out = np.logical_not(go(g.f))
        elif isinstance(g, And):
            out = go(g.args[0])
            for a in g.args[1:]:
                out = np.logical_and(out, go(a))
        elif isinstance(g, Or):
            out = go(g.args[0])
            for a in g.args[1:]:
                out = np.logical_or(out, go(a))
        else:
            raise ValueError(f"vector_eval needs a quantifier-free formula, got {g!r}")
        cache[g] = out
        return out

    shape = np.broadcast_shapes(*(np.shape(a) for a in env.values()))
    return np.broadcast_to(go(f), shape)
