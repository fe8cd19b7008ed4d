"""Predicate evaluation and logical utilities.

Values are Python ints and bools plus tuples: a bag is a sorted int tuple,
a tuple value an int tuple compared lexicographically.  Evaluation is
total over well-kinded expressions; domain bounds are enforced only at
assignments, by the executor.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .syntax import (BagDomain, BagLit, Binary, BoolDomain, Call, Expr,
                     IntDomain, Lit, PostInd, TupleDomain, TupleLit, Unary,
                     Var, expr_vars, pp_expr)


class KindError(Exception):
    pass


class EvalError(Exception):
    pass


def kind_of_domain(d) -> object:
    if isinstance(d, IntDomain):
        return 'int'
    if isinstance(d, BoolDomain):
        return 'bool'
    if isinstance(d, BagDomain):
        return 'bag'
    if isinstance(d, TupleDomain):
        return ('tuple', len(d.parts))
    raise TypeError(d)


_CMP = ('=', '!=', '<', '<=', '>', '>=')
_ORD = ('<', '<=', '>', '>=')
_BOOLOP = ('and', 'or', '=>', '<=>')


def kind_check(e: Expr, kinds: dict, resolve_ref: Optional[Callable] = None):
    """Returns the kind of e ('int', 'bool', 'bag' or ('tuple', n))."""
    if isinstance(e, Lit):
        return 'bool' if isinstance(e.value, bool) else 'int'
    if isinstance(e, Var):
        k = kinds.get(e.name)
        if k is None:
            raise KindError(f'unknown variable {e.name!r}')
        return k
    if isinstance(e, Unary):
        k = kind_check(e.arg, kinds, resolve_ref)
        want = 'bool' if e.op == 'not' else 'int'
        if k != want:
            raise KindError(f'{e.op} applied to {k}')
        return want
    if isinstance(e, Binary):
        kl = kind_check(e.left, kinds, resolve_ref)
        kr = kind_check(e.right, kinds, resolve_ref)
        if e.op in ('+', '-', '*'):
            if kl != 'int' or kr != 'int':
                raise KindError(f'{e.op} needs int operands, got {kl}, {kr}')
            return 'int'
        if e.op in ('++', '--'):
            if kl != 'bag' or kr != 'bag':
                raise KindError(f'{e.op} needs bag operands, got {kl}, {kr}')
            return 'bag'
        if e.op in _CMP:
            if kl != kr:
                raise KindError(f'{e.op} compares {kl} with {kr}')
            if e.op in _ORD and kl not in ('int',) and not (
                    isinstance(kl, tuple) and kl[0] == 'tuple'):
                raise KindError(f'{e.op} not defined on {kl}')
            return 'bool'
        if e.op in _BOOLOP:
            if kl != 'bool' or kr != 'bool':
                raise KindError(f'{e.op} needs bool operands, got {kl}, {kr}')
            return 'bool'
        raise KindError(f'unknown operator {e.op!r}')
    if isinstance(e, Call):
        ks = [kind_check(a, kinds, resolve_ref) for a in e.args]
        if e.func in ('size', 'sum'):
            if len(ks) != 1 or ks[0] != 'bag':
                raise KindError(f'{e.func} takes one bag')
            return 'int'
        if e.func == 'bit':
            if len(ks) != 1 or ks[0] != 'bool':
                raise KindError('bit takes one bool')
            return 'int'
        if e.func in ('min', 'max'):
            if len(ks) < 2 or any(k != 'int' for k in ks):
                raise KindError(f'{e.func} takes two or more ints')
            return 'int'
        raise KindError(f'unknown function {e.func!r}')
    if isinstance(e, BagLit):
        for a in e.items:
            if kind_check(a, kinds, resolve_ref) != 'int':
                raise KindError('bag elements must be ints')
        return 'bag'
    if isinstance(e, TupleLit):
        for a in e.items:
            if kind_check(a, kinds, resolve_ref) != 'int':
                raise KindError('tuple entries must be ints')
        return ('tuple', len(e.items))
    if isinstance(e, PostInd):
        if resolve_ref is not None:
            resolve_ref(e.ref)
        return 'bool'
    raise TypeError(e)


# --------------------------------------------------------------------------
# direct interpretation

def _bag_diff(a: tuple, b: tuple) -> tuple:
    out = list(a)
    for x in b:
        if x in out:
            out.remove(x)
    return tuple(sorted(out))


def eval_pred(e: Expr, valuation: dict, env: Optional[dict] = None,
              done: Optional[Callable[[str], bool]] = None):
    env = env or {}
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        if e.name in valuation:
            return valuation[e.name]
        if e.name in env:
            return env[e.name]
        raise EvalError(f'unbound variable {e.name!r}')
    if isinstance(e, Unary):
        v = eval_pred(e.arg, valuation, env, done)
        return (not v) if e.op == 'not' else -v
    if isinstance(e, Binary):
        op = e.op
        if op == 'and':
            return bool(eval_pred(e.left, valuation, env, done)) and \
                bool(eval_pred(e.right, valuation, env, done))
        if op == 'or':
            return bool(eval_pred(e.left, valuation, env, done)) or \
                bool(eval_pred(e.right, valuation, env, done))
        if op == '=>':
            return (not eval_pred(e.left, valuation, env, done)) or \
                bool(eval_pred(e.right, valuation, env, done))
        if op == '<=>':
            return bool(eval_pred(e.left, valuation, env, done)) == \
                bool(eval_pred(e.right, valuation, env, done))
        l = eval_pred(e.left, valuation, env, done)
        r = eval_pred(e.right, valuation, env, done)
        if op == '+':
            return l + r
        if op == '-':
            return l - r
        if op == '*':
            return l * r
        if op == '++':
            return tuple(sorted(l + r))
        if op == '--':
            return _bag_diff(l, r)
        if op == '=':
            return l == r
        if op == '!=':
            return l != r
        if op == '<':
            return l < r
        if op == '<=':
            return l <= r
        if op == '>':
            return l > r
        if op == '>=':
            return l >= r
        raise EvalError(f'unknown operator {op!r}')
    if isinstance(e, Call):
        args = [eval_pred(a, valuation, env, done) for a in e.args]
        if e.func == 'size':
            return len(args[0])
        if e.func == 'sum':
            return sum(args[0])
        if e.func == 'bit':
            return 1 if args[0] else 0
        if e.func == 'min':
            return min(args)
        if e.func == 'max':
            return max(args)
        raise EvalError(f'unknown function {e.func!r}')
    if isinstance(e, BagLit):
        return tuple(sorted(eval_pred(a, valuation, env, done) for a in e.items))
    if isinstance(e, TupleLit):
        return tuple(eval_pred(a, valuation, env, done) for a in e.items)
    if isinstance(e, PostInd):
        if done is None:
            raise EvalError('post() needs control information')
        return done(e.ref)
    raise TypeError(e)


# --------------------------------------------------------------------------
# compilation to closures over (row, env, doneflags)

@dataclass
class Compiled:
    fn: Callable
    post_refs: list

    def __call__(self, row, env=None, dflags=()):
        return self.fn(row, env or {}, dflags)


def compile_expr(e: Expr, var_index: dict) -> Compiled:
    post_slots: dict[str, int] = {}

    def comp(e: Expr):
        if isinstance(e, Lit):
            v = e.value
            return lambda row, env, d: v
        if isinstance(e, Var):
            i = var_index.get(e.name)
            if i is not None:
                return lambda row, env, d: row[i]
            nm = e.name
            return lambda row, env, d: env[nm]
        if isinstance(e, Unary):
            a = comp(e.arg)
            if e.op == 'not':
                return lambda row, env, d: not a(row, env, d)
            return lambda row, env, d: -a(row, env, d)
        if isinstance(e, Binary):
            l, r = comp(e.left), comp(e.right)
            op = e.op
            if op == 'and':
                return lambda row, env, d: bool(l(row, env, d)) and bool(r(row, env, d))
            if op == 'or':
                return lambda row, env, d: bool(l(row, env, d)) or bool(r(row, env, d))
            if op == '=>':
                return lambda row, env, d: (not l(row, env, d)) or bool(r(row, env, d))
            if op == '<=>':
                return lambda row, env, d: bool(l(row, env, d)) == bool(r(row, env, d))
            if op == '+':
                return lambda row, env, d: l(row, env, d) + r(row, env, d)
            if op == '-':
                return lambda row, env, d: l(row, env, d) - r(row, env, d)
            if op == '*':
                return lambda row, env, d: l(row, env, d) * r(row, env, d)
            if op == '++':
                return lambda row, env, d: tuple(sorted(l(row, env, d) + r(row, env, d)))
            if op == '--':
                return lambda row, env, d: _bag_diff(l(row, env, d), r(row, env, d))
            if op == '=':
                return lambda row, env, d: l(row, env, d) == r(row, env, d)
            if op == '!=':
                return lambda row, env, d: l(row, env, d) != r(row, env, d)
            if op == '<':
                return lambda row, env, d: l(row, env, d) < r(row, env, d)
            if op == '<=':
                return lambda row, env, d: l(row, env, d) <= r(row, env, d)
            if op == '>':
                return lambda row, env, d: l(row, env, d) > r(row, env, d)
            if op == '>=':
                return lambda row, env, d: l(row, env, d) >= r(row, env, d)
            raise EvalError(op)
        if isinstance(e, Call):
            args = [comp(a) for a in e.args]
            f = e.func
            if f == 'size':
                a0 = args[0]
                return lambda row, env, d: len(a0(row, env, d))
            if f == 'sum':
                a0 = args[0]
                return lambda row, env, d: sum(a0(row, env, d))
            if f == 'bit':
                a0 = args[0]
                return lambda row, env, d: 1 if a0(row, env, d) else 0
            if f == 'min':
                return lambda row, env, d: min(a(row, env, d) for a in args)
            if f == 'max':
                return lambda row, env, d: max(a(row, env, d) for a in args)
            raise EvalError(f)
        if isinstance(e, BagLit):
            items = [comp(a) for a in e.items]
            return lambda row, env, d: tuple(sorted(a(row, env, d) for a in items))
        if isinstance(e, TupleLit):
            items = [comp(a) for a in e.items]
            return lambda row, env, d: tuple(a(row, env, d) for a in items)
        if isinstance(e, PostInd):
            slot = post_slots.setdefault(e.ref, len(post_slots))
            return lambda row, env, d: d[slot]
        raise TypeError(e)

    fn = comp(e)
    refs = [r for r, _ in sorted(post_slots.items(), key=lambda kv: kv[1])]
    return Compiled(fn, refs)


# --------------------------------------------------------------------------
# quantified checks over explicit valuations (used by unit-level checks;
# the LTS-backed fast paths live in the engine)

def implies_everywhere(p: Expr, q: Expr, valuations, envs=({},)) -> Optional[dict]:
    """None when p => q at every (valuation, env); otherwise a witness."""
    for val in valuations:
        for env in envs:
            if eval_pred(p, val, env) and not eval_pred(q, val, env):
                return {'valuation': dict(val), 'env': dict(env)}
    return None


# --------------------------------------------------------------------------
# structural helpers

def simplify_bool(e: Expr) -> Expr:
    if isinstance(e, Unary) and e.op == 'not':
        a = simplify_bool(e.arg)
        if isinstance(a, Lit) and isinstance(a.value, bool):
            return Lit(not a.value)
        return Unary('not', a)
    if isinstance(e, Binary) and e.op in _BOOLOP:
        l, r = simplify_bool(e.left), simplify_bool(e.right)
        lt = l.value if isinstance(l, Lit) and isinstance(l.value, bool) else None
        rt = r.value if isinstance(r, Lit) and isinstance(r.value, bool) else None
        if e.op == 'and':
            if lt is False or rt is False:
                return Lit(False)
            if lt is True:
                return r
            if rt is True:
                return l
        elif e.op == 'or':
            if lt is True or rt is True:
                return Lit(True)
            if lt is False:
                return r
            if rt is False:
                return l
        elif e.op == '=>':
            if lt is False or rt is True:
                return Lit(True)
            if lt is True:
                return r
            if rt is False:
                return Unary('not', l)
        elif e.op == '<=>':
            if lt is True:
                return r
            if rt is True:
                return l
            if lt is False:
                return Unary('not', r)
            if rt is False:
                return Unary('not', l)
        return Binary(e.op, l, r)
    return e


def substitute_invariant(pred: Expr, inv: Expr) -> Expr:
    """Replace occurrences of the invariant (and its negation) by literals
    and simplify.  Sound on reachable states, where the invariant holds."""
    def sub(e: Expr) -> Expr:
        if e == inv:
            return Lit(True)
        if isinstance(e, Unary) and e.op == 'not':
            return Unary('not', sub(e.arg))
        if isinstance(e, Binary):
            return Binary(e.op, sub(e.left), sub(e.right))
        if isinstance(e, Call):
            return Call(e.func, [sub(a) for a in e.args])
        if isinstance(e, BagLit):
            return BagLit([sub(a) for a in e.items])
        if isinstance(e, TupleLit):
            return TupleLit([sub(a) for a in e.items])
        return e

    return simplify_bool(sub(pred))


def metric_compare(a, b) -> int:
    """Lexicographic comparison of equal-shape metric values."""
    if isinstance(a, tuple) != isinstance(b, tuple):
        raise EvalError('metric shape mismatch')
    if a < b:
        return -1
    if a > b:
        return 1
    return 0


def built_from(e: Expr, parts: list) -> bool:
    """True when every state-variable occurrence in e sits inside an
    occurrence of one of the given expressions."""
    if any(e == p for p in parts):
        return True
    if isinstance(e, Lit):
        return True
    if isinstance(e, Var):
        return False
    if isinstance(e, Unary):
        return built_from(e.arg, parts)
    if isinstance(e, Binary):
        return built_from(e.left, parts) and built_from(e.right, parts)
    if isinstance(e, Call):
        return all(built_from(a, parts) for a in e.args)
    if isinstance(e, (BagLit, TupleLit)):
        return all(built_from(a, parts) for a in e.items)
    return False


def int_bounds(e: Expr, domains: dict, free_domains: dict):
    """Interval bounds of an int expression, or None when unknown."""
    def go(e):
        if isinstance(e, Lit) and not isinstance(e.value, bool):
            return (e.value, e.value)
        if isinstance(e, Var):
            d = domains.get(e.name) or free_domains.get(e.name)
            if isinstance(d, IntDomain):
                return (d.lo, d.hi)
            return None
        if isinstance(e, Unary) and e.op == 'neg':
            b = go(e.arg)
            return None if b is None else (-b[1], -b[0])
        if isinstance(e, Binary) and e.op in ('+', '-', '*'):
            l, r = go(e.left), go(e.right)
            if l is None or r is None:
                return None
            if e.op == '+':
                return (l[0] + r[0], l[1] + r[1])
            if e.op == '-':
                return (l[0] - r[1], l[1] - r[0])
            vs = [l[0] * r[0], l[0] * r[1], l[1] * r[0], l[1] * r[1]]
            return (min(vs), max(vs))
        if isinstance(e, Call):
            if e.func == 'bit':
                return (0, 1)
            if e.func in ('size', 'sum'):
                a = e.args[0]
                if isinstance(a, Var):
                    d = domains.get(a.name)
                    if isinstance(d, BagDomain):
                        if e.func == 'size':
                            return (0, d.cap)
                        return (min(0, d.cap * d.lo), max(0, d.cap * d.hi))
                if isinstance(a, Binary) and a.op in ('++', '--'):
                    # size/sum distribute within union bounds
                    l = go(Call(e.func, [a.left]))
                    r = go(Call(e.func, [a.right]))
                    if l is None or r is None:
                        return None
                    if a.op == '++':
                        return (l[0] + r[0], l[1] + r[1])
                    if e.func == 'size':
                        return (max(0, l[0] - r[1]), l[1])
                    return (l[0] - r[1], l[1] - r[0])
                return None
            if e.func in ('min', 'max'):
                bs = [go(a) for a in e.args]
                if any(b is None for b in bs):
                    return None
                if e.func == 'min':
                    return (min(b[0] for b in bs), min(b[1] for b in bs))
                return (max(b[0] for b in bs), max(b[1] for b in bs))
        return None

    return go(e)


def free_names(e: Expr, declared: dict) -> set:
    """Names in e that are not program variables."""
    return {n for n in expr_vars(e) if n not in declared}


def key_of(e: Expr) -> str:
    return pp_expr(e)
