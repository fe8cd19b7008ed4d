"""Syntax trees for guarded concurrent programs.

One expression language serves guards, assignment right-hand sides and
property predicates.  Components form a tree: atomic guarded actions are
combined by sequencing constructs (blocks, if, while, nonterminating
loops) and by the concurrent join.  Equality on nodes is structural and
ignores source positions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

Pos = Optional[tuple[int, int]]


def _pos():
    return field(default=None, compare=False, repr=False)


# --------------------------------------------------------------------------
# expressions

class Expr:
    pass


@dataclass
class Lit(Expr):
    value: Union[int, bool]
    pos: Pos = _pos()


@dataclass
class Var(Expr):
    name: str
    pos: Pos = _pos()


@dataclass
class Unary(Expr):
    op: str                      # 'not' | 'neg'
    arg: Expr
    pos: Pos = _pos()


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    pos: Pos = _pos()


@dataclass
class Call(Expr):
    func: str                    # size | sum | bit | min | max
    args: list[Expr]
    pos: Pos = _pos()


@dataclass
class BagLit(Expr):
    items: list[Expr]
    pos: Pos = _pos()


@dataclass
class TupleLit(Expr):
    items: list[Expr]
    pos: Pos = _pos()


@dataclass
class PostInd(Expr):
    """Control indicator: true once the referenced component has finished
    its current execution."""
    ref: str
    pos: Pos = _pos()


TRUE = Lit(True)
FALSE = Lit(False)


# --------------------------------------------------------------------------
# statements

class Stmt:
    pass


@dataclass
class Assign(Stmt):
    targets: list[str]
    exprs: list[Expr]
    pos: Pos = _pos()


@dataclass
class Get(Stmt):
    bag: str
    target: str
    pos: Pos = _pos()


@dataclass
class Put(Stmt):
    bag: str
    expr: Expr
    pos: Pos = _pos()


# --------------------------------------------------------------------------
# components

class Comp:
    label: Optional[str]


@dataclass
class Act(Comp):
    guard: Optional[Expr]        # None means true (non-blocking)
    body: list[Stmt]
    label: Optional[str] = None
    pos: Pos = _pos()


@dataclass
class SeqBlock(Comp):
    items: list[Comp]
    label: Optional[str] = None
    pos: Pos = _pos()


@dataclass
class If(Comp):
    # each alternative is a guarded action; the whole statement is one
    # control point and the chosen alternative runs without preemption
    alts: list[Act]
    label: Optional[str] = None
    pos: Pos = _pos()


@dataclass
class While(Comp):
    guard: Expr
    body: Comp
    label: Optional[str] = None
    pos: Pos = _pos()


@dataclass
class Loop(Comp):
    body: Comp
    label: Optional[str] = None
    pos: Pos = _pos()


@dataclass
class Join(Comp):
    children: list[Comp]
    label: Optional[str] = None
    pos: Pos = _pos()


# --------------------------------------------------------------------------
# declarations

class Domain:
    pass


@dataclass
class IntDomain(Domain):
    lo: int
    hi: int


@dataclass
class BoolDomain(Domain):
    pass


@dataclass
class BagDomain(Domain):
    lo: int
    hi: int
    cap: int


@dataclass
class TupleDomain(Domain):
    parts: list[IntDomain]


@dataclass
class VarDecl:
    name: str
    domain: Domain
    aux: bool = False
    init: Optional[object] = None    # int | bool | tuple (bag value)
    pos: Pos = _pos()


@dataclass
class AuxOn:
    """Auxiliary updates attached to the named actions; the statements run
    atomically after the action body."""
    labels: list[str]
    stmts: list[Stmt]
    pos: Pos = _pos()


@dataclass
class Program:
    decls: list[VarDecl]
    root: Comp
    aux_on: list[AuxOn] = field(default_factory=list)
    inits: list[Expr] = field(default_factory=list)   # global initially constraints
    name: Optional[str] = None


# --------------------------------------------------------------------------
# domain helpers

def domain_values(d: Domain):
    """All values of a finite domain, in canonical order."""
    if isinstance(d, IntDomain):
        return list(range(d.lo, d.hi + 1))
    if isinstance(d, BoolDomain):
        return [False, True]
    if isinstance(d, BagDomain):
        out = []
        elems = list(range(d.lo, d.hi + 1))

        def rec(start, left, acc):
            out.append(tuple(acc))
            if left == 0:
                return
            for i in range(start, len(elems)):
                acc.append(elems[i])
                rec(i, left - 1, acc)
                acc.pop()

        rec(0, d.cap, [])
        return sorted(set(out))
    if isinstance(d, TupleDomain):
        vals = [[]]
        for p in d.parts:
            vals = [v + [x] for v in vals for x in range(p.lo, p.hi + 1)]
        return [tuple(v) for v in vals]
    raise TypeError(d)


def domain_contains(d: Domain, v) -> bool:
    if isinstance(d, IntDomain):
        return isinstance(v, int) and not isinstance(v, bool) and d.lo <= v <= d.hi
    if isinstance(d, BoolDomain):
        return isinstance(v, bool)
    if isinstance(d, BagDomain):
        return (isinstance(v, tuple) and len(v) <= d.cap
                and all(isinstance(e, int) and d.lo <= e <= d.hi for e in v)
                and tuple(sorted(v)) == v)
    if isinstance(d, TupleDomain):
        return (isinstance(v, tuple) and len(v) == len(d.parts)
                and all(p.lo <= e <= p.hi for p, e in zip(d.parts, v)))
    raise TypeError(d)


# --------------------------------------------------------------------------
# free variables of expressions

def expr_vars(e: Expr, acc: Optional[set] = None) -> set:
    if acc is None:
        acc = set()
    if isinstance(e, Var):
        acc.add(e.name)
    elif isinstance(e, Unary):
        expr_vars(e.arg, acc)
    elif isinstance(e, Binary):
        expr_vars(e.left, acc)
        expr_vars(e.right, acc)
    elif isinstance(e, (Call, BagLit, TupleLit)):
        for a in (e.args if isinstance(e, Call) else e.items):
            expr_vars(a, acc)
    return acc


def stmt_read_vars(st: Stmt) -> set:
    if isinstance(st, Assign):
        out = set()
        for e in st.exprs:
            expr_vars(e, out)
        return out
    if isinstance(st, Get):
        return {st.bag}
    if isinstance(st, Put):
        return {st.bag} | expr_vars(st.expr)
    raise TypeError(st)


def stmt_written_vars(st: Stmt) -> set:
    if isinstance(st, Assign):
        return set(st.targets)
    if isinstance(st, Get):
        return {st.bag, st.target}
    if isinstance(st, Put):
        return {st.bag}
    raise TypeError(st)


# --------------------------------------------------------------------------
# pretty printing

_PREC = {
    '<=>': 1, '=>': 2, 'or': 3, 'and': 4,
    '=': 6, '!=': 6, '<': 6, '<=': 6, '>': 6, '>=': 6,
    '++': 7, '--': 7, '+': 8, '-': 8, '*': 9,
}


def pp_expr(e: Expr, prec: int = 0) -> str:
    if isinstance(e, Lit):
        if e.value is True:
            return 'true'
        if e.value is False:
            return 'false'
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == 'not':
            s = 'not ' + pp_expr(e.arg, 5)
            return '(' + s + ')' if prec > 5 else s
        s = '-' + pp_expr(e.arg, 10)
        return '(' + s + ')' if prec > 9 else s
    if isinstance(e, Binary):
        p = _PREC[e.op]
        # => is right associative, everything else left
        lp, rp = (p + 1, p) if e.op == '=>' else (p, p + 1)
        s = f'{pp_expr(e.left, lp)} {e.op} {pp_expr(e.right, rp)}'
        return '(' + s + ')' if prec >= p + 1 or (prec == p and e.op in ('=', '!=', '<', '<=', '>', '>=')) else s
    if isinstance(e, Call):
        return f'{e.func}({", ".join(pp_expr(a) for a in e.args)})'
    if isinstance(e, BagLit):
        return '{' + ', '.join(pp_expr(a) for a in e.items) + '}'
    if isinstance(e, TupleLit):
        return '(' + ', '.join(pp_expr(a) for a in e.items) + ')'
    if isinstance(e, PostInd):
        return f'post(@{e.ref})'
    raise TypeError(e)


def pp_stmt(st: Stmt) -> str:
    if isinstance(st, Assign):
        return f'{", ".join(st.targets)} := {", ".join(pp_expr(x) for x in st.exprs)}'
    if isinstance(st, Get):
        return f'get({st.bag}, {st.target})'
    if isinstance(st, Put):
        return f'put({st.bag}, {pp_expr(st.expr)})'
    raise TypeError(st)


def _pp_act(a: Act) -> str:
    lab = f'{a.label}:: ' if a.label else ''
    body = '; '.join(pp_stmt(s) for s in a.body)
    if len(a.body) > 1:
        body = '<| ' + body + ' |>'
    if a.guard is None:
        return lab + body
    return f'{lab}{pp_expr(a.guard)} -> {body}'


def pp_comp(c: Comp, indent: int = 0) -> str:
    pad = '  ' * indent
    lab = f'{c.label}:: ' if c.label else ''
    if isinstance(c, Act):
        return pad + _pp_act(c)
    if isinstance(c, SeqBlock):
        inner = ' ;\n'.join(pp_comp(i, indent + 1) for i in c.items)
        return f'{pad}{lab}(\n{inner}\n{pad})'
    if isinstance(c, If):
        alts = f'\n{pad}  | '.join(_pp_act(a) for a in c.alts)
        return f'{pad}{lab}if [ {alts} ]'
    if isinstance(c, While):
        return (f'{pad}{lab}while {pp_expr(c.guard)} do\n'
                f'{pp_comp(c.body, indent + 1)}\n{pad}od')
    if isinstance(c, Loop):
        return (f'{pad}{lab}loop\n{pp_comp(c.body, indent + 1)}\n{pad}forever')
    if isinstance(c, Join):
        inner = f'\n{pad}||\n'.join(pp_comp(ch, indent) for ch in c.children)
        if c.label:
            return f'{pad}{lab}(\n{inner}\n{pad})'
        return inner
    raise TypeError(c)


def pp_domain(d: Domain) -> str:
    if isinstance(d, IntDomain):
        return f'int {d.lo}..{d.hi}'
    if isinstance(d, BoolDomain):
        return 'bool'
    if isinstance(d, BagDomain):
        return f'bag[{d.lo}..{d.hi}] cap {d.cap}'
    if isinstance(d, TupleDomain):
        return '(' + ', '.join(f'{p.lo}..{p.hi}' for p in d.parts) + ')'
    raise TypeError(d)


def _pp_value(v) -> str:
    if v is True:
        return 'true'
    if v is False:
        return 'false'
    if isinstance(v, tuple):
        return '{' + ', '.join(str(x) for x in v) + '}'
    return str(v)


def pp_program(p: Program) -> str:
    out = []
    if p.name:
        out.append(f'program {p.name}:')
    for d in p.decls:
        kw = 'aux' if d.aux else 'var'
        line = f'{kw} {d.name} : {pp_domain(d.domain)}'
        if d.init is not None:
            line += f' initially {_pp_value(d.init)}'
        out.append(line)
    for e in p.inits:
        out.append(f'initially {pp_expr(e)}')
    for blk in p.aux_on:
        stmts = '; '.join(pp_stmt(s) for s in blk.stmts)
        out.append(f'on {", ".join(blk.labels)} : {stmts}')
    out.append(pp_comp(p.root))
    return '\n'.join(out) + '\n'
