"""Static analysis of parsed programs: name resolution, control points,
variable access classification, auxiliary instrumentation and the
prime-renaming transform for paired components."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .syntax import (Act, Assign, BagDomain, BoolDomain, Comp, Expr, Get, If,
                     IntDomain, Join, Loop, Program, Put, SeqBlock, Stmt,
                     TupleLit, Unary, Binary, Call, BagLit, Lit, Var, PostInd,
                     VarDecl, While, domain_contains, expr_vars,
                     stmt_read_vars, stmt_written_vars)


class ValidationError(Exception):
    pass


def _kind_of_domain(d) -> str:
    if isinstance(d, IntDomain):
        return 'int'
    if isinstance(d, BoolDomain):
        return 'bool'
    if isinstance(d, BagDomain):
        return 'bag'
    return 'tuple'


@dataclass
class PointInfo:
    node: Comp                  # Act, If or While owning the point
    ref: str
    index: int


class Analysis:
    """Everything the executor and the checkers need to know about a
    program, computed once."""

    def __init__(self, prog: Program):
        self.prog = prog
        self.decls: dict[str, VarDecl] = {}
        self.var_order: list[str] = []
        self.var_index: dict[str, int] = {}
        self.kinds: dict[str, str] = {}
        self.refs: dict[str, Comp] = {}
        self.node_id: dict[int, str] = {}       # id(node) -> canonical ref
        self.parent: dict[int, Optional[Comp]] = {}
        self.slot: dict[int, str] = {}
        self.points: list[PointInfo] = []
        self.point_of_node: dict[int, int] = {}
        self.exec_body: dict[int, list[Stmt]] = {}   # id(Act) -> body + aux
        self.act_by_label: dict[str, Act] = {}
        self._written: dict[int, set] = {}
        self._accessed: dict[int, set] = {}
        self.prime_map: dict[str, str] = {}
        self._build()

    # ------------------------------------------------------------ building

    def _build(self):
        p = self.prog
        for d in p.decls:
            if d.name in self.decls:
                raise ValidationError(f'duplicate variable {d.name}')
            self.decls[d.name] = d
            self.var_order.append(d.name)
            self.kinds[d.name] = _kind_of_domain(d.domain)
            if d.init is not None and not domain_contains(d.domain, d.init):
                raise ValidationError(
                    f'initial value of {d.name} outside its domain')
        self.var_index = {n: i for i, n in enumerate(self.var_order)}

        self._register(p.root, None, None)
        self._collect_points(p.root)
        self._instrument()
        self._validate_bodies(p.root)
        self._compute_access(p.root)
        for n in self.var_order:
            partner = n[:-1] if n.endswith("'") else n + "'"
            if partner in self.decls:
                self.prime_map[n] = partner

    def _register(self, node: Comp, parent: Optional[Comp], slot: Optional[str]):
        self.parent[id(node)] = parent
        if slot is not None:
            self.slot[id(node)] = slot
        if parent is None:
            canon = node.label or 'main'
        else:
            pid = self.node_id[id(parent)]
            canon = node.label or f'{pid}.{slot}'
        self.node_id[id(node)] = canon
        self._add_ref(canon, node)
        if parent is None and node.label:
            self._add_ref('main', node)
        elif parent is not None and node.label:
            self._add_ref(f'{self.node_id[id(parent)]}.{slot}', node)
        if isinstance(node, Act):
            if node.label:
                self.act_by_label[node.label] = node
        elif isinstance(node, SeqBlock):
            for i, ch in enumerate(node.items):
                self._register(ch, node, str(i))
        elif isinstance(node, If):
            for i, ch in enumerate(node.alts):
                self._register(ch, node, str(i))
                if ch.label:
                    self.act_by_label[ch.label] = ch
        elif isinstance(node, (Loop, While)):
            self._register(node.body, node, 'body')
        elif isinstance(node, Join):
            for i, ch in enumerate(node.children):
                self._register(ch, node, str(i))

    def _add_ref(self, ref: str, node: Comp):
        other = self.refs.get(ref)
        if other is not None and other is not node:
            raise ValidationError(f'ambiguous component reference {ref!r}')
        self.refs[ref] = node

    def _collect_points(self, node: Comp):
        if isinstance(node, (Act, If, While)):
            info = PointInfo(node, self.node_id[id(node)], len(self.points))
            self.points.append(info)
            self.point_of_node[id(node)] = info.index
            if isinstance(node, While):
                self._collect_points(node.body)
        elif isinstance(node, SeqBlock):
            for ch in node.items:
                self._collect_points(ch)
        elif isinstance(node, Loop):
            self._collect_points(node.body)
        elif isinstance(node, Join):
            for ch in node.children:
                self._collect_points(ch)

    def _instrument(self):
        acts: dict[int, list[Stmt]] = {}
        for act in self._all_actions(self.prog.root):
            acts[id(act)] = list(act.body)
        for blk in self.prog.aux_on:
            for st in blk.stmts:
                if not isinstance(st, Assign):
                    raise ValidationError('auxiliary updates must be assignments')
                for t in st.targets:
                    d = self.decls.get(t)
                    if d is None or not d.aux:
                        raise ValidationError(
                            f'auxiliary update writes non-auxiliary {t!r}')
            for lab in blk.labels:
                act = self.act_by_label.get(lab)
                if act is None:
                    raise ValidationError(f'no action labeled {lab!r}')
                acts[id(act)].extend(blk.stmts)
        self.exec_body = acts

    def _all_actions(self, node: Comp):
        if isinstance(node, Act):
            yield node
        elif isinstance(node, SeqBlock):
            for ch in node.items:
                yield from self._all_actions(ch)
        elif isinstance(node, If):
            yield from node.alts
        elif isinstance(node, (Loop, While)):
            yield from self._all_actions(node.body)
        elif isinstance(node, Join):
            for ch in node.children:
                yield from self._all_actions(ch)

    # ---------------------------------------------------------- validation

    def _check_expr_names(self, e: Expr, where: str, allow_aux: bool):
        for n in expr_vars(e):
            d = self.decls.get(n)
            if d is None:
                raise ValidationError(f'unknown variable {n!r} in {where}')
            if d.aux and not allow_aux:
                raise ValidationError(
                    f'auxiliary variable {n!r} may not appear in {where}')

    def _validate_bodies(self, root: Comp):
        for act in self._all_actions(root):
            if act.guard is not None:
                self._check_expr_names(act.guard, 'a guard', allow_aux=False)
            for st in act.body:
                for n in stmt_written_vars(st) | stmt_read_vars(st):
                    d = self.decls.get(n)
                    if d is None:
                        raise ValidationError(f'unknown variable {n!r} in a body')
                    if d.aux:
                        raise ValidationError(
                            f'auxiliary variable {n!r} used in a program body; '
                            f'attach it with an on-block instead')
        for node in self._walk(root):
            if isinstance(node, While):
                self._check_expr_names(node.guard, 'a while guard', allow_aux=False)

    def _walk(self, node: Comp):
        yield node
        if isinstance(node, SeqBlock):
            for ch in node.items:
                yield from self._walk(ch)
        elif isinstance(node, If):
            for ch in node.alts:
                yield from self._walk(ch)
        elif isinstance(node, (Loop, While)):
            yield from self._walk(node.body)
        elif isinstance(node, Join):
            for ch in node.children:
                yield from self._walk(ch)

    # ------------------------------------------------------------- access

    def _compute_access(self, node: Comp) -> tuple[set, set]:
        written, accessed = set(), set()
        if isinstance(node, Act):
            if node.guard is not None:
                accessed |= expr_vars(node.guard)
            for st in self.exec_body[id(node)]:
                written |= stmt_written_vars(st)
                accessed |= stmt_read_vars(st) | stmt_written_vars(st)
        elif isinstance(node, SeqBlock):
            for ch in node.items:
                w, a = self._compute_access(ch)
                written |= w
                accessed |= a
        elif isinstance(node, If):
            for ch in node.alts:
                w, a = self._compute_access(ch)
                written |= w
                accessed |= a
        elif isinstance(node, (Loop, While)):
            if isinstance(node, While):
                accessed |= expr_vars(node.guard)
            w, a = self._compute_access(node.body)
            written |= w
            accessed |= a
        elif isinstance(node, Join):
            for ch in node.children:
                w, a = self._compute_access(ch)
                written |= w
                accessed |= a
        self._written[id(node)] = written
        self._accessed[id(node)] = accessed
        return written, accessed

    def written(self, node: Comp) -> set:
        return self._written[id(node)]

    def accessed(self, node: Comp) -> set:
        return self._accessed[id(node)]

    # ------------------------------------------------------------- queries

    def resolve(self, ref: str) -> Comp:
        node = self.refs.get(ref)
        if node is None:
            raise ValidationError(f'unknown component reference @{ref}')
        return node

    def ref_of(self, node: Comp) -> str:
        return self.node_id[id(node)]

    def subtree_points(self, node: Comp) -> list[int]:
        out = []
        for sub in self._walk(node):
            idx = self.point_of_node.get(id(sub))
            if idx is not None:
                out.append(idx)
        return sorted(set(out))

    def point_actions(self, point: PointInfo) -> list[tuple[Optional[int], Act]]:
        """Actions selectable at a point: one for a plain action point, one
        per alternative for an if point, none for a while test."""
        node = point.node
        if isinstance(node, Act):
            return [(None, node)]
        if isinstance(node, If):
            return [(i, a) for i, a in enumerate(node.alts)]
        return []

    def is_local(self, var: str, node: Comp) -> bool:
        """No component running concurrently with node writes var."""
        if var not in self.decls:
            return False
        cur = node
        while True:
            par = self.parent[id(cur)]
            if par is None:
                return True
            if isinstance(par, Join):
                for sib in par.children:
                    if sib is not cur and var in self.written(sib):
                        return False
            cur = par

    def shared_with_rest(self, node: Comp) -> set:
        """Variables accessed both by node and by some concurrent sibling."""
        out = set()
        cur = node
        while True:
            par = self.parent[id(cur)]
            if par is None:
                return out & self.accessed(node)
            if isinstance(par, Join):
                for sib in par.children:
                    if sib is not cur:
                        out |= self.accessed(sib)
            cur = par

    def ancestors(self, node: Comp) -> list[Comp]:
        out = []
        cur = self.parent[id(node)]
        while cur is not None:
            out.append(cur)
            cur = self.parent[id(cur)]
        return out

    def in_subtree(self, node: Comp, root: Comp) -> bool:
        cur = node
        while cur is not None:
            if cur is root:
                return True
            cur = self.parent[id(cur)]
        return False

    # ------------------------------------------------- prime renaming (dual)

    def prime_name(self, n: str) -> str:
        if n in self.prime_map:
            return self.prime_map[n]
        raise ValidationError(f'variable {n!r} has no primed partner')

    def prime_label(self, lab: Optional[str]) -> Optional[str]:
        if lab is None:
            return None
        return lab[:-1] if lab.endswith("'") else lab + "'"

    def prime_expr(self, e: Expr) -> Expr:
        if isinstance(e, Lit):
            return Lit(e.value)
        if isinstance(e, Var):
            return Var(self.prime_name(e.name))
        if isinstance(e, Unary):
            return Unary(e.op, self.prime_expr(e.arg))
        if isinstance(e, Binary):
            return Binary(e.op, self.prime_expr(e.left), self.prime_expr(e.right))
        if isinstance(e, Call):
            return Call(e.func, [self.prime_expr(a) for a in e.args])
        if isinstance(e, BagLit):
            return BagLit([self.prime_expr(a) for a in e.items])
        if isinstance(e, TupleLit):
            return TupleLit([self.prime_expr(a) for a in e.items])
        if isinstance(e, PostInd):
            return PostInd(self.prime_ref(e.ref))
        raise TypeError(e)

    def prime_ref(self, ref: str) -> str:
        parts = ref.split('.')
        head = parts[0]
        if head != 'main':
            head = self.prime_label(head)
        return '.'.join([head] + parts[1:])

    def prime_stmt(self, st: Stmt) -> Stmt:
        if isinstance(st, Assign):
            return Assign([self.prime_name(t) for t in st.targets],
                          [self.prime_expr(e) for e in st.exprs])
        if isinstance(st, Get):
            return Get(self.prime_name(st.bag), self.prime_name(st.target))
        if isinstance(st, Put):
            return Put(self.prime_name(st.bag), self.prime_expr(st.expr))
        raise TypeError(st)

    def prime_comp(self, node: Comp) -> Comp:
        lab = self.prime_label(node.label)
        if isinstance(node, Act):
            g = None if node.guard is None else self.prime_expr(node.guard)
            return Act(g, [self.prime_stmt(s) for s in node.body], label=lab)
        if isinstance(node, SeqBlock):
            return SeqBlock([self.prime_comp(c) for c in node.items], label=lab)
        if isinstance(node, If):
            return If([self.prime_comp(a) for a in node.alts], label=lab)
        if isinstance(node, While):
            return While(self.prime_expr(node.guard),
                         self.prime_comp(node.body), label=lab)
        if isinstance(node, Loop):
            return Loop(self.prime_comp(node.body), label=lab)
        if isinstance(node, Join):
            return Join([self.prime_comp(c) for c in node.children], label=lab)
        raise TypeError(node)


# --------------------------------------------------------------------------
# structural equality modulo commutativity and associativity of the join

def _flat_join(node: Comp) -> list[Comp]:
    if isinstance(node, Join):
        out = []
        for ch in node.children:
            out.extend(_flat_join(ch))
        return out
    return [node]


def ac_equal(a: Comp, b: Comp) -> bool:
    if isinstance(a, Join) or isinstance(b, Join):
        xs, ys = _flat_join(a), _flat_join(b)
        if len(xs) != len(ys):
            return False
        used = [False] * len(ys)

        def match(i):
            if i == len(xs):
                return True
            for j in range(len(ys)):
                if not used[j] and ac_equal(xs[i], ys[j]):
                    used[j] = True
                    if match(i + 1):
                        return True
                    used[j] = False
            return False

        return match(0)
    if type(a) is not type(b) or a.label != b.label:
        return False
    if isinstance(a, Act):
        return a.guard == b.guard and a.body == b.body
    if isinstance(a, SeqBlock):
        return (len(a.items) == len(b.items)
                and all(ac_equal(x, y) for x, y in zip(a.items, b.items)))
    if isinstance(a, If):
        return (len(a.alts) == len(b.alts)
                and all(ac_equal(x, y) for x, y in zip(a.alts, b.alts)))
    if isinstance(a, While):
        return a.guard == b.guard and ac_equal(a.body, b.body)
    if isinstance(a, Loop):
        return ac_equal(a.body, b.body)
    raise TypeError(a)


# --------------------------------------------------------------------------
# public helpers matching the module interface

def classify_access(prog_or_analysis) -> Analysis:
    a = prog_or_analysis
    if isinstance(a, Program):
        a = Analysis(a)
    return a


def elaborate_control(prog_or_analysis) -> Analysis:
    return classify_access(prog_or_analysis)


def instrument_auxiliary(prog: Program) -> Analysis:
    """Attach auxiliary updates to their actions; the result's exec bodies
    include them."""
    return Analysis(prog)
