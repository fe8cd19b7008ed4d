"""Safety checking: co and its special cases, annotations, and the
meta-rules that manipulate bilateral safety facts.

Every side condition is discharged semantically on the instance: an
implication between predicates is checked over all reachable states and
all bindings of the declared free variables.  That keeps the rule code
small and makes each rule exactly as strong as the finite instance
allows.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .engine import CheckError, Engine
from .frontend import ac_equal
from .predicates import built_from
from .properties import Annotation, Fact, Property, Verdict, fail, ok
from .syntax import (Act, Binary, Comp, Expr, If, Join, Lit, Loop, SeqBlock,
                     Unary, Var, While, expr_vars, pp_expr, TRUE, FALSE)


def conj(*es: Expr) -> Expr:
    out = None
    for e in es:
        if e is None or e == TRUE:
            continue
        out = e if out is None else Binary('and', out, e)
    return out if out is not None else TRUE


def disj(*es: Expr) -> Expr:
    out = None
    for e in es:
        if e is None:
            continue
        out = e if out is None else Binary('or', out, e)
    return out if out is not None else FALSE


def neg(e: Expr) -> Expr:
    return Unary('not', e)


def fact_r(f: Fact) -> Expr:
    return f.r if f.r is not None else TRUE


def fact_s(f: Fact) -> Expr:
    return f.s if f.s is not None else TRUE


# --------------------------------------------------------------------------
# direct semantic checks

def _act_entries(eng: Engine, comp: Comp) -> list:
    """(pidx, alt, display-name) for every executable branch of comp."""
    out = []
    for pidx in eng.comp_points(comp):
        node = eng.lts.points[pidx]
        ref = eng.lts.point_refs[pidx]
        if isinstance(node, Act):
            out.append((pidx, None, ref))
        elif isinstance(node, If):
            for ai, a in enumerate(node.alts):
                out.append((pidx, ai, a.label or f'{ref}.{ai}'))
        elif isinstance(node, While):
            out.append((pidx, 'test', f'{ref}.test'))
    return out


def _branch_pairs(eng: Engine, pidx: int, alt) -> list:
    """(src, dst) for the effective transitions of one branch."""
    key = ('branch', pidx, alt)
    got = eng._trans_cache.get(key)
    if got is None:
        got = []
        for src in range(eng.n):
            for t in eng.lts.trans[src]:
                if t.point != pidx or not t.effective:
                    continue
                if alt == 'test' or t.alt == alt:
                    got.append((src, t.dst))
        eng._trans_cache[key] = got
    return got


def check_triple(eng: Engine, action, p: Expr, q: Expr,
                 envs: Optional[list] = None) -> Verdict:
    """{p} action {q}: from any reachable p-state, every effective
    execution of the action reaches a q-state.  The action is a label or
    reference naming a plain action, an if alternative, or a loop test."""
    if isinstance(action, str):
        node = eng.resolve(action)
        pidx = alt = None
        if isinstance(node, Act):
            par = eng.analysis.parent[id(node)]
            if isinstance(par, If):
                pidx = eng.lts.point_index[id(par)]
                alt = par.alts.index(node)
            else:
                pidx = eng.lts.point_index.get(id(node))
        elif isinstance(node, While):
            pidx = eng.lts.point_index[id(node)]
            alt = 'test'
        if pidx is None:
            raise CheckError(f'@{action} does not name an action')
    else:
        pidx, alt = action
    eng.kindcheck(p)
    eng.kindcheck(q)
    pairs = _branch_pairs(eng, pidx, alt)
    for env in envs if envs is not None else eng.bindings_for(p, q):
        pb = eng.bits(p, env)
        qb = eng.bits(q, env)
        for src, dst in pairs:
            if (pb[src >> 3] >> (src & 7)) & 1 \
                    and not (qb[dst >> 3] >> (dst & 7)) & 1:
                return fail('the action can break the postcondition',
                            witness=eng.witness(src, env))
    return ok()


def check_co(eng: Engine, comp: Comp, p: Expr, q: Expr,
             envs: Optional[list] = None) -> Verdict:
    """p co q within comp: every effective step of comp from a p-state
    lands in a q-state.  The verdict carries one sub-verdict per action."""
    eng.kindcheck(p)
    eng.kindcheck(q)
    if envs is None:
        envs = eng.bindings_for(p, q)
    entries = _act_entries(eng, comp)
    actions = []
    allok = True
    for pidx, alt, name in entries:
        pairs = _branch_pairs(eng, pidx, alt)
        bad = None
        for env in envs:
            pb = eng.bits(p, env)
            qb = eng.bits(q, env)
            for src, dst in pairs:
                if (pb[src >> 3] >> (src & 7)) & 1 \
                        and not (qb[dst >> 3] >> (dst & 7)) & 1:
                    bad = eng.witness(src, env)
                    break
            if bad:
                break
        entry = {'action': name, 'ok': bad is None}
        if bad is not None:
            entry['witness'] = bad
            allok = False
        actions.append(entry)
    if allok:
        return Verdict(True, details=actions)
    culprits = ', '.join(a['action'] for a in actions if not a['ok'])
    return Verdict(False, note=f'broken by: {culprits}', details=actions)


def values_equal(eng: Engine, e1: Expr, e2: Expr,
                 within: Optional[int] = None) -> Verdict:
    eng.kindcheck(e1, want=None)
    eng.kindcheck(e2, want=None)
    mask = eng.all_mask if within is None else within
    mb = mask.to_bytes((eng.n + 7) // 8 or 1, 'little')
    for env in eng.bindings_for(e1, e2):
        v1 = eng.values(e1, env)
        v2 = eng.values(e2, env)
        for sid in range(eng.n):
            if (mb[sid >> 3] >> (sid & 7)) & 1 and v1[sid] != v2[sid]:
                return fail(f'{pp_expr(e1)} and {pp_expr(e2)} take '
                            'different values', witness=eng.witness(sid, env))
    return ok()


def check_constant(eng: Engine, comp: Comp, e: Expr) -> Verdict:
    """Every effective step of comp preserves the value of e."""
    eng.kindcheck(e, want=None)
    for env in eng.bindings_for(e):
        vals = eng.values(e, env)
        for pidx, alt, name in _act_entries(eng, comp):
            for src, dst in _branch_pairs(eng, pidx, alt):
                if vals[src] != vals[dst]:
                    return fail(f'{name} changes {pp_expr(e)}',
                                witness=eng.witness(src, env))
    return ok()


def check_special(eng: Engine, comp: Comp, kind: str, e: Expr) -> Verdict:
    """stable, constant or invariant, checked directly."""
    if kind == 'stable':
        return check_co(eng, comp, e, e)
    if kind == 'constant':
        return check_constant(eng, comp, e)
    if kind == 'invariant':
        v = eng.implies_all(TRUE, e, within=eng.initial_mask())
        if not v.ok:
            return fail('an initial state breaks the predicate',
                        witness=v.witness)
        v = check_co(eng, comp, e, e)
        if not v.ok:
            return Verdict(False, note='not stable: ' + (v.note or ''),
                           details=v.details, witness=v.witness)
        return v
    raise CheckError(f'unknown safety kind {kind!r}')


# --------------------------------------------------------------------------
# annotations

def entry_mask(eng: Engine, comp: Comp) -> int:
    key = ('entry', id(comp))
    got = eng._trans_cache.get(key)
    if got is None:
        if isinstance(comp, (Act, If, While)):
            pidx = eng.lts.point_index.get(id(comp))
            if pidx is None:      # an if alternative: use its group point
                par = eng.analysis.parent[id(comp)]
                pidx = eng.lts.point_index[id(par)]
            got = eng.resident_mask(pidx)
        elif isinstance(comp, SeqBlock):
            got = entry_mask(eng, comp.items[0])
        elif isinstance(comp, Loop):
            got = entry_mask(eng, comp.body)
        elif isinstance(comp, Join):
            got = eng.all_mask
            for ch in comp.children:
                got &= entry_mask(eng, ch)
        else:
            raise CheckError(f'cannot take entry states of {type(comp).__name__}')
        eng._trans_cache[key] = got
    return got


def exit_targets(eng: Engine, comp: Comp) -> list:
    """States reached by a step that completes comp's subtree."""
    key = '$exits'
    table = eng._trans_cache.get(key)
    if table is None:
        table = {}
        for src in range(eng.n):
            for t in eng.lts.trans[src]:
                for ref in t.completed:
                    table.setdefault(ref, set()).add(t.dst)
        table = {r: sorted(v) for r, v in table.items()}
        eng._trans_cache[key] = table
    return table.get(eng.analysis.ref_of(comp), [])


def exit_check(eng: Engine, comp: Comp, s: Optional[Expr]) -> Verdict:
    """The stated exit assertion holds whenever comp finishes."""
    if s is None:
        return ok()
    eng.kindcheck(s)
    for env in eng.bindings_for(s):
        sb = eng.bits(s, env)
        for dst in exit_targets(eng, comp):
            if not (sb[dst >> 3] >> (dst & 7)) & 1:
                return fail(f'exit state breaks {pp_expr(s)}',
                            witness=eng.witness(dst, env))
    return ok()


def locality_check(eng: Engine, comp: Comp, e: Expr, what: str) -> Verdict:
    offenders = sorted(n for n in expr_vars(e)
                       if n in eng.analysis.decls
                       and not eng.analysis.is_local(n, comp))
    if offenders:
        return fail(f'{what} {pp_expr(e)} is not local to '
                    f'@{eng.analysis.ref_of(comp)}: '
                    f'{", ".join(offenders)} written concurrently')
    return ok()


def check_annotation(eng: Engine, ann: Annotation) -> Verdict:
    clauses = []
    allok = True
    for which, ref, pred in (
            [('at', r, p) for r, p in ann.at]
            + [('exit', r, p) for r, p in ann.exits]):
        node = eng.resolve(ref)
        label = f'{which} @{ref}'
        v = locality_check(eng, node, pred, 'annotation predicate')
        if v.ok:
            eng.kindcheck(pred)
            if which == 'at':
                v = eng.implies_all(TRUE, pred, within=entry_mask(eng, node))
            else:
                v = exit_check(eng, node, pred)
        entry = {'clause': label, 'pred': pp_expr(pred), 'ok': v.ok}
        if not v.ok:
            entry['note'] = v.note
            if v.witness:
                entry['witness'] = v.witness
            allok = False
        clauses.append(entry)
    if allok:
        return Verdict(True, details=clauses)
    culprits = ', '.join(c['clause'] for c in clauses if not c['ok'])
    return Verdict(False, note=f'failing clauses: {culprits}',
                   details=clauses)


# --------------------------------------------------------------------------
# rule plumbing shared with the progress rules

@dataclass
class RC:
    """Everything a rule handler needs to look at."""
    eng: Engine
    premises: list
    art: dict
    stated: Optional[Fact]
    anns: dict = field(default_factory=dict)

    def comp(self, f: Optional[Fact] = None) -> Comp:
        f = f or self.stated
        self.need(f is not None, 'this rule must state a fact')
        return self.eng.resolve(f.comp)

    def need(self, cond: bool, msg: str):
        if not cond:
            raise CheckError(msg)

    def n_premises(self, lo: int, hi: Optional[int] = None):
        n = len(self.premises)
        hi = lo if hi is None else hi
        self.need(lo <= n and (hi < 0 or n <= hi),
                  f'expected {lo}{"" if hi == lo else f"..{hi if hi >= 0 else chr(8734)}"}'
                  f' premises, got {n}')

    def prem(self, i: int, kind: Optional[str] = None) -> Fact:
        f = self.premises[i]
        if kind is not None:
            self.need(f.prop is not None and f.prop.kind == kind,
                      f'premise {i + 1} must be a {kind} fact')
        return f

    def art_expr(self, key: str, required: bool = True) -> Optional[Expr]:
        v = self.art.get(key)
        if v is None:
            self.need(not required, f'missing argument {key}=')
            return None
        self.need(isinstance(v, Expr), f'argument {key}= must be an expression')
        return v

    def art_ref(self, key: str, required: bool = True) -> Optional[str]:
        v = self.art.get(key)
        if v is None:
            self.need(not required, f'missing argument {key}=@ref')
            return None
        self.need(isinstance(v, str), f'argument {key}= must be a @reference')
        return v

    def art_name(self, key: str, required: bool = True) -> Optional[str]:
        v = self.art.get(key)
        if v is None:
            self.need(not required, f'missing argument {key}=')
            return None
        if isinstance(v, Var):
            return v.name
        self.need(isinstance(v, str), f'argument {key}= must be a name')
        return v

    def no_extra_args(self, *allowed):
        for k in self.art:
            self.need(k in allowed, f'unexpected argument {k}=')


def sub_verdict(v: Verdict, what: str) -> Optional[Verdict]:
    """Propagate a failing sub-check, annotated with its role."""
    if v.ok:
        return None
    return Verdict(False, note=f'{what}: {v.note}' if v.note else what,
                   witness=v.witness, details=v.details)


def conclude(rc: RC, comp: Comp, prop: Optional[Property],
             r_c: Optional[Expr] = None, s_c: Optional[Expr] = None,
             s_exit: bool = False) -> Verdict:
    """Match the constructed conclusion against the stated fact.

    The stated precondition may be stronger than the constructed one and
    the stated exit assertion weaker.  Property arguments must agree
    semantically.  With s_exit the exit assertion is grounded directly:
    it must hold on every step that completes the component."""
    eng = rc.eng
    st = rc.stated
    rc.need(st is not None, 'this rule must state a fact')
    if eng.resolve(st.comp) is not comp:
        return fail(f'conclusion is about @{eng.analysis.ref_of(comp)}, '
                    f'stated fact is about @{st.comp}')
    if st.prop is not None:
        if prop is None:
            return fail('this rule concludes no property')
        if st.prop.kind != prop.kind:
            return fail(f'rule concludes a {prop.kind} property, '
                        f'stated fact has {st.prop.kind}')
        for i, (a, b) in enumerate(zip(prop.args, st.prop.args)):
            if prop.kind == 'constant':
                v = values_equal(eng, a, b)
            else:
                v = eng.equivalent(a, b)
            bad = sub_verdict(v, f'stated argument {pp_expr(b)} does not '
                              f'match the derived {pp_expr(a)}')
            if bad:
                return bad
    if st.r is not None and r_c is not None:
        bad = sub_verdict(eng.implies_all(st.r, r_c),
                          'the stated precondition does not imply the '
                          'precondition this rule requires')
        if bad:
            return bad
    if s_exit:
        bad = sub_verdict(exit_check(eng, comp, st.s), 'exit assertion')
        if bad:
            return bad
    elif st.s is not None:
        bad = sub_verdict(eng.implies_all(s_c if s_c is not None else TRUE, st.s),
                          'the derived exit assertion does not imply the '
                          'stated one')
        if bad:
            return bad
    return ok()


def same_args(rc: RC, facts: list, kind: str) -> Verdict:
    """All facts carry the given kind with pairwise equivalent arguments."""
    first = facts[0]
    for f in facts:
        rc.need(f.prop is not None and f.prop.kind == kind,
                f'premises must all be {kind} facts')
    for f in facts[1:]:
        for a, b in zip(first.prop.args, f.prop.args):
            if kind == 'constant':
                v = values_equal(rc.eng, a, b)
            else:
                v = rc.eng.equivalent(a, b)
            bad = sub_verdict(v, 'premise arguments differ')
            if bad:
                return bad
    return ok()


# --------------------------------------------------------------------------
# safety rule handlers

def _rule_co_basis(rc: RC) -> Verdict:
    rc.n_premises(0)
    rc.no_extra_args()
    rc.need(rc.stated.prop is not None and rc.stated.prop.kind
            in ('co', 'stable', 'constant', 'invariant'),
            'a safety basis needs a stated co, stable, constant or '
            'invariant fact')
    comp = rc.comp()
    kind = rc.stated.prop.kind
    if kind == 'co':
        p, q = rc.stated.prop.args
        v = check_co(rc.eng, comp, p, q)
    else:
        v = check_special(rc.eng, comp, kind, rc.stated.prop.args[0])
    bad = sub_verdict(v, f'{kind} basis')
    if bad:
        return bad
    out = conclude(rc, comp, rc.stated.prop, s_exit=True)
    if out.ok and v.details:
        out = Verdict(True, details=v.details)
    return out


def _rule_post_from_annotation(rc: RC) -> Verdict:
    rc.n_premises(0)
    rc.no_extra_args('ann')
    name = rc.art_name('ann')
    ann = rc.anns.get(name)
    rc.need(ann is not None, f'unknown annotation {name!r}')
    comp = rc.comp()
    va = check_annotation(rc.eng, ann)
    bad = sub_verdict(va, f'annotation {name}')
    if bad:
        return bad
    target = None
    for ref, pred in ann.exits:
        if rc.eng.resolve(ref) is comp:
            target = pred
            break
    rc.need(target is not None,
            f'annotation {name} has no exit clause for @{rc.stated.comp}')
    from .syntax import PostInd
    derived = Binary('=>', PostInd(rc.eng.analysis.ref_of(comp)), target)
    return conclude(rc, comp, Property('invariant', (derived,)),
                    s_c=target)


def _rule_co_conj(rc: RC) -> Verdict:
    rc.n_premises(1, -1)
    rc.no_extra_args()
    comp = rc.comp(rc.prem(0))
    ps, qs, rs, ss = [], [], [], []
    for i in range(len(rc.premises)):
        f = rc.prem(i, 'co')
        rc.need(rc.comp(f) is comp, 'premises must be about one component')
        ps.append(f.prop.args[0])
        qs.append(f.prop.args[1])
        rs.append(fact_r(f))
        ss.append(fact_s(f))
    return conclude(rc, comp, Property('co', (conj(*ps), conj(*qs))),
                    r_c=conj(*rs), s_c=conj(*ss))


def _rule_co_disj(rc: RC) -> Verdict:
    rc.n_premises(1, -1)
    rc.no_extra_args()
    comp = rc.comp(rc.prem(0))
    ps, qs, rs, ss = [], [], [], []
    for i in range(len(rc.premises)):
        f = rc.prem(i, 'co')
        rc.need(rc.comp(f) is comp, 'premises must be about one component')
        ps.append(f.prop.args[0])
        qs.append(f.prop.args[1])
        rs.append(fact_r(f))
        ss.append(fact_s(f))
    return conclude(rc, comp, Property('co', (disj(*ps), disj(*qs))),
                    r_c=conj(*rs), s_c=conj(*ss))


def _rule_co_lhs(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args()
    f = rc.prem(0, 'co')
    comp = rc.comp(f)
    p, q = f.prop.args
    rc.need(rc.stated.prop is not None and rc.stated.prop.kind == 'co',
            'stated fact must be a co fact')
    p2, q2 = rc.stated.prop.args
    bad = sub_verdict(rc.eng.implies_all(p2, p),
                      'stated left side must imply the premise left side')
    if bad:
        return bad
    return conclude(rc, comp, Property('co', (p2, q)),
                    r_c=fact_r(f), s_c=fact_s(f))


def _rule_co_rhs(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args()
    f = rc.prem(0, 'co')
    comp = rc.comp(f)
    p, q = f.prop.args
    rc.need(rc.stated.prop is not None and rc.stated.prop.kind == 'co',
            'stated fact must be a co fact')
    p2, q2 = rc.stated.prop.args
    bad = sub_verdict(rc.eng.implies_all(q, q2),
                      'premise right side must imply the stated right side')
    if bad:
        return bad
    return conclude(rc, comp, Property('co', (p, q2)),
                    r_c=fact_r(f), s_c=fact_s(f))


def _rule_co_false(rc: RC) -> Verdict:
    rc.n_premises(0)
    rc.no_extra_args()
    comp = rc.comp()
    rc.need(rc.stated.prop is not None and rc.stated.prop.kind == 'co',
            'stated fact must be a co fact')
    p, q = rc.stated.prop.args
    bad = sub_verdict(rc.eng.unsat(p),
                      'the left side must be unsatisfiable')
    if bad:
        return bad
    return conclude(rc, comp, Property('co', (p, q)))


def _rule_co_true(rc: RC) -> Verdict:
    rc.n_premises(0)
    rc.no_extra_args()
    comp = rc.comp()
    rc.need(rc.stated.prop is not None and rc.stated.prop.kind == 'co',
            'stated fact must be a co fact')
    p, q = rc.stated.prop.args
    bad = sub_verdict(rc.eng.implies_all(TRUE, q),
                      'the right side must hold everywhere')
    if bad:
        return bad
    return conclude(rc, comp, Property('co', (p, q)))


def _special_conj_disj(rc: RC, kind: str, mode: str) -> Verdict:
    rc.n_premises(1, -1)
    rc.no_extra_args()
    comp = rc.comp(rc.prem(0))
    ps, rs, ss = [], [], []
    for i in range(len(rc.premises)):
        f = rc.prem(i, kind)
        rc.need(rc.comp(f) is comp, 'premises must be about one component')
        ps.append(f.prop.args[0])
        rs.append(fact_r(f))
        ss.append(fact_s(f))
    p = conj(*ps) if mode == 'and' else disj(*ps)
    return conclude(rc, comp, Property(kind, (p,)),
                    r_c=conj(*rs), s_c=conj(*ss))


def _rule_stable_co(rc: RC, mode: str) -> Verdict:
    rc.n_premises(2)
    rc.no_extra_args()
    a, b = rc.premises
    if a.prop is not None and a.prop.kind == 'stable':
        stf, cof = a, b
    else:
        stf, cof = b, a
    rc.need(stf.prop is not None and stf.prop.kind == 'stable'
            and cof.prop is not None and cof.prop.kind == 'co',
            'needs one stable and one co premise')
    comp = rc.comp(cof)
    rc.need(rc.comp(stf) is comp, 'premises must be about one component')
    r = stf.prop.args[0]
    p, q = cof.prop.args
    if mode == 'and':
        prop = Property('co', (conj(p, r), conj(q, r)))
    else:
        prop = Property('co', (disj(p, r), disj(q, r)))
    return conclude(rc, comp, prop,
                    r_c=conj(fact_r(stf), fact_r(cof)),
                    s_c=conj(fact_s(stf), fact_s(cof)))


def _rule_inv_weaken(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args()
    f = rc.prem(0, 'invariant')
    comp = rc.comp(f)
    rc.need(rc.stated.prop is not None and rc.stated.prop.kind == 'invariant',
            'stated fact must be an invariant')
    p2 = rc.stated.prop.args[0]
    bad = sub_verdict(rc.eng.implies_all(f.prop.args[0], p2),
                      'premise invariant must imply the stated one')
    if bad:
        return bad
    return conclude(rc, comp, Property('invariant', (p2,)),
                    r_c=fact_r(f), s_c=fact_s(f))


def _rule_stable_to_invariant(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args()
    f = rc.prem(0, 'stable')
    comp = rc.comp(f)
    p = f.prop.args[0]
    bad = sub_verdict(
        rc.eng.implies_all(TRUE, p, within=rc.eng.initial_mask()),
        'the predicate must hold initially')
    if bad:
        return bad
    return conclude(rc, comp, Property('invariant', (p,)),
                    r_c=fact_r(f), s_c=fact_s(f))


def _rule_constant_var(rc: RC) -> Verdict:
    rc.n_premises(0)
    rc.no_extra_args()
    comp = rc.comp()
    rc.need(rc.stated.prop is not None and rc.stated.prop.kind == 'constant',
            'stated fact must be a constant fact')
    e = rc.stated.prop.args[0]
    rc.need(isinstance(e, Var) and e.name in rc.eng.analysis.decls,
            'this rule applies to a single program variable')
    rc.need(e.name not in rc.eng.analysis.written(comp),
            f'{e.name} is written inside @{rc.stated.comp}')
    return conclude(rc, comp, rc.stated.prop)


def _constant_parts(rc: RC, comp: Comp) -> list:
    parts = []
    for i in range(len(rc.premises)):
        f = rc.prem(i, 'constant')
        rc.need(rc.comp(f) is comp, 'premises must be about one component')
        parts.append(f.prop.args[0])
    return parts


def _premise_spec(rc: RC) -> tuple[Expr, Expr]:
    """Combined precondition and exit assertion of all premises."""
    rs = [fact_r(f) for f in rc.premises]
    ss = [fact_s(f) for f in rc.premises]
    return conj(*rs), conj(*ss)


def _built_ok(rc: RC, e: Expr, parts: list) -> None:
    frees = [Var(n) for n in rc.eng.frees]
    rc.need(built_from(e, parts + frees),
            f'{pp_expr(e)} is not built from the premise expressions')


def _rule_constant_form(rc: RC) -> Verdict:
    rc.n_premises(1, -1)
    rc.no_extra_args()
    comp = rc.comp(rc.prem(0))
    parts = _constant_parts(rc, comp)
    rc.need(rc.stated.prop is not None and rc.stated.prop.kind == 'constant',
            'stated fact must be a constant fact')
    _built_ok(rc, rc.stated.prop.args[0], parts)
    r_c, s_c = _premise_spec(rc)
    return conclude(rc, comp, rc.stated.prop, r_c=r_c, s_c=s_c)


def _rule_constant_to_stable(rc: RC) -> Verdict:
    rc.n_premises(1, -1)
    rc.no_extra_args()
    comp = rc.comp(rc.prem(0))
    parts = _constant_parts(rc, comp)
    rc.need(rc.stated.prop is not None and rc.stated.prop.kind == 'stable',
            'stated fact must be a stable fact')
    _built_ok(rc, rc.stated.prop.args[0], parts)
    r_c, s_c = _premise_spec(rc)
    return conclude(rc, comp, rc.stated.prop, r_c=r_c, s_c=s_c)


def _rule_constant_to_invariant(rc: RC) -> Verdict:
    rc.n_premises(1, -1)
    rc.no_extra_args()
    comp = rc.comp(rc.prem(0))
    parts = _constant_parts(rc, comp)
    rc.need(rc.stated.prop is not None and rc.stated.prop.kind == 'invariant',
            'stated fact must be an invariant')
    p = rc.stated.prop.args[0]
    _built_ok(rc, p, parts)
    bad = sub_verdict(
        rc.eng.implies_all(TRUE, p, within=rc.eng.initial_mask()),
        'the predicate must hold initially')
    if bad:
        return bad
    r_c, s_c = _premise_spec(rc)
    return conclude(rc, comp, rc.stated.prop, r_c=r_c, s_c=s_c)


def _rule_spec_lhs_rhs(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args()
    f = rc.prem(0)
    comp = rc.comp(f)
    st = rc.stated
    if st.prop is not None:
        rc.need(f.prop is not None, 'premise carries no property to keep')
    if st.r is not None:
        bad = sub_verdict(locality_check(rc.eng, comp, st.r, 'precondition'), '')
        if bad:
            return bad
    if st.s is not None:
        bad = sub_verdict(locality_check(rc.eng, comp, st.s, 'exit assertion'), '')
        if bad:
            return bad
    return conclude(rc, comp, f.prop if st.prop is not None else None,
                    r_c=fact_r(f), s_c=fact_s(f))


def _rule_spec_conj(rc: RC) -> Verdict:
    rc.n_premises(1, -1)
    rc.no_extra_args()
    first = rc.prem(0)
    comp = rc.comp(first)
    rs, ss = [], []
    for i in range(len(rc.premises)):
        f = rc.prem(i)
        rc.need(rc.comp(f) is comp, 'premises must be about one component')
        if first.prop is None:
            rc.need(f.prop is None, 'premises must agree on the property')
        else:
            bad = sub_verdict(same_args(rc, [first, f], first.prop.kind),
                              'premise properties differ')
            if bad:
                return bad
        rs.append(fact_r(f))
        ss.append(fact_s(f))
    return conclude(rc, comp, first.prop, r_c=conj(*rs), s_c=conj(*ss))


def _rule_spec_disj(rc: RC) -> Verdict:
    rc.n_premises(1, -1)
    rc.no_extra_args()
    first = rc.prem(0)
    comp = rc.comp(first)
    rs, ss = [], []
    for i in range(len(rc.premises)):
        f = rc.prem(i)
        rc.need(rc.comp(f) is comp, 'premises must be about one component')
        if first.prop is None:
            rc.need(f.prop is None, 'premises must agree on the property')
        else:
            bad = sub_verdict(same_args(rc, [first, f], first.prop.kind),
                              'premise properties differ')
            if bad:
                return bad
        rs.append(fact_r(f))
        ss.append(fact_s(f))
    return conclude(rc, comp, first.prop, r_c=disj(*rs), s_c=disj(*ss))


# ---------------------------------------------------------------- inherit

def _entry_requirement(rc: RC, child: Comp, r: Expr) -> Optional[Verdict]:
    if r == TRUE:
        return None
    return sub_verdict(
        rc.eng.implies_all(TRUE, r, within=entry_mask(rc.eng, child)),
        f'precondition {pp_expr(r)} must hold when '
        f'@{rc.eng.analysis.ref_of(child)} starts')


def _while_test_obligation(rc: RC, comp: While, prop: Property) -> Optional[Verdict]:
    """The loop test is a state-preserving action of the component, not
    covered by the body premise."""
    eng = rc.eng
    pidx = eng.lts.point_index[id(comp)]
    pairs = _branch_pairs(eng, pidx, 'test')
    kind = prop.kind
    if kind in ('co', 'en'):
        p, q = prop.args
        if kind == 'en':
            p, q = conj(p, neg(q)), disj(p, q)
    elif kind in ('stable', 'invariant'):
        p = q = prop.args[0]
    elif kind == 'constant':
        e = prop.args[0]
        for env in eng.bindings_for(e):
            vals = eng.values(e, env)
            for src, dst in pairs:
                if vals[src] != vals[dst]:
                    return sub_verdict(
                        fail('the loop test changes the expression',
                             witness=eng.witness(src, env)), 'loop test')
        return None
    else:
        return None     # transient needs nothing from the test
    for env in eng.bindings_for(p, q):
        pb, qb = eng.bits(p, env), eng.bits(q, env)
        for src, dst in pairs:
            if (pb[src >> 3] >> (src & 7)) & 1 \
                    and not (qb[dst >> 3] >> (dst & 7)) & 1:
                return sub_verdict(
                    fail('the loop test can break the property',
                         witness=eng.witness(src, env)), 'loop test')
    return None


def coverage_en(rc: RC, comp: Comp, p: Expr, q: Expr) -> Optional[Verdict]:
    return sub_verdict(
        rc.eng.implies_all(p, q, within=rc.eng.done_mask(comp)),
        'after the component finishes nothing establishes the right side, '
        'so it must already hold')


def coverage_transient(rc: RC, comp: Comp, tau: Expr) -> Optional[Verdict]:
    return sub_verdict(
        rc.eng.implies_all(tau, FALSE, within=rc.eng.done_mask(comp)),
        'after the component finishes nothing can falsify the predicate')


def _rule_inherit(rc: RC) -> Verdict:
    """Lift identical child facts through one composition layer."""
    rc.no_extra_args()
    rc.n_premises(1, -1)
    comp = rc.comp()
    first = rc.prem(0)
    rc.need(first.prop is not None, 'premises must carry a property')
    kind = first.prop.kind
    bad = sub_verdict(same_args(rc, rc.premises, kind),
                      'premises must share one property')
    if bad:
        return bad
    prop = first.prop
    if kind == 'en':
        bad = coverage_en(rc, comp, *prop.args)
    elif kind == 'transient':
        bad = coverage_transient(rc, comp, prop.args[0])
    if bad:
        return bad

    if isinstance(comp, Join):
        seen = []
        for i in range(len(rc.premises)):
            f = rc.prem(i)
            node = rc.comp(f)
            rc.need(node in comp.children,
                    f'premise {i + 1} is not about a direct part of the join')
            rc.need(node not in seen, 'two premises cover the same part')
            seen.append(node)
        rc.need(len(seen) == len(comp.children),
                'every part of the join needs a premise')
        order = {id(c): i for i, c in enumerate(comp.children)}
        pairs = sorted(zip(seen, rc.premises), key=lambda t: order[id(t[0])])
        r_c = conj(*[fact_r(f) for _, f in pairs])
        s_c = conj(*[fact_s(f) for _, f in pairs])
        return conclude(rc, comp, prop, r_c=r_c, s_c=s_c)

    if isinstance(comp, SeqBlock):
        rc.need(kind != 'en',
                'en does not lift through sequencing this way; '
                'use en-seq')
        rc.need(len(rc.premises) == len(comp.items),
                'one premise per sequence item, in order')
        for i, f in enumerate(rc.premises):
            rc.need(rc.comp(f) is comp.items[i],
                    f'premise {i + 1} must be about item {i}')
            if i > 0:
                bad = _entry_requirement(rc, comp.items[i], fact_r(f))
                if bad:
                    return bad
        return conclude(rc, comp, prop,
                        r_c=fact_r(rc.premises[0]),
                        s_c=fact_s(rc.premises[-1]))

    if isinstance(comp, Loop):
        rc.need(len(rc.premises) == 1, 'a loop lifts a single body premise')
        f = rc.premises[0]
        rc.need(rc.comp(f) is comp.body, 'the premise must be about the body')
        bad = _entry_requirement(rc, comp.body, fact_r(f))
        if bad:
            return bad
        return conclude(rc, comp, prop, r_c=fact_r(f), s_c=FALSE)

    if isinstance(comp, While):
        rc.need(len(rc.premises) == 1, 'a loop lifts a single body premise')
        f = rc.premises[0]
        rc.need(rc.comp(f) is comp.body, 'the premise must be about the body')
        bad = _entry_requirement(rc, comp.body, fact_r(f))
        if bad:
            return bad
        bad = _while_test_obligation(rc, comp, prop)
        if bad:
            return bad
        r_b = fact_r(f)
        return conclude(rc, comp, prop, r_c=r_b,
                        s_c=conj(r_b, neg(comp.guard)))

    raise CheckError('inheritance applies to a join, sequence or loop')


def _rule_invariance(rc: RC) -> Verdict:
    """Rewrite a fact using named invariants: on reachable states the
    invariants hold, so slots can be replaced by equivalent forms."""
    rc.n_premises(1, -1)
    rc.no_extra_args()
    f = rc.prem(0)
    comp = rc.comp(f)
    for i in range(1, len(rc.premises)):
        inv = rc.prem(i, 'invariant')
        bad = sub_verdict(
            locality_check(rc.eng, comp, inv.prop.args[0], 'invariant'), '')
        if bad:
            return bad
    return _rewrite_like(rc, f, comp)


def _rewrite_like(rc: RC, f: Fact, comp: Comp) -> Verdict:
    st = rc.stated
    if st.prop is None:
        prop = None
    else:
        rc.need(f.prop is not None and f.prop.kind == st.prop.kind,
                'stated fact must keep the premise property kind')
        prop = f.prop
    return conclude(rc, comp, prop, r_c=fact_r(f), s_c=fact_s(f))


def _rule_rewrite(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args()
    f = rc.prem(0)
    return _rewrite_like(rc, f, rc.comp(f))


def _rule_dual(rc: RC) -> Verdict:
    """Transport a fact along the priming bijection between paired
    variables and components."""
    rc.n_premises(1)
    rc.no_extra_args()
    eng = rc.eng
    an = eng.analysis
    rc.need(bool(an.prime_map), 'the program declares no primed pairs')
    f = rc.prem(0)
    src = rc.comp(f)
    from .frontend import ValidationError
    try:
        mapped = an.prime_comp(src)
        prop = None
        if f.prop is not None:
            prop = Property(f.prop.kind,
                            tuple(an.prime_expr(a) for a in f.prop.args))
        r_c = an.prime_expr(fact_r(f))
        s_c = an.prime_expr(fact_s(f))
    except ValidationError as ex:
        raise CheckError(str(ex))
    target = rc.comp()
    rc.need(ac_equal(mapped, target),
            f'@{rc.stated.comp} is not the primed counterpart of @{f.comp}')
    return conclude(rc, target, prop, r_c=r_c, s_c=s_c)


def _rule_assert_implies(rc: RC) -> Verdict:
    rc.n_premises(0)
    rc.no_extra_args('lhs', 'rhs')
    lhs = rc.art_expr('lhs')
    rhs = rc.art_expr('rhs')
    bad = sub_verdict(rc.eng.implies_all(lhs, rhs), 'implication')
    if bad:
        return bad
    rc.need(rc.stated is None, 'this step records no fact')
    return ok()


SAFETY_RULES: dict[str, Callable[[RC], Verdict]] = {
    'co-basis': _rule_co_basis,
    'stable-basis': _rule_co_basis,
    'constant-basis': _rule_co_basis,
    'invariant-basis': _rule_co_basis,
    'post-from-annotation': _rule_post_from_annotation,
    'co-conj': _rule_co_conj,
    'co-disj': _rule_co_disj,
    'co-lhs': _rule_co_lhs,
    'co-rhs': _rule_co_rhs,
    'co-false': _rule_co_false,
    'co-true': _rule_co_true,
    'stable-conj': lambda rc: _special_conj_disj(rc, 'stable', 'and'),
    'stable-disj': lambda rc: _special_conj_disj(rc, 'stable', 'or'),
    'stable-co-conj': lambda rc: _rule_stable_co(rc, 'and'),
    'stable-co-disj': lambda rc: _rule_stable_co(rc, 'or'),
    'inv-conj': lambda rc: _special_conj_disj(rc, 'invariant', 'and'),
    'inv-disj': lambda rc: _special_conj_disj(rc, 'invariant', 'or'),
    'inv-weaken': _rule_inv_weaken,
    'stable-to-invariant': _rule_stable_to_invariant,
    'constant-var': _rule_constant_var,
    'constant-form': _rule_constant_form,
    'constant-to-stable': _rule_constant_to_stable,
    'constant-to-invariant': _rule_constant_to_invariant,
    'spec-lhs-rhs': _rule_spec_lhs_rhs,
    'spec-conj': _rule_spec_conj,
    'spec-disj': _rule_spec_disj,
    'inherit': _rule_inherit,
    'invariance': _rule_invariance,
    'rewrite': _rule_rewrite,
    'dual': _rule_dual,
    'assert-implies': _rule_assert_implies,
}


def apply_meta(eng: Engine, name: str, premises: list, artifacts: dict,
               stated: Optional[Fact],
               annotations: Optional[dict] = None) -> Verdict:
    handler = SAFETY_RULES.get(name)
    if handler is None:
        raise CheckError(f'unknown rule {name!r}')
    if stated is None and name != 'assert-implies':
        raise CheckError('this rule must state a concluded fact')
    rc = RC(eng, list(premises), dict(artifacts), stated,
            dict(annotations or {}))
    return handler(rc)
