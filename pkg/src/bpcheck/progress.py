"""Progress checking: transient and ensures bases plus the rules that
derive ensures and leads-to facts.

The grounding story mirrors safety: a basis obligation is discharged on
the reachable state space of the instance, for every binding of the free
variables, so each derived fact is true of the finite instance by
construction.  Weak fairness enters through the basis shape: a single
control point that stays ready and whose every effective move falsifies
the predicate must eventually fire.
"""
from __future__ import annotations

from typing import Callable, Optional

from .engine import CheckError, Engine
from .frontend import ac_equal
from .predicates import int_bounds
from .properties import Fact, Property, Verdict, fail, ok
from .safety import (RC, check_co, conclude, conj, coverage_en,
                     coverage_transient, disj, entry_mask, fact_r, fact_s,
                     neg, same_args, sub_verdict, _entry_requirement,
                     _rule_inherit)
from .syntax import (Act, Binary, Comp, Expr, If, Join, Lit, Loop, PostInd,
                     SeqBlock, TupleLit, Unary, Var, While, domain_contains,
                     expr_vars, pp_expr, TRUE, FALSE)


# --------------------------------------------------------------------------
# bases

def _point_falsifies(eng: Engine, pidx: int, tb: bytes, sid: int):
    """At sid, the point has an effective move and every effective move
    leaves the predicate's state set (packed in tb).  Returns (ok, reason)."""
    fired = False
    for t in eng.point_trans(pidx, sid):
        if not t.effective:
            continue
        fired = True
        if (tb[t.dst >> 3] >> (t.dst & 7)) & 1:
            return False, 'a move keeps the predicate'
    if not fired:
        return False, 'the point is not ready'
    return True, ''


def check_transient_basis(eng: Engine, comp: Comp, tau: Expr,
                          point: Optional[str] = None) -> Verdict:
    """transient tau via one control point: wherever tau holds, the point
    is at hand, ready, and every effective move it can make falsifies
    tau.  Weak fairness then forces tau down.  Without an explicit point
    each instance may pick its own."""
    eng.kindcheck(tau)
    if point is not None:
        node = eng.resolve(point)
        cands = eng.comp_points(node)
        if len(cands) != 1:
            raise CheckError(f'point=@{point} must name a single action')
        if cands[0] not in eng.comp_points(comp):
            raise CheckError(f'point=@{point} lies outside @'
                             + eng.analysis.ref_of(comp))
    else:
        cands = eng.comp_points(comp)
    chosen = set()
    for env in eng.bindings_for(tau):
        tv = eng.vec(tau, env) & eng.all_mask
        if not tv:
            continue
        tb = eng.bits(tau, env)
        best = None
        for pidx in cands:
            rm = eng.resident_mask(pidx)
            if tv & ~rm:
                sid = eng.first_sid(tv & ~rm)
                best = best or eng.witness(
                    sid, env, note=f'@{eng.lts.point_refs[pidx]} is not at '
                    'hand in some state satisfying the predicate')
                continue
            good = True
            for sid in range(eng.n):
                if not (tb[sid >> 3] >> (sid & 7)) & 1:
                    continue
                okp, why = _point_falsifies(eng, pidx, tb, sid)
                if not okp:
                    best = eng.witness(
                        sid, env, note=f'@{eng.lts.point_refs[pidx]}: {why}')
                    good = False
                    break
            if good:
                chosen.add(eng.lts.point_refs[pidx])
                break
        else:
            return fail('no single point falsifies the predicate everywhere',
                        witness=best)
    names = ', '.join(sorted(chosen)) or 'none needed'
    return ok(note=f'falsified at {names}')


def check_ensures(eng: Engine, comp: Comp, p: Expr, q: Expr) -> Verdict:
    """p en q, checked directly: the safety half p and not q co p or q
    within the component, and transient p and not q by some point of it."""
    pnq = conj(p, neg(q))
    v = check_co(eng, comp, pnq, disj(p, q))
    if not v.ok:
        return Verdict(False, note='safety half fails: ' + (v.note or ''),
                       witness=v.witness, details=v.details)
    t = check_transient_basis(eng, comp, pnq)
    if not t.ok:
        return Verdict(False, note='progress half fails: ' + (t.note or ''),
                       witness=t.witness, details=v.details)
    return Verdict(True, note=t.note, details=v.details)


def _single_point(rc: RC, comp: Comp) -> int:
    pts = rc.eng.comp_points(comp)
    rc.need(len(pts) == 1,
            'this basis applies to a component with a single control point')
    return pts[0]


def _ensures_basis(rc: RC, comp: Comp, p: Expr, q: Expr) -> Optional[Verdict]:
    eng = rc.eng
    pidx = _single_point(rc, comp)
    rm = eng.resident_mask(pidx)
    pnq = conj(p, neg(q))
    for env in eng.bindings_for(pnq, q):
        tv = eng.vec(pnq, env) & rm
        if not tv:
            continue
        qb = eng.bits(q, env)
        tb = tv.to_bytes((eng.n + 7) // 8 or 1, 'little')
        for sid in range(eng.n):
            if not (tb[sid >> 3] >> (sid & 7)) & 1:
                continue
            fired = False
            for t in eng.point_trans(pidx, sid):
                if not t.effective:
                    continue
                fired = True
                dst = t.dst
                if not (qb[dst >> 3] >> (dst & 7)) & 1:
                    return sub_verdict(fail(
                        'a move of the point misses the target',
                        witness=eng.witness(sid, env)), 'basis')
            if not fired:
                return sub_verdict(fail(
                    'the point is not ready in some state needing progress',
                    witness=eng.witness(sid, env)), 'basis')
    return None


# --------------------------------------------------------------------------
# rule handlers: transient

def _stated(rc: RC, kind: str) -> Property:
    rc.need(rc.stated is not None, 'this rule must state a fact')
    rc.need(rc.stated.prop is not None and rc.stated.prop.kind == kind,
            f'this rule concludes a {kind} fact')
    return rc.stated.prop


def _rule_transient_basis(rc: RC) -> Verdict:
    rc.n_premises(0)
    rc.no_extra_args('point')
    prop = _stated(rc, 'transient')
    comp = rc.comp()
    v = check_transient_basis(rc.eng, comp, prop.args[0],
                              point=rc.art_ref('point', required=False))
    bad = sub_verdict(v, 'transient basis')
    if bad:
        return bad
    out = conclude(rc, comp, prop, s_exit=True)
    if out.ok and v.note:
        out = ok(note=v.note)
    return out


def _rule_transient_false(rc: RC) -> Verdict:
    rc.n_premises(0)
    rc.no_extra_args()
    prop = _stated(rc, 'transient')
    comp = rc.comp()
    bad = sub_verdict(rc.eng.unsat(prop.args[0]),
                      'the predicate must be unsatisfiable')
    if bad:
        return bad
    return conclude(rc, comp, prop, s_exit=True)


def _rule_transient_strengthen(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args()
    f = rc.prem(0, 'transient')
    comp = rc.comp(f)
    prop = _stated(rc, 'transient')
    bad = sub_verdict(rc.eng.implies_all(prop.args[0], f.prop.args[0]),
                      'the stated predicate must imply the premise one')
    if bad:
        return bad
    return conclude(rc, comp, Property('transient', (prop.args[0],)),
                    r_c=fact_r(f), s_exit=True)


def _rule_transient_seq(rc: RC) -> Verdict:
    rc.n_premises(1, -1)
    rc.no_extra_args()
    prop = _stated(rc, 'transient')
    comp = rc.comp()
    rc.need(isinstance(comp, SeqBlock), 'the conclusion must be about a '
            'sequence')
    rc.need(len(rc.premises) == len(comp.items),
            'one premise per sequence item, in order')
    tau = prop.args[0]
    eng = rc.eng
    last = len(comp.items) - 1
    for i, item in enumerate(comp.items):
        f = rc.prem(i, 'transient')
        rc.need(rc.comp(f) is item, f'premise {i + 1} must be about item {i}')
        if i < last:
            want = conj(tau, neg(PostInd(eng.analysis.ref_of(item))))
        else:
            want = tau
        bad = sub_verdict(eng.equivalent(f.prop.args[0], want),
                          f'premise {i + 1} must cover {pp_expr(want)}')
        if bad:
            return bad
        if i > 0:
            bad = _entry_requirement(rc, item, fact_r(f))
            if bad:
                return bad
    bad = coverage_transient(rc, comp, tau)
    if bad:
        return bad
    return conclude(rc, comp, prop, r_c=fact_r(rc.premises[0]), s_exit=True)


def _rule_transient_concurrency(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args()
    f = rc.prem(0, 'transient')
    child = rc.comp(f)
    prop = _stated(rc, 'transient')
    comp = rc.comp()
    rc.need(isinstance(comp, Join) and child in comp.children,
            'the conclusion must be about a join with the premise '
            'component as a direct part')
    bad = sub_verdict(rc.eng.equivalent(f.prop.args[0], prop.args[0]),
                      'premise and conclusion predicates must agree')
    if bad:
        return bad
    bad = coverage_transient(rc, child, prop.args[0])
    if bad:
        return bad
    return conclude(rc, comp, prop, r_c=fact_r(f), s_exit=True)


# --------------------------------------------------------------------------
# rule handlers: ensures

def _en_conclude(rc: RC, comp: Comp, p: Expr, q: Expr,
                 r_c: Optional[Expr] = None) -> Verdict:
    bad = coverage_en(rc, comp, p, q)
    if bad:
        return bad
    return conclude(rc, comp, Property('en', (p, q)), r_c=r_c, s_exit=True)


def _rule_en_def(rc: RC) -> Verdict:
    rc.n_premises(2)
    rc.no_extra_args()
    prop = _stated(rc, 'en')
    p, q = prop.args
    comp = rc.comp()
    a, b = rc.premises
    if a.prop is not None and a.prop.kind == 'transient':
        tr, co = a, b
    else:
        tr, co = b, a
    rc.need(co.prop is not None and co.prop.kind == 'co'
            and tr.prop is not None and tr.prop.kind == 'transient',
            'needs one co premise and one transient premise')
    rc.need(rc.comp(co) is comp and rc.comp(tr) is comp,
            'premises must be about the stated component')
    pnq = conj(p, neg(q))
    for got, want, role in ((co.prop.args[0], pnq, 'co left side'),
                            (co.prop.args[1], disj(p, q), 'co right side'),
                            (tr.prop.args[0], pnq, 'transient predicate')):
        bad = sub_verdict(rc.eng.equivalent(got, want),
                          f'{role} must match {pp_expr(want)}')
        if bad:
            return bad
    return _en_conclude(rc, comp, p, q, r_c=conj(fact_r(co), fact_r(tr)))


def _rule_en_basis(rc: RC) -> Verdict:
    rc.n_premises(0)
    rc.no_extra_args()
    prop = _stated(rc, 'en')
    comp = rc.comp()
    p, q = prop.args
    bad = _ensures_basis(rc, comp, p, q)
    if bad:
        return bad
    return _en_conclude(rc, comp, p, q)


def _rule_en_seq(rc: RC) -> Verdict:
    rc.n_premises(2, -1)
    rc.no_extra_args()
    prop = _stated(rc, 'en')
    comp = rc.comp()
    rc.need(isinstance(comp, SeqBlock), 'the conclusion must be about a '
            'sequence')
    rc.need(len(rc.premises) == len(comp.items),
            'one premise per sequence item, in order')
    p, q = prop.args
    eng = rc.eng
    last = len(comp.items) - 1
    for i, item in enumerate(comp.items):
        f = rc.prem(i, 'en')
        rc.need(rc.comp(f) is item, f'premise {i + 1} must be about item {i}')
        bad = sub_verdict(eng.equivalent(f.prop.args[0], p),
                          f'premise {i + 1} left side must match {pp_expr(p)}')
        if bad:
            return bad
        if i < last:
            want = disj(conj(p, PostInd(eng.analysis.ref_of(item))), q)
        else:
            want = q
        bad = sub_verdict(eng.equivalent(f.prop.args[1], want),
                          f'premise {i + 1} right side must match '
                          f'{pp_expr(want)}')
        if bad:
            return bad
        if i > 0:
            bad = _entry_requirement(rc, item, fact_r(f))
            if bad:
                return bad
    return _en_conclude(rc, comp, p, q, r_c=fact_r(rc.premises[0]))


def _rule_en_concurrency(rc: RC, stable_form: bool = False) -> Verdict:
    rc.n_premises(2, -1)
    rc.no_extra_args()
    prop = _stated(rc, 'en')
    comp = rc.comp()
    rc.need(isinstance(comp, Join), 'the conclusion must be about a join')
    p, q = prop.args
    f = rc.prem(0, 'en')
    child = rc.comp(f)
    rc.need(child in comp.children,
            'the first premise must be about a direct part of the join')
    bad = sub_verdict(same_args(rc, [f, rc.stated], 'en'),
                      'premise and conclusion must agree')
    if bad:
        return bad
    others = [c for c in comp.children if c is not child]
    rc.need(len(rc.premises) == 1 + len(others),
            'one side premise per other part of the join')
    seen = []
    for i in range(1, len(rc.premises)):
        g = rc.prem(i, 'stable' if stable_form else 'co')
        node = rc.comp(g)
        rc.need(node in others, f'premise {i + 1} must be about another '
                'direct part of the join')
        rc.need(node not in seen, 'two side premises cover the same part')
        seen.append(node)
        if stable_form:
            bad = sub_verdict(rc.eng.equivalent(g.prop.args[0], p),
                              f'premise {i + 1} must keep {pp_expr(p)} stable')
        else:
            pnq, pq = conj(p, neg(q)), disj(p, q)
            bad = sub_verdict(rc.eng.equivalent(g.prop.args[0], pnq),
                              f'premise {i + 1} left side must match '
                              f'{pp_expr(pnq)}')
            if not bad:
                bad = sub_verdict(rc.eng.equivalent(g.prop.args[1], pq),
                                  f'premise {i + 1} right side must match '
                                  f'{pp_expr(pq)}')
        if bad:
            return bad
    rcs = conj(*[fact_r(x) for x in rc.premises])
    return _en_conclude(rc, comp, p, q, r_c=rcs)


def _rule_en_implication(rc: RC) -> Verdict:
    rc.n_premises(0)
    rc.no_extra_args()
    prop = _stated(rc, 'en')
    comp = rc.comp()
    p, q = prop.args
    bad = sub_verdict(rc.eng.implies_all(p, q),
                      'the left side must imply the right side')
    if bad:
        return bad
    return _en_conclude(rc, comp, p, q)


def _rule_en_rhs_weaken(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args()
    f = rc.prem(0, 'en')
    comp = rc.comp(f)
    prop = _stated(rc, 'en')
    p, q = f.prop.args
    p2, q2 = prop.args
    bad = sub_verdict(rc.eng.equivalent(p, p2), 'left sides must agree')
    if bad:
        return bad
    bad = sub_verdict(rc.eng.implies_all(q, q2),
                      'the premise right side must imply the stated one')
    if bad:
        return bad
    return _en_conclude(rc, comp, p2, q2, r_c=fact_r(f))


def _rule_en_partial_conj(rc: RC) -> Verdict:
    rc.n_premises(2, -1)
    rc.no_extra_args()
    comp = rc.comp(rc.prem(0))
    ps, rs = [], []
    q0 = rc.prem(0, 'en').prop.args[1]
    for i in range(len(rc.premises)):
        f = rc.prem(i, 'en')
        rc.need(rc.comp(f) is comp, 'premises must be about one component')
        bad = sub_verdict(rc.eng.equivalent(f.prop.args[1], q0),
                          'premises must share one right side')
        if bad:
            return bad
        ps.append(f.prop.args[0])
        rs.append(fact_r(f))
    return _en_conclude(rc, comp, conj(*ps), q0, r_c=conj(*rs))


def _rule_en_lhs_manip(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args()
    f = rc.prem(0, 'en')
    comp = rc.comp(f)
    prop = _stated(rc, 'en')
    p, q = f.prop.args
    p2, q2 = prop.args
    bad = sub_verdict(rc.eng.equivalent(q, q2), 'right sides must agree')
    if bad:
        return bad
    bad = sub_verdict(rc.eng.implies_all(conj(p, neg(q)), p2),
                      'the premise left side (up to the target) must imply '
                      'the stated one')
    if bad:
        return bad
    bad = sub_verdict(rc.eng.implies_all(p2, disj(p, q)),
                      'the stated left side must stay within the premise '
                      'left side or target')
    if bad:
        return bad
    return _en_conclude(rc, comp, p2, q, r_c=fact_r(f))


def _rule_en_psp(rc: RC, stable_form: bool = False) -> Verdict:
    rc.n_premises(2)
    rc.no_extra_args()
    f = rc.prem(0, 'en')
    g = rc.prem(1, 'stable' if stable_form else 'co')
    comp = rc.comp(f)
    rc.need(rc.comp(g) is comp, 'premises must be about one component')
    p, q = f.prop.args
    if stable_form:
        r = g.prop.args[0]
        lhs, rhs = conj(p, r), conj(q, r)
    else:
        r, s = g.prop.args
        lhs, rhs = conj(p, r), disj(conj(q, r), conj(neg(r), s))
    return _en_conclude(rc, comp, lhs, rhs, r_c=conj(fact_r(f), fact_r(g)))


# --------------------------------------------------------------------------
# rule handlers: leads-to

def _ltt_conclude(rc: RC, comp: Comp, p: Expr, q: Expr,
                  r_c: Optional[Expr] = None) -> Verdict:
    return conclude(rc, comp, Property('ltt', (p, q)), r_c=r_c, s_exit=True)


def _rule_ltt_basis(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args()
    f = rc.prem(0, 'en')
    comp = rc.comp(f)
    return _ltt_conclude(rc, comp, *f.prop.args, r_c=fact_r(f))


def _rule_ltt_trans(rc: RC) -> Verdict:
    rc.n_premises(2)
    rc.no_extra_args()
    f = rc.prem(0, 'ltt')
    g = rc.prem(1, 'ltt')
    comp = rc.comp(f)
    rc.need(rc.comp(g) is comp, 'premises must be about one component')
    bad = sub_verdict(rc.eng.equivalent(f.prop.args[1], g.prop.args[0]),
                      'the first target must match the second start')
    if bad:
        return bad
    return _ltt_conclude(rc, comp, f.prop.args[0], g.prop.args[1],
                         r_c=conj(fact_r(f), fact_r(g)))


def _rule_ltt_disj(rc: RC) -> Verdict:
    rc.n_premises(1, -1)
    rc.no_extra_args()
    comp = rc.comp(rc.prem(0))
    ps, qs, rs = [], [], []
    for i in range(len(rc.premises)):
        f = rc.prem(i, 'ltt')
        rc.need(rc.comp(f) is comp, 'premises must be about one component')
        ps.append(f.prop.args[0])
        qs.append(f.prop.args[1])
        rs.append(fact_r(f))
    return _ltt_conclude(rc, comp, disj(*ps), disj(*qs), r_c=conj(*rs))


def _rule_ltt_implication(rc: RC) -> Verdict:
    rc.n_premises(0)
    rc.no_extra_args()
    prop = _stated(rc, 'ltt')
    comp = rc.comp()
    p, q = prop.args
    bad = sub_verdict(rc.eng.implies_all(p, q),
                      'the left side must imply the right side')
    if bad:
        return bad
    return _ltt_conclude(rc, comp, p, q)


def _rule_ltt_lhs(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args()
    f = rc.prem(0, 'ltt')
    comp = rc.comp(f)
    prop = _stated(rc, 'ltt')
    p2, q2 = prop.args
    bad = sub_verdict(rc.eng.equivalent(f.prop.args[1], q2),
                      'right sides must agree')
    if bad:
        return bad
    bad = sub_verdict(rc.eng.implies_all(p2, f.prop.args[0]),
                      'the stated start must imply the premise start')
    if bad:
        return bad
    return _ltt_conclude(rc, comp, p2, q2, r_c=fact_r(f))


def _rule_ltt_rhs(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args()
    f = rc.prem(0, 'ltt')
    comp = rc.comp(f)
    prop = _stated(rc, 'ltt')
    p2, q2 = prop.args
    bad = sub_verdict(rc.eng.equivalent(f.prop.args[0], p2),
                      'left sides must agree')
    if bad:
        return bad
    bad = sub_verdict(rc.eng.implies_all(f.prop.args[1], q2),
                      'the premise target must imply the stated one')
    if bad:
        return bad
    return _ltt_conclude(rc, comp, p2, q2, r_c=fact_r(f))


def _rule_ltt_cancel(rc: RC) -> Verdict:
    rc.n_premises(2)
    rc.no_extra_args('q')
    q = rc.art_expr('q')
    f = rc.prem(0, 'ltt')
    g = rc.prem(1, 'ltt')
    comp = rc.comp(f)
    rc.need(rc.comp(g) is comp, 'premises must be about one component')
    want = disj(q, g.prop.args[0])
    bad = sub_verdict(rc.eng.equivalent(f.prop.args[1], want),
                      f'the first target must split as {pp_expr(want)}')
    if bad:
        return bad
    return _ltt_conclude(rc, comp, f.prop.args[0], disj(q, g.prop.args[1]),
                         r_c=conj(fact_r(f), fact_r(g)))


def _rule_ltt_impossible(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args()
    f = rc.prem(0, 'ltt')
    comp = rc.comp(f)
    bad = sub_verdict(rc.eng.equivalent(f.prop.args[1], FALSE),
                      'the premise target must be false')
    if bad:
        return bad
    return conclude(rc, comp, Property('invariant', (neg(f.prop.args[0]),)),
                    r_c=fact_r(f), s_exit=True)


def _rule_ltt_psp(rc: RC, stable_form: bool = False) -> Verdict:
    rc.n_premises(2)
    rc.no_extra_args()
    f = rc.prem(0, 'ltt')
    g = rc.prem(1, 'stable' if stable_form else 'co')
    comp = rc.comp(f)
    rc.need(rc.comp(g) is comp, 'premises must be about one component')
    p, q = f.prop.args
    if stable_form:
        r = g.prop.args[0]
        lhs, rhs = conj(p, r), conj(q, r)
    else:
        r, s = g.prop.args
        lhs, rhs = conj(p, r), disj(conj(q, r), conj(neg(r), s))
    return _ltt_conclude(rc, comp, lhs, rhs, r_c=conj(fact_r(f), fact_r(g)))


def _metric_parts(metric: Expr) -> list:
    if isinstance(metric, TupleLit):
        return list(metric.items)
    return [metric]


def _rule_ltt_induction(rc: RC) -> Verdict:
    rc.n_premises(1)
    rc.no_extra_args('metric', 'var')
    metric = rc.art_expr('metric')
    mvar = rc.art_name('var')
    eng = rc.eng
    rc.need(mvar in eng.frees, f'{mvar} must be a declared free variable')
    prop = _stated(rc, 'ltt')
    p, q = prop.args
    rc.need(mvar not in eng.free_names_in(p, q),
            f'{mvar} must not occur in the conclusion')
    f = rc.prem(0, 'ltt')
    comp = rc.comp(f)

    # the metric never goes below zero, so < on it is well founded
    doms = {n: d.domain for n, d in eng.analysis.decls.items()}
    for part in _metric_parts(metric):
        eng.kindcheck(part, want='int')
        b = int_bounds(part, doms, eng.frees)
        rc.need(b is not None and b[0] >= 0,
                f'cannot show {pp_expr(part)} stays nonnegative')

    # every reachable metric value lies inside the variable's range
    dom = eng.frees[mvar]
    for env in eng.bindings_for(metric):
        for sid, v in enumerate(eng.values(metric, env)):
            if not domain_contains(dom, v):
                return fail(f'the metric takes value {v} outside the range '
                            f'of {mvar}', witness=eng.witness(sid, env))

    msel = Binary('=', metric, Var(mvar))
    want_l = conj(p, msel)
    want_r = disj(conj(p, Binary('<', metric, Var(mvar))), q)
    bad = sub_verdict(eng.equivalent(f.prop.args[0], want_l),
                      f'the premise start must match {pp_expr(want_l)}')
    if bad:
        return bad
    bad = sub_verdict(eng.equivalent(f.prop.args[1], want_r),
                      f'the premise target must match {pp_expr(want_r)}')
    if bad:
        return bad
    return _ltt_conclude(rc, comp, p, q, r_c=fact_r(f))


def _rule_ltt_completion(rc: RC) -> Verdict:
    rc.n_premises(2, -1)
    rc.no_extra_args('b')
    b = rc.art_expr('b')
    rc.need(len(rc.premises) % 2 == 0,
            'premises come in pairs: a leads-to and its matching co fact')
    comp = rc.comp(rc.prem(0))
    ps, qs = [], []
    for i in range(0, len(rc.premises), 2):
        lt = rc.prem(i, 'ltt')
        co = rc.prem(i + 1, 'co')
        rc.need(rc.comp(lt) is comp and rc.comp(co) is comp,
                'premises must be about one component')
        qi = co.prop.args[0]
        bad = sub_verdict(rc.eng.equivalent(co.prop.args[1], disj(qi, b)),
                          f'co premise {i + 2} right side must be its left '
                          'side or the escape')
        if bad:
            return bad
        bad = sub_verdict(rc.eng.equivalent(lt.prop.args[1], disj(qi, b)),
                          f'leads-to premise {i + 1} target must match the '
                          'co premise left side or the escape')
        if bad:
            return bad
        ps.append(lt.prop.args[0])
        qs.append(qi)
    return _ltt_conclude(rc, comp, conj(*ps), disj(conj(*qs), b))


def _lift_shared(rc: RC, child: Comp, x: Expr) -> Optional[Verdict]:
    xvars = expr_vars(x)
    missing = sorted(v for v in rc.eng.analysis.shared_with_rest(child)
                     if v not in xvars)
    if missing:
        return sub_verdict(fail(
            f'the snapshot tuple must mention every shared variable; '
            f'missing: {", ".join(missing)}'), 'lift')
    return None


def _rule_ltt_lift(rc: RC) -> Verdict:
    """Carry a leads-to of one part into the join, given that the other
    parts preserve a snapshot of everything the part can see."""
    rc.n_premises(2, -1)
    rc.no_extra_args('x', 'X', 'r')
    x = rc.art_expr('x')
    snap = rc.art_expr('X')
    r = rc.art_expr('r')
    f = rc.prem(0, 'ltt')
    child = rc.comp(f)
    comp = rc.comp()
    rc.need(isinstance(comp, Join) and child in comp.children,
            'the conclusion must be about a join with the premise '
            'component as a direct part')
    bad = _lift_shared(rc, child, x)
    if bad:
        return bad
    others = [c for c in comp.children if c is not child]
    rc.need(len(rc.premises) == 1 + len(others),
            'one co premise per other part of the join')
    eq = Binary('=', x, snap)
    want_l, want_r = conj(r, eq), disj(eq, neg(r))
    seen = []
    for i in range(1, len(rc.premises)):
        g = rc.prem(i, 'co')
        node = rc.comp(g)
        rc.need(node in others, f'premise {i + 1} must be about another '
                'direct part of the join')
        rc.need(node not in seen, 'two co premises cover the same part')
        seen.append(node)
        bad = sub_verdict(rc.eng.equivalent(g.prop.args[0], want_l),
                          f'co premise {i + 1} left side must match '
                          f'{pp_expr(want_l)}')
        if not bad:
            bad = sub_verdict(rc.eng.equivalent(g.prop.args[1], want_r),
                              f'co premise {i + 1} right side must match '
                              f'{pp_expr(want_r)}')
        if bad:
            return bad
    p, q = f.prop.args
    return _ltt_conclude(rc, comp, p, disj(q, neg(r)), r_c=fact_r(f))


def _rule_ltt_lift_snapshot(rc: RC) -> Verdict:
    """Specialized lift: while the snapshot of the part's view stays
    put, its leads-to carries over; any interference shows up as the
    snapshot changing."""
    rc.n_premises(1)
    rc.no_extra_args('x', 'var')
    x = rc.art_expr('x')
    mvar = rc.art_name('var')
    eng = rc.eng
    rc.need(mvar in eng.frees, f'{mvar} must be a declared free variable')
    f = rc.prem(0, 'ltt')
    child = rc.comp(f)
    comp = rc.comp()
    rc.need(isinstance(comp, Join) and child in comp.children,
            'the conclusion must be about a join with the premise '
            'component as a direct part')
    bad = _lift_shared(rc, child, x)
    if bad:
        return bad
    p, q = f.prop.args
    rc.need(mvar not in eng.free_names_in(p, q, x),
            f'{mvar} must not occur in the premise or the snapshot')

    # with plain variables, any interference visibly moves the snapshot;
    # composite entries need that checked against the other parts
    if any(not isinstance(part, Var) for part in _metric_parts(x)):
        shared = eng.analysis.shared_with_rest(child)
        idx = [eng.analysis.var_index[v] for v in sorted(shared)]
        for other in (c for c in comp.children if c is not child):
            for env in eng.bindings_for(x):
                xvals = eng.values(x, env)
                for src, t in eng.eff_trans(other):
                    a, b2 = eng.lts.row_of(src), eng.lts.row_of(t.dst)
                    if all(a[i] == b2[i] for i in idx):
                        continue
                    if xvals[src] != xvals[t.dst]:
                        continue
                    return sub_verdict(fail(
                        'a step of the other parts touches the shared state '
                        'without moving the snapshot',
                        witness=eng.witness(src, env)), 'lift')

    eq = Binary('=', x, Var(mvar))
    return _ltt_conclude(rc, comp, conj(p, eq), disj(q, neg(eq)),
                         r_c=fact_r(f))


# --------------------------------------------------------------------------
# registries and dispatch

def _alias_inherit(kind: str) -> Callable[[RC], Verdict]:
    def h(rc: RC) -> Verdict:
        for i in range(len(rc.premises)):
            rc.prem(i, kind)
        return _rule_inherit(rc)
    return h


TRANSIENT_RULES: dict[str, Callable[[RC], Verdict]] = {
    'transient-basis': _rule_transient_basis,
    'transient-false': _rule_transient_false,
    'transient-strengthen': _rule_transient_strengthen,
    'transient-seq': _rule_transient_seq,
    'transient-concurrency': _rule_transient_concurrency,
    'transient-inherit': _alias_inherit('transient'),
}

ENSURES_RULES: dict[str, Callable[[RC], Verdict]] = {
    'en-def': _rule_en_def,
    'en-basis': _rule_en_basis,
    'en-seq': _rule_en_seq,
    'en-concurrency': _rule_en_concurrency,
    'en-concurrency-stable': lambda rc: _rule_en_concurrency(rc, True),
    'en-inherit': _alias_inherit('en'),
    'en-implication': _rule_en_implication,
    'en-rhs-weaken': _rule_en_rhs_weaken,
    'en-partial-conj': _rule_en_partial_conj,
    'en-lhs-manip': _rule_en_lhs_manip,
    'en-psp': _rule_en_psp,
    'en-psp-stable': lambda rc: _rule_en_psp(rc, True),
}

LTT_RULES: dict[str, Callable[[RC], Verdict]] = {
    'ltt-basis': _rule_ltt_basis,
    'ltt-trans': _rule_ltt_trans,
    'ltt-disj': _rule_ltt_disj,
    'ltt-implication': _rule_ltt_implication,
    'ltt-lhs': _rule_ltt_lhs,
    'ltt-rhs': _rule_ltt_rhs,
    'ltt-cancel': _rule_ltt_cancel,
    'ltt-impossible': _rule_ltt_impossible,
    'ltt-psp': _rule_ltt_psp,
    'ltt-psp-stable': lambda rc: _rule_ltt_psp(rc, True),
    'ltt-induction': _rule_ltt_induction,
    'ltt-completion': _rule_ltt_completion,
    'ltt-lift': _rule_ltt_lift,
    'ltt-lift-snapshot': _rule_ltt_lift_snapshot,
}


def _apply(table: dict, eng: Engine, name: str, premises: list,
           artifacts: dict, stated: Optional[Fact],
           annotations: Optional[dict] = None) -> Verdict:
    handler = table.get(name)
    if handler is None:
        raise CheckError(f'unknown rule {name!r}')
    if stated is None:
        raise CheckError('this rule must state a concluded fact')
    rc = RC(eng, list(premises), dict(artifacts), stated,
            dict(annotations or {}))
    return handler(rc)


def apply_transient_rule(eng, name, premises, artifacts, stated,
                         annotations=None) -> Verdict:
    return _apply(TRANSIENT_RULES, eng, name, premises, artifacts, stated,
                  annotations)


def apply_ensures_rule(eng, name, premises, artifacts, stated,
                       annotations=None) -> Verdict:
    return _apply(ENSURES_RULES, eng, name, premises, artifacts, stated,
                  annotations)


def apply_ltt_rule(eng, name, premises, artifacts, stated,
                   annotations=None) -> Verdict:
    return _apply(LTT_RULES, eng, name, premises, artifacts, stated,
                  annotations)
