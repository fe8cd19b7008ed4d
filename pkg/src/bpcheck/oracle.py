"""Exhaustive fair-execution oracle.

Everything here works directly on the reachable transition system: no
rules, no annotations.  Safety is checked transition by transition;
progress by hunting for a fair way to stay inside the bad region
forever.  Failures come with replayable lassos."""
from __future__ import annotations

from collections import deque
from typing import Optional

from .engine import CheckError, Engine
from .properties import Verdict, fail, ok
from .safety import conj, disj, neg
from .semantics import STUTTER, classify_end, fair_end_components
from .syntax import Comp, Expr, pp_expr


def _root(eng: Engine) -> Comp:
    return eng.lts.program.root


def _need_whole(eng: Engine, comp: Optional[Comp], what: str) -> Comp:
    root = _root(eng)
    if comp is not None and comp is not root:
        raise CheckError(f'the {what} oracle covers whole-program runs; '
                         'state it about @main')
    return root


def _step_rec(eng: Engine, src: int, t) -> dict:
    name = 'stutter' if t.point == STUTTER else eng.action_name(t.point, t)
    return {'from': src, 'action': name, 'to': t.dst}


def _bfs_path(eng: Engine, frm, goal: set, allowed=None) -> Optional[list]:
    """Shortest transition path from any state in frm to any state in
    goal, staying inside allowed (a bitmask) if given."""
    lts = eng.lts
    ab = None if allowed is None else \
        allowed.to_bytes((eng.n + 7) // 8 or 1, 'little')
    prev: dict = {}
    dq = deque()
    for s in frm:
        if s not in prev:
            prev[s] = None
            dq.append(s)
    hit = None
    for s in frm:
        if s in goal:
            hit = s
            break
    while hit is None and dq:
        v = dq.popleft()
        for t in lts.trans[v]:
            w = t.dst
            if w in prev or w == v:
                continue
            if ab is not None and not (ab[w >> 3] >> (w & 7)) & 1:
                continue
            prev[w] = (v, t)
            if w in goal:
                hit = w
                dq.clear()
                break
            dq.append(w)
    if hit is None:
        return None
    steps = []
    cur = hit
    while prev[cur] is not None:
        v, t = prev[cur]
        steps.append(_step_rec(eng, v, t))
        cur = v
    steps.reverse()
    return steps


def _fair_cycle(eng: Engine, comp: list) -> list:
    """A closed walk through every state of the component that fires one
    internal transition of each point resident throughout, so repeating
    it forever is weakly fair."""
    lts = eng.lts
    cset = set(comp)
    internal = [(s, t) for s in comp for t in lts.trans[s] if t.dst in cset]
    obligated = None
    for s in comp:
        act = set(lts.active_of(s)) or {STUTTER}
        obligated = act if obligated is None else (obligated & act)
    required = {}
    for s, t in internal:
        if t.point in obligated and t.point not in required:
            required[t.point] = (s, t)
    mask = 0
    for s in comp:
        mask |= 1 << s
    start = comp[0]
    cur = start
    steps: list = []

    def goto(target: int):
        nonlocal cur
        if cur == target:
            return
        part = _bfs_path(eng, [cur], {target}, allowed=mask)
        steps.extend(part)
        cur = target

    for s, t in required.values():
        goto(s)
        steps.append(_step_rec(eng, s, t))
        cur = t.dst
    for s in comp:
        goto(s)
    goto(start)
    if not steps:
        s, t = internal[0]
        goto(s)
        steps.append(_step_rec(eng, s, t))
        cur = t.dst
        goto(start)
    return steps


def replay_lasso(eng: Engine, witness: dict) -> Verdict:
    """Validate a lasso: transitions exist and chain up, the cycle
    closes, and repeating it forever is weakly fair."""
    lts = eng.lts
    segs = [witness.get(k) or [] for k in ('reach', 'avoid')]
    cycle = witness.get('cycle') or []
    if not cycle:
        return fail('no cycle in the witness')
    chain = segs[0] + segs[1] + cycle
    if chain[0]['from'] not in lts.initial:
        return fail('the lasso does not start in an initial state')
    at = chain[0]['from']
    for rec in chain:
        if rec['from'] != at:
            return fail(f'broken chain at state {at}')
        found = False
        for t in lts.trans[rec['from']]:
            name = ('stutter' if t.point == STUTTER
                    else eng.action_name(t.point, t))
            if t.dst == rec['to'] and name == rec['action']:
                found = True
                break
        if not found:
            return fail(f'no transition {rec["action"]} from {rec["from"]} '
                        f'to {rec["to"]}')
        at = rec['to']
    if at != cycle[0]['from']:
        return fail('the cycle does not close')
    cyc_states = {rec['from'] for rec in cycle}
    obligated = None
    for s in cyc_states:
        act = set(lts.active_of(s)) or {STUTTER}
        obligated = act if obligated is None else (obligated & act)
    fired = set()
    for rec in cycle:
        for t in lts.trans[rec['from']]:
            name = ('stutter' if t.point == STUTTER
                    else eng.action_name(t.point, t))
            if t.dst == rec['to'] and name == rec['action']:
                fired.add(t.point)
    if obligated and not obligated <= fired:
        miss = ', '.join(lts.point_refs[p] if p >= 0 else 'stutter'
                         for p in sorted(obligated - fired))
        return fail(f'unfair cycle: {miss} never fires')
    return ok()


# --------------------------------------------------------------------------
# the checks

def mc_invariant(eng: Engine, p: Expr) -> Verdict:
    """p holds in every reachable state."""
    eng.kindcheck(p)
    for env in eng.bindings_for(p):
        bad = eng.all_mask & ~eng.vec(p, env)
        if bad:
            sid = eng.first_sid(bad)
            steps = _bfs_path(eng, eng.lts.initial, {sid})
            w = eng.witness(sid, env)
            w['reach'] = steps
            return fail('a reachable state breaks the predicate', witness=w)
    return ok()


def mc_co(eng: Engine, p: Expr, q: Expr,
          comp: Optional[Comp] = None) -> Verdict:
    """Every effective step (of comp, or of the whole program) from a
    p-state lands in a q-state."""
    eng.kindcheck(p)
    eng.kindcheck(q)
    comp = comp if comp is not None else _root(eng)
    pairs = eng.eff_trans(comp)
    for env in eng.bindings_for(p, q):
        pb = eng.bits(p, env)
        qb = eng.bits(q, env)
        for src, t in pairs:
            if (pb[src >> 3] >> (src & 7)) & 1 \
                    and not (qb[t.dst >> 3] >> (t.dst & 7)) & 1:
                w = eng.witness(src, env)
                w['action'] = eng.action_name(t.point, t)
                w['after'] = eng.lts.state_info(t.dst)
                return fail('a step breaks the co property', witness=w)
    return ok()


def mc_stable(eng: Engine, p: Expr, comp: Optional[Comp] = None) -> Verdict:
    return mc_co(eng, p, p, comp)


def mc_constant(eng: Engine, e: Expr,
                comp: Optional[Comp] = None) -> Verdict:
    eng.kindcheck(e, want=None)
    comp = comp if comp is not None else _root(eng)
    for env in eng.bindings_for(e):
        vals = eng.values(e, env)
        for src, t in eng.eff_trans(comp):
            if vals[src] != vals[t.dst]:
                w = eng.witness(src, env)
                w['action'] = eng.action_name(t.point, t)
                w['after'] = eng.lts.state_info(t.dst)
                return fail(f'a step changes {pp_expr(e)}', witness=w)
    return ok()


def mc_transient(eng: Engine, tau: Expr,
                 comp: Optional[Comp] = None) -> Verdict:
    """No fair run keeps tau true forever."""
    _need_whole(eng, comp, 'transient')
    eng.kindcheck(tau)
    lts = eng.lts
    for env in eng.bindings_for(tau):
        tv = eng.vec(tau, env)
        if not tv:
            continue
        tb = eng.bits(tau, env)
        keep = [bool((tb[s >> 3] >> (s & 7)) & 1) for s in range(eng.n)]
        comps = fair_end_components(lts, keep)
        if comps:
            cyc_comp = comps[0]
            w = eng.witness(cyc_comp[0], env)
            w['reach'] = _bfs_path(eng, lts.initial, set(cyc_comp))
            w['cycle'] = _fair_cycle(eng, cyc_comp)
            return fail('a fair run keeps the predicate true forever',
                        witness=w)
    return ok()


def mc_ensures(eng: Engine, p: Expr, q: Expr,
               comp: Optional[Comp] = None) -> Verdict:
    root = _need_whole(eng, comp, 'ensures')
    pnq = conj(p, neg(q))
    v = mc_co(eng, pnq, disj(p, q), root)
    if not v.ok:
        return Verdict(False, note='safety half fails: ' + (v.note or ''),
                       witness=v.witness)
    v = mc_transient(eng, pnq)
    if not v.ok:
        return Verdict(False, note='progress half fails: ' + (v.note or ''),
                       witness=v.witness)
    return ok()


def mc_leadsto(eng: Engine, p: Expr, q: Expr,
               comp: Optional[Comp] = None) -> Verdict:
    """From every reachable p-state, every fair run meets a q-state."""
    _need_whole(eng, comp, 'leads-to')
    eng.kindcheck(p)
    eng.kindcheck(q)
    lts = eng.lts
    for env in eng.bindings_for(p, q):
        pv = eng.vec(p, env)
        qv = eng.vec(q, env)
        avoid = eng.all_mask & ~qv
        if not (pv & avoid):
            continue
        kb = avoid.to_bytes((eng.n + 7) // 8 or 1, 'little')
        keep = [bool((kb[s >> 3] >> (s & 7)) & 1) for s in range(eng.n)]
        comps = fair_end_components(lts, keep)
        if not comps:
            continue
        sus = set()
        for c in comps:
            sus.update(c)
        # backward closure of the sustainable states through the
        # q-avoiding subgraph
        radj: dict = {}
        for s in range(eng.n):
            if not keep[s]:
                continue
            for t in lts.trans[s]:
                if t.dst != s and keep[t.dst]:
                    radj.setdefault(t.dst, []).append(s)
        closure = set(sus)
        dq = deque(sus)
        while dq:
            v = dq.popleft()
            for u in radj.get(v, ()):
                if u not in closure:
                    closure.add(u)
                    dq.append(u)
        bad = 0
        for s in closure:
            bad |= 1 << s
        bad &= pv & avoid
        if not bad:
            continue
        sid = eng.first_sid(bad)
        target = None
        for c in comps:
            path = _bfs_path(eng, [sid], set(c), allowed=avoid)
            if path is not None:
                target = c
                break
        w = eng.witness(sid, env)
        w['reach'] = _bfs_path(eng, lts.initial, {sid})
        w['avoid'] = path
        w['cycle'] = _fair_cycle(eng, target)
        return fail('a fair run from a start state never meets the target',
                    witness=w)
    return ok()


def mc_terminal(eng: Engine, pred: Expr) -> Verdict:
    """pred holds in every terminated state."""
    eng.kindcheck(pred)
    lts = eng.lts
    mask = 0
    count = 0
    for sid in range(eng.n):
        if classify_end(lts, sid) == 'terminated':
            mask |= 1 << sid
            count += 1
    if count == 0:
        return ok(note='vacuous: no terminated states')
    for env in eng.bindings_for(pred):
        bad = mask & ~eng.vec(pred, env)
        if bad:
            sid = eng.first_sid(bad)
            w = eng.witness(sid, env)
            w['reach'] = _bfs_path(eng, lts.initial, {sid})
            return fail('a terminated state breaks the predicate', witness=w)
    return ok(note=f'{count} terminated states checked')
