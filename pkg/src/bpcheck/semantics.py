"""Finite-state semantics: exhaustive construction of the transition system.

States pair a control configuration with a row of variable values.  Every
resident control point contributes transitions: guarded actions execute
their body atomically when enabled and busy-wait otherwise, alternative
groups branch on the enabled alternatives, loop tests are always-enabled
deterministic branches.  A finished program stutters.

Transitions are labelled with the resident point that fired, so fairness
(every continuously resident point fires infinitely often) is a property
of labelled runs and end components.
"""
from __future__ import annotations

from collections import deque
from typing import Callable, NamedTuple, Optional

from .control import DONE, ControlMap, init_cfg
from .frontend import Analysis, ValidationError
from .predicates import Compiled, compile_expr
from .syntax import (Act, Assign, Comp, Get, If, Program, Put, While,
                     domain_contains, domain_values)

DEFAULT_BUDGET = 1_000_000

STUTTER = -1


class ExplorationError(Exception):
    def __init__(self, msg, info=None):
        super().__init__(msg)
        self.info = info or {}


class BudgetExceeded(ExplorationError):
    pass


class Trans(NamedTuple):
    point: int              # index into LTS.points, STUTTER for the idle loop
    alt: Optional[int]
    dst: int
    effective: bool
    completed: tuple        # refs of nodes whose subtree finished on this step


def _no_post(ce: Compiled, where: str) -> Compiled:
    if ce.post_refs:
        raise ValidationError(f'post() is not allowed in {where}')
    return ce


def _compile_stmts(stmts, analysis: Analysis):
    """Compile an atomic body into row -> sorted list of outcome rows."""
    vi = analysis.var_index
    decls = analysis.decls
    steps = []
    for st in stmts:
        if isinstance(st, Assign):
            idxs = [vi[t] for t in st.targets]
            doms = [decls[t].domain for t in st.targets]
            exprs = [_no_post(compile_expr(e, vi), 'program bodies')
                     for e in st.exprs]
            names = list(st.targets)

            def mk_assign(idxs=idxs, doms=doms, exprs=exprs, names=names):
                def run(rows):
                    out = []
                    for row in rows:
                        vals = [ce.fn(row, {}, ()) for ce in exprs]
                        nrow = list(row)
                        for i, d, v, nm in zip(idxs, doms, vals, names):
                            if not domain_contains(d, v):
                                raise ExplorationError(
                                    f'value {v!r} for {nm} leaves its range')
                            nrow[i] = v
                        out.append(nrow)
                    return out
                return run
            steps.append(mk_assign())
        elif isinstance(st, Get):
            bi, ti = vi[st.bag], vi[st.target]
            td = decls[st.target].domain
            tn = st.target

            def mk_get(bi=bi, ti=ti, td=td, tn=tn):
                def run(rows):
                    out = []
                    for row in rows:
                        bag = row[bi]
                        if not bag:
                            raise ExplorationError('get from an empty bag')
                        for v in sorted(set(bag)):
                            if not domain_contains(td, v):
                                raise ExplorationError(
                                    f'value {v!r} for {tn} leaves its range')
                            rest = list(bag)
                            rest.remove(v)
                            nrow = list(row)
                            nrow[bi] = tuple(sorted(rest))
                            nrow[ti] = v
                            out.append(nrow)
                    return out
                return run
            steps.append(mk_get())
        elif isinstance(st, Put):
            bi = vi[st.bag]
            bd = decls[st.bag].domain
            ce = _no_post(compile_expr(st.expr, vi), 'program bodies')

            def mk_put(bi=bi, bd=bd, ce=ce):
                def run(rows):
                    out = []
                    for row in rows:
                        v = ce.fn(row, {}, ())
                        if not (bd.lo <= v <= bd.hi):
                            raise ExplorationError(
                                f'element {v!r} leaves the bag range')
                        bag = tuple(sorted(row[bi] + (v,)))
                        if len(bag) > bd.cap:
                            raise ExplorationError('bag exceeds its capacity')
                        nrow = list(row)
                        nrow[bi] = bag
                        out.append(nrow)
                    return out
                return run
            steps.append(mk_put())
        else:
            raise TypeError(st)

    def execute(row):
        rows = [list(row)]
        for step in steps:
            rows = step(rows)
        return sorted(set(tuple(r) for r in rows))

    return execute


class LTS:
    def __init__(self, program: Program, analysis: Analysis, cm: ControlMap):
        self.program = program
        self.analysis = analysis
        self.cm = cm
        self.points: list[Comp] = [pi.node for pi in analysis.points]
        self.point_refs = [pi.ref for pi in analysis.points]
        self.point_index = {id(p): i for i, p in enumerate(self.points)}
        self.states: list[tuple] = []       # (cfg, row)
        self.index: dict = {}
        self.initial: list[int] = []
        self.trans: list[list[Trans]] = []
        self._active_cache: dict = {}
        self._done_cache: dict = {}
        self._dflag_cache: dict = {}

    # -- state access ------------------------------------------------------

    def cfg_of(self, sid: int):
        return self.states[sid][0]

    def row_of(self, sid: int) -> tuple:
        return self.states[sid][1]

    def active_of(self, sid: int) -> tuple:
        """Indices of resident points, () for a finished program."""
        cfg = self.states[sid][0]
        got = self._active_cache.get(cfg)
        if got is None:
            got = tuple(self.point_index[id(p)]
                        for p in self.cm.active_points(cfg))
            self._active_cache[cfg] = got
        return got

    def done_fn(self, sid: int) -> Callable[[str], bool]:
        cfg = self.states[sid][0]

        def done(ref: str) -> bool:
            key = (cfg, ref)
            got = self._done_cache.get(key)
            if got is None:
                got = self.cm.done_in(cfg, self.analysis.resolve(ref))
                self._done_cache[key] = got
            return got
        return done

    def dflags(self, sid: int, refs: tuple) -> tuple:
        if not refs:
            return ()
        cfg = self.states[sid][0]
        key = (cfg, refs)
        got = self._dflag_cache.get(key)
        if got is None:
            done = self.done_fn(sid)
            got = tuple(done(r) for r in refs)
            self._dflag_cache[key] = got
        return got

    def eval(self, compiled: Compiled, sid: int, env=None):
        refs = tuple(compiled.post_refs)
        return compiled.fn(self.row_of(sid), env or {}, self.dflags(sid, refs))

    # -- presentation ------------------------------------------------------

    def state_info(self, sid: int) -> dict:
        row = self.row_of(sid)
        vals = {}
        for name in self.analysis.var_order:
            v = row[self.analysis.var_index[name]]
            vals[name] = list(v) if isinstance(v, tuple) else v
        return {
            'state': sid,
            'vars': vals,
            'at': [self.point_refs[i] for i in self.active_of(sid)],
        }

    def state_str(self, sid: int) -> str:
        info = self.state_info(sid)
        vs = ', '.join(f'{k}={v}' for k, v in info['vars'].items())
        at = ', '.join(info['at']) or 'end'
        return f'[{vs} @ {at}]'


def format_cfg(cfg) -> str:
    if cfg == DONE:
        return 'D'
    if isinstance(cfg, tuple):
        return '(' + ' '.join(format_cfg(c) for c in cfg) + ')'
    return str(cfg)


def build_lts(program: Program, budget: int = DEFAULT_BUDGET,
              analysis: Optional[Analysis] = None) -> LTS:
    analysis = analysis or Analysis(program)
    cm = ControlMap(analysis)
    lts = LTS(program, analysis, cm)

    def cguard(a):
        return _no_post(compile_expr(a.guard, analysis.var_index), 'guards')

    guards: dict = {}
    bodies: dict = {}
    for pi in analysis.points:
        p = pi.node
        if isinstance(p, Act):
            if p.guard is not None:
                guards[id(p)] = cguard(p)
            bodies[id(p)] = _compile_stmts(analysis.exec_body[id(p)], analysis)
        elif isinstance(p, If):
            for a in p.alts:
                if a.guard is not None:
                    guards[id(a)] = cguard(a)
                bodies[id(a)] = _compile_stmts(
                    analysis.exec_body[id(a)], analysis)
        elif isinstance(p, While):
            guards[id(p)] = cguard(p)

    cfg_intern: dict = {}
    comp_intern: dict = {}

    def intern_cfg(cfg):
        return cfg_intern.setdefault(cfg, cfg)

    def intern_state(cfg, row) -> int:
        key = (cfg, row)
        sid = lts.index.get(key)
        if sid is None:
            sid = len(lts.states)
            if sid >= budget:
                raise BudgetExceeded(
                    f'state budget of {budget} exhausted', {'budget': budget})
            lts.states.append(key)
            lts.index[key] = sid
            lts.trans.append(None)
            queue.append(sid)
        return sid

    def completed_refs(nodes) -> tuple:
        refs = tuple(analysis.ref_of(n) for n in nodes)
        return comp_intern.setdefault(refs, refs)

    # initial states: fixed inits are pinned, free ones range over their
    # domain, then global initially-predicates filter
    fixed, open_names = [], []
    for name in analysis.var_order:
        d = analysis.decls[name]
        if d.init is not None:
            fixed.append(d.init)
            open_names.append(None)
        else:
            fixed.append(None)
            open_names.append(name)
    open_doms = [domain_values(analysis.decls[n].domain)
                 for n in open_names if n is not None]
    init_preds = [_no_post(compile_expr(p, analysis.var_index),
                           'initial conditions') for p in program.inits]

    def init_rows(prefix, rem):
        if not rem:
            yield tuple(prefix)
            return
        for v in rem[0]:
            yield from init_rows(prefix + [v], rem[1:])

    queue: deque = deque()
    root_cfg = intern_cfg(init_cfg(program.root))

    def gen_inits():
        slots = [i for i, n in enumerate(open_names) if n is not None]
        for combo in init_rows([], open_doms):
            row = list(fixed)
            for i, v in zip(slots, combo):
                row[i] = v
            row = tuple(row)
            if all(ip.fn(row, {}, ()) for ip in init_preds):
                yield row

    for row in gen_inits():
        sid = intern_state(root_cfg, row)
        if sid not in lts.initial:
            lts.initial.append(sid)

    if not lts.initial:
        raise ExplorationError('no state satisfies the initial conditions')

    def fire(cfg, row, point, act, alt, pre_done, out, pidx):
        try:
            outcomes = bodies[id(act)](row)
        except ExplorationError as ex:
            raise ExplorationError(
                f'{ex} while running {analysis.ref_of(point)}',
                {'point': analysis.ref_of(point)}) from ex
        ncfg, completed = cm.step_cfg(cfg, point, DONE, list(pre_done))
        ncfg = intern_cfg(ncfg)
        crefs = completed_refs(completed)
        for orow in outcomes:
            dst = intern_state(ncfg, orow)
            tr = Trans(pidx, alt, dst, True, crefs)
            if tr not in out:
                out.append(tr)

    while queue:
        sid = queue.popleft()
        cfg, row = lts.states[sid]
        out: list[Trans] = []
        active = cm.active_points(cfg)
        if not active:
            out.append(Trans(STUTTER, None, sid, False, ()))
        for point in active:
            pidx = lts.point_index[id(point)]
            if isinstance(point, Act):
                g = guards.get(id(point))
                if g is None or g.fn(row, {}, ()):
                    fire(cfg, row, point, point, None, [], out, pidx)
                else:
                    out.append(Trans(pidx, None, sid, False, ()))
            elif isinstance(point, If):
                any_on = False
                for ai, a in enumerate(point.alts):
                    g = guards.get(id(a))
                    if g is None or g.fn(row, {}, ()):
                        any_on = True
                        fire(cfg, row, point, a, ai, [a], out, pidx)
                if not any_on:
                    out.append(Trans(pidx, None, sid, False, ()))
            elif isinstance(point, While):
                if guards[id(point)].fn(row, {}, ()):
                    nlocal = ('B', init_cfg(point.body))
                else:
                    nlocal = DONE
                ncfg, completed = cm.step_cfg(cfg, point, nlocal, [])
                dst = intern_state(intern_cfg(ncfg), row)
                out.append(Trans(pidx, None, dst, True,
                                 completed_refs(completed)))
            else:
                raise TypeError(point)
        lts.trans[sid] = out

    return lts


def classify_end(lts: LTS, sid: int) -> str:
    """'terminated', 'deadlocked' or 'running'."""
    if not lts.active_of(sid):
        return 'terminated'
    if any(t.effective for t in lts.trans[sid]):
        return 'running'
    return 'deadlocked'


def end_summary(lts: LTS) -> dict:
    counts = {'running': 0, 'terminated': 0, 'deadlocked': 0}
    for sid in range(len(lts.states)):
        counts[classify_end(lts, sid)] += 1
    counts['reachable'] = len(lts.states)
    return counts


# --------------------------------------------------------------------------
# fair end components

def strongly_connected(nodes, succ) -> list:
    """Iterative Tarjan; components come out in a deterministic order."""
    index: dict = {}
    low: dict = {}
    onstk: set = set()
    stk: list = []
    sccs: list = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stk.append(root)
        onstk.add(root)
        work = [(root, iter(succ(root)))]
        while work:
            v, it = work[-1]
            pushed = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stk.append(w)
                    onstk.add(w)
                    work.append((w, iter(succ(w))))
                    pushed = True
                    break
                if w in onstk:
                    if index[w] < low[v]:
                        low[v] = index[w]
            if pushed:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stk.pop()
                    onstk.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(sorted(comp))
    return sccs


def fair_end_components(lts: LTS, keep) -> list:
    """Maximal SCCs of the kept subgraph inside which a fair run can stay
    forever: they hold a transition, and every point resident throughout
    has one to take."""
    n = len(lts.states)
    if callable(keep):
        keep = [bool(keep(s)) for s in range(n)]
    kept = [s for s in range(n) if keep[s]]

    def succ(v):
        seen = set()
        for t in lts.trans[v]:
            if keep[t.dst] and t.dst not in seen:
                seen.add(t.dst)
                yield t.dst

    out = []
    for comp in strongly_connected(kept, succ):
        cset = set(comp)
        internal = [t for s in comp for t in lts.trans[s] if t.dst in cset]
        if not internal:
            continue
        obligated = None
        for s in comp:
            act = set(lts.active_of(s)) or {STUTTER}
            obligated = act if obligated is None else (obligated & act)
            if not obligated:
                break
        fired = {t.point for t in internal}
        if obligated and not obligated <= fired:
            continue
        out.append(comp)
    return out


def export_lts(lts: LTS) -> dict:
    states = []
    for sid in range(len(lts.states)):
        info = lts.state_info(sid)
        info['cfg'] = format_cfg(lts.cfg_of(sid))
        info['class'] = classify_end(lts, sid)
        states.append(info)
    trans = []
    for sid, ts in enumerate(lts.trans):
        for t in ts:
            trans.append({
                'src': sid,
                'point': lts.point_refs[t.point] if t.point >= 0 else None,
                'alt': t.alt,
                'dst': t.dst,
                'effective': t.effective,
            })
    return {
        'program': lts.program.name,
        'points': list(lts.point_refs),
        'initial': list(lts.initial),
        'states': states,
        'transitions': trans,
    }
