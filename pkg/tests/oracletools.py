"""Independent reference computations used to cross-check the package.

Nothing here imports bpcheck.  The fixtures are coded directly from the
protocol descriptions so their outputs can be frozen into tests before the
main build and compared against it afterwards.

Run as a script to print the frozen values.
"""
from __future__ import annotations

from collections import deque


# --------------------------------------------------------------------------
# two-thread shared-counter protocol, small bounds (ctr 0..4, step guard < 4)
#
# state: (ctr, old1, new1, old2, new2, pc1, pc2); pc 'A' before the
# increment of new_j, 'I' before the if.

def counter_small_states():
    init = (0, 0, 0, 0, 0, 'A', 'A')
    seen = {init}
    work = deque([init])
    while work:
        ctr, o1, n1, o2, n2, p1, p2 = work.popleft()
        succs = []
        # thread 1
        if p1 == 'A':
            succs.append((ctr, o1, o1 + 1, o2, n2, 'I', p2))
        else:
            if ctr == o1 and ctr < 4:
                succs.append((n1, o1, n1, o2, n2, 'A', p2))
            if ctr != o1:
                succs.append((ctr, ctr, n1, o2, n2, 'A', p2))
        # thread 2
        if p2 == 'A':
            succs.append((ctr, o1, n1, o2, o2 + 1, p1, 'I'))
        else:
            if ctr == o2 and ctr < 4:
                succs.append((n2, o1, n1, o2, n2, p1, 'A'))
            if ctr != o2:
                succs.append((ctr, o1, n1, ctr, n2, p1, 'A'))
        for s in succs:
            if s not in seen:
                seen.add(s)
                work.append(s)
    return seen


def counter_small_summary():
    states = counter_small_states()
    quiescent = 0
    for ctr, o1, n1, o2, n2, p1, p2 in states:
        blocked1 = p1 == 'I' and not (ctr == o1 and ctr < 4) and ctr == o1
        blocked2 = p2 == 'I' and not (ctr == o2 and ctr < 4) and ctr == o2
        if blocked1 and blocked2:
            quiescent += 1
    return {'reachable': len(states), 'quiescent': quiescent}


# --------------------------------------------------------------------------
# two one-action loops sharing a flag: f falsifies pv only under pv and qv,
# g only under pv and not qv, neither writes qv.

def flagpair_states():
    inits = [(True, True), (True, False)]
    seen = set(inits)
    work = deque(inits)
    edges = []          # (src, point, effective, tgt)
    while work:
        s = work.popleft()
        pv, qv = s
        for point, guard, tgt in (
                ('f1', pv and qv, (False, qv)),
                ('g1', pv and not qv, (False, qv))):
            if guard:
                edges.append((s, point, True, tgt))
                if tgt not in seen:
                    seen.add(tgt)
                    work.append(tgt)
            else:
                edges.append((s, point, False, s))
    return seen, edges


def flagpair_transient_pv():
    """True iff no fair execution keeps pv true forever.

    Brute force: a fair execution sustaining pv must settle into a set S of
    pv-states that is closed under some choice of moves where every point
    (both are always active) takes at least one transition inside S.
    """
    states, edges = flagpair_states()
    pv_states = [s for s in states if s[0]]
    from itertools import combinations
    for k in range(1, len(pv_states) + 1):
        for comb in combinations(pv_states, k):
            s_set = set(comb)
            internal = [e for e in edges if e[0] in s_set and e[3] in s_set]
            if not internal:
                continue
            # strongly connected over internal edges
            ok_sc = True
            for a in s_set:
                reach = {a}
                work = deque([a])
                while work:
                    x = work.popleft()
                    for e in internal:
                        if e[0] == x and e[3] not in reach:
                            reach.add(e[3])
                            work.append(e[3])
                if reach < s_set:
                    ok_sc = False
                    break
            if not ok_sc:
                continue
            points = {'f1', 'g1'}
            if all(any(e[1] == p for e in internal) for p in points):
                return False        # sustainable pv-set found
    return True


# --------------------------------------------------------------------------
# single fold worker on a one-element bag: get, get, put.  The second get
# blocks forever, a deadlock.

def fold_single_small():
    # state: (u, x, y, w, nh, pc) with u, w sorted tuples
    init = ((0,), 0, 0, (), 0, 'g1')
    seen = {init}
    work = deque([init])
    deadlocked = terminated = 0
    while work:
        u, x, y, w, nh, pc = work.popleft()
        succs = []
        if pc == 'g1' and len(u) > 0:
            for i, e in enumerate(sorted(set(u))):
                u2 = list(u)
                u2.remove(e)
                succs.append((tuple(u2), e, y, tuple(sorted(w + (e,))), nh, 'g2'))
        elif pc == 'g2' and len(u) > 0:
            for e in sorted(set(u)):
                u2 = list(u)
                u2.remove(e)
                w2 = tuple(sorted(w + (e,)))
                succs.append((tuple(u2), x, e, w2, nh, 'p1'))
        elif pc == 'p1':
            w2 = list(w)
            for v in (x, y):
                w2.remove(v)
            succs.append((tuple(sorted(u + (x + y,))), x, y, tuple(sorted(w2)), 1, 'D'))
        if not succs:
            if pc == 'D':
                terminated += 1
            else:
                deadlocked += 1
        for s in succs:
            if s not in seen:
                seen.add(s)
                work.append(s)
    return {'reachable': len(seen), 'deadlocked': deadlocked,
            'terminated': terminated}


# --------------------------------------------------------------------------
# reference fair-end-component finder over an exported transition system,
# using networkx for the SCC computation.

def ref_fair_end_components(active_points, edges, keep):
    """active_points: state -> iterable of points; edges: (src, point,
    effective, tgt); keep: state -> bool.  Returns a sorted list of sorted
    state lists."""
    import networkx as nx
    g = nx.DiGraph()
    nodes = [s for s in active_points if keep(s)]
    g.add_nodes_from(nodes)
    internal = [e for e in edges if keep(e[0]) and keep(e[3])]
    for src, _pt, _eff, tgt in internal:
        g.add_edge(src, tgt)
    out = []
    for comp in nx.strongly_connected_components(g):
        inside = [e for e in internal if e[0] in comp and e[3] in comp]
        if not inside:
            continue
        needed = None
        for s in comp:
            pts = set(active_points[s])
            needed = pts if needed is None else needed & pts
        if all(any(e[1] == p for e in inside) for p in needed or set()):
            out.append(sorted(comp))
    return sorted(out)


if __name__ == '__main__':
    print('counter_small:', counter_small_summary())
    print('flagpair transient pv:', flagpair_transient_pv())
    print('fold_single_small:', fold_single_small())
