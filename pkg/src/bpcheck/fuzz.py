"""Random agreement testing between the checking kernel and the oracle.

Small programs, tiny domains, deterministic seeds.  For safety
properties the direct kernel check and the oracle walk the same
transitions, so they must agree exactly.  For progress the kernel's
single-point basis is deliberately incomplete, so only the sound
direction is required: whatever the kernel accepts, the oracle must
confirm."""
from __future__ import annotations

import random

from .engine import Engine
from .oracle import (mc_co, mc_constant, mc_ensures, mc_invariant, mc_stable,
                     mc_transient)
from .parser import parse_program
from .progress import check_ensures, check_transient_basis
from .safety import check_co, check_special
from .semantics import build_lts
from .syntax import (Act, Assign, Binary, Call, If, IntDomain, Join, Lit,
                     Loop, Program, SeqBlock, Var, VarDecl, While, pp_expr,
                     pp_program)

HI = 3


def _guard(rng, names):
    v = Var(rng.choice(names))
    pick = rng.randrange(5)
    if pick == 0:
        return None
    if pick == 1:
        return Binary('<', v, Lit(HI))
    if pick == 2:
        return Binary('=', v, Lit(rng.randrange(HI + 1)))
    if pick == 3:
        return Binary('>', v, Lit(0))
    if len(names) > 1:
        w = Var([n for n in names if n != v.name][0])
        return Binary(rng.choice(['<=', '=', '!=']), v, w)
    return Binary('<=', v, Lit(rng.randrange(HI + 1)))


def _body(rng, names):
    tgt = rng.choice(names)
    v = Var(tgt)
    pick = rng.randrange(5)
    if pick == 0:
        e = Call('min', [Lit(HI), Binary('+', v, Lit(1))])
    elif pick == 1:
        e = Call('max', [Lit(0), Binary('-', v, Lit(1))])
    elif pick == 2:
        e = Lit(rng.randrange(HI + 1))
    elif pick == 3 and len(names) > 1:
        e = Var([n for n in names if n != tgt][0])
    else:
        e = Call('bit', [Binary('=', v, Lit(rng.randrange(HI + 1)))])
    return [Assign([tgt], [e])]


def _act(rng, names, label):
    return Act(_guard(rng, names), _body(rng, names), label=label)


def _thread(rng, names, acts, label):
    """Uses up the given action budget with one of a few shapes."""
    if acts == 1:
        shape = rng.randrange(3)
        a = _act(rng, names, f'{label}a')
        if shape == 0:
            return a, 1
        if shape == 1:
            return Loop(a, label=label), 1
        return While(Binary('<', Var(rng.choice(names)), Lit(HI)),
                     a, label=label), 1
    shape = rng.randrange(4)
    if shape == 0:
        alts = [Act(_guard(rng, names) or Binary('<', Var(names[0]), Lit(HI)),
                    _body(rng, names), label=f'{label}a{i}')
                for i in range(2)]
        return If(alts, label=label), 2
    items = [_act(rng, names, f'{label}a{i}') for i in range(2)]
    if shape == 1:
        return SeqBlock(items, label=label), 2
    if shape == 2:
        return Loop(SeqBlock(items), label=label), 2
    return _act(rng, names, f'{label}a'), 1


def gen_program(rng: random.Random, idx: int) -> Program:
    nv = rng.randrange(1, 3)
    names = ['x', 'y'][:nv]
    decls = []
    for n in names:
        init = rng.randrange(HI + 1) if rng.randrange(2) else None
        decls.append(VarDecl(n, IntDomain(0, HI), init=init))
    budget = rng.randrange(1, 4)
    threads = []
    t = 0
    while budget > 0:
        t += 1
        th, used = _thread(rng, names, budget, f't{t}')
        threads.append(th)
        budget -= used
    root = threads[0] if len(threads) == 1 else Join(threads)
    return Program(decls, root, name=f'fz{idx}')


def _pred_pool(rng, names):
    x = Var(names[0])
    pool = [Lit(True), Lit(False),
            Binary('=', x, Lit(0)), Binary('=', x, Lit(HI)),
            Binary('<=', x, Lit(1)), Binary('>', x, Lit(0))]
    if len(names) > 1:
        y = Var(names[1])
        pool += [Binary('<', x, y), Binary('=', x, y),
                 Binary('>=', y, Lit(2))]
    rng.shuffle(pool)
    return pool


def fuzz_one(rng: random.Random, idx: int, budget: int) -> dict:
    """Generate, round-trip through the printer and parser, then compare
    kernel verdicts with the oracle."""
    prog = gen_program(rng, idx)
    text = pp_program(prog)
    prog = parse_program(text)
    lts = build_lts(prog, budget)
    eng = Engine(lts)
    root = prog.root
    names = [d.name for d in prog.decls]
    pool = _pred_pool(rng, names)
    checks = 0
    bad = []

    def record(kind, txt, kv, ov):
        bad.append({'program': text, 'kind': kind, 'text': txt,
                    'kernel': kv.ok, 'oracle': ov.ok,
                    'note': ov.note or kv.note})

    # safety: same transitions on both sides, so exact agreement
    for i in range(4):
        p, q = rng.sample(pool, 2)
        kv = check_co(eng, root, p, q)
        ov = mc_co(eng, p, q, root)
        checks += 1
        if kv.ok != ov.ok:
            record('co', f'{pp_expr(p)} co {pp_expr(q)}', kv, ov)
    for p in pool[:3]:
        kv = check_special(eng, root, 'stable', p)
        ov = mc_stable(eng, p, root)
        checks += 1
        if kv.ok != ov.ok:
            record('stable', pp_expr(p), kv, ov)
        kv = check_special(eng, root, 'invariant', p)
        ov = mc_invariant(eng, p)
        checks += 1
        if kv.ok != ov.ok:
            record('invariant', pp_expr(p), kv, ov)
    e = Var(rng.choice(names))
    kv = check_special(eng, root, 'constant', e)
    ov = mc_constant(eng, e, root)
    checks += 1
    if kv.ok != ov.ok:
        record('constant', pp_expr(e), kv, ov)

    # progress: kernel acceptance must imply oracle truth
    for p in pool[:4]:
        kv = check_transient_basis(eng, root, p)
        checks += 1
        if kv.ok:
            ov = mc_transient(eng, p)
            if not ov.ok:
                record('transient', pp_expr(p), kv, ov)
    for i in range(3):
        p, q = rng.sample(pool, 2)
        kv = check_ensures(eng, root, p, q)
        checks += 1
        if kv.ok:
            ov = mc_ensures(eng, p, q)
            if not ov.ok:
                record('ensures', f'{pp_expr(p)} en {pp_expr(q)}', kv, ov)
    return {'checks': checks, 'discrepancies': bad}


def run_fuzz(seed: int = 0, count: int = 100, budget: int = 200000) -> dict:
    rng = random.Random(seed)
    total = 0
    bad = []
    for i in range(count):
        r = fuzz_one(rng, i, budget)
        total += r['checks']
        bad.extend(r['discrepancies'])
    return {'seed': seed, 'programs': count, 'checks': total,
            'discrepancies': bad}
