"""Shared machinery for checking facts against a finite instance.

Predicates are compiled once and evaluated into truth vectors, one bit per
reachable state, memoized per free-variable binding.  All rule side
conditions reduce to bit arithmetic on these vectors plus scans over the
labelled transitions, so derivation replays stay fast even on instances
with tens of thousands of states.
"""
from __future__ import annotations

from typing import Iterable, Optional

from .control import DONE
from .frontend import Analysis
from .predicates import Compiled, KindError, compile_expr, kind_check, \
    kind_of_domain, key_of
from .properties import Verdict, fail, ok
from .semantics import LTS, Trans, build_lts
from .syntax import (Act, BoolDomain, Comp, Expr, If, IntDomain, TupleDomain,
                     While, domain_values, expr_vars, pp_expr)


class CheckError(Exception):
    """A malformed query: unknown names, bad kinds, bad references."""


def domain_of_free(d):
    return d


class Engine:
    def __init__(self, lts: LTS, frees: Optional[dict] = None):
        self.lts = lts
        self.analysis: Analysis = lts.analysis
        self.frees: dict = dict(frees or {})
        for n in self.frees:
            if n in self.analysis.decls:
                raise CheckError(f'free variable {n} clashes with a program variable')
        self.n = len(lts.states)
        self.all_mask = (1 << self.n) - 1
        self._vec_cache: dict = {}
        self._bits_cache: dict = {}
        self._compile_cache: dict = {}
        self._bind_cache: dict = {}
        self._resident_cache: dict = {}
        self._done_cache: dict = {}
        self._trans_cache: dict = {}
        self._kinds = dict(self.analysis.kinds)
        for n2, d in self.frees.items():
            self._kinds[n2] = kind_of_domain(d)

    # ------------------------------------------------------------ basics

    @classmethod
    def build(cls, program, frees=None, budget=None) -> 'Engine':
        from .semantics import DEFAULT_BUDGET
        lts = build_lts(program, budget or DEFAULT_BUDGET)
        return cls(lts, frees)

    def kindcheck(self, e: Expr, want: str = 'bool') -> None:
        from .frontend import ValidationError
        try:
            k = kind_check(e, self._kinds, self.analysis.resolve)
        except (KindError, ValidationError) as ex:
            raise CheckError(f'in {pp_expr(e)}: {ex}') from ex
        if want is not None and k != want:
            raise CheckError(f'{pp_expr(e)} has kind {k}, expected {want}')

    def compiled(self, e: Expr) -> Compiled:
        k = key_of(e)
        got = self._compile_cache.get(k)
        if got is None:
            got = compile_expr(e, self.analysis.var_index)
            for r in got.post_refs:
                self.resolve(r)
            self._compile_cache[k] = got
        return got

    def free_names_in(self, *exprs) -> tuple:
        out = set()
        for e in exprs:
            for n in expr_vars(e):
                if n in self.frees:
                    out.add(n)
                elif n not in self.analysis.decls:
                    raise CheckError(f'unknown variable {n!r} in {pp_expr(e)}')
        return tuple(sorted(out))

    def bindings(self, names: tuple) -> list:
        """All environments for the given free variables, in a fixed order."""
        names = tuple(sorted(names))
        got = self._bind_cache.get(names)
        if got is None:
            got = [{}]
            for n in names:
                dom = self.frees[n]
                vals = domain_values(dom)
                got = [dict(env, **{n: v}) for env in got for v in vals]
            self._bind_cache[names] = got
        return got

    def bindings_for(self, *exprs) -> list:
        return self.bindings(self.free_names_in(*exprs))

    @staticmethod
    def env_key(env: dict) -> tuple:
        return tuple(sorted(env.items()))

    # ------------------------------------------------------------ vectors

    def vec(self, e: Expr, env: Optional[dict] = None) -> int:
        """Truth vector of a boolean predicate: bit sid set iff e holds."""
        env = env or {}
        key = (key_of(e), self.env_key(env))
        got = self._vec_cache.get(key)
        if got is not None:
            return got
        ce = self.compiled(e)
        refs = tuple(ce.post_refs)
        lts = self.lts
        fn = ce.fn
        states = lts.states
        buf = bytearray((self.n + 7) // 8 or 1)
        if refs:
            dflags = lts.dflags
            for sid in range(self.n):
                if fn(states[sid][1], env, dflags(sid, refs)):
                    buf[sid >> 3] |= 1 << (sid & 7)
        else:
            empty = ()
            for sid in range(self.n):
                if fn(states[sid][1], env, empty):
                    buf[sid >> 3] |= 1 << (sid & 7)
        v = int.from_bytes(buf, 'little')
        self._vec_cache[key] = v
        self._bits_cache[key] = bytes(buf)
        return v

    def bits(self, e: Expr, env: Optional[dict] = None) -> bytes:
        """Truth vector packed as bytes, for O(1) per-state tests inside
        transition scans: bit sid is bits[sid >> 3] >> (sid & 7) & 1."""
        env = env or {}
        key = (key_of(e), self.env_key(env))
        got = self._bits_cache.get(key)
        if got is None:
            got = self.vec(e, env).to_bytes((self.n + 7) // 8 or 1, 'little')
            self._bits_cache[key] = got
        return got

    def values(self, e: Expr, env: Optional[dict] = None) -> list:
        """Value of e in every state, as a list indexed by sid."""
        env = env or {}
        key = ('$vals', key_of(e), self.env_key(env))
        got = self._vec_cache.get(key)
        if got is None:
            ce = self.compiled(e)
            got = [self.lts.eval(ce, sid, env) for sid in range(self.n)]
            self._vec_cache[key] = got
        return got

    def holds(self, e: Expr, sid: int, env: Optional[dict] = None) -> bool:
        return bool(self.lts.eval(self.compiled(e), sid, env))

    def value(self, e: Expr, sid: int, env: Optional[dict] = None):
        return self.lts.eval(self.compiled(e), sid, env)

    def first_sid(self, mask: int) -> int:
        return (mask & -mask).bit_length() - 1

    def witness(self, sid: int, env: Optional[dict] = None,
                note: str = '') -> dict:
        w = self.lts.state_info(sid)
        if env:
            w['frees'] = dict(sorted(env.items()))
        if note:
            w['note'] = note
        return w

    # ------------------------------------------------------- state masks

    def resident_mask(self, pidx: int) -> int:
        got = self._resident_cache.get(pidx)
        if got is None:
            got = 0
            for sid in range(self.n):
                if pidx in self.lts.active_of(sid):
                    got |= 1 << sid
            self._resident_cache[pidx] = got
        return got

    def comp_points(self, comp: Comp) -> list:
        return self.analysis.subtree_points(comp)

    def comp_resident_mask(self, comp: Comp) -> int:
        m = 0
        for pidx in self.comp_points(comp):
            m |= self.resident_mask(pidx)
        return m

    def done_mask(self, comp: Comp) -> int:
        key = id(comp)
        got = self._done_cache.get(key)
        if got is None:
            got = 0
            percfg: dict = {}
            for sid in range(self.n):
                cfg = self.lts.cfg_of(sid)
                d = percfg.get(cfg)
                if d is None:
                    d = self.lts.cm.done_in(cfg, comp)
                    percfg[cfg] = d
                if d:
                    got |= 1 << sid
            self._done_cache[key] = got
        return got

    def initial_mask(self) -> int:
        m = 0
        for sid in self.lts.initial:
            m |= 1 << sid
        return m

    # -------------------------------------------------------- transitions

    def eff_trans(self, comp: Comp) -> list:
        """Effective transitions belonging to the component's points, as
        (src, Trans) pairs."""
        key = id(comp)
        got = self._trans_cache.get(key)
        if got is None:
            pset = set(self.comp_points(comp))
            got = [(src, t)
                   for src in range(self.n)
                   for t in self.lts.trans[src]
                   if t.effective and t.point in pset]
            self._trans_cache[key] = got
        return got

    def point_trans(self, pidx: int, src: int) -> list:
        return [t for t in self.lts.trans[src] if t.point == pidx]

    def action_name(self, pidx: int, t: Trans) -> str:
        ref = self.lts.point_refs[pidx]
        node = self.lts.points[pidx]
        if isinstance(node, If) and t.alt is not None:
            alt = node.alts[t.alt]
            return alt.label or f'{ref}.{t.alt}'
        if isinstance(node, While):
            return f'{ref}.test'
        return ref

    # ------------------------------------------------- quantified checks

    def implies_all(self, p: Expr, q: Expr, within: Optional[int] = None,
                    envs: Optional[list] = None) -> Verdict:
        """p => q on every reachable state (optionally masked), under every
        binding of the free variables involved."""
        self.kindcheck(p)
        self.kindcheck(q)
        mask = self.all_mask if within is None else within
        for env in envs if envs is not None else self.bindings_for(p, q):
            bad = self.vec(p, env) & ~self.vec(q, env) & mask
            if bad:
                sid = self.first_sid(bad)
                return fail(
                    f'{pp_expr(p)} holds but {pp_expr(q)} does not',
                    witness=self.witness(sid, env))
        return ok()

    def equivalent(self, p: Expr, q: Expr, within: Optional[int] = None,
                   envs: Optional[list] = None) -> Verdict:
        self.kindcheck(p)
        self.kindcheck(q)
        mask = self.all_mask if within is None else within
        for env in envs if envs is not None else self.bindings_for(p, q):
            diff = (self.vec(p, env) ^ self.vec(q, env)) & mask
            if diff:
                sid = self.first_sid(diff)
                return fail(
                    f'{pp_expr(p)} and {pp_expr(q)} differ',
                    witness=self.witness(sid, env))
        return ok()

    def unsat(self, p: Expr, within: Optional[int] = None) -> Verdict:
        self.kindcheck(p)
        mask = self.all_mask if within is None else within
        for env in self.bindings_for(p):
            sat = self.vec(p, env) & mask
            if sat:
                sid = self.first_sid(sat)
                return fail(f'{pp_expr(p)} is satisfiable',
                            witness=self.witness(sid, env))
        return ok()

    # ----------------------------------------------------------- lookup

    def resolve(self, ref: str) -> Comp:
        from .frontend import ValidationError
        try:
            return self.analysis.resolve(ref)
        except ValidationError as ex:
            raise CheckError(str(ex)) from ex
