"""Property, fact and verdict records shared by the checker, the proof
replayer and the state-space oracle."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .syntax import Expr, pp_expr

PROP_KINDS = ('co', 'stable', 'constant', 'invariant', 'transient', 'en', 'ltt')


@dataclass
class Property:
    kind: str
    args: tuple            # co/en/ltt: (p, q); the rest: (p,)

    def __post_init__(self):
        if self.kind not in PROP_KINDS:
            raise ValueError(f'unknown property kind {self.kind!r}')

    def __str__(self):
        if self.kind == 'co':
            return f'{pp_expr(self.args[0])} co {pp_expr(self.args[1])}'
        if self.kind == 'en':
            return f'{pp_expr(self.args[0])} en {pp_expr(self.args[1])}'
        if self.kind == 'ltt':
            return f'{pp_expr(self.args[0])} ~> {pp_expr(self.args[1])}'
        return f'{self.kind} {pp_expr(self.args[0])}'


@dataclass
class Fact:
    """Judgment {r} component {property | s}: from any start state
    satisfying r, the property holds over the component's execution and s
    holds when (and if) the component terminates."""
    r: Expr
    comp: str                       # component reference, e.g. t1.body.0
    prop: Optional[Property]
    s: Expr

    def __str__(self):
        inner = str(self.prop) if self.prop is not None else ''
        return f'{{{pp_expr(self.r)}}} @{self.comp} {{{inner} | {pp_expr(self.s)}}}'


@dataclass
class Annotation:
    """Predicates attached to control points plus exit predicates for
    components; the default at unmentioned points is true."""
    name: str
    at: list                        # [(ref, pred)]
    exits: list                     # [(ref, pred)]


@dataclass
class PropEntry:
    mode: str                       # check | oracle
    kind: str                       # co|stable|constant|invariant|transient|ensures|leadsto|terminal|annotation
    name: str
    frees: dict                     # per-entry free range overrides
    prop: Optional[Property]
    ref: Optional[str]
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass
class PropFile:
    frees: dict
    annotations: dict
    entries: list


@dataclass
class Step:
    num: int
    rule: str
    premises: list
    artifacts: dict                 # name -> ('expr', Expr) | ('ref', str)
    fact: Optional[Fact]
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass
class ProofFile:
    frees: dict
    annotations: dict
    steps: list


# --------------------------------------------------------------------------
# verdicts

@dataclass
class Verdict:
    ok: bool
    note: str = ''
    witness: Optional[dict] = None      # json-ready counterexample payload
    details: list = field(default_factory=list)   # per-action / per-point records

    def __bool__(self):
        return self.ok

    def to_json(self):
        out = {'ok': self.ok}
        if self.note:
            out['note'] = self.note
        if self.witness is not None:
            out['witness'] = self.witness
        if self.details:
            out['details'] = self.details
        return out


def ok(note: str = '', details: Optional[list] = None) -> Verdict:
    return Verdict(True, note, None, details or [])


def fail(note: str, witness: Optional[dict] = None,
         details: Optional[list] = None) -> Verdict:
    return Verdict(False, note, witness, details or [])
