"""Tokenizer and recursive-descent parsers for the three file formats:
programs (.bp), property lists (.bprop) and derivation scripts (.bproof).

All formats share one expression grammar.  Identifiers may carry trailing
primes (x') so paired-variable programs read naturally.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .syntax import (Act, Assign, AuxOn, BagDomain, BagLit, Binary, BoolDomain,
                     Call, Comp, Expr, Get, If, IntDomain, Join, Lit, Loop,
                     Program, Put, PostInd, SeqBlock, Stmt, TupleDomain,
                     TupleLit, Unary, Var, VarDecl, While, TRUE)
from .properties import Annotation, Fact, Property, PropEntry, PropFile, ProofFile, Step


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f'{line}:{col}: {msg}' if line else msg)
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*'*)
  | (?P<op><=>|<\||\|>|=>|\|\||::|:=|\.\.|->|~>|\|-|\+\+|--|<=|>=|!=|[-+*<>=(){}\[\];:,.@|])
""", re.VERBOSE)

KEYWORDS = {
    'var', 'aux', 'initially', 'on', 'program', 'loop', 'forever', 'if',
    'while', 'do', 'od', 'true', 'false', 'not', 'and', 'or', 'co', 'en',
    'stable', 'constant', 'invariant', 'transient', 'terminal', 'free',
    'annotation', 'at', 'exit', 'entry', 'check', 'oracle', 'in', 'get',
    'put', 'post', 'int', 'bool', 'bag', 'cap',
}

FUNCS = {'size', 'sum', 'bit', 'min', 'max'}


@dataclass
class Tok:
    kind: str       # num | id | kw | op | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Tok]:
    toks = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ParseError(f'unexpected character {text[i]!r}', line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == 'nl':
            line += 1
            col = 1
        elif kind in ('ws', 'comment'):
            col += len(s)
        else:
            if kind == 'id' and s in KEYWORDS:
                kind = 'kw'
            toks.append(Tok(kind, s, line, col))
            col += len(s)
        i = m.end()
    toks.append(Tok('eof', '', line, col))
    return toks


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.pos = 0

    # ---------------------------------------------------------- machinery

    def peek(self, ahead: int = 0) -> Tok:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Tok:
        t = self.toks[self.pos]
        if t.kind != 'eof':
            self.pos += 1
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ('op', 'kw')

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Tok:
        t = self.peek()
        if not self.accept(text):
            raise ParseError(f'expected {text!r}, found {t.text!r}', t.line, t.col)
        return t

    def ident(self, what: str = 'identifier') -> str:
        t = self.peek()
        if t.kind != 'id':
            raise ParseError(f'expected {what}, found {t.text!r}', t.line, t.col)
        return self.next().text

    def word(self, what: str = 'name') -> str:
        # rule names reuse property keywords (co-basis, en-seq, ...)
        t = self.peek()
        if t.kind not in ('id', 'kw'):
            raise ParseError(f'expected {what}, found {t.text!r}', t.line, t.col)
        return self.next().text

    def integer(self) -> int:
        neg = self.accept('-')
        t = self.peek()
        if t.kind != 'num':
            raise ParseError(f'expected integer, found {t.text!r}', t.line, t.col)
        self.next()
        return -int(t.text) if neg else int(t.text)

    def fail(self, msg: str):
        t = self.peek()
        raise ParseError(msg + f' (found {t.text!r})', t.line, t.col)

    # -------------------------------------------------------- expressions

    def expr(self) -> Expr:
        return self._iff()

    def _iff(self) -> Expr:
        e = self._imp()
        while self.at('<=>'):
            t = self.next()
            e = Binary('<=>', e, self._imp(), pos=(t.line, t.col))
        return e

    def _imp(self) -> Expr:
        e = self._or()
        if self.at('=>'):
            t = self.next()
            return Binary('=>', e, self._imp(), pos=(t.line, t.col))
        return e

    def _or(self) -> Expr:
        e = self._and()
        while self.at('or'):
            t = self.next()
            e = Binary('or', e, self._and(), pos=(t.line, t.col))
        return e

    def _and(self) -> Expr:
        e = self._not()
        while self.at('and'):
            t = self.next()
            e = Binary('and', e, self._not(), pos=(t.line, t.col))
        return e

    def _not(self) -> Expr:
        if self.at('not'):
            t = self.next()
            return Unary('not', self._not(), pos=(t.line, t.col))
        return self._cmp()

    def _cmp(self) -> Expr:
        e = self._bag()
        if self.peek().text in ('=', '!=', '<', '<=', '>', '>=') and self.peek().kind == 'op':
            t = self.next()
            return Binary(t.text, e, self._bag(), pos=(t.line, t.col))
        return e

    def _bag(self) -> Expr:
        e = self._add()
        while self.peek().kind == 'op' and self.peek().text in ('++', '--'):
            t = self.next()
            e = Binary(t.text, e, self._add(), pos=(t.line, t.col))
        return e

    def _add(self) -> Expr:
        e = self._mul()
        while self.peek().kind == 'op' and self.peek().text in ('+', '-'):
            t = self.next()
            e = Binary(t.text, e, self._mul(), pos=(t.line, t.col))
        return e

    def _mul(self) -> Expr:
        e = self._unary()
        while self.peek().kind == 'op' and self.peek().text == '*':
            t = self.next()
            e = Binary('*', e, self._unary(), pos=(t.line, t.col))
        return e

    def _unary(self) -> Expr:
        if self.peek().kind == 'op' and self.peek().text == '-':
            t = self.next()
            return Unary('neg', self._unary(), pos=(t.line, t.col))
        return self._atom()

    def _atom(self) -> Expr:
        t = self.peek()
        if t.kind == 'num':
            self.next()
            return Lit(int(t.text), pos=(t.line, t.col))
        if self.at('true'):
            self.next()
            return Lit(True, pos=(t.line, t.col))
        if self.at('false'):
            self.next()
            return Lit(False, pos=(t.line, t.col))
        if self.at('post'):
            self.next()
            self.expect('(')
            self.expect('@')
            ref = self.compref()
            self.expect(')')
            return PostInd(ref, pos=(t.line, t.col))
        if t.kind == 'id' and t.text in FUNCS and self.peek(1).text == '(':
            self.next()
            self.expect('(')
            args = [self.expr()]
            while self.accept(','):
                args.append(self.expr())
            self.expect(')')
            return Call(t.text, args, pos=(t.line, t.col))
        if t.kind == 'id':
            self.next()
            return Var(t.text, pos=(t.line, t.col))
        if self.accept('('):
            items = [self.expr()]
            while self.accept(','):
                items.append(self.expr())
            self.expect(')')
            if len(items) == 1:
                return items[0]
            return TupleLit(items, pos=(t.line, t.col))
        if self.accept('{'):
            items = []
            if not self.at('}'):
                items.append(self.expr())
                while self.accept(','):
                    items.append(self.expr())
            self.expect('}')
            return BagLit(items, pos=(t.line, t.col))
        self.fail('expected expression')

    # --------------------------------------------------------- statements

    def stmt(self) -> Stmt:
        t = self.peek()
        if self.accept('get'):
            self.expect('(')
            bag = self.ident('bag variable')
            self.expect(',')
            tgt = self.ident('target variable')
            self.expect(')')
            return Get(bag, tgt, pos=(t.line, t.col))
        if self.accept('put'):
            self.expect('(')
            bag = self.ident('bag variable')
            self.expect(',')
            e = self.expr()
            self.expect(')')
            return Put(bag, e, pos=(t.line, t.col))
        targets = [self.ident('assignment target')]
        while self.accept(','):
            targets.append(self.ident('assignment target'))
        self.expect(':=')
        exprs = [self.expr()]
        while self.accept(','):
            exprs.append(self.expr())
        if len(targets) != len(exprs):
            raise ParseError(f'{len(targets)} targets but {len(exprs)} expressions',
                             t.line, t.col)
        return Assign(targets, exprs, pos=(t.line, t.col))

    def stmts_atomic(self) -> list[Stmt]:
        """One statement, or an atomic block <| s1 ; s2 ; ... |>."""
        if self.accept('<|'):
            out = [self.stmt()]
            while self.accept(';'):
                out.append(self.stmt())
            self.expect('|>')
            return out
        return [self.stmt()]

    # --------------------------------------------------------- components

    def _is_stmt_start(self) -> bool:
        t = self.peek()
        if t.text in ('get', 'put') and t.kind == 'kw':
            return True
        if t.text == '<|' and t.kind == 'op':
            return True
        # expression-first: a guard, or an assignment target
        return t.kind in ('num', 'id') or t.text in ('true', 'false', 'not', '(', '{', '-') \
            or t.text == 'post'

    def guarded_act(self, label: Optional[str]) -> Act:
        t = self.peek()
        # try guard: parse an expression; if '->' follows it was a guard
        save = self.pos
        if t.text not in ('get', 'put', '<|'):
            try:
                g = self.expr()
            except ParseError:
                self.pos = save
                g = None
            else:
                if self.accept('->'):
                    body = self.stmts_atomic()
                    return Act(g, body, label=label, pos=(t.line, t.col))
                self.pos = save
        body = self.stmts_atomic()
        return Act(None, body, label=label, pos=(t.line, t.col))

    def comp(self) -> Comp:
        c = self.seq_comp()
        if self.at('||'):
            children = [c]
            while self.accept('||'):
                children.append(self.seq_comp())
            return Join(children)
        return c

    def seq_comp(self) -> Comp:
        first = self.labeled_comp()
        if self.at(';'):
            items = [first]
            while self.accept(';'):
                items.append(self.labeled_comp())
            return SeqBlock(items)
        return first

    def labeled_comp(self) -> Comp:
        label = None
        if self.peek().kind == 'id' and self.peek(1).text == '::':
            label = self.next().text
            self.next()
        c = self.basic_comp(label)
        return c

    def basic_comp(self, label: Optional[str]) -> Comp:
        t = self.peek()
        if self.accept('loop'):
            body = self.comp()
            self.expect('forever')
            return Loop(body, label=label, pos=(t.line, t.col))
        if self.accept('while'):
            g = self.expr()
            self.expect('do')
            body = self.comp()
            self.expect('od')
            return While(g, body, label=label, pos=(t.line, t.col))
        if self.accept('if'):
            self.expect('[')
            alts = [self._if_alt()]
            while self.accept('|'):
                alts.append(self._if_alt())
            self.expect(']')
            return If(alts, label=label, pos=(t.line, t.col))
        if self.at('('):
            # grouping; the label (if any) names the grouped component
            self.next()
            inner = self.comp()
            self.expect(')')
            if label is not None:
                if inner.label is not None:
                    raise ParseError('component already labeled', t.line, t.col)
                inner.label = label
            return inner
        return self.guarded_act(label)

    def _if_alt(self) -> Act:
        label = None
        if self.peek().kind == 'id' and self.peek(1).text == '::':
            label = self.next().text
            self.next()
        t = self.peek()
        a = self.guarded_act(label)
        if not isinstance(a, Act):
            raise ParseError('if alternatives must be single actions', t.line, t.col)
        return a

    # ------------------------------------------------------------ domains

    def domain(self):
        t = self.peek()
        if self.accept('int') or t.kind == 'num' or t.text == '-':
            lo = self.integer()
            self.expect('..')
            hi = self.integer()
            return IntDomain(lo, hi)
        if self.accept('bool'):
            return BoolDomain()
        if self.accept('bag'):
            self.expect('[')
            lo = self.integer()
            self.expect('..')
            hi = self.integer()
            self.expect(']')
            self.expect('cap')
            cap = self.integer()
            return BagDomain(lo, hi, cap)
        self.fail('expected domain (int lo..hi, bool, bag[lo..hi] cap n)')

    def free_domain(self):
        """Domain of a free variable: lo..hi, bool, or (lo..hi, lo..hi, ...)."""
        if self.accept('bool'):
            return BoolDomain()
        if self.accept('('):
            parts = []
            while True:
                lo = self.integer()
                self.expect('..')
                hi = self.integer()
                parts.append(IntDomain(lo, hi))
                if not self.accept(','):
                    break
            self.expect(')')
            return TupleDomain(parts)
        lo = self.integer()
        self.expect('..')
        hi = self.integer()
        return IntDomain(lo, hi)

    def value(self):
        t = self.peek()
        if self.accept('true'):
            return True
        if self.accept('false'):
            return False
        if self.accept('{'):
            items = []
            if not self.at('}'):
                items.append(self.integer())
                while self.accept(','):
                    items.append(self.integer())
            self.expect('}')
            return tuple(sorted(items))
        if t.kind == 'num' or t.text == '-':
            return self.integer()
        self.fail('expected a value')

    # ----------------------------------------------------------- programs

    def program(self) -> Program:
        decls, aux_on, inits = [], [], []
        name = None
        if self.accept('program'):
            if self.peek().kind == 'id':
                name = self.next().text
            self.expect(':')
        while True:
            if self.at('var') or self.at('aux'):
                aux = self.next().text == 'aux'
                nm = self.ident('variable name')
                self.expect(':')
                dom = self.domain()
                init = None
                if self.accept('initially'):
                    init = self.value()
                decls.append(VarDecl(nm, dom, aux=aux, init=init))
            elif self.at('initially'):
                self.next()
                inits.append(self.expr())
            elif self.at('on'):
                self.next()
                labels = [self.ident('action label')]
                while self.accept(','):
                    labels.append(self.ident('action label'))
                self.expect(':')
                stmts = [self.stmt()]
                while self.accept(';'):
                    stmts.append(self.stmt())
                aux_on.append(AuxOn(labels, stmts))
            else:
                break
        root = self.comp()
        t = self.peek()
        if t.kind != 'eof':
            raise ParseError(f'unexpected trailing input {t.text!r}', t.line, t.col)
        return Program(decls, root, aux_on=aux_on, inits=inits, name=name)

    # --------------------------------------------------- shared: refs, props

    def compref(self) -> str:
        parts = [self.ident('component reference') if self.peek().kind == 'id'
                 else self.fail('expected component reference')]
        while self.at('.'):
            if self.peek(1).kind == 'num' or self.peek(1).text == 'body':
                self.next()
                parts.append(self.next().text)
            else:
                break
        return '.'.join(parts)

    def property(self) -> Property:
        if self.accept('stable'):
            return Property('stable', (self.expr(),))
        if self.accept('constant'):
            return Property('constant', (self.expr(),))
        if self.accept('invariant'):
            return Property('invariant', (self.expr(),))
        if self.accept('transient'):
            return Property('transient', (self.expr(),))
        p = self.expr()
        if self.accept('co'):
            return Property('co', (p, self.expr()))
        if self.accept('en'):
            return Property('en', (p, self.expr()))
        if self.accept('~>'):
            return Property('ltt', (p, self.expr()))
        self.fail('expected co, en or ~> after predicate')

    # ------------------------------------------------------- property files

    def prop_file(self) -> PropFile:
        frees: dict[str, object] = {}
        anns: dict[str, Annotation] = {}
        entries: list[PropEntry] = []
        while self.peek().kind != 'eof':
            if self.accept('free'):
                nm = self.ident('free variable name')
                self.expect(':')
                frees[nm] = self.free_domain()
            elif self.at('annotation'):
                a = self.annotation_block()
                if a.name in anns:
                    self.fail(f'duplicate annotation {a.name}')
                anns[a.name] = a
            elif self.at('check') or self.at('oracle'):
                mode = self.next().text
                t = self.peek()
                kind = self.next().text
                if kind == 'annotation':
                    nm = self.ident('annotation name')
                    entries.append(PropEntry(mode, 'annotation', nm, {}, None, None,
                                             pos=(t.line, t.col)))
                    continue
                if kind not in ('co', 'stable', 'constant', 'invariant',
                                'transient', 'ensures', 'leadsto', 'terminal'):
                    raise ParseError(f'unknown property kind {kind!r}', t.line, t.col)
                nm = self.ident('entry name')
                over = {}
                if self.accept('['):
                    while True:
                        fn = self.ident('free variable name')
                        self.expect(':')
                        over[fn] = self.free_domain()
                        if not self.accept(','):
                            break
                    self.expect(']')
                self.expect(':')
                prop = self._entry_prop(kind)
                self.expect('in')
                self.expect('@')
                ref = self.compref()
                entries.append(PropEntry(mode, kind, nm, over, prop, ref,
                                         pos=(t.line, t.col)))
            else:
                self.fail('expected free, annotation, check or oracle')
        return PropFile(frees, anns, entries)

    def _entry_prop(self, kind: str) -> Property:
        if kind in ('stable', 'invariant', 'transient', 'terminal'):
            return Property(kind, (self.expr(),))
        if kind == 'constant':
            return Property('constant', (self.expr(),))
        p = self.expr()
        if kind == 'co':
            self.expect('co')
            return Property('co', (p, self.expr()))
        if kind == 'ensures':
            self.expect('en')
            return Property('en', (p, self.expr()))
        self.expect('~>')
        return Property('ltt', (p, self.expr()))

    def annotation_block(self) -> Annotation:
        self.expect('annotation')
        name = self.ident('annotation name')
        self.expect('{')
        at, exits = [], []
        while not self.at('}'):
            if self.accept('at'):
                ref = self.compref()
                self.expect(':')
                at.append((ref, self.expr()))
            elif self.accept('exit'):
                ref = self.compref()
                self.expect(':')
                exits.append((ref, self.expr()))
            else:
                self.fail('expected at or exit inside annotation')
        self.expect('}')
        return Annotation(name, at, exits)

    # ------------------------------------------------------- proof scripts

    def proof_file(self) -> ProofFile:
        frees: dict[str, object] = {}
        anns: dict[str, Annotation] = {}
        steps: list[Step] = []
        while self.peek().kind != 'eof':
            if self.accept('free'):
                nm = self.ident('free variable name')
                self.expect(':')
                frees[nm] = self.free_domain()
            elif self.at('annotation'):
                a = self.annotation_block()
                if a.name in anns:
                    self.fail(f'duplicate annotation {a.name}')
                anns[a.name] = a
            elif self.peek().kind == 'num':
                steps.append(self.step())
            else:
                self.fail('expected free, annotation or a numbered step')
        return ProofFile(frees, anns, steps)

    def step(self) -> Step:
        t = self.peek()
        num = self.integer()
        self.expect(':')
        rule = self.word('rule name')
        while self.accept('-'):
            rule += '-' + self.word('rule name')
        premises: list[int] = []
        artifacts: dict[str, object] = {}
        self.expect('(')
        if not self.at(')'):
            while True:
                if self.peek().kind == 'num':
                    premises.append(self.integer())
                else:
                    key = self.word('artifact name')
                    self.expect('=')
                    if self.at('@'):
                        self.next()
                        artifacts[key] = ('ref', self.compref())
                    else:
                        artifacts[key] = ('expr', self.expr())
                if not self.accept(','):
                    break
        self.expect(')')
        fact = None
        if self.accept('|-'):
            fact = self.fact()
        return Step(num, rule, premises, artifacts, fact, pos=(t.line, t.col))

    def fact(self) -> Fact:
        r = TRUE
        if self.at('{'):
            # leading {r}, unless this brace opens the property part;
            # disambiguate: a precondition brace is followed by @
            save = self.pos
            self.next()
            try:
                e = self.expr()
                self.expect('}')
            except ParseError:
                self.pos = save
            else:
                if self.at('@'):
                    r = e
                else:
                    self.pos = save
        self.expect('@')
        ref = self.compref()
        self.expect('{')
        prop = None
        s = TRUE
        if self.accept('|'):
            s = self.expr()
        elif not self.at('}'):
            prop = self.property()
            if self.accept('|'):
                s = self.expr()
        self.expect('}')
        return Fact(r, ref, prop, s)


# --------------------------------------------------------------------------
# public entry points

def parse_program(text: str) -> Program:
    return Parser(text).program()


def parse_pred(text: str) -> Expr:
    p = Parser(text)
    e = p.expr()
    t = p.peek()
    if t.kind != 'eof':
        raise ParseError(f'unexpected trailing input {t.text!r}', t.line, t.col)
    return e


def parse_props(text: str) -> PropFile:
    return Parser(text).prop_file()


def parse_proof(text: str) -> ProofFile:
    return Parser(text).proof_file()


def parse_free_range(text: str):
    """Parse a --range payload like 0..8, bool or (0..10, 0..4)."""
    p = Parser(text)
    d = p.free_domain()
    t = p.peek()
    if t.kind != 'eof':
        raise ParseError(f'unexpected trailing input {t.text!r}', t.line, t.col)
    return d
