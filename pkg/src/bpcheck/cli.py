"""Command line front end.

    bpcheck check PROG.bp PROPS.bprop      kernel checks + oracle entries
    bpcheck prove PROG.bp SCRIPT.bproof    replay a derivation script
    bpcheck oracle PROG.bp PROPS.bprop     run every entry through the oracle
    bpcheck fuzz [--seed N] [--count N]    random agreement testing
    bpcheck export-lts PROG.bp             dump the reachable system as JSON

Free variable ranges come from the property or proof file and can be
overridden with --range NAME=LO..HI.  The exploration budget comes from
--budget or the BPCHECK_BUDGET environment variable."""
from __future__ import annotations

import argparse
import json
import os
import sys

from .engine import CheckError, Engine
from .frontend import ValidationError
from .oracle import (mc_co, mc_constant, mc_ensures, mc_invariant,
                     mc_leadsto, mc_stable, mc_terminal, mc_transient)
from .parser import ParseError, parse_free_range, parse_program, parse_proof, parse_props
from .progress import check_ensures, check_transient_basis
from .proofs import check_derivation
from .properties import PropEntry, Verdict, fail
from .safety import check_annotation, check_co, check_special
from .semantics import (DEFAULT_BUDGET, BudgetExceeded, ExplorationError,
                        build_lts, export_lts)


def _read(path: str) -> str:
    with open(path, 'r', encoding='utf-8') as fh:
        return fh.read()


def _budget(args) -> int:
    if args.budget is not None:
        return args.budget
    env = os.environ.get('BPCHECK_BUDGET')
    if env:
        try:
            return int(env)
        except ValueError:
            raise CheckError(f'BPCHECK_BUDGET must be an integer, got {env!r}')
    return DEFAULT_BUDGET


def _cli_ranges(args) -> dict:
    out = {}
    for item in args.range or []:
        if '=' not in item:
            raise CheckError(f'--range wants NAME=RANGE, got {item!r}')
        name, _, rng = item.partition('=')
        out[name.strip()] = parse_free_range(rng.strip())
    return out


class _Engines:
    """One engine per distinct free-variable map, over a shared system."""

    def __init__(self, lts):
        self.lts = lts
        self._by_sig: dict = {}

    def get(self, frees: dict) -> Engine:
        sig = tuple(sorted((k, repr(v)) for k, v in frees.items()))
        eng = self._by_sig.get(sig)
        if eng is None:
            eng = Engine(self.lts, frees)
            self._by_sig[sig] = eng
        return eng


def _run_entry(eng: Engine, entry: PropEntry, anns: dict,
               force_oracle: bool) -> Verdict:
    if entry.kind == 'annotation':
        ann = anns.get(entry.name)
        if ann is None:
            raise CheckError(f'unknown annotation {entry.name!r}')
        return check_annotation(eng, ann)
    comp = eng.resolve(entry.ref)
    args = entry.prop.args
    use_oracle = force_oracle or entry.mode == 'oracle'
    kind = entry.kind
    if use_oracle:
        if kind == 'co':
            return mc_co(eng, args[0], args[1], comp)
        if kind == 'stable':
            return mc_stable(eng, args[0], comp)
        if kind == 'constant':
            return mc_constant(eng, args[0], comp)
        if kind == 'invariant':
            return mc_invariant(eng, args[0])
        if kind == 'transient':
            return mc_transient(eng, args[0], comp)
        if kind == 'ensures':
            return mc_ensures(eng, args[0], args[1], comp)
        if kind == 'leadsto':
            return mc_leadsto(eng, args[0], args[1], comp)
        if kind == 'terminal':
            return mc_terminal(eng, args[0])
        raise CheckError(f'no oracle for {kind}')
    if kind == 'co':
        return check_co(eng, comp, args[0], args[1])
    if kind in ('stable', 'constant', 'invariant'):
        return check_special(eng, comp, kind, args[0])
    if kind == 'transient':
        return check_transient_basis(eng, comp, args[0])
    if kind == 'ensures':
        return check_ensures(eng, comp, args[0], args[1])
    if kind == 'terminal':
        return mc_terminal(eng, args[0])
    if kind == 'leadsto':
        return fail('leads-to needs a derivation script (prove) or the '
                    'oracle')
    raise CheckError(f'no direct check for {kind}')


def _short_witness(w: dict) -> str:
    bits = []
    if 'vars' in w:
        bits.append(', '.join(f'{k}={v}' for k, v in w['vars'].items()))
    if w.get('at'):
        bits.append('at ' + ', '.join(w['at']))
    if w.get('frees'):
        bits.append('with ' + ', '.join(f'{k}={v}'
                                        for k, v in w['frees'].items()))
    if w.get('note'):
        bits.append(w['note'])
    return '; '.join(bits)


def _emit_entries(args, program_name: str, rows: list) -> int:
    allok = all(r['ok'] for r in rows)
    if args.json:
        print(json.dumps({'program': program_name, 'ok': allok,
                          'entries': rows}, indent=2, sort_keys=True))
    else:
        for r in rows:
            mark = 'ok  ' if r['ok'] else 'FAIL'
            where = f' in @{r["ref"]}' if r.get('ref') else ''
            line = f'{mark} {r["name"]}: {r["kind"]}{where}'
            if r.get('note'):
                line += f'  [{r["note"]}]'
            print(line)
            if not r['ok'] and r.get('witness'):
                print(f'     witness: {_short_witness(r["witness"])}')
        print(f'{"all entries pass" if allok else "some entries fail"} '
              f'({sum(r["ok"] for r in rows)}/{len(rows)})')
    return 0 if allok else 1


def _entry_rows(args, lts, props, force_oracle: bool) -> list:
    cli_over = _cli_ranges(args)
    engines = _Engines(lts)
    rows = []
    for entry in props.entries:
        frees = dict(props.frees)
        frees.update(entry.frees)
        frees.update(cli_over)
        rec = {'name': entry.name, 'kind': entry.kind, 'mode': entry.mode,
               'ref': entry.ref, 'ok': False}
        try:
            eng = engines.get(frees)
            v = _run_entry(eng, entry, props.annotations, force_oracle)
        except CheckError as ex:
            v = fail(str(ex))
        rec['ok'] = v.ok
        if v.note:
            rec['note'] = v.note
        if v.witness is not None:
            rec['witness'] = v.witness
        if v.details:
            rec['details'] = v.details
        rows.append(rec)
    return rows


def cmd_check(args) -> int:
    program = parse_program(_read(args.program))
    props = parse_props(_read(args.props))
    lts = build_lts(program, _budget(args))
    rows = _entry_rows(args, lts, props, force_oracle=False)
    return _emit_entries(args, program.name, rows)


def cmd_oracle(args) -> int:
    program = parse_program(_read(args.program))
    props = parse_props(_read(args.props))
    lts = build_lts(program, _budget(args))
    rows = _entry_rows(args, lts, props, force_oracle=True)
    return _emit_entries(args, program.name, rows)


def cmd_prove(args) -> int:
    program = parse_program(_read(args.program))
    proof = parse_proof(_read(args.proof))
    frees = dict(proof.frees)
    frees.update(_cli_ranges(args))
    lts = build_lts(program, _budget(args))
    eng = Engine(lts, frees)
    v = check_derivation(eng, proof)
    if args.json:
        out = v.to_json()
        out['program'] = program.name
        print(json.dumps(out, indent=2, sort_keys=True))
    else:
        for rec in v.details:
            mark = 'ok  ' if rec['ok'] else 'FAIL'
            line = f'{mark} step {rec["step"]}: {rec["rule"]}'
            if rec.get('fact'):
                line += f'  |- {rec["fact"]}'
            print(line)
            if not rec['ok'] and rec.get('note'):
                print(f'     {rec["note"]}')
            if not rec['ok'] and rec.get('witness'):
                print(f'     witness: {_short_witness(rec["witness"])}')
        print(v.note)
    return 0 if v.ok else 1


def cmd_fuzz(args) -> int:
    from .fuzz import run_fuzz
    rep = run_fuzz(seed=args.seed, count=args.count, budget=_budget(args))
    if args.json:
        print(json.dumps(rep, indent=2, sort_keys=True))
    else:
        print(f'{rep["programs"]} programs, {rep["checks"]} agreed checks, '
              f'{len(rep["discrepancies"])} discrepancies '
              f'(seed {rep["seed"]})')
        for d in rep['discrepancies'][:10]:
            print(f'  {d["program"]}: {d["kind"]} {d["text"]} '
                  f'kernel={d["kernel"]} oracle={d["oracle"]}')
    return 0 if not rep['discrepancies'] else 1


def cmd_export(args) -> int:
    program = parse_program(_read(args.program))
    lts = build_lts(program, _budget(args))
    print(json.dumps(export_lts(lts), indent=2, sort_keys=True))
    return 0


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--budget', type=int, default=None,
                        help='state exploration cap (default from '
                             'BPCHECK_BUDGET or 1000000)')
    common.add_argument('--json', action='store_true',
                        help='machine readable output')
    common.add_argument('--seed', type=int, default=0,
                        help='random seed for fuzzing')
    common.add_argument('--range', action='append', metavar='NAME=LO..HI',
                        help='override a free variable range')

    ap = argparse.ArgumentParser(
        prog='bpcheck',
        description='checker and oracle for bilateral program properties')
    sub = ap.add_subparsers(dest='cmd', required=True)

    p = sub.add_parser('check', parents=[common],
                       help='run the property entries of a file')
    p.add_argument('program')
    p.add_argument('props')
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser('prove', parents=[common],
                       help='replay a derivation script')
    p.add_argument('program')
    p.add_argument('proof')
    p.set_defaults(fn=cmd_prove)

    p = sub.add_parser('oracle', parents=[common],
                       help='run every entry through the oracle')
    p.add_argument('program')
    p.add_argument('props')
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser('fuzz', parents=[common],
                       help='random kernel/oracle agreement tests')
    p.add_argument('--count', type=int, default=100,
                   help='number of programs to generate')
    p.set_defaults(fn=cmd_fuzz)

    p = sub.add_parser('export-lts', parents=[common],
                       help='dump the state graph as JSON')
    p.add_argument('program')
    p.set_defaults(fn=cmd_export)
    return ap


def main(argv=None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, ValidationError, CheckError) as ex:
        print(f'error: {ex}', file=sys.stderr)
        return 2
    except (ExplorationError, BudgetExceeded) as ex:
        print(f'error: {ex}', file=sys.stderr)
        return 2
    except OSError as ex:
        print(f'error: {ex}', file=sys.stderr)
        return 2


if __name__ == '__main__':
    sys.exit(main())
