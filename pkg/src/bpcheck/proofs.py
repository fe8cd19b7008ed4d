"""Replay of derivation scripts.

A script is a numbered list of steps.  Each step names a rule, lists the
numbers of earlier steps it builds on, passes rule arguments, and states
the fact it claims.  Replay revalidates every step against the instance;
the stated facts of earlier steps are the only thing later steps may use.
"""
from __future__ import annotations

from typing import Optional

from .engine import CheckError, Engine
from .progress import (ENSURES_RULES, LTT_RULES, TRANSIENT_RULES,
                       apply_ensures_rule, apply_ltt_rule,
                       apply_transient_rule)
from .properties import ProofFile, Step, Verdict
from .safety import SAFETY_RULES, apply_meta


def _untag(artifacts: dict) -> dict:
    return {k: v[1] for k, v in artifacts.items()}


def apply_rule(eng: Engine, name: str, premises: list, artifacts: dict,
               stated, annotations: Optional[dict] = None) -> Verdict:
    """Dispatch one rule application to the owning rule family."""
    if name in SAFETY_RULES:
        return apply_meta(eng, name, premises, artifacts, stated, annotations)
    if name in TRANSIENT_RULES:
        return apply_transient_rule(eng, name, premises, artifacts, stated,
                                    annotations)
    if name in ENSURES_RULES:
        return apply_ensures_rule(eng, name, premises, artifacts, stated,
                                  annotations)
    if name in LTT_RULES:
        return apply_ltt_rule(eng, name, premises, artifacts, stated,
                              annotations)
    raise CheckError(f'unknown rule {name!r}')


def check_derivation(eng: Engine, proof: ProofFile) -> Verdict:
    """Replay every step in order.  The verdict's details list carries
    one record per step; the whole script passes only if every step
    does."""
    facts: dict[int, object] = {}
    seen: set[int] = set()
    report = []
    allok = True
    for step in proof.steps:
        rec = {'step': step.num, 'rule': step.rule, 'ok': False}
        if step.fact is not None:
            rec['fact'] = str(step.fact)
        try:
            if step.num in seen:
                raise CheckError(f'duplicate step number {step.num}')
            seen.add(step.num)
            prems = []
            for n in step.premises:
                if n not in seen or n == step.num:
                    raise CheckError(f'premise {n} must name an earlier step')
                if n not in facts:
                    raise CheckError(f'step {n} cannot be used as a premise')
                prems.append(facts[n])
            v = apply_rule(eng, step.rule, prems, _untag(step.artifacts),
                           step.fact, proof.annotations)
        except CheckError as ex:
            v = Verdict(False, note=str(ex))
        rec['ok'] = v.ok
        if v.note:
            rec['note'] = v.note
        if v.witness is not None:
            rec['witness'] = v.witness
        if v.details:
            rec['details'] = v.details
        report.append(rec)
        if v.ok:
            if step.fact is not None:
                facts[step.num] = step.fact
        else:
            allok = False
    n = len(proof.steps)
    good = sum(1 for r in report if r['ok'])
    if allok:
        return Verdict(True, note=f'{good}/{n} steps check', details=report)
    bad = ', '.join(str(r['step']) for r in report if not r['ok'])
    return Verdict(False, note=f'{good}/{n} steps check; failing: {bad}',
                   details=report)
