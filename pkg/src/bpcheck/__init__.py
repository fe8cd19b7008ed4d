"""Checker and oracle for bilateral properties of small concurrent
guarded-command programs.

The pieces: a parser and static analysis for the program language, an
explicit-state executor with weak fairness at control-point granularity,
direct checks for safety (co and friends) and progress (transient,
ensures), a rule engine that replays derivation scripts, and an
exhaustive oracle that cross-checks every verdict on finite instances.
"""

from .engine import CheckError, Engine
from .frontend import (Analysis, ValidationError, ac_equal, classify_access,
                       elaborate_control, instrument_auxiliary)
from .oracle import (mc_co, mc_constant, mc_ensures, mc_invariant,
                     mc_leadsto, mc_stable, mc_terminal, mc_transient,
                     replay_lasso)
from .parser import (ParseError, parse_free_range, parse_pred, parse_program,
                     parse_proof, parse_props)
from .predicates import (built_from, compile_expr, eval_pred, int_bounds,
                         key_of, metric_compare, simplify_bool,
                         substitute_invariant)
from .progress import (apply_ensures_rule, apply_ltt_rule,
                       apply_transient_rule, check_ensures,
                       check_transient_basis)
from .proofs import apply_rule, check_derivation
from .properties import (Annotation, Fact, ProofFile, PropEntry, PropFile,
                         Property, Step, Verdict)
from .safety import (apply_meta, check_annotation, check_co, check_special,
                     check_triple)
from .semantics import (DEFAULT_BUDGET, STUTTER, BudgetExceeded,
                        ExplorationError, LTS, build_lts, classify_end,
                        end_summary, export_lts, fair_end_components,
                        strongly_connected)

__version__ = '0.1.0'

__all__ = [
    'Analysis', 'Annotation', 'BudgetExceeded', 'CheckError',
    'DEFAULT_BUDGET', 'Engine', 'ExplorationError', 'Fact', 'LTS',
    'ParseError', 'ProofFile', 'PropEntry', 'PropFile', 'Property',
    'STUTTER', 'Step', 'ValidationError', 'Verdict', 'ac_equal',
    'apply_ensures_rule', 'apply_ltt_rule', 'apply_meta', 'apply_rule',
    'apply_transient_rule', 'build_lts', 'built_from', 'check_annotation',
    'check_co', 'check_derivation', 'check_ensures', 'check_special',
    'check_transient_basis', 'check_triple', 'classify_access',
    'classify_end', 'compile_expr', 'elaborate_control', 'end_summary',
    'eval_pred', 'export_lts', 'fair_end_components', 'instrument_auxiliary',
    'int_bounds', 'key_of', 'mc_co', 'mc_constant', 'mc_ensures',
    'mc_invariant', 'mc_leadsto', 'mc_stable', 'mc_terminal', 'mc_transient',
    'metric_compare', 'parse_free_range', 'parse_pred', 'parse_program',
    'parse_proof', 'parse_props', 'replay_lasso', 'simplify_bool',
    'strongly_connected', 'substitute_invariant',
]
