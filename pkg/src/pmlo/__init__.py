"""Model checking of probabilistic monadic logic of order on semi-Markov processes and PTAs."""

from .automata import Automaton, compile_wmlo, accepts_lasso, nonempty_witness
from .errors import (LDiffUndecidable, ModelError, PmloError, ScopeError, StateBlowup,
                     FormulaSyntaxError, UnsupportedFormula)
from .logic import classify, evaluate_wmlo_bounded, parse_formula, to_text
from .markov import check_flat_quantitative
from .pta import PTA, pta_product
from .qualitative import check_qualitative
from .regions import build_extended_region_graph, check_pta, representant
from .smp import SMP

__version__ = "0.1.0"

__all__ = [
    "Automaton", "compile_wmlo", "accepts_lasso", "nonempty_witness", "LDiffUndecidable", "ModelError",
    "PmloError", "ScopeError", "StateBlowup", "FormulaSyntaxError", "UnsupportedFormula", "classify",
    "evaluate_wmlo_bounded", "parse_formula", "to_text", "check_flat_quantitative", "PTA", "pta_product",
    "check_qualitative", "build_extended_region_graph", "check_pta", "representant", "SMP",
]
