"""Parser, model checker and bounded decision procedures for a temporal
multi-agent knowledge logic with interaction knowledge and uncertainty."""

from .decide import (
    ExhaustedBounds, SearchBounds, Witness, enumerate_frames, refute_rule_bounded,
    sat_bounded, theorem_bounded,
)
from .errors import CapExceeded
from .formula import (
    BOT, TOP, And, Bot, Dist, Formula, Implies, K, KnI, Next, Not, Or, ParseError, Today, Top,
    Unc, Until, Var, metrics, parse, subformulas, to_text,
)
from .frames import Chain, Cluster, FrameError, FrameIndex, FrameSpec, unroll, validate
from .modelfile import ModelFileError, load_model, model_from_dict, model_to_dict, save_model
from .rules import (
    InferenceRule, ReducedNormalFormRule, formula_to_rule, parse_rule, rnf_valid_in_model,
    rule_valid_in_model, to_reduced_normal_form,
)
from .semantics import (
    EvaluationError, HorizonError, Model, evaluate, holds_at, oracle_eval, stable_horizon,
    valid_in_model,
)

__all__ = [name for name in dir() if not name.startswith("_")]
