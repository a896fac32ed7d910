"""Reachability and program realization for clocked basic action theories."""
from .dsl import (DslError, format_formula, parse_2cm, parse_bat, parse_formula,
                  parse_general_bat, parse_program, parse_situation, parse_ta,
                  serialize_bat, serialize_program)
from .encoders import (encode_2cm, encode_2cm_bounded, encode_ta, interp_2cm,
                       simulate_general)
from .golog import build_program_ts, find_realization
from .model import BAT, GroundAction, S0, Situation, max_constant, validate_bat
from .reach import ReachResult, StateLimitExceeded, build_absts, exec_check, reachable
from .regions import (abstract_state, region_key, situations_equiv, tsuccs,
                      valuations_equiv, values_equiv)
from .regression import entails_initial, holds, regress

__version__ = "0.1.0"

__all__ = [
    "BAT", "GroundAction", "Situation", "S0", "DslError", "ReachResult",
    "StateLimitExceeded", "abstract_state", "build_absts", "build_program_ts",
    "encode_2cm", "encode_2cm_bounded", "encode_ta", "entails_initial",
    "exec_check", "find_realization", "format_formula", "holds", "interp_2cm",
    "max_constant", "parse_2cm", "parse_bat", "parse_formula",
    "parse_general_bat", "parse_program", "parse_situation", "parse_ta",
    "reachable", "region_key", "regress", "serialize_bat", "serialize_program",
    "simulate_general", "situations_equiv", "tsuccs", "valuations_equiv",
    "values_equiv", "validate_bat",
]
