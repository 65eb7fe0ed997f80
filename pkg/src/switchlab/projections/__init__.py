"""Sipser-style formulas, their parameter calculus and random projections."""

from .params import ParameterResourceError, qcma_params, qia_bound_check, sip_params, sipprime_params
from .sip import SipFormula, build_sip, eval_sip, parse_spec, read_spec, write_spec

__all__ = [
    "ParameterResourceError",
    "SipFormula",
    "build_sip",
    "eval_sip",
    "parse_spec",
    "qcma_params",
    "qia_bound_check",
    "read_spec",
    "sip_params",
    "sipprime_params",
    "write_spec",
]
