"""Exponential-time reference implementations used as ground truth."""

from .appendix import (LemmaReport, brute_outside, check_appendix_lemmas,
                       check_outside, check_case_sums, context_table, contexts,
                       gamma, lead_table, leads_to)
from .cky import cky_inside, cky_span_posteriors, cky_viterbi, enumerate_parses
from .fields import FieldSummary, enumerate_mrf
from .generators import (CATALAN, chain_mrf, family_a, family_b, family_c, random_cfd, random_energy, random_grammar,
                         random_mrf, random_sigma)
from .semantics import (TooLarge, brute_conditioned_z, brute_log_z,
                        brute_marginal, brute_viterbi, brute_z, count_feasible,
                        enumerate_cfd, feasible, feasible_masks,
                        feasible_set_from_supports)

__all__ = [
    "CATALAN", "chain_mrf", "family_a", "family_b", "family_c", "FieldSummary", "LemmaReport", "TooLarge", "brute_conditioned_z",
    "brute_log_z", "brute_marginal", "brute_outside", "brute_viterbi", "brute_z",
    "check_appendix_lemmas", "check_outside", "check_case_sums", "cky_inside",
    "cky_span_posteriors", "cky_viterbi", "context_table", "contexts",
    "count_feasible", "enumerate_cfd", "enumerate_mrf", "enumerate_parses",
    "feasible", "feasible_masks", "feasible_set_from_supports", "gamma",
    "lead_table", "leads_to", "random_cfd", "random_energy", "random_grammar",
    "random_mrf", "random_sigma",
]
