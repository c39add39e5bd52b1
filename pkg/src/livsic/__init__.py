"""Finite-dimensional toolkit for operator colligations and their characteristic functions."""

from .colligation import (
    Colligation,
    SignatureOperator,
    SubspaceBasis,
    adjoint,
    chain_factorization,
    embed,
    is_simple,
    mobius_colligation,
    principal_split,
    product,
    project,
    resolvent_of_product,
    unitary_equivalence,
    validate,
)
from .charfn import (
    cayley,
    eval_Q,
    eval_S,
    eval_V,
    j_classify,
    j_form,
    j_identity_residual,
    mobius_charfn,
    potapov_ginzburg,
    simulate_open_system,
)
from .factorize import eval_factor, eval_product, potapov_factorize, selfadjoint_charfn
from .multint import StieltjesWeight, multint_lebesgue, multint_stieltjes
from .models import (
    CombinedModel,
    ContinuousModelData,
    DiscreteModelData,
    build_combined_model,
    build_continuous_model,
    build_discrete_model,
    completeness_criterion,
    dissipative_embed,
    model_charfn,
    spectral_model,
)

__version__ = "0.1.0"
