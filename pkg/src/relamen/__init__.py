"""Computational companion for relative inner amenability: groups, actions, Følner sets,
averaging operators, paradoxical certificates and the quasi-free CAR trace."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .groups import (  # noqa: F401
    Automorphism,
    Cyclic,
    Direct,
    Element,
    Free,
    FreeProduct,
    GroupSpec,
    LampConfig,
    Letter,
    Semidirect,
    Twist,
    Wreath,
    ball,
    conjugate,
    element,
    identity,
    inverse,
    multiply,
    parse_element,
    reduce,
    serialize,
)
from .actions import (  # noqa: F401
    ActionSpec,
    SubgroupPair,
    act,
    free_product_decompose,
    orbit_probe,
    star_condition_probe,
)
from .folner import folner_quotient, folner_search, map_transport, semidirect_folner_lift, wreath_folner_lift  # noqa: F401
from .spectral import averaging_matrix, spectral_gap_bound_check, top_rayleigh  # noqa: F401
from .paradox import f2_swap_certificate, verify_paradox_certificate  # noqa: F401
from .car import CarExpr, OneParticleMap, Vec1P, quasi_free_trace, normal_order  # noqa: F401
