"""E-separation over directed mixed graphs.

Separation criteria (d, sigma, and the asymmetric lifted criterion),
independence-model fingerprints, Markov-equivalence machinery with
greatest elements, exhaustive verification over all small graphs, and a
constraint-based discovery loop with graph-exact and SDE-data oracles.
"""

__version__ = "0.1.0"

from .graphs import Dmg, LiftedDmg, SccPartition, complete_dg, complete_dmg
from .separation import (
    SeparationQuery,
    Walk,
    d_separated,
    e_separated,
    find_inducing_path,
    separated_oracle,
    sigma_separated,
)
from .independence import Fingerprint, check_axiom, fingerprint, marginal_model, triple_in_model
from .equivalence import (
    EquivalenceClass,
    dg_equivalent_characterization,
    edge_move_preserves,
    find_greatest_in_class,
    greatest_element_dg,
    is_maximal,
    markov_equivalent,
)

__all__ = [
    "Dmg",
    "LiftedDmg",
    "SccPartition",
    "complete_dg",
    "complete_dmg",
    "SeparationQuery",
    "Walk",
    "d_separated",
    "sigma_separated",
    "e_separated",
    "separated_oracle",
    "find_inducing_path",
    "Fingerprint",
    "fingerprint",
    "triple_in_model",
    "marginal_model",
    "check_axiom",
    "EquivalenceClass",
    "markov_equivalent",
    "dg_equivalent_characterization",
    "greatest_element_dg",
    "is_maximal",
    "edge_move_preserves",
    "find_greatest_in_class",
]
