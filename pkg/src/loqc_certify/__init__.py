"""Simulation and certification toolkit for linear-optical state preparation.

Computes exact output statistics of n-photon interference experiments under
partial photon distinguishability, evaluates four indistinguishability
witnesses with finite-size confidence corrections, and certifies operational
fidelity against linear-optical targets from simulated or ingested count
data.
"""

from .combinatorics import (
    CapacityError,
    coarsening_matrix,
    cycle_type,
    enumerate_partitions,
    enumerate_patterns,
    enumerate_permutations,
    induced_partition,
    is_coarser,
    mobius_matrix,
    multiplicity_factor,
)
from .distinguishability import (
    DirectGI,
    GIVector,
    PartitionMixture,
    PureProduct,
    RepresentationError,
    gi_from_gram,
    gi_from_partition,
    indistinguishable_coefficient,
    model_gi_vector,
    obb_model,
    partition_weights_from_gi,
    symmetric_weight,
    time_delay_gram,
    twirl,
)
from .engine import (
    ExperimentSpec,
    OutputDistribution,
    oracle_probability,
    output_distribution,
    output_probability,
    sample_counts,
)
from .unitaries import (
    ConstructionError,
    cyclic_network,
    fourier_unitary,
    haar_random,
    hom_network,
    permanent,
    permuted_product_permanent,
    perturb,
    submatrix,
)
from .witnesses import (
    WitnessReport,
    cyclic_witness,
    delta_hoeffding,
    evaluate_witness,
    find_umax,
    finite_size_correction,
    fourier_witness,
    hom_witness,
    kappa_factor,
    twomode_witness,
    unique_completion_mode,
    witness_setting,
    ztl_valid,
)
from .certify import (
    Certificate,
    CountTable,
    export_counts,
    ingest_counts,
    pattern_ones,
    plan_samples,
    reference_fidelity,
    reversibility,
    threshold_additive,
    threshold_source,
    threshold_witness,
)

__version__ = "0.1.0"
