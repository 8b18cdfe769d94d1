"""Excursion sets, contour maps and simultaneous bands for latent Gaussian
fields with sparse precision matrices."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ExcursionSpec,
    GaussianField,
    MixtureField,
    NotPositiveDefiniteError,
    SampleEnsemble,
    SparsePrecision,
    marginal_excursion_prob,
    marginal_sd,
)
from .sparse import Permutation, factorize, sample_field  # noqa: E402
from .gaussint import IntegralLimits, gaussint  # noqa: E402
from .excursions import PreconditionError, excursions, excursions_mc  # noqa: E402
from .contourmap import choose_n_levels, contourmap, contourmap_mc  # noqa: E402
from .simconf import simconf, simconf_mc, simconf_mixture  # noqa: E402
from .geometry import TriMesh, continuous, interpolate_F, lattice_to_mesh, tricontour  # noqa: E402
