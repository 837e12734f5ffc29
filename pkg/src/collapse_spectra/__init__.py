"""Spectra of collapsing flat and nilpotent models, superconnection Laplacians
over circle bases and the spectral sequences that count their small eigenvalues."""

from .complexes import (
    CochainComplex,
    FilteredComplex,
    GradedVectorSpace,
    SpectrumReport,
    check_complex,
    cohomology_dims,
    laplacian,
    spectral_pages,
    spectrum,
)
from .flat import BieberbachData, hodge_spectrum
from .scenarios import ResultRow, Scenario, emit, run_scenario
from .superconn import SuperconnData, Z2EquivariantData, circle_spectrum, monodromy_cohomology, z2_basic_spectrum

__version__ = "0.1.0"
