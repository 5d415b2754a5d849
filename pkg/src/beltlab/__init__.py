"""Numerical laboratory for piecewise shear coefficients on the
integer-punctured plane: extremality certificates, a Beltrami equation
solver, parametrized glued families, and the slit-disk covering."""

from .domains import (
    Annulus,
    Cell,
    CellDecomposition,
    CoveringMap,
    Disk,
    PlaneMinusIntegers,
    RoundAnnulus,
    SlitDisk,
    Strip,
    UnitDisk,
    exp_cover,
    translation_deck,
)
from .fields import (
    BeltramiField,
    LambdaParam,
    Piece,
    annulus_family,
    annulus_patch,
    annulus_shear_map,
    disk_family,
    example1_field,
    fd_beltrami,
    glue,
    piece_constants,
    piece_moduli,
    pullback,
    radial_stretch,
    radial_stretch_map,
    strip_family,
    strip_shear_map,
)
from .qdiff import (
    QuadraticDifferential,
    dictionary_differential,
    dictionary_string,
    q_norm,
    qs_basis,
)
from .quadrature import contour_fourier, integrate2d
from .extremal import (
    FourLimits,
    HamiltonCertificate,
    certify_extremal,
    four_limits,
    hamilton_preimage,
    pairing,
    teich_distance,
)
from .beltsolve import (
    MapGrid,
    TrivialityReport,
    beurling_apply,
    maximal_dilatation,
    solve,
    verify_triviality,
)
from .elliptic import (
    EllipticCoverData,
    elliptic_cover,
    slit_modulus_R,
    slit_t_of_R,
)
from .geodesics import (
    GeodesicFamily,
    HolomorphyReport,
    SeparationCertificate,
    build_family,
    build_infinite_family,
    forward_pairings,
    holomorphy_check,
    lambda_prime_contains,
    pairing_observable,
    recover_parameters,
    separate,
    shear_response,
)

__version__ = "0.1.0"
