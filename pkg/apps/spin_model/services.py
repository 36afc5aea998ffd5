"""
NV ground-state Hamiltonian, eigensystem and anti-crossing search.

Basis ordering is m_s = +1, 0, -1 (electron) and, for the 9-level model,
electron-major |m_s> (x) |m_I> with m_I = +1, 0, -1.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import linalg, optimize

from apps.spin_model.domain import FieldVector, GslacLocation, LevelSet
from core.exceptions import NoCrossingError, NonHermitianError, ValidationError

logger = logging.getLogger(__name__)

_SQRT2 = math.sqrt(2.0)

SX = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / _SQRT2
SY = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / _SQRT2
SZ = np.diag([1.0, 0.0, -1.0]).astype(complex)
IDENTITY3 = np.eye(3, dtype=complex)

HERMITICITY_RTOL = 1e-9
DEGENERACY_RTOL = 1e-10
GSLAC_XATOL_T = 1e-10
GSLAC_GRID_POINTS = 601


def electron_sz(dimension):
    """Electron Sz in the full Hilbert space, or None for foreign dimensions."""
    if dimension == 3:
        return SZ
    if dimension == 9:
        return np.kron(SZ, IDENTITY3)
    return None


def ms0_indices(dimension):
    """Basis indices carrying m_s = 0."""
    if dimension == 3:
        return [1]
    return [3, 4, 5]


def build_hamiltonian(params, field):
    """
    Ground-state Hamiltonian in frequency units (Hz).

    Args:
        params: SpinSystemParams
        field: FieldVector in the NV frame

    Returns:
        np.ndarray: Hermitian matrix of dimension 3, or 9 with hyperfine
    """
    if field.magnitude < 0:
        raise ValidationError('Negative field magnitude')

    bx, by, bz = field.cartesian()
    gamma = params.gamma_over_2pi
    h_electron = params.D * (SZ @ SZ) + gamma * (bx * SX + by * SY + bz * SZ)

    if params.hyperfine is None:
        return h_electron

    hf = params.hyperfine
    h = np.kron(h_electron, IDENTITY3)
    h += hf.A_parallel * np.kron(SZ, SZ)
    h += hf.A_perpendicular * (np.kron(SX, SX) + np.kron(SY, SY))
    h += hf.quadrupole_P * np.kron(IDENTITY3, SZ @ SZ)
    return h


def check_hermitian(H):
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise NonHermitianError(f'Expected a square matrix, got shape {H.shape}')
    scale = float(np.max(np.abs(H))) if H.size else 0.0
    residual = float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0
    if residual > HERMITICITY_RTOL * scale:
        raise NonHermitianError(f'Hermiticity residual {residual:.3e} exceeds tolerance')
    return H


def _order_degenerate(energies, states):
    """Rotate each degenerate cluster onto Sz eigenvectors, ascending <Sz>."""
    sz = electron_sz(len(energies))
    if sz is None:
        return states
    scale = max(1.0, float(np.max(np.abs(energies))))
    start = 0
    n = len(energies)
    while start < n:
        stop = start + 1
        while stop < n and energies[stop] - energies[stop - 1] <= DEGENERACY_RTOL * scale:
            stop += 1
        if stop - start > 1:
            block = states[:, start:stop]
            projected = block.conj().T @ sz @ block
            _, rotation = linalg.eigh(projected)
            states[:, start:stop] = block @ rotation
        start = stop
    return states


def eigensystem(H, field=None):
    """
    Diagonalize a Hermitian matrix.

    Returns:
        LevelSet: ascending real energies, orthonormal eigenvector columns;
        degenerate levels ordered by ascending <Sz>

    Raises:
        NonHermitianError: If H is not Hermitian
    """
    H = check_hermitian(H)
    energies, states = linalg.eigh(H)
    states = _order_degenerate(energies, np.array(states, dtype=complex))

    sz = electron_sz(len(energies))
    spin_z = None
    if sz is not None:
        spin_z = np.real(np.einsum('ik,ij,jk->k', states.conj(), sz, states))
    return LevelSet(energies=energies, states=states, field=field, spin_z=spin_z)


def levels(params, field):
    return eigensystem(build_hamiltonian(params, field), field=field)


def anticrossing_gap(params, field):
    """
    Splitting of the two levels that anti-cross at the GSLAC, Hz.

    For the 9-level model this is the gap between the m_s=0 and m_s=-1
    manifolds (third and fourth level).
    """
    energies = levels(params, field).energies
    lower = params.dimension // 3 - 1
    return float(energies[lower + 1] - energies[lower])


def _field_at(magnitude, transverse):
    parallel = math.sqrt(max(magnitude * magnitude - transverse * transverse, 0.0))
    return FieldVector.from_components(parallel, transverse)


def find_gslac(params, transverse, B_range):
    """
    Locate the ground-state level anti-crossing.

    The gap is first tabulated on a coarse grid across the range. The
    bounded minimizer then refines inside the two grid cells around each
    local minimum of the table, and the smallest refined gap wins. With
    hyperfine levels the gap has several local minima in a typical range.

    Args:
        params: SpinSystemParams
        transverse: Fixed transverse field component, T (>= 0)
        B_range: (low, high) field magnitudes bracketing the crossing, T

    Returns:
        GslacLocation: field magnitude of minimal gap and the gap itself (Hz)

    Raises:
        NoCrossingError: If the gap minimum lies on the range boundary
    """
    if transverse < 0:
        raise ValidationError('Transverse field must be >= 0')
    low, high = float(B_range[0]), float(B_range[1])
    low = max(low, transverse)
    if not high > low:
        raise ValidationError(f'Empty field range [{low}, {high}]')

    def gap(magnitude):
        return anticrossing_gap(params, _field_at(magnitude, transverse))

    grid = np.linspace(low, high, GSLAC_GRID_POINTS)
    tabulated = np.array([gap(magnitude) for magnitude in grid])
    best = int(np.argmin(tabulated))
    if best == 0 or best == len(grid) - 1:
        raise NoCrossingError(
            f'No anti-crossing inside [{low * 1e3:.4f}, {high * 1e3:.4f}] mT'
        )

    inner = tabulated[1:-1]
    candidates = np.flatnonzero((inner <= tabulated[:-2]) & (inner <= tabulated[2:])) + 1
    center, min_gap = float(grid[best]), float(tabulated[best])
    evaluations = len(grid)
    for index in candidates:
        result = optimize.minimize_scalar(
            gap, bounds=(grid[index - 1], grid[index + 1]), method='bounded', options={'xatol': GSLAC_XATOL_T}
        )
        evaluations += result.nfev
        if result.fun < min_gap:
            center, min_gap = float(result.x), float(result.fun)
    min_gap = max(min_gap, 0.0)

    edge = 1e-4 * (high - low)
    if center - low < edge or high - center < edge or min_gap >= min(tabulated[0], tabulated[-1]):
        raise NoCrossingError(
            f'No anti-crossing inside [{low * 1e3:.4f}, {high * 1e3:.4f}] mT'
        )

    logger.debug(
        "GSLAC at %.6f mT, gap %.3e Hz (transverse %.3e T, %d evaluations)",
        center * 1e3, min_gap, transverse, evaluations,
    )
    return GslacLocation(B_center=center, min_gap=min_gap)


def spin_mixing(params, field):
    """
    Loss of m_s=0 purity: 1 - max_k |<m_s=0|psi_k>|^2, in [0, 1].
    """
    level_set = levels(params, field)
    rows = ms0_indices(params.dimension)
    overlaps = np.sum(np.abs(level_set.states[rows, :]) ** 2, axis=0)
    return float(np.clip(1.0 - np.max(overlaps), 0.0, 1.0))


def transverse_component(B, beta):
    """Transverse field for magnitude B at misalignment beta (degrees), T."""
    if B < 0:
        raise ValidationError('Field magnitude must be >= 0')
    return B * math.sin(math.radians(beta))


def level_sweep(params, B_values, theta=0.0, phi=0.0, workers=1):
    """
    Eigenlevels along a field-magnitude sweep at fixed orientation.

    Returns:
        np.ndarray: shape (len(B_values), dimension), Hz
    """
    fields = [FieldVector(magnitude=float(b), theta=theta, phi=phi) for b in B_values]

    def energies(field):
        return levels(params, field).energies

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(energies, fields))
    else:
        rows = [energies(field) for field in fields]
    return np.vstack(rows) if rows else np.empty((0, params.dimension))


def spin_projections(level_set):
    """<Sz> of each eigenstate, ascending energy order."""
    if level_set.spin_z is not None:
        return np.asarray(level_set.spin_z)
    sz = electron_sz(level_set.dimension)
    if sz is None:
        raise ValidationError(f'No electron Sz for dimension {level_set.dimension}')
    states = level_set.states
    return np.real(np.einsum('ik,ij,jk->k', states.conj(), sz, states))
