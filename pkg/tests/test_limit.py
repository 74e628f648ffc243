import math

import numpy as np
import pytest

from scatter_swarm.core import (ConstantField, MaterialFields, MediumParams,
                                SimDomain, VoxelGrid, moment_coupling)
from scatter_swarm.errors import ParameterError, PoleError, StencilError
from scatter_swarm.greens import interaction_matrix
from scatter_swarm.incident import PlaneWave, curl_E0, eval_E0
from scatter_swarm.las import assemble_system
from scatter_swarm.limit import (CollocationGrid, EffectiveMedium,
                                 design_materials, effective_medium,
                                 eval_limit_field, pde_residual, solve_limit)
from scatter_swarm.particles import place_particles


@pytest.fixture
def medium():
    return MediumParams()


@pytest.fixture
def wave():
    return PlaneWave(direction=[0, 0, 1], polarization=[1, 0, 0])


@pytest.fixture
def unit_cube():
    return SimDomain(lo=[0, 0, 0], hi=[1, 1, 1])


def constant_fields(domain, h=0.05, N=1.0):
    return MaterialFields(domain=domain, h=ConstantField(h), N=ConstantField(N))


class IndicatorBox:
    """Sampler equal to `value` inside an axis box, else 0 (test helper)."""

    def __init__(self, lo, hi, value=1.0):
        self.lo, self.hi, self.value = np.asarray(lo), np.asarray(hi), value

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        inside = np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)
        return np.where(inside, complex(self.value), 0.0).reshape(np.asarray(pts).shape[:-1])


def test_inert_medium_returns_incident_curl(medium, wave, unit_cube):
    fields = constant_fields(unit_cube, h=0.0)
    sol = solve_limit(unit_cube, fields, medium, wave, 4)
    assert np.array_equal(sol.W, curl_E0(wave, medium.k, sol.grid.centers))
    probe = np.array([1.4, 0.3, 0.3])
    fs = eval_limit_field(sol, medium, wave, probe)
    assert np.array_equal(fs.E, eval_E0(wave, medium.k, probe))
    assert fs.provenance == "limit"


def test_single_weighted_cell_keeps_incident_curl(medium, wave, unit_cube):
    # only the cell around (0.25, 0.25, 0.25) of a 2x2x2 partition is active
    fields = MaterialFields(domain=unit_cube,
                            h=IndicatorBox([0, 0, 0], [0.5, 0.5, 0.5], 0.2),
                            N=ConstantField(1.0))
    sol = solve_limit(unit_cube, fields, medium, wave, 2)
    active = np.abs(sol.grid.weights) > 0
    assert int(active.sum()) == 1
    p = int(np.flatnonzero(active)[0])
    assert np.array_equal(sol.W[p], curl_E0(wave, medium.k, sol.grid.centers[p]))


def test_collocation_weights(medium, unit_cube):
    fields = constant_fields(unit_cube, h=0.3 + 0.1j, N=2.0)
    grid = CollocationGrid.build(unit_cube, fields, 4)
    assert grid.P == 64
    assert abs(grid.cell_volume - (0.25) ** 3) < 1e-15
    assert np.abs(grid.weights - (0.3 + 0.1j) * 2.0 * 0.25 ** 3).max() < 1e-15
    with pytest.raises(ParameterError):
        CollocationGrid.build(unit_cube, fields, 1)


def test_matrix_matches_particle_system_when_aligned(medium, wave, unit_cube):
    # lattice of spheres at a = 0.04 has spacing 0.2 = exactly a 5-cell
    # partition; one sphere per cell makes the two systems identical
    h = 0.07
    fields = constant_fields(unit_cube, h=h, N=1.0)
    cloud = place_particles(unit_cube, fields, a=0.04, kappa=0.5)
    assert cloud.M == 125
    A_cloud, rhs_cloud = assemble_system(cloud, medium, wave)
    grid = CollocationGrid.build(unit_cube, fields, 5)
    assert np.abs(grid.centers - cloud.centers).max() < 1e-12
    A_grid = interaction_matrix(grid.centers, moment_coupling(medium) * grid.weights, medium.k)
    idx = np.arange(3 * grid.P)
    A_grid[idx, idx] += 1.0
    assert np.abs(A_grid - A_cloud).max() <= 1e-15 * np.abs(A_cloud).max()


def test_refinement_self_convergence(medium, wave, unit_cube):
    fields = constant_fields(unit_cube)
    probes = np.array([[1.3, 0.4, 0.7], [0.5, -0.4, 0.5], [0.2, 0.3, 1.6]])
    E = {}
    for cells in (4, 8, 12):
        sol = solve_limit(unit_cube, fields, medium, wave, cells)
        E[cells] = eval_limit_field(sol, medium, wave, probes).E
    d1 = np.linalg.norm(E[8] - E[4])
    d2 = np.linalg.norm(E[12] - E[8])
    assert d2 < d1


def test_eval_inside_medium_warns_and_returns(medium, wave, unit_cube):
    fields = constant_fields(unit_cube)
    sol = solve_limit(unit_cube, fields, medium, wave, 4)
    fs = eval_limit_field(sol, medium, wave, np.array([0.5, 0.5, 0.5]))
    assert fs.warnings
    assert np.all(np.isfinite(fs.E)) and np.all(np.isfinite(fs.H))


def test_limit_field_linearity(medium, unit_cube):
    fields = constant_fields(unit_cube)
    w1 = PlaneWave(direction=[0, 0, 1], polarization=[1, 0, 0])
    w2 = PlaneWave(direction=[0, 0, 1], polarization=[3, 0, 0])
    probe = np.array([1.2, 0.5, 0.5])
    e1 = eval_limit_field(solve_limit(unit_cube, fields, medium, w1, 4), medium, w1, probe).E
    e2 = eval_limit_field(solve_limit(unit_cube, fields, medium, w2, 4), medium, w2, probe).E
    assert np.abs(e2 - 3 * e1).max() <= 1e-12 * np.abs(e1).max()


# ---------------------------------------------------------------------------
# effective medium and design
# ---------------------------------------------------------------------------

def test_effective_medium_inert(medium, unit_cube):
    em = effective_medium(constant_fields(unit_cube, h=0.0), medium, 4)
    assert np.array_equal(em.mu, np.full((4, 4, 4), medium.mu0, dtype=complex))
    assert np.array_equal(em.Psi, np.ones((4, 4, 4), dtype=complex))


def test_effective_medium_halving_permeability(medium, unit_cube):
    # c h N = (8 pi i / 3)(-3i/(8 pi)) = 1, so Psi = 2 (lossless boundary case)
    h = -3j / (8 * math.pi)
    em = effective_medium(constant_fields(unit_cube, h=h, N=1.0), medium, 3)
    assert np.abs(em.Psi - 2.0).max() < 1e-14
    assert np.abs(em.mu - 0.5).max() < 1e-14
    assert np.abs(em.K2 - medium.k ** 2 / 2).max() < 1e-14


def test_effective_medium_lossy_case(medium, unit_cube):
    em = effective_medium(constant_fields(unit_cube, h=3 / (8 * math.pi), N=1.0), medium, 3)
    assert np.abs(em.Psi - (1 + 1j)).max() < 1e-14
    assert np.abs(em.mu - (1 - 1j) / 2).max() < 1e-14


def test_effective_medium_algebra(medium, unit_cube):
    em = effective_medium(constant_fields(unit_cube, h=0.2 + 0.3j, N=1.7), medium, 5)
    k2 = medium.k ** 2
    assert np.abs(em.mu * em.Psi - medium.mu0).max() <= 1e-14 * medium.mu0
    assert np.abs(em.K2 * em.Psi - k2).max() <= 1e-14 * abs(k2)


def test_effective_medium_pole(medium, unit_cube):
    # c h N = -1 makes Psi vanish
    h = 3j / (8 * math.pi)
    with pytest.raises(PoleError) as err:
        effective_medium(constant_fields(unit_cube, h=h, N=1.0), medium, 3)
    assert err.value.voxel is not None


def test_design_identity_target(medium, unit_cube):
    target = VoxelGrid(unit_cube.lo, unit_cube.extent / 3, np.full((4, 4, 4), medium.mu0, complex))
    h_grid, report = design_materials(target, medium, 1.0)
    assert np.array_equal(h_grid.values, np.zeros((4, 4, 4), complex))
    assert report.all_feasible and report.lossless == 0


def test_design_half_mu_target(medium, unit_cube):
    target = VoxelGrid(unit_cube.lo, unit_cube.extent / 2, np.full((3, 3, 3), 0.5, complex))
    h_grid, report = design_materials(target, medium, 1.0)
    assert np.abs(h_grid.values - (-3j / (8 * math.pi))).max() < 1e-15
    assert report.all_feasible
    assert report.lossless == 27  # Re h = 0 reported distinctly


def test_design_round_trip(medium, unit_cube):
    rng = np.random.default_rng(99)
    psi = 1.0 + 0.5 * rng.random((5, 5, 5)) + 1j * 0.6 * rng.random((5, 5, 5))
    target = VoxelGrid(unit_cube.lo, unit_cube.extent / 4, medium.mu0 / psi)
    h_grid, report = design_materials(target, medium, 2.0)
    assert report.all_feasible
    fields = MaterialFields(domain=unit_cube, h=h_grid, N=ConstantField(2.0))
    em = effective_medium(fields, medium, 5)
    assert np.abs(em.mu - target.values).max() <= 1e-12 * np.abs(target.values).max()


def test_design_errors_and_flags(medium, unit_cube):
    vals = np.full((3, 3, 3), 0.5, complex)
    vals[1, 1, 1] = 0.0
    with pytest.raises(ZeroDivisionError):
        design_materials(VoxelGrid(unit_cube.lo, unit_cube.extent / 2, vals), medium, 1.0)
    # N = 0 where a response is needed
    target = VoxelGrid(unit_cube.lo, unit_cube.extent / 2, np.full((3, 3, 3), 0.5, complex))
    n_zero = VoxelGrid(unit_cube.lo, unit_cube.extent / 2, np.zeros((3, 3, 3)))
    _, report = design_materials(target, medium, n_zero)
    assert len(report.zero_density_conflicts) == 27
    assert not report.all_feasible
    # infeasible target: Im Psi < 0 forces Re h < 0
    bad = VoxelGrid(unit_cube.lo, unit_cube.extent / 2,
                    np.full((3, 3, 3), medium.mu0 / (1 - 0.4j), complex))
    _, report = design_materials(bad, medium, 1.0)
    assert len(report.infeasible_voxels) == 27


# ---------------------------------------------------------------------------
# PDE residual
# ---------------------------------------------------------------------------

def test_pde_residual_plane_wave(medium, wave, unit_cube):
    em = effective_medium(constant_fields(unit_cube, h=0.0), medium, 9)
    pts = em.node_points()
    E = eval_E0(wave, medium.k, pts.reshape(-1, 3)).reshape(em.dims + (3,))
    res = pde_residual(E, em, medium)
    spacing = float(em.spacing[0])
    bound = spacing ** 2 * abs(medium.k) ** 2 * abs(medium.k ** 2) * 1.0
    assert res.max() <= bound


def test_pde_residual_constant_psi_bracket_is_inert(medium, wave, unit_cube):
    em = effective_medium(constant_fields(unit_cube, h=0.1), medium, 7)
    pts = em.node_points()
    rng = np.random.default_rng(1)
    E = (rng.standard_normal(em.dims + (3,)) + 1j * rng.standard_normal(em.dims + (3,)))
    res1 = pde_residual(E, em, medium)
    # doubling a constant Psi leaves grad Psi / Psi = 0 untouched: identical
    em2 = EffectiveMedium(origin=em.origin, spacing=em.spacing,
                          Psi=2.0 * em.Psi, mu=em.mu, K2=em.K2)
    res2 = pde_residual(E, em2, medium)
    assert np.array_equal(res1, res2)


def test_pde_residual_grid_guard(medium, unit_cube):
    em = effective_medium(constant_fields(unit_cube, h=0.1), medium, 4)
    E = np.zeros(em.dims + (3,), complex)
    with pytest.raises(StencilError):
        pde_residual(E, em, medium)


def test_effective_medium_csv(medium, unit_cube, tmp_path):
    em = effective_medium(constant_fields(unit_cube, h=0.1, N=2.0), medium, 3)
    path = tmp_path / "em.csv"
    em.to_csv(path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "x,y,z,Re(Psi),Im(Psi),Re(mu),Im(mu),Re(K2),Im(K2)"
    assert len(lines) == 1 + 27
    row = [float(v) for v in lines[1].split(",")]
    assert len(row) == 9
