"""Limiting-medium solver and effective-medium design.

The continuum limit of the many-sphere system is solved in the unknown
W = curl E by midpoint collocation over a uniform cell partition of the
domain, reusing the exact pairwise kernel of the discrete system (matched
cells and weights give identical matrices entrywise). The resulting medium is
characterized by
    Psi(x) = 1 + c h(x) N(x),    mu(x) = mu0 / Psi(x),    K^2(x) = k^2 / Psi(x),
with c = 8 pi i / (3 omega mu0); design inverts these relations for h.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MaterialFields, MediumParams, SimDomain, VoxelGrid, as_point, cross, moment_coupling
from .errors import ParameterError, PoleError, StencilError
from .greens import dipole_curl_sum, dipole_field_sum, interaction_matrix
from .incident import PlaneWave, curl_E0, eval_E0
from .las import FieldSample, linear_solve


@dataclass(frozen=True)
class CollocationGrid:
    """Uniform cell partition of the domain with midpoint quadrature weights
    w_p = h(y_p) N(y_p) |cell|."""

    centers: np.ndarray      # (P, 3) cell midpoints
    weights: np.ndarray      # (P,) complex
    cell_volume: float
    dims: tuple
    lo: np.ndarray
    spacing: np.ndarray

    @classmethod
    def build(cls, domain: SimDomain, fields: MaterialFields, cells_per_axis):
        if np.isscalar(cells_per_axis):
            dims = (int(cells_per_axis),) * 3
        else:
            dims = tuple(int(n) for n in cells_per_axis)
        if min(dims) < 2:
            raise ParameterError(f"need at least 2 cells per axis, got {dims}")
        spacing = domain.extent / np.asarray(dims)
        axes = [domain.lo[i] + spacing[i] * (np.arange(dims[i]) + 0.5) for i in range(3)]
        centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        vol = float(np.prod(spacing))
        h, N = fields.sample(centers)
        weights = np.asarray(h) * np.asarray(N) * vol
        return cls(centers=centers, weights=weights, cell_volume=vol, dims=dims,
                   lo=domain.lo.copy(), spacing=spacing)

    @property
    def P(self) -> int:
        return self.centers.shape[0]

    def cell_of(self, x):
        """Index of the cell containing x, or -1 if outside the partition."""
        t = np.floor((as_point(x) - self.lo) / self.spacing).astype(int)
        if np.any(t < 0) or np.any(t >= np.asarray(self.dims)):
            return -1
        return int(np.ravel_multi_index(tuple(t), self.dims))


@dataclass(frozen=True)
class LimitSolution:
    """Curl values W_p = (curl E)(y_p) of the limiting field at cell midpoints."""

    W: np.ndarray            # (P, 3) complex
    grid: CollocationGrid
    residual_norm: float
    solver_used: str


def solve_limit(domain: SimDomain, fields: MaterialFields, medium: MediumParams,
                wave: PlaneWave, cells_per_axis, *, method="auto", tol=None) -> LimitSolution:
    """Collocate the curl of the limiting integral equation and solve for W.

    The p = q self-cell term is dropped (the diagonal is the identity),
    mirroring the self-exclusion of the discrete system; refinement studies
    quantify the committed cell-size error.
    """
    grid = CollocationGrid.build(domain, fields, cells_per_axis)
    k = medium.k
    c = moment_coupling(medium)
    active = np.abs(grid.weights) > 0.0
    W = np.asarray(curl_E0(wave, k, grid.centers), dtype=complex).copy()
    residual = 0.0
    solver_used = "none"
    if np.any(active):
        centers_a = grid.centers[active]
        coeffs = c * grid.weights[active]
        A = interaction_matrix(centers_a, coeffs, k)
        idx = np.arange(3 * centers_a.shape[0])
        A[idx, idx] += 1.0
        rhs = curl_E0(wave, k, centers_a).reshape(-1)
        x, residual, _, solver_used = linear_solve(A, rhs, method=method, tol=tol)
        W_active = x.reshape(-1, 3)
        W[active] = W_active
        if not np.all(active):
            # passive rows do not feed back; evaluate them from the active ones
            moments = -coeffs[:, np.newaxis] * W_active
            W[~active] += dipole_curl_sum(grid.centers[~active], centers_a, moments, k)
    return LimitSolution(W=W, grid=grid, residual_norm=residual, solver_used=solver_used)


def limit_moments(solution: LimitSolution, medium: MediumParams) -> np.ndarray:
    """Dipole moments -c w_p W_p of the weighted cells (others are zero)."""
    c = moment_coupling(medium)
    return -c * solution.grid.weights[:, np.newaxis] * solution.W


def eval_limit_field(solution: LimitSolution, medium: MediumParams, wave: PlaneWave,
                     x) -> FieldSample:
    """Evaluate the limiting E and H at probe point(s) from the cell moments.

    For a probe inside a weighted cell the self-cell term is dropped and a
    nearest-singularity warning is attached; the value is still returned.
    """
    x = as_point(x)
    single = x.ndim == 1
    probes = np.atleast_2d(x)
    k = medium.k
    grid = solution.grid
    E = eval_E0(wave, k, probes)
    curlE = curl_E0(wave, k, probes)
    notes = []
    moments = limit_moments(solution, medium)
    active = np.abs(grid.weights) > 0.0
    if np.any(active):
        keep = np.ones((probes.shape[0], int(active.sum())), dtype=bool)
        act_index = {p: i for i, p in enumerate(np.flatnonzero(active))}
        for row, probe in enumerate(probes):
            cell = grid.cell_of(probe)
            if cell >= 0 and cell in act_index:
                keep[row, act_index[cell]] = False
                notes.append(
                    f"probe {row} lies inside weighted cell {cell}; self-cell dropped"
                )
        centers_a = grid.centers[active]
        moments_a = moments[active]
        E = E + dipole_field_sum(probes, centers_a, moments_a, k, keep=keep)
        curlE = curlE + dipole_curl_sum(probes, centers_a, moments_a, k, keep=keep)
    H = curlE / (1j * medium.omega * medium.mu0)
    if single:
        E, H = E[0], H[0]
    return FieldSample(E=E, H=H, provenance="limit", warnings=tuple(notes))


# ---------------------------------------------------------------------------
# effective medium
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EffectiveMedium:
    """Voxelized medium response Psi, permeability mu and refraction K^2.

    Node-centered voxel grid; mu Psi = mu0 and K^2 Psi = k^2 hold voxelwise by
    construction.
    """

    origin: np.ndarray
    spacing: np.ndarray
    Psi: np.ndarray     # (nx, ny, nz) complex
    mu: np.ndarray
    K2: np.ndarray

    @property
    def dims(self):
        return self.Psi.shape

    def node_points(self):
        axes = [self.origin[i] + self.spacing[i] * np.arange(self.dims[i]) for i in range(3)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def to_csv(self, path, float_format="%.17g"):
        pts = self.node_points().reshape(-1, 3)
        cols = [pts[:, 0], pts[:, 1], pts[:, 2]]
        for arr in (self.Psi, self.mu, self.K2):
            flat = arr.reshape(-1)
            cols.extend([flat.real, flat.imag])
        header = "x,y,z,Re(Psi),Im(Psi),Re(mu),Im(mu),Re(K2),Im(K2)"
        rows = np.column_stack(cols)
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(",".join(float_format % v for v in row) + "\n")


def _grid_axes(domain: SimDomain, dims):
    if np.isscalar(dims):
        dims = (int(dims),) * 3
    dims = tuple(int(n) for n in dims)
    if min(dims) < 2:
        raise ParameterError(f"voxel grid needs at least 2 nodes per axis, got {dims}")
    spacing = domain.extent / (np.asarray(dims) - 1.0)
    return dims, spacing


def effective_medium(fields: MaterialFields, medium: MediumParams, grid_spec) -> EffectiveMedium:
    """Voxelize Psi = 1 + c h N, mu = mu0/Psi and K^2 = k^2/Psi over the domain."""
    dims, spacing = _grid_axes(fields.domain, grid_spec)
    axes = [fields.domain.lo[i] + spacing[i] * np.arange(dims[i]) for i in range(3)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    h, N = fields.sample(pts)
    Psi = (1.0 + moment_coupling(medium) * np.asarray(h) * np.asarray(N)).reshape(dims)
    bad = np.abs(Psi) < 1e-10
    if np.any(bad):
        voxel = tuple(int(i) for i in np.argwhere(bad)[0])
        raise PoleError(f"medium response Psi vanishes at voxel {voxel}", voxel=voxel)
    k = medium.k
    return EffectiveMedium(
        origin=fields.domain.lo.copy(),
        spacing=spacing,
        Psi=Psi,
        mu=medium.mu0 / Psi,
        K2=(k * k) / Psi,
    )


@dataclass(frozen=True)
class FeasibilityReport:
    """Which voxels of a designed impedance are physically admissible.

    Re h > 0 is lossy and admissible, Re h = 0 (with h != 0) is the lossless
    boundary case (reported distinctly), Re h < 0 is infeasible. Voxels
    needing a response (mu != mu0) where N = 0 cannot be realized at all.
    """

    total: int
    feasible: int
    lossless: int
    infeasible_voxels: tuple
    zero_density_conflicts: tuple

    @property
    def all_feasible(self) -> bool:
        return not self.infeasible_voxels and not self.zero_density_conflicts

    def to_json_dict(self):
        return {
            "total": self.total,
            "feasible": self.feasible,
            "lossless": self.lossless,
            "infeasible_voxels": [list(v) for v in self.infeasible_voxels],
            "zero_density_conflicts": [list(v) for v in self.zero_density_conflicts],
            "all_feasible": self.all_feasible,
        }


def design_materials(target_mu: VoxelGrid, medium: MediumParams, N_choice):
    """Impedance grid h realizing a target permeability, with feasibility report.

    h(x) = (3 omega mu0 / (8 pi i)) (mu0 / mu(x) - 1) / N(x). Voxels with
    Re h < 0 are flagged infeasible; voxels with mu != mu0 but N = 0 are
    flagged as density conflicts (h there is set to 0).
    """
    mu_vals = np.asarray(target_mu.values)
    dims = mu_vals.shape
    if np.any(mu_vals == 0):
        voxel = tuple(int(i) for i in np.argwhere(mu_vals == 0)[0])
        raise ZeroDivisionError(f"target permeability is zero at voxel {voxel}")
    if isinstance(N_choice, VoxelGrid):
        if N_choice.values.shape != dims:
            raise ParameterError("N grid dims must match the target mu grid")
        N_vals = np.asarray(N_choice.values.real, dtype=float)
    else:
        N_vals = np.full(dims, float(N_choice))
    if np.any(N_vals < 0):
        raise ParameterError("density N must be >= 0")

    c = moment_coupling(medium)
    ratio = medium.mu0 / mu_vals - 1.0
    needs_response = ratio != 0.0
    conflicts = needs_response & (N_vals == 0.0)
    h_vals = np.zeros(dims, dtype=complex)
    ok = needs_response & ~conflicts
    h_vals[ok] = ratio[ok] / (c * N_vals[ok])

    infeasible = h_vals.real < 0.0
    lossless = (h_vals.real == 0.0) & (h_vals != 0.0)
    report = FeasibilityReport(
        total=int(np.prod(dims)),
        feasible=int(np.count_nonzero(~infeasible & ~conflicts)),
        lossless=int(np.count_nonzero(lossless)),
        infeasible_voxels=tuple(tuple(int(i) for i in v) for v in np.argwhere(infeasible)),
        zero_density_conflicts=tuple(tuple(int(i) for i in v) for v in np.argwhere(conflicts)),
    )
    h_grid = VoxelGrid(target_mu.origin, target_mu.spacing, h_vals)
    return h_grid, report


# ---------------------------------------------------------------------------
# PDE residual of a sampled field
# ---------------------------------------------------------------------------

def pde_residual(E, em: EffectiveMedium, medium: MediumParams) -> np.ndarray:
    """Finite-difference residual |curl curl E - K^2 E + [grad Psi / Psi, curl E]|
    per interior voxel of a field sampled on the medium's voxel grid.

    E has shape dims + (3,). Uses 2nd-order central stencils; two boundary
    layers are consumed, so the result has shape (nx-4, ny-4, nz-4). With
    grad mu / mu = -grad Psi / Psi this is the curl-curl equation of the
    variable-permeability medium.
    """
    E = np.asarray(E, dtype=complex)
    dims = em.dims
    if E.shape != dims + (3,):
        raise ParameterError(f"E must have shape {dims + (3,)}, got {E.shape}")
    if min(dims) < 5:
        raise StencilError(f"need at least 5 voxels per axis for the stencils, got {dims}")
    dx = [float(s) for s in em.spacing]

    def curl(F):
        dF = [[np.gradient(F[..., c], dx[ax], axis=ax) for ax in range(3)] for c in range(3)]
        return np.stack([
            dF[2][1] - dF[1][2],
            dF[0][2] - dF[2][0],
            dF[1][0] - dF[0][1],
        ], axis=-1)

    W = curl(E)
    curl_curl = curl(W)
    grad_psi = np.stack([np.gradient(em.Psi, dx[ax], axis=ax) for ax in range(3)], axis=-1)
    bracket = cross(grad_psi / em.Psi[..., np.newaxis], W)
    res = curl_curl - em.K2[..., np.newaxis] * E + bracket
    mag = np.linalg.norm(res, axis=-1)
    return mag[2:-2, 2:-2, 2:-2]
