"""Assemble and solve the coupled system for P_m = (curl E)(x_m) over a
particle cloud, then evaluate E and H anywhere via the dipole representation.

Row block j of the system reads
    P_j + c a^(2-kappa) sum_{m != j} h(x_m) {k^2 g(x_j, x_m) P_m + H(x_j, x_m) P_m} = (curl E0)(x_j),
with c = 8 pi i / (3 omega mu0); the induced moments are
    Q_m = -c a^(2-kappa) h(x_m) P_m,
and the field is E(x) = E0(x) + sum_m [grad g(x, x_m), Q_m], with terms whose
center lies within the exclusion radius of x dropped (effective-field
convention).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg
from scipy.spatial import cKDTree

from .core import MediumParams, as_point, cross, moment_coupling
from .errors import ConvergenceError, IllConditionedWarning, ParameterError, SolveSingularError
from .greens import dipole_curl_sum, dipole_field_sum, grad_g, interaction_matrix
from .incident import PlaneWave, curl_E0, eval_E0
from .particles import ParticleCloud

# dense factorization is the default up to this many scalar unknowns (3M)
DIRECT_LIMIT = 6000
CONDITION_WARN_THRESHOLD = 1e12


@dataclass(frozen=True)
class FieldSample:
    """E and H at probe points, with the solver that produced them."""

    E: np.ndarray
    H: np.ndarray
    provenance: str
    warnings: tuple = ()


@dataclass(frozen=True)
class CurlSolution:
    """Solved curl values P_m and induced moments Q_m with solve diagnostics."""

    P: np.ndarray                # (M, 3) complex
    Q: np.ndarray                # (M, 3) complex
    residual_norm: float
    condition_estimate: float
    solver_used: str             # "direct" | "iterative"

    def to_json_dict(self):
        def vecs(arr):
            return [[[float(v.real), float(v.imag)] for v in row] for row in arr]
        return {
            "P": vecs(self.P),
            "Q": vecs(self.Q),
            "residual_norm": float(self.residual_norm),
            "condition_estimate": float(self.condition_estimate),
        }

    @classmethod
    def from_json_dict(cls, d, solver_used="direct"):
        def arr(rows):
            return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
        return cls(
            P=arr(d["P"]),
            Q=arr(d["Q"]),
            residual_norm=float(d["residual_norm"]),
            condition_estimate=float(d["condition_estimate"]),
            solver_used=solver_used,
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)


def system_coefficients(cloud: ParticleCloud, medium: MediumParams) -> np.ndarray:
    """Per-particle coupling coefficients c a^(2-kappa) h(x_m)."""
    return moment_coupling(medium) * cloud.radius ** (2.0 - cloud.kappa) * cloud.h_at_centers


def assemble_system(cloud: ParticleCloud, medium: MediumParams, wave: PlaneWave):
    """Dense (3M, 3M) system matrix and right-hand side (curl E0 at centers)."""
    if cloud.M < 1:
        raise ParameterError("cannot assemble a system for an empty cloud")
    k = medium.k
    A = interaction_matrix(cloud.centers, system_coefficients(cloud, medium), k)
    idx = np.arange(3 * cloud.M)
    A[idx, idx] += 1.0
    rhs = curl_E0(wave, k, cloud.centers).reshape(-1)
    return A, rhs


def linear_solve(matrix, rhs, *, method="auto", tol=None, max_iter=None):
    """Shared dense/iterative solve; returns (x, residual, condition, method).

    method "auto" uses a dense factorization up to DIRECT_LIMIT unknowns and
    unpreconditioned GMRES beyond (the system is identity plus a small
    interaction in the asymptotic regime, hence well conditioned).
    """
    rhs = np.asarray(rhs, dtype=complex).reshape(-1)
    n = rhs.size
    if matrix.shape != (n, n):
        raise ParameterError(f"matrix shape {matrix.shape} does not match rhs size {n}")
    if method == "auto":
        method = "direct" if n <= DIRECT_LIMIT else "iterative"
    if method == "direct":
        x, residual, cond = _solve_direct(matrix, rhs, tol if tol is not None else 1e-10)
    elif method == "iterative":
        x, residual, cond = _solve_iterative(matrix, rhs, tol if tol is not None else 1e-8, max_iter)
    else:
        raise ParameterError(f"unknown solver method {method!r}")
    if cond > CONDITION_WARN_THRESHOLD:
        warnings.warn(
            f"condition estimate {cond:.3g} exceeds {CONDITION_WARN_THRESHOLD:.0e}; the continuous "
            "problem is uniquely solvable, so a near-singular system signals invalid parameters",
            IllConditionedWarning,
        )
    return x, residual, cond, method


def solve(matrix, rhs, cloud: ParticleCloud, medium: MediumParams, *,
          method="auto", tol=None, max_iter=None) -> CurlSolution:
    """Solve the assembled system for P and derive the induced moments Q."""
    x, residual, cond, method = linear_solve(matrix, rhs, method=method, tol=tol,
                                             max_iter=max_iter)
    P = x.reshape(-1, 3)
    Q = -system_coefficients(cloud, medium)[:, np.newaxis] * P
    return CurlSolution(P=P, Q=Q, residual_norm=residual,
                        condition_estimate=cond, solver_used=method)


def solve_las(cloud, medium, wave, **kwargs) -> CurlSolution:
    """Assemble and solve in one call."""
    A, rhs = assemble_system(cloud, medium, wave)
    return solve(A, rhs, cloud, medium, **kwargs)


def _solve_direct(matrix, rhs, tol):
    try:
        lu, piv = scipy.linalg.lu_factor(matrix)
    except scipy.linalg.LinAlgError as exc:
        raise SolveSingularError(f"dense factorization failed: {exc}") from exc
    if not np.all(np.isfinite(lu)):
        raise SolveSingularError("dense factorization produced non-finite factors")
    x = scipy.linalg.lu_solve((lu, piv), rhs)
    rhs_norm = np.linalg.norm(rhs)
    residual = float(np.linalg.norm(matrix @ x - rhs) / rhs_norm) if rhs_norm > 0 else 0.0
    if residual > tol:
        raise SolveSingularError(
            f"direct solve residual {residual:.3e} exceeds tolerance {tol:.1e}; "
            "the system is numerically singular"
        )
    cond = _condition_estimate(matrix, (lu, piv))
    return x, residual, cond


def _condition_estimate(matrix, lu_piv, rounds=6, seed=7):
    """Power-iteration estimate of cond_2 using the factorization. Cheap
    diagnostic, not a guarantee."""
    n = matrix.shape[0]
    rng = np.random.default_rng(seed)

    def norm_via(op, op_h):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        s = 0.0
        for _ in range(rounds):
            w = op_h(op(v))
            s = np.linalg.norm(w)
            if s == 0.0:
                return 0.0
            v = w / s
        return math.sqrt(s)

    norm_a = norm_via(lambda v: matrix @ v, lambda v: matrix.conj().T @ v)
    norm_inv = norm_via(
        lambda v: scipy.linalg.lu_solve(lu_piv, v),
        lambda v: scipy.linalg.lu_solve(lu_piv, v, trans=2),
    )
    return float(norm_a * norm_inv)


def _solve_iterative(matrix, rhs, tol, max_iter):
    history = []

    def record(pr_norm):
        history.append(float(pr_norm))

    op = scipy.sparse.linalg.aslinearoperator(matrix)
    x, info = scipy.sparse.linalg.gmres(
        op, rhs, rtol=tol, atol=0.0, maxiter=max_iter,
        callback=record, callback_type="pr_norm",
    )
    rhs_norm = np.linalg.norm(rhs)
    residual = float(np.linalg.norm(matrix @ x - rhs) / rhs_norm) if rhs_norm > 0 else 0.0
    if info != 0 or residual > tol:
        raise ConvergenceError(
            f"GMRES failed to reach {tol:.1e} (info={info}, residual={residual:.3e})",
            residual_history=history,
        )
    # Neumann-series bound from the interaction part; valid when it is small
    n = rhs.size
    rng = np.random.default_rng(7)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    s = 0.0
    for _ in range(6):
        w = matrix.conj().T @ (matrix @ v) - matrix.conj().T @ v - (matrix @ v) + v
        s = np.linalg.norm(w)
        if s == 0.0:
            break
        v = w / s
    s = math.sqrt(s)
    cond = (1.0 + s) / (1.0 - s) if s < 1.0 else math.inf
    return x, residual, cond


def eval_field(solution: CurlSolution, cloud: ParticleCloud, medium: MediumParams,
               wave: PlaneWave, x, exclusion_radius=None) -> FieldSample:
    """Evaluate E and H at probe point(s) x from the solved moments.

    Terms with |x - x_j| <= exclusion_radius (default 2a) are dropped, which
    realizes the effective-field convention near a sphere; probing exactly at
    a center is therefore allowed.
    """
    x = as_point(x)
    single = x.ndim == 1
    probes = np.atleast_2d(x)
    k = medium.k
    E = eval_E0(wave, k, probes)
    curlE = curl_E0(wave, k, probes)
    if cloud.M > 0 and np.any(solution.Q != 0):
        if exclusion_radius is None:
            exclusion_radius = 2.0 * cloud.radius
        dist = np.linalg.norm(probes[:, None, :] - cloud.centers[None, :, :], axis=-1)
        keep = dist > exclusion_radius
        keep &= np.any(solution.Q != 0, axis=1)[None, :]
        E = E + dipole_field_sum(probes, cloud.centers, solution.Q, k, keep=keep)
        curlE = curlE + dipole_curl_sum(probes, cloud.centers, solution.Q, k, keep=keep)
    H = curlE / (1j * medium.omega * medium.mu0)
    if single:
        E, H = E[0], H[0]
    return FieldSample(E=E, H=H, provenance="las")


@dataclass(frozen=True)
class NeglectReport:
    """Size of the neglected sub-wavelength correction versus the kept dipole
    term: j1 is the kept term at nearest-neighbor separation, j2_bound the
    correction bound a max(1/d^3, |k|^2/d) |Q|, ratio_bound = max(a/d, |k| a)."""

    j1_max: float
    j2_bound_max: float
    ratio_bound: float
    a_over_d: float
    ka: float

    def to_json_dict(self):
        return {
            "j1_max": self.j1_max,
            "j2_bound_max": self.j2_bound_max,
            "ratio_bound": self.ratio_bound,
            "a_over_d": self.a_over_d,
            "ka": self.ka,
        }


def neglect_estimates(cloud: ParticleCloud, medium: MediumParams,
                      solution: CurlSolution) -> NeglectReport:
    """Evaluate the neglect diagnostics at each particle's nearest neighbor."""
    if cloud.M < 1:
        raise ParameterError("neglect estimates require at least one particle")
    k = medium.k
    a = cloud.radius
    ka = abs(k) * a
    if cloud.M == 1:
        return NeglectReport(j1_max=0.0, j2_bound_max=0.0, ratio_bound=ka,
                             a_over_d=0.0, ka=ka)
    dists, idx = cKDTree(cloud.centers).query(cloud.centers, k=2)
    d_nn = dists[:, 1]
    nn = cloud.centers[idx[:, 1]]
    j1 = np.linalg.norm(cross(grad_g(nn, cloud.centers, k), solution.Q), axis=-1)
    q_norm = np.linalg.norm(solution.Q, axis=-1)
    j2 = a * np.maximum(1.0 / d_nn ** 3, abs(k) ** 2 / d_nn) * q_norm
    a_over_d = float(a / d_nn.min())
    return NeglectReport(
        j1_max=float(j1.max()),
        j2_bound_max=float(j2.max()),
        ratio_bound=max(a_over_d, ka),
        a_over_d=a_over_d,
        ka=float(ka),
    )
