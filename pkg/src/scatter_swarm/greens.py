"""Outgoing Helmholtz point kernel, its derivatives, and the curl kernel
shared by the many-sphere system and the limiting-medium collocation solver.

All functions broadcast over leading axes; x and y are arrays of shape
(..., 3). Coincident source/target pairs are a hard error, never a clamped
value: the solvers exclude the self pair by construction.
"""

from __future__ import annotations

import math

import numpy as np

from .core import as_cvec, as_point, cross
from .errors import SingularityError

_EYE3 = np.eye(3)


def _separation(x, y):
    d = as_point(x) - as_point(y)
    r = np.sqrt(np.sum(d * d, axis=-1))
    if np.any(r == 0.0):
        raise SingularityError("kernel evaluated at coincident points x == y")
    return d, r


def eval_g(x, y, k):
    """Outgoing point kernel g(x, y) = exp(ik|x-y|) / (4 pi |x-y|)."""
    _, r = _separation(x, y)
    return np.exp(1j * k * r) / (4.0 * math.pi * r)


def grad_g(x, y, k):
    """Gradient of g with respect to x: g (ik - 1/r) (x - y)/r."""
    d, r = _separation(x, y)
    g = np.exp(1j * k * r) / (4.0 * math.pi * r)
    return (g * (1j * k - 1.0 / r) / r)[..., np.newaxis] * d


def hessian_g(x, y, k):
    """Closed-form Hessian d^2 g / dx_i dx_j, shape (..., 3, 3).

    With e = (x-y)/r: H = g'' e e^T + (g'/r) (I - e e^T), where
    g' = (ik - 1/r) g and g'' = (-k^2 - 2ik/r + 2/r^2) g. The matrix is
    symmetric with trace -k^2 g away from the source.
    """
    d, r = _separation(x, y)
    g = np.exp(1j * k * r) / (4.0 * math.pi * r)
    gp = (1j * k - 1.0 / r) * g
    gpp = (-k * k - 2j * k / r + 2.0 / (r * r)) * g
    e = d / r[..., np.newaxis]
    ee = e[..., :, np.newaxis] * e[..., np.newaxis, :]
    return gpp[..., np.newaxis, np.newaxis] * ee + (gp / r)[..., np.newaxis, np.newaxis] * (_EYE3 - ee)


def curl_dipole_kernel(x, y, k, V):
    """Curl at x of the dipole field [grad_y-independent] (grad g(x, y)) x V.

    For constant V, curl_x (grad g x V) = (V, grad) grad g + k^2 g V, which is
    the Hessian contraction H(x, y) V plus k^2 g V.
    """
    V = as_cvec(V)
    _, r = _separation(x, y)
    g = np.exp(1j * k * r) / (4.0 * math.pi * r)
    H = hessian_g(x, y, k)
    return (k * k * g)[..., np.newaxis] * V + np.einsum("...ij,...j->...i", H, V)


# ---------------------------------------------------------------------------
# pairwise assembly and representation sums
# ---------------------------------------------------------------------------

def interaction_matrix(points, coeffs, k, chunk=256):
    """Dense (3n, 3n) coupling matrix of the curl kernel between n points.

    Block (j, m), j != m, equals coeffs[m] * (k^2 g(x_j, x_m) I + H(x_j, x_m));
    diagonal blocks are zero (self interaction is excluded). Both the
    many-sphere system and the limiting-medium collocation build their system
    matrix as identity plus this matrix, so matched points and coefficients
    give identical systems entrywise.
    """
    points = as_point(points)
    coeffs = np.asarray(coeffs, dtype=complex)
    n = points.shape[0]
    if coeffs.shape != (n,):
        raise ValueError(f"coeffs must have shape ({n},), got {coeffs.shape}")
    _check_distinct(points)
    A = np.zeros((3 * n, 3 * n), dtype=complex)
    view = A.reshape(n, 3, n, 3)
    for j0 in range(0, n, chunk):
        j1 = min(j0 + chunk, n)
        d = points[j0:j1, None, :] - points[None, :, :]
        r = np.sqrt(np.sum(d * d, axis=-1))
        diag = np.zeros(r.shape, dtype=bool)
        rows = np.arange(j0, j1)
        diag[rows - j0, rows] = True
        r[diag] = 1.0  # placeholder, zeroed below
        g = np.exp(1j * k * r) / (4.0 * math.pi * r)
        gp = (1j * k - 1.0 / r) * g
        gpp = (-k * k - 2j * k / r + 2.0 / (r * r)) * g
        e = d / r[..., np.newaxis]
        ee = e[..., :, np.newaxis] * e[..., np.newaxis, :]
        blocks = gpp[..., None, None] * ee \
            + (gp / r)[..., None, None] * (_EYE3 - ee) \
            + (k * k * g)[..., None, None] * _EYE3
        blocks *= coeffs[None, :, None, None]
        blocks[diag] = 0.0
        view[j0:j1] = np.moveaxis(blocks, 1, 2)
    return A


def _check_distinct(points):
    # cheap duplicate guard: exact coincidences only
    n = points.shape[0]
    if n < 2:
        return
    order = np.lexsort(points.T)
    same = np.all(points[order[1:]] == points[order[:-1]], axis=-1)
    if np.any(same):
        i = int(np.argmax(same))
        raise SingularityError(
            f"duplicate points at indices {order[i]} and {order[i + 1]}: "
            "pairwise kernels are singular"
        )


def _masked_pair_geometry(probes, sources, keep):
    """Pairwise separations with excluded pairs replaced by a placeholder.

    Raises only if a KEPT pair is coincident; excluded pairs are allowed to
    coincide (probe exactly at a dropped source).
    """
    d = probes[:, None, :] - sources[None, :, :]
    r = np.sqrt(np.sum(d * d, axis=-1))
    if keep is None:
        if np.any(r == 0.0):
            raise SingularityError("kernel evaluated at coincident points x == y")
    else:
        if np.any((r == 0.0) & keep):
            raise SingularityError("kernel evaluated at a kept coincident pair")
        r = np.where(keep, r, 1.0)
    return d, r


def dipole_field_sum(probes, sources, moments, k, keep=None, chunk=512):
    """Sum over sources of grad g(x, y_m) x Q_m at each probe x.

    keep is an optional boolean mask of shape (n_probes, n_sources); excluded
    pairs contribute nothing (used for the effective-field convention).
    """
    probes = np.atleast_2d(as_point(probes))
    sources = np.atleast_2d(as_point(sources))
    moments = np.atleast_2d(as_cvec(moments))
    out = np.zeros((probes.shape[0], 3), dtype=complex)
    for p0 in range(0, probes.shape[0], chunk):
        p1 = min(p0 + chunk, probes.shape[0])
        sub = keep[p0:p1] if keep is not None else None
        d, r = _masked_pair_geometry(probes[p0:p1], sources, sub)
        g = np.exp(1j * k * r) / (4.0 * math.pi * r)
        grads = (g * (1j * k - 1.0 / r) / r)[..., np.newaxis] * d
        terms = cross(grads, moments[None, :, :])
        if sub is not None:
            terms = np.where(sub[..., None], terms, 0.0)
        out[p0:p1] = terms.sum(axis=1)
    return out


def dipole_curl_sum(probes, sources, moments, k, keep=None, chunk=512):
    """Sum over sources of k^2 g Q_m + H(x, y_m) Q_m at each probe x."""
    probes = np.atleast_2d(as_point(probes))
    sources = np.atleast_2d(as_point(sources))
    moments = np.atleast_2d(as_cvec(moments))
    out = np.zeros((probes.shape[0], 3), dtype=complex)
    for p0 in range(0, probes.shape[0], chunk):
        p1 = min(p0 + chunk, probes.shape[0])
        sub = keep[p0:p1] if keep is not None else None
        d, r = _masked_pair_geometry(probes[p0:p1], sources, sub)
        g = np.exp(1j * k * r) / (4.0 * math.pi * r)
        gp = (1j * k - 1.0 / r) * g
        gpp = (-k * k - 2j * k / r + 2.0 / (r * r)) * g
        e = d / r[..., np.newaxis]
        moments_b = np.broadcast_to(moments[None, :, :], d.shape)
        em = np.sum(e * moments_b, axis=-1)
        # H V = gpp (e.V) e + (gp/r)(V - (e.V) e), plus k^2 g V
        terms = (gpp - gp / r)[..., None] * em[..., None] * e \
            + ((gp / r + k * k * g)[..., None]) * moments_b
        if sub is not None:
            terms = np.where(sub[..., None], terms, 0.0)
        out[p0:p1] = terms.sum(axis=1)
    return out
