"""Rotation math: 6D interchange codec, exponential map, yaw helpers.

The 6D representation stores the first two columns of the rotation matrix;
decoding Gram-Schmidts them and completes the frame with a cross product.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels as K
from ..errors import DegenerateRotation, NotARotation

IDENTITY_6D = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])

_DEGENERATE_EPS = 1e-9
_ORTHO_TOL = 1e-6


def sixd_to_matrix(rep6) -> np.ndarray:
    """Decode one or a batch of 6D rotation blocks into matrices.

    Raises DegenerateRotation when either Gram-Schmidt normalization would
    divide by less than 1e-9.
    """
    rep6 = np.asarray(rep6, dtype=np.float64)
    n1, n2 = K.rot6d_norms(rep6)
    if np.any(n1 < _DEGENERATE_EPS) or np.any(n2 < _DEGENERATE_EPS):
        raise DegenerateRotation(
            f"6D block not decodable: triple norms {float(np.min(n1)):.3e}/{float(np.min(n2)):.3e}"
        )
    return K.rot6d_to_mat(rep6)


def matrix_to_sixd(mat) -> np.ndarray:
    """Encode rotation matrices as their first two columns.

    Raises NotARotation unless the input is orthonormal with det +1
    within 1e-6.
    """
    mat = np.asarray(mat, dtype=np.float64)
    err = mat @ np.swapaxes(mat, -1, -2) - np.eye(3)
    if np.max(np.abs(err)) > _ORTHO_TOL or np.any(np.abs(np.linalg.det(mat) - 1.0) > _ORTHO_TOL):
        raise NotARotation("matrix is not orthonormal with det +1")
    return np.concatenate([mat[..., :, 0], mat[..., :, 1]], axis=-1)


def sixd_to_matrix_unchecked(rep6) -> np.ndarray:
    """Batch decode without the degeneracy guard (validated data paths)."""
    return K.rot6d_to_mat(np.asarray(rep6, dtype=np.float64))


def matrix_to_sixd_unchecked(mat) -> np.ndarray:
    mat = np.asarray(mat, dtype=np.float64)
    return np.concatenate([mat[..., :, 0], mat[..., :, 1]], axis=-1)


def expmap_to_matrix(v) -> np.ndarray:
    return K.expmap_to_mat(v)


def matrix_to_expmap(mat) -> np.ndarray:
    return K.mat_to_expmap(mat)


def rotz(yaw: float) -> np.ndarray:
    """Rotation by ``yaw`` about the world vertical axis."""
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def yaw_of_matrix(mat) -> float | np.ndarray:
    """Heading angle: where the body x-axis points in the world xy plane."""
    mat = np.asarray(mat, dtype=np.float64)
    return np.arctan2(mat[..., 1, 0], mat[..., 0, 0])


def tilt_of_matrix(mat) -> float | np.ndarray:
    """Angle between the body up axis and world vertical, in [0, pi]."""
    mat = np.asarray(mat, dtype=np.float64)
    return np.arccos(np.clip(mat[..., 2, 2], -1.0, 1.0))


def geodesic_angle(ra, rb) -> float | np.ndarray:
    """Rotation angle of ra^T rb, the standard distance between rotations."""
    ra = np.asarray(ra, dtype=np.float64)
    rb = np.asarray(rb, dtype=np.float64)
    rel = np.swapaxes(ra, -1, -2) @ rb
    tr = rel[..., 0, 0] + rel[..., 1, 1] + rel[..., 2, 2]
    return np.arccos(np.clip((tr - 1.0) * 0.5, -1.0, 1.0))


def wrap_angle(a):
    """Wrap angles to (-pi, pi]."""
    a = np.asarray(a, dtype=np.float64)
    wrapped = np.mod(a + np.pi, 2.0 * np.pi) - np.pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    if wrapped.ndim == 0:
        return float(wrapped)
    return wrapped
