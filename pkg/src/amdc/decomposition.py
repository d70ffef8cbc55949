"""
Singular value decomposition of the centered data matrix.

Provides the deterministic-sign thin SVD used throughout amdc, the
embedding taken from the right singular vectors, projection of new
adjacency columns into an existing embedding, and the contribution
diagnostic that attributes each singular direction to adjacency entries.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from amdc.adjacency import DataMatrix
from amdc.errors import DecompositionError, ValidationError

logger = logging.getLogger(__name__)


def signed_svd(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Thin SVD with a deterministic sign convention.

    Works on a single matrix or a stack of matrices (leading axes). For each
    component the pair ``(u_k, v_k)`` is flipped so that the entry of ``u_k``
    with the largest absolute value is positive; ties go to the lowest index.

    Returns:
        ``(U, S, Vt)`` as from ``numpy.linalg.svd(a, full_matrices=False)``
    """
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    pivot = np.argmax(np.abs(u), axis=-2)
    signs = np.sign(np.take_along_axis(u, pivot[..., None, :], axis=-2))
    signs[signs == 0] = 1.0
    return u * signs, s, vt * np.swapaxes(signs, -1, -2)


def _read_only(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class SvdFactors:
    """``M_c = U diag(S) V^T`` with ``r = min(m^2, n)`` components."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    def __post_init__(self) -> None:
        if not self.U.shape[1] == self.S.size == self.V.shape[1]:
            raise ValidationError(
                f"Inconsistent factor shapes U{self.U.shape} S{self.S.shape} V{self.V.shape}"
            )
        for name in ("U", "S", "V"):
            object.__setattr__(self, name, _read_only(np.array(getattr(self, name))))

    @property
    def r(self) -> int:
        return int(self.S.size)

    @property
    def rank(self) -> int:
        """Number of singular values above numerical zero."""
        if self.r == 0 or self.S[0] == 0:
            return 0
        tol = self.S[0] * max(self.U.shape[0], self.V.shape[0]) * np.finfo(np.float64).eps
        return int((self.S > tol).sum())


@dataclass(frozen=True, eq=False)
class Embedding:
    """First ``h`` right singular vectors; row ``i`` locates sequence ``i``."""

    points: np.ndarray
    h: int


@dataclass(frozen=True, eq=False)
class ContributionMatrix:
    """
    Percent contribution of each adjacency entry to each singular direction.

    ``components`` lists the singular directions kept (zero singular values
    are omitted); every column sums to 100.
    """

    values: np.ndarray
    components: np.ndarray

    def to_frame(self, labels: list[str]) -> pd.DataFrame:
        frame = pd.DataFrame(
            self.values, columns=[f"component_{k + 1}" for k in self.components]
        )
        frame.insert(0, "entry", labels)
        return frame


def decompose(dm: DataMatrix) -> SvdFactors:
    """Thin SVD of a centered data matrix."""
    if not dm.centered:
        raise ValidationError("decompose expects a centered data matrix")
    if not np.isfinite(dm.values).all():
        raise DecompositionError("Data matrix contains non-finite values")
    try:
        u, s, vt = signed_svd(dm.values)
    except np.linalg.LinAlgError as exc:
        norm = float(np.linalg.norm(dm.values))
        raise DecompositionError(
            f"SVD did not converge for {dm.values.shape[0]}x{dm.values.shape[1]} matrix "
            f"(Frobenius norm {norm:.6g}, max |entry| {float(np.abs(dm.values).max()):.6g}): {exc}"
        ) from exc
    factors = SvdFactors(u, s, vt.T)
    logger.debug("Singular values: %s", np.array2string(s, precision=4))
    if factors.rank < factors.r:
        logger.info("Data matrix has rank %d of %d", factors.rank, factors.r)
    return factors


def embed(factors: SvdFactors, h: int) -> Embedding:
    if not 1 <= h <= factors.r:
        raise ValidationError(f"h must be in [1, {factors.r}], got {h}")
    return Embedding(factors.V[:, :h].copy(), h)


def project_onto(basis: np.ndarray, scales: np.ndarray, dm: DataMatrix) -> np.ndarray:
    """Coordinates ``M_c^T basis / scales`` of centered columns in an embedding."""
    if not dm.centered:
        raise ValidationError("Projection expects a centered data matrix")
    if dm.values.shape[0] != basis.shape[0]:
        raise ValidationError(
            f"Data matrix has {dm.values.shape[0]} rows, embedding basis has {basis.shape[0]}"
        )
    if (scales <= 0).any():
        raise DecompositionError("Cannot project onto a direction with zero singular value")
    return dm.values.T @ basis / scales


def project(factors: SvdFactors, dm: DataMatrix, h: int) -> np.ndarray:
    """
    Place the columns of ``dm`` in the first ``h`` embedding coordinates.

    Projecting the decomposed matrix itself reproduces ``V[:, :h]``.
    """
    if not 1 <= h <= factors.r:
        raise ValidationError(f"h must be in [1, {factors.r}], got {h}")
    return project_onto(factors.U[:, :h], factors.S[:h], dm)


def contributions(dm: DataMatrix, factors: SvdFactors) -> ContributionMatrix:
    """Squared entries of ``M_c V`` scaled to percentages of ``sigma_k^2``."""
    if not dm.centered:
        raise ValidationError("contributions expects a centered data matrix")
    if dm.values.shape != (factors.U.shape[0], factors.V.shape[0]):
        raise ValidationError("Factors do not belong to this data matrix")
    kept = np.arange(factors.rank)
    if kept.size < factors.r:
        logger.info("Omitting %d component(s) with zero singular value", factors.r - kept.size)
    scores = dm.values @ factors.V[:, kept]
    values = scores**2 * (100.0 / factors.S[kept] ** 2)
    return ContributionMatrix(values, kept)
