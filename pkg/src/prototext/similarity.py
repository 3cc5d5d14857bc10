"""Similarity measures between embeddings and prototypes.

Four kinds: cosine, weighted cosine, L2 distance, weighted L2 distance.
The weighted variants carry one learned weight per embedding dimension.
Scores are oriented so that larger always means more similar: the L2 kinds
return the negated distance.

The weighted L2 formula has two sub-modes. "literal" computes
sqrt(sum (w_i * u_i * v_i)^2); "corrected" computes the difference form
sqrt(sum (w_i * (u_i - v_i))^2) and is the default.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateWeightsError, ShapeMismatchError, ZeroVectorError


class SimilarityKind(str, Enum):
    COSINE = "cosine"
    WEIGHTED_COSINE = "weighted_cosine"
    L2 = "l2"
    WEIGHTED_L2 = "weighted_l2"


class L2Mode(str, Enum):
    LITERAL = "literal"
    CORRECTED = "corrected"


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class SimilarityWeights:
    """Per-dimension weights, stored as an unconstrained raw vector.

    The effective weights depend on the similarity kind: clamped at zero
    for weighted cosine (no negative reasoning), squashed into (0, 2) via
    2*sigmoid for weighted L2 (so magnitudes stay comparable).
    """

    raw: np.ndarray
    kind: SimilarityKind

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=np.float64)
        self.kind = SimilarityKind(self.kind)

    @property
    def effective(self) -> np.ndarray:
        if self.kind == SimilarityKind.WEIGHTED_COSINE:
            return np.maximum(self.raw, 0.0)
        if self.kind == SimilarityKind.WEIGHTED_L2:
            return 2.0 * _sigmoid(self.raw)
        return np.ones_like(self.raw)

    def effective_jacobian_diag(self) -> np.ndarray:
        """d(effective)/d(raw), elementwise.

        For the clamp the subgradient is 0 on the negative side; entries
        sitting exactly at 0 keep gradient flow so a projected weight can
        recover.
        """
        if self.kind == SimilarityKind.WEIGHTED_COSINE:
            return (self.raw >= 0.0).astype(np.float64)
        if self.kind == SimilarityKind.WEIGHTED_L2:
            s = _sigmoid(self.raw)
            return 2.0 * s * (1.0 - s)
        return np.zeros_like(self.raw)


def _check_dims(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ShapeMismatchError(f"shapes differ: {u.shape} vs {v.shape}")
    return u, v


def cosine_sim(u: np.ndarray, v: np.ndarray) -> float:
    u, v = _check_dims(u, v)
    nu = np.sqrt((u * u).sum())
    nv = np.sqrt((v * v).sum())
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("cosine similarity of a zero vector is undefined")
    return float((u * v).sum() / (nu * nv))


def weighted_cosine_sim(w: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    u, v = _check_dims(u, v)
    w = np.maximum(np.asarray(w, dtype=np.float64), 0.0)
    if w.shape != u.shape:
        raise ShapeMismatchError(f"weights shape {w.shape} != vector shape {u.shape}")
    num = (w * u * v).sum()
    du = (w * u * u).sum()
    dv = (w * v * v).sum()
    if du <= 0.0 or dv <= 0.0:
        raise DegenerateWeightsError("weighted norm collapsed to zero")
    return float(num / (np.sqrt(du) * np.sqrt(dv)))


def weighted_l2(
    w: np.ndarray, u: np.ndarray, v: np.ndarray, mode: L2Mode | str = L2Mode.CORRECTED
) -> float:
    """Weighted L2 distance (not negated; callers wanting a score negate)."""
    u, v = _check_dims(u, v)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != u.shape:
        raise ShapeMismatchError(f"weights shape {w.shape} != vector shape {u.shape}")
    if L2Mode(mode) == L2Mode.LITERAL:
        terms = w * u * v
    else:
        terms = w * (u - v)
    return float(np.sqrt((terms * terms).sum()))


def similarity_score(
    kind: SimilarityKind,
    w_eff: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    l2_mode: L2Mode = L2Mode.CORRECTED,
) -> float:
    """Single-pair similarity score for the given kind (larger = more similar)."""
    kind = SimilarityKind(kind)
    if kind == SimilarityKind.COSINE:
        return cosine_sim(u, v)
    if kind == SimilarityKind.WEIGHTED_COSINE:
        return weighted_cosine_sim(w_eff, u, v)
    if kind == SimilarityKind.L2:
        u, v = _check_dims(u, v)
        d = u - v
        return -float(np.sqrt((d * d).sum()))
    return -weighted_l2(w_eff, u, v, l2_mode)


def similarity_matrix(
    Z: np.ndarray,
    P: np.ndarray,
    kind: SimilarityKind,
    w_eff: np.ndarray,
    l2_mode: L2Mode = L2Mode.CORRECTED,
) -> np.ndarray:
    """Scores for every (row of Z) x (row of P) pair; shape (n, K)."""
    Z = np.asarray(Z, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    kind = SimilarityKind(kind)
    if kind in (SimilarityKind.COSINE, SimilarityKind.WEIGHTED_COSINE):
        w = w_eff if kind == SimilarityKind.WEIGHTED_COSINE else np.ones(Z.shape[1])
        A = (Z * w) @ P.T
        B = (Z * Z) @ w
        C = (P * P) @ w
        if np.any(B <= 0.0) or np.any(C <= 0.0):
            if kind == SimilarityKind.COSINE:
                raise ZeroVectorError("cosine similarity of a zero vector is undefined")
            raise DegenerateWeightsError("weighted norm collapsed to zero")
        return A / (np.sqrt(B)[:, None] * np.sqrt(C)[None, :])
    w = w_eff if kind == SimilarityKind.WEIGHTED_L2 else np.ones(Z.shape[1])
    w2 = w * w
    if kind == SimilarityKind.WEIGHTED_L2 and L2Mode(l2_mode) == L2Mode.LITERAL:
        D2 = (Z * Z * w2) @ (P * P).T
    else:
        D2 = ((Z * Z) @ w2)[:, None] - 2.0 * (Z * w2) @ P.T + ((P * P) @ w2)[None, :]
    return -np.sqrt(np.maximum(D2, 0.0))


def similarity_backward(
    Z: np.ndarray,
    P: np.ndarray,
    kind: SimilarityKind,
    w_eff: np.ndarray,
    G: np.ndarray,
    l2_mode: L2Mode = L2Mode.CORRECTED,
    with_weight_grad: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Backward pass of similarity_matrix.

    Given G[i, j] = dLoss/dScore[i, j], returns (dP, dw_eff) where dP is the
    gradient with respect to the right-hand rows P (the Z side is treated as
    fixed) and dw_eff the gradient with respect to the effective weights.
    """
    Z = np.asarray(Z, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    kind = SimilarityKind(kind)
    dim = Z.shape[1]
    dw = np.zeros(dim)

    if kind in (SimilarityKind.COSINE, SimilarityKind.WEIGHTED_COSINE):
        w = w_eff if kind == SimilarityKind.WEIGHTED_COSINE else np.ones(dim)
        A = (Z * w) @ P.T
        B = (Z * Z) @ w
        C = (P * P) @ w
        inv = 1.0 / (np.sqrt(B)[:, None] * np.sqrt(C)[None, :])
        S = A * inv
        G1 = G * inv
        GS = G * S
        h = GS.sum(axis=0)  # per-prototype sum of G*S
        dP = w[None, :] * (G1.T @ Z) - (h / C)[:, None] * (w[None, :] * P)
        if with_weight_grad and kind == SimilarityKind.WEIGHTED_COSINE:
            r = GS.sum(axis=1)
            dw = (Z * (G1 @ P)).sum(axis=0)
            dw -= 0.5 * ((Z * Z).T @ (r / B))
            dw -= 0.5 * ((P * P).T @ (h / C))
        return dP, dw

    w = w_eff if kind == SimilarityKind.WEIGHTED_L2 else np.ones(dim)
    w2 = w * w
    literal = kind == SimilarityKind.WEIGHTED_L2 and L2Mode(l2_mode) == L2Mode.LITERAL
    if literal:
        D2 = (Z * Z * w2) @ (P * P).T
    else:
        D2 = ((Z * Z) @ w2)[:, None] - 2.0 * (Z * w2) @ P.T + ((P * P) @ w2)[None, :]
    D = np.sqrt(np.maximum(D2, 0.0))
    # Score = -D; subgradient 0 at coincident points (D == 0).
    with np.errstate(divide="ignore", invalid="ignore"):
        G2 = np.where(D > 0.0, G / D, 0.0)
    if literal:
        dP = -w2[None, :] * P * (G2.T @ (Z * Z))
        if with_weight_grad:
            dw = -w * ((Z * Z) * (G2 @ (P * P))).sum(axis=0)
        return dP, dw
    col = G2.sum(axis=0)
    dP = w2[None, :] * (G2.T @ Z - col[:, None] * P)
    if with_weight_grad and kind == SimilarityKind.WEIGHTED_L2:
        row = G2.sum(axis=1)
        sq = (Z * Z).T @ row - 2.0 * (Z * (G2 @ P)).sum(axis=0) + (P * P).T @ col
        dw = -w * sq
    return dP, dw
