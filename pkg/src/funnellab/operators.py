"""Magnetic Laplacians, their quadratic form, and weight/gauge unitaries.

The Laplacian of a weighted magnetic graph acts on the m-weighted space;
spectral work happens in the *flattened* picture instead: conjugating by
f -> sqrt(m) f turns the operator into an honest Hermitian matrix with
off-diagonal entries -E(x,y) e^{i theta(x,y)} / sqrt(m(x) m(y)) and the
weighted degree on the diagonal.  `FlattenedHermitian` carries that matrix
together with the weight vector needed to map back.

`weight_transform` implements the change-of-weight unitary: rewriting the
graph for a new weight m' costs a diagonal potential W, which is returned
as data and never folded in silently.  `magnetic_gauge` gives the diagonal
unitary of cumulative half-line phases that removes theta on trees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import WeightedMagneticGraph, degree_vector

HERMITICITY_RTOL = 1e-13


@dataclass
class FlattenedHermitian:
    """Hermitian matrix of an m-weighted operator conjugated to unit weights.

    `weights` is the original vertex weight vector; None marks truncations
    so large that e^n weights leave double range (the matrix entries stay
    O(1), only the map back to the weighted picture is unavailable).
    """

    matrix: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        M = np.asarray(self.matrix)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"matrix must be square, got shape {M.shape}")
        scale = np.max(np.abs(M)) or 1.0
        defect = np.max(np.abs(M - M.conj().T))
        if defect > HERMITICITY_RTOL * scale:
            raise ValueError(
                f"matrix is not Hermitian: defect {defect:.3e} > "
                f"{HERMITICITY_RTOL:.0e} * {scale:.3e}"
            )
        M = 0.5 * (M + M.conj().T)
        if np.iscomplexobj(M) and np.max(np.abs(M.imag)) == 0.0:
            M = M.real
        self.matrix = M
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass
class DiagonalPotential:
    """Multiplication operator by a real function of the vertex."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("potential values must be finite")
        self.values = v


@dataclass
class FormWeight:
    """Diagonals (1 + deg)^{+1/2} and (1 + deg)^{-1/2} of the form norm."""

    plus: np.ndarray
    minus: np.ndarray


def apply_laplacian(g: WeightedMagneticGraph, f: np.ndarray) -> np.ndarray:
    """Evaluate (1/m(x)) sum_y E(x,y) (f(x) - e^{i theta(x,y)} f(y))."""
    f = np.asarray(f)
    if f.shape != (g.n,):
        raise ValueError(f"vector has shape {f.shape}, graph has {g.n} vertices")
    has_phase = bool(g.phases)
    out = np.zeros(g.n, dtype=complex if (has_phase or np.iscomplexobj(f)) else float)
    for x in range(g.n):
        acc = 0.0 + 0.0j if out.dtype == complex else 0.0
        for y, w, th in g.neighbors(x):
            if th != 0.0:
                acc += w * (f[x] - np.exp(1j * th) * f[y])
            else:
                acc += w * (f[x] - f[y])
        out[x] = acc / g.m[x]
    return out


def quadratic_form(g: WeightedMagneticGraph, f: np.ndarray) -> float:
    """Energy (1/2) sum_{x,y} E(x,y) |f(x) - e^{i theta(x,y)} f(y)|^2.

    The double sum collapses to one term per unordered edge because the two
    orientations contribute equal magnitudes.
    """
    f = np.asarray(f)
    total = 0.0
    for (x, y), w in g.edges.items():
        th = g.phases.get((x, y), 0.0)
        total += w * abs(f[x] - np.exp(1j * th) * f[y]) ** 2
    return float(total)


def assemble_laplacian(g: WeightedMagneticGraph) -> FlattenedHermitian:
    """Flattened Laplacian: diagonal deg(x), off-diagonal -E e^{i theta}/sqrt(m m').

    Square roots of the two vertex weights are taken separately so the
    half-line's e^n weights stay inside double range up to n = 600.
    """
    n = g.n
    sqrt_m = np.sqrt(np.asarray(g.m, dtype=float))
    dtype = complex if g.phases else float
    M = np.zeros((n, n), dtype=dtype)
    np.fill_diagonal(M, degree_vector(g))
    for (x, y), w in g.edges.items():
        th = g.phases.get((x, y), 0.0)
        val = -w / (sqrt_m[x] * sqrt_m[y])
        if th != 0.0:
            M[x, y] = val * np.exp(1j * th)
            M[y, x] = np.conj(M[x, y])
        else:
            M[x, y] = M[y, x] = val
    return FlattenedHermitian(M, weights=g.m.copy())


def weight_transform(
    g: WeightedMagneticGraph, m_new: np.ndarray
) -> tuple[WeightedMagneticGraph, DiagonalPotential]:
    """Rewrite g for the weight m_new; returns (g', W).

    The new edge weights are E'(x,y) = E(x,y) sqrt(m'(x) m'(y) / (m(x) m(y)))
    and the diagonal cost is
    W(x) = (1/m(x)) sum_y E(x,y) (1 - sqrt(m(x) m'(y) / (m(y) m'(x)))),
    so that the m'-Laplacian equals the conjugation of (Laplacian - W).
    """
    m_new = np.asarray(m_new, dtype=float)
    if m_new.shape != (g.n,):
        raise ValueError("m_new must have one entry per vertex")
    if np.any(m_new <= 0.0) or not np.all(np.isfinite(m_new)):
        raise ValueError("m_new must be strictly positive and finite")
    r = np.sqrt(m_new / g.m)
    edges = {k: w * r[k[0]] * r[k[1]] for k, w in g.edges.items()}
    g_prime = WeightedMagneticGraph(m_new.copy(), edges, dict(g.phases), shape=g.shape)
    W = np.zeros(g.n)
    for x in range(g.n):
        acc = 0.0
        for y, w, _ in g.neighbors(x):
            acc += w * (1.0 - r[y] / r[x])
        W[x] = acc / g.m[x]
    return g_prime, DiagonalPotential(W)


def magnetic_gauge(theta1) -> np.ndarray:
    """Diagonal of the cumulative-phase gauge unitary on the half-line.

    Entry n is exp(i sum_{k<n} theta1[k]); entry 0 has phase 0.
    """
    th = np.asarray(theta1, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(th)])
    return np.exp(1j * cum)


def gauge_conjugate(M: np.ndarray, diag_unitary: np.ndarray) -> np.ndarray:
    """T M T^{-1} for a diagonal unitary T given by its diagonal."""
    t = np.asarray(diag_unitary)
    return (t[:, None] * M) * np.conj(t)[None, :]


def form_weight(g: WeightedMagneticGraph) -> FormWeight:
    d = degree_vector(g)
    return FormWeight(plus=np.sqrt(1.0 + d), minus=1.0 / np.sqrt(1.0 + d))


def gstar_norm(g: WeightedMagneticGraph, M: np.ndarray) -> float:
    """Operator norm of (1+deg)^{-1/2} M (1+deg)^{-1/2}.

    Finite for exactly the operators bounded from the form domain to its
    dual; the value is the norm of that extension on the truncation.
    """
    M = np.asarray(M)
    if M.shape != (g.n, g.n):
        raise ValueError(f"matrix shape {M.shape} does not match {g.n} vertices")
    dm = form_weight(g).minus
    X = dm[:, None] * M * dm[None, :]
    if np.max(np.abs(X - X.conj().T)) <= 1e-12 * (np.max(np.abs(X)) or 1.0):
        return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (X + X.conj().T)))))
    return float(np.linalg.svd(X, compute_uv=False)[0])


def export_triplets(fh: FlattenedHermitian, path: str) -> None:
    """Write the matrix as `row col re im` lines for external cross-checks."""
    M = np.asarray(fh.matrix, dtype=complex)
    with open(path, "w") as out:
        for i in range(fh.dim):
            for j in range(fh.dim):
                v = M[i, j]
                if v != 0.0:
                    out.write(f"{i} {j} {v.real:.17g} {v.imag:.17g}\n")
