"""Exact generators and spectral gaps of the finite East and wave chains.

The chain on sites 0..n (site 0 frozen occupied) has 2^n states, indexed by the
occupancy word of sites 1..n.  A wave of length v fired from an occupied site i
resets sites i+1..min(i+v, n) to an i.i.d. Bernoulli(p) pattern; v=1 is the
East chain.  The generator is reversible w.r.t. the product Bernoulli(p)
measure, and the relaxation time is 1/gap of the symmetrized matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import NotReversible, SolverDidNotConverge, StateSpaceTooLarge
from .model import ModelParams, config_from_index, enumerate_transitions

DENSE_DIM_LIMIT = 2**14
MAX_EXACT_N = 24


@dataclass
class GeneratorMatrix:
    """Rate matrix Q of the chain; rows sum to zero, off-diagonals are rates."""

    n: int
    v: int
    p: float
    matrix: object  # ndarray when dim <= DENSE_DIM_LIMIT, else CSR

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def is_dense(self) -> bool:
        return isinstance(self.matrix, np.ndarray)


@dataclass
class SpectralReport:
    """Gap, relaxation time and the residuals certifying the eigensolve."""

    gap: float
    residual: float      # max |pi . Q|
    eig_residual: float  # ||A v - lambda v||_inf for the reported pair

    @property
    def tau(self) -> float:
        return 1.0 / self.gap


def popcounts(n: int) -> np.ndarray:
    """Bit-population counts of 0..2^n-1."""
    counts = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        counts += (np.arange(1 << n) >> b) & 1
    return counts


def stationary_vector(params: ModelParams) -> np.ndarray:
    """pi over the 2^n state table: p^(#occupied free sites) (1-p)^(rest)."""
    k = popcounts(params.n)
    return params.p**k * (1.0 - params.p) ** (params.n - k)


def build_generator(params: ModelParams, v: int = 1) -> GeneratorMatrix:
    """Assemble the exact generator of the wave chain (East for v=1).

    Waves are truncated at site n, so the finite chain is the restriction of
    the infinite one.  Parallel routes between the same pair of states have
    their rates summed.
    """
    n, p = params.n, params.p
    if v < 1:
        raise ValueError(f"wave length must be >= 1, got {v}")
    if n > MAX_EXACT_N:
        raise StateSpaceTooLarge(f"2^{n} states exceed the exact-enumeration budget")
    dim = 1 << n
    states = np.arange(dim, dtype=np.int64)

    dense = dim <= DENSE_DIM_LIMIT
    if dense:
        q = np.zeros((dim, dim))
    else:
        rows_acc, cols_acc, vals_acc = [], [], []

    # firing site i occupies bit i-1 of the state word (i=0 is the frozen origin)
    for i in range(0, n):
        lo, hi = i + 1, min(i + v, n)  # window of sites reset by a wave from i
        w = hi - lo + 1
        winmask = ((1 << w) - 1) << (lo - 1)
        if i == 0:
            sources = states
        else:
            sources = states[(states >> (i - 1)) & 1 == 1]
        base = sources & ~winmask
        for pat in range(1 << w):
            ones = pat.bit_count()
            rate = p**ones * (1.0 - p) ** (w - ones)
            targets = base | (pat << (lo - 1))
            if dense:
                np.add.at(q, (sources, targets), rate)
            else:
                rows_acc.append(sources)
                cols_acc.append(targets)
                vals_acc.append(np.full(sources.shape, rate))

    if dense:
        q[states, states] -= q.sum(axis=1)
        return GeneratorMatrix(n, v, p, q)

    rows = np.concatenate(rows_acc)
    cols = np.concatenate(cols_acc)
    vals = np.concatenate(vals_acc)
    q = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    q = q - scipy.sparse.diags(np.asarray(q.sum(axis=1)).ravel())
    return GeneratorMatrix(n, v, p, q.tocsr())


def generator_from_transitions(params: ModelParams) -> GeneratorMatrix:
    """East generator assembled state by state from enumerate_transitions.

    Independent route used to cross-check build_generator(v=1); quadratic in
    the state count, so keep n small.
    """
    dim = 1 << params.n
    q = np.zeros((dim, dim))
    for k in range(dim):
        c = config_from_index(k, params.n)
        for t in enumerate_transitions(c, params):
            j = k ^ (1 << (t.site - 1))
            q[k, j] += t.rate
            q[k, k] -= t.rate
    return GeneratorMatrix(params.n, 1, params.p, q)


def stationarity_residual(gen: GeneratorMatrix, pi: np.ndarray) -> float:
    """max |pi . Q|, zero for the exact stationary measure."""
    if gen.is_dense:
        return float(np.abs(pi @ gen.matrix).max())
    return float(np.abs(gen.matrix.T @ pi).max())


def detailed_balance_defect(gen: GeneratorMatrix, pi: np.ndarray) -> float:
    """max |pi(x)q(x,y) - pi(y)q(y,x)| over all pairs."""
    if gen.is_dense:
        flow = pi[:, None] * gen.matrix
        return float(np.abs(flow - flow.T).max())
    flow = scipy.sparse.diags(pi) @ gen.matrix
    return float(np.abs((flow - flow.T).toarray()).max())


def symmetrized(gen: GeneratorMatrix, pi: np.ndarray):
    """A(x,y) = q(x,y) sqrt(pi(x)/pi(y)); symmetry is enforced exactly."""
    s = np.sqrt(pi)
    if gen.is_dense:
        a = gen.matrix * (s[:, None] / s[None, :])
        return (a + a.T) / 2.0
    a = scipy.sparse.diags(s) @ gen.matrix @ scipy.sparse.diags(1.0 / s)
    return ((a + a.T) / 2.0).tocsr()


REVERSIBILITY_TOL = 1e-10


def spectral_gap(gen: GeneratorMatrix, pi: np.ndarray) -> SpectralReport:
    """Second-smallest eigenvalue of -A with certifying residuals.

    Dense solve below DENSE_DIM_LIMIT, Lanczos on the top of the spectrum of
    the symmetrized matrix above it.
    """
    defect = detailed_balance_defect(gen, pi)
    if defect > REVERSIBILITY_TOL:
        raise NotReversible(f"detailed-balance defect {defect:.3e} exceeds {REVERSIBILITY_TOL}")
    a = symmetrized(gen, pi)
    dim = gen.dim
    if gen.is_dense:
        vals, vecs = scipy.linalg.eigh(a, subset_by_index=[dim - 2, dim - 1])
        lam, vec = vals[0], vecs[:, 0]  # second-largest eigenvalue of A = -gap
    else:
        try:
            vals, vecs = scipy.sparse.linalg.eigsh(a, k=2, which="LA", tol=0)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise SolverDidNotConverge("Lanczos did not converge", residual=None) from exc
        order = np.argsort(vals)
        lam, vec = vals[order[0]], vecs[:, order[0]]
    gap = -lam
    eig_residual = float(np.abs((a @ vec) - lam * vec).max())
    if gap <= 0:
        raise SolverDidNotConverge(f"nonpositive gap {gap}", residual=eig_residual)
    return SpectralReport(gap=float(gap), residual=stationarity_residual(gen, pi),
                          eig_residual=eig_residual)


def tabulate(f, n: int) -> np.ndarray:
    """Dense table of a test function given as a callable on configurations."""
    return np.array([f(config_from_index(k, n)) for k in range(1 << n)], dtype=float)


def dirichlet_form(g: np.ndarray, gen: GeneratorMatrix, pi: np.ndarray) -> float:
    """(1/2) sum_x pi(x) sum_{y != x} q(x,y) (g(y) - g(x))^2, summed pairwise."""
    g = np.asarray(g, dtype=float)
    if gen.is_dense:
        rows, cols = np.nonzero(gen.matrix)
        off = rows != cols
        rows, cols = rows[off], cols[off]
        rates = gen.matrix[rows, cols]
    else:
        coo = gen.matrix.tocoo()
        off = coo.row != coo.col
        rows, cols, rates = coo.row[off], coo.col[off], coo.data[off]
    return float(0.5 * np.sum(pi[rows] * rates * (g[cols] - g[rows]) ** 2))


def variance(g: np.ndarray, pi: np.ndarray) -> float:
    g = np.asarray(g, dtype=float)
    mean = float(pi @ g)
    return float(pi @ (g - mean) ** 2)


def variational_ratio(g, gen: GeneratorMatrix, pi: np.ndarray):
    """(variance, energy, variance/energy); the ratio lower-bounds tau."""
    if callable(g):
        g = tabulate(g, gen.n)
    var = variance(g, pi)
    if var == 0.0:
        raise ValueError("constant test function: variational ratio undefined")
    energy = dirichlet_form(g, gen, pi)
    return var, energy, var / energy


def second_eigenvector(gen: GeneratorMatrix, pi: np.ndarray) -> np.ndarray:
    """The gap eigenvector mapped back to the unsymmetrized chain (A-vector / sqrt(pi))."""
    a = symmetrized(gen, pi)
    dim = gen.dim
    if gen.is_dense:
        _, vecs = scipy.linalg.eigh(a, subset_by_index=[dim - 2, dim - 1])
        vec = vecs[:, 0]
    else:
        vals, vecs = scipy.sparse.linalg.eigsh(a, k=2, which="LA", tol=0)
        vec = vecs[:, np.argsort(vals)[0]]
    return vec / np.sqrt(pi)


def dump_matrix(gen: GeneratorMatrix, fh) -> None:
    """Coordinate-format text dump: row, col, value with 17 significant digits."""
    if gen.is_dense:
        rows, cols = np.nonzero(gen.matrix)
        vals = gen.matrix[rows, cols]
    else:
        coo = gen.matrix.tocoo()
        rows, cols, vals = coo.row, coo.col, coo.data
    for r, c, x in zip(rows, cols, vals):
        fh.write(f"{r} {c} {x:.17g}\n")
