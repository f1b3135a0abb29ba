"""Determinantal point processes with radial Toeplitz correlation kernels.

A symbol with values in [0, 1] induces a positive contraction, hence a
determinantal point process whose law is invariant under the tree
automorphisms.  Sampling the infinite-volume process restricted to a ball
is implemented as sampling the process of the compressed kernel on the
ball: restriction of a determinantal process to a subset is determinantal
with the compressed kernel, and the compressed entries equal the true
kernel entries exactly (only the eigenstructure feels the boundary).

Sampling follows the two-stage scheme for Hermitian contractions: an
independent Bernoulli draw per eigenvalue selects an eigenvector subset,
then the resulting projection process is sampled sequentially, picking
each point with probability proportional to the diagonal of the running
projection and projecting the chosen coordinate out.  The projection
steps are organized as blocked Schur-complement updates on the kernel
matrix so the heavy work runs through BLAS; the sampled law is identical
to the textbook one-column-at-a-time recursion.

Reproducibility contract: a 64-bit seed spawns one child PRNG stream per
sample index (``numpy.random.SeedSequence.spawn``); each sample consumes
exactly one uniform vector for the Bernoulli stage and one uniform per
selected point.  The lockstep batch width and update block size are fixed
constants and BLAS runs single-threaded during sampling, so output is
byte-identical for a fixed seed regardless of worker count or scheduling.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CertificationError, ValidationError
from .operators import DEFAULT_MATRIX_BUDGET, TruncatedOperator, build_matrix
from .symbols import PolynomialSymbol, SymbolFunction
from .transform import DEFAULT_QUAD_NODES, hat_numeric, hat_polynomial_exact
from .tree import enumerate_ball

#: Eigenvalues outside [-HARD_TOL, 1 + HARD_TOL] mean the symbol is not a
#: valid [0, 1] symbol (or the numerics failed) and are an error.
CERTIFY_HARD_TOL = 1e-6

#: Eigenvalues within this of [0, 1] are considered clean roundoff.
CERTIFY_SOFT_TOL = 1e-9

#: Renormalization floor for degenerate conditional diagonals.
DIAG_FLOOR = 1e-14

Configuration = tuple[int, ...]


@dataclass(frozen=True)
class DppKernel:
    """Certified correlation kernel of a point process on a ball.

    ``eigenvalues`` are clamped to [0, 1] after certification so the
    Bernoulli stage stays valid despite roundoff; ``matrix`` keeps the
    raw kernel entries alpha(d(x, y)) for determinant checks.
    """

    operator: TruncatedOperator
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    min_eigenvalue: float
    max_eigenvalue: float

    @property
    def ball(self):
        return self.operator.ball

    @property
    def matrix(self) -> np.ndarray:
        return self.operator.matrix

    @property
    def expected_points(self) -> float:
        return float(self.eigenvalues.sum())


def certify_kernel(op: TruncatedOperator) -> DppKernel:
    """Eigendecompose and certify 0 <= spectrum <= 1, clamping roundoff."""
    w, v = op.eigensystem()
    lo, hi = float(w[0]), float(w[-1])
    if lo < -CERTIFY_HARD_TOL or hi > 1.0 + CERTIFY_HARD_TOL:
        raise CertificationError(
            f"kernel spectrum [{lo:.3e}, {hi:.6f}] leaves [0, 1]: the symbol "
            f"is not a valid [0, 1] symbol or the numerics failed"
        )
    return DppKernel(
        operator=op,
        eigenvalues=np.clip(w, 0.0, 1.0),
        eigenvectors=v,
        min_eigenvalue=lo,
        max_eigenvalue=hi,
    )


def validate_kernel(
    phi: SymbolFunction,
    kappa: int,
    radius: int,
    n_nodes: int = DEFAULT_QUAD_NODES,
    budget: int = DEFAULT_MATRIX_BUDGET,
) -> DppKernel:
    """Build T[phi] on B_radius and certify it as a DPP kernel.

    Polynomial symbols go through the exact transform; everything else
    through quadrature with the ball diameter worth of coefficients.
    """
    ball = enumerate_ball(kappa, radius)
    if isinstance(phi, PolynomialSymbol):
        alpha = hat_polynomial_exact(phi.coeffs, kappa)
    else:
        alpha = hat_numeric(phi, kappa, n_max=2 * radius, n_nodes=n_nodes)
    op = build_matrix(alpha, ball, budget=budget)
    return certify_kernel(op)


@dataclass(frozen=True)
class SampleConfig:
    """Seeded sampling request; the seed fully determines the output."""

    seed: int
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 0:
            raise ValidationError(f"n_samples must be >= 0, got {self.n_samples}")


#: Lockstep batch width and Schur-update block size of the sampler.
#: Fixed (not configuration) so that a seed alone determines the output
#: bit-for-bit; changing them changes roundoff paths.
SAMPLER_BATCH = 32
SAMPLER_BLOCK = 64


def _draw_slots(prob, targets, live, chunk=32):
    """Vectorized inverse-CDF draw: one slot per batch row.

    Two-stage search (chunk sums, then within the chunk) replaces a full
    cumulative sum, which dominates the step cost otherwise.  Returns the
    smallest slot whose running mass reaches the target; rows not in
    ``live`` return slot 0 (callers mask them out).
    """
    B, n = prob.shape
    nch = -(-n // chunk)
    padded = prob
    if nch * chunk != n:
        padded = np.zeros((B, nch * chunk), dtype=prob.dtype)
        padded[:, :n] = prob
    ps = padded.reshape(B, nch, chunk)
    chunk_mass = ps.sum(axis=2)
    cum_chunks = np.cumsum(chunk_mass, axis=1)
    rows = np.arange(B)
    c_idx = np.minimum((cum_chunks < targets[:, None]).sum(axis=1), nch - 1)
    base = cum_chunks[rows, c_idx] - chunk_mass[rows, c_idx]
    inner = np.cumsum(ps[rows, c_idx, :], axis=1)
    x_in = np.minimum(
        (inner < (targets - base)[:, None]).sum(axis=1), chunk - 1
    )
    return np.minimum(c_idx * chunk + x_in, n - 1)


def _sample_batch(
    keep_masks: list[np.ndarray],
    uniforms: list[np.ndarray],
    eigvec_rows32: np.ndarray,
    block: int = SAMPLER_BLOCK,
) -> list[np.ndarray]:
    """Lockstep projection-DPP sampling for one batch of Bernoulli outcomes.

    For each batch member the kernel of the selected eigenprojection is
    built once; each step picks a coordinate with probability proportional
    to the conditional diagonal, and the chosen coordinate is projected
    out via a Schur complement applied to the trailing matrix in blocks,
    so the heavy updates run as accumulated matrix products.
    ``eigvec_rows32`` holds the eigenvectors as rows.  BLAS is pinned to
    one thread by the caller so results do not depend on scheduling.
    """
    from scipy.linalg.blas import sgemm, ssyrk

    B = len(keep_masks)
    n = eigvec_rows32.shape[1]
    ks = np.array([int(m.sum()) for m in keep_masks])
    k_max = int(ks.max()) if B else 0
    if k_max == 0:
        return [np.empty(0, dtype=np.int64) for _ in range(B)]

    K = np.zeros((B, n, n), dtype=np.float32)
    for b, mask in enumerate(keep_masks):
        sel = eigvec_rows32[mask]  # (k_b, n), contiguous row gather
        if sel.shape[0] == 0:
            continue
        Kb = K[b]
        # one triangle via a symmetric rank-k product, then mirror
        ssyrk(1.0, sel, trans=1, c=Kb.T, beta=0.0, overwrite_c=1, lower=0)
        diag = Kb.diagonal().copy()
        np.add(Kb, Kb.T, out=Kb)
        np.fill_diagonal(Kb, diag)

    # F rows are the Schur vectors of the current block only; once a block
    # is folded into K they are dead, so the buffer stays (B, block, n).
    F = np.empty((B, block, n), dtype=np.float32)
    chosen = np.full((B, k_max), -1, dtype=np.int64)
    cdiag = np.ascontiguousarray(K.diagonal(axis1=1, axis2=2))
    prob = np.empty_like(cdiag)
    fsq = np.empty_like(cdiag)
    targets = np.empty(B, dtype=np.float32)
    rows = np.arange(B)
    start = 0
    for t in range(k_max):
        live = np.flatnonzero(ks > t)
        j = t - start
        np.maximum(cdiag, 0.0, out=prob)
        tot = prob.sum(axis=1)
        for b in live:
            targets[b] = uniforms[b][t] * tot[b]
        xs = _draw_slots(prob, targets, live)
        for b in live:
            if tot[b] <= DIAG_FLOOR:  # degenerate tail: largest mass wins
                cand = cdiag[b].astype(np.float64)
                done = chosen[b, :t]
                cand[done[done >= 0]] = -np.inf
                xs[b] = int(np.argmax(cand))
        cols = K[rows, xs, :].copy()  # == K[:, :, xs] by symmetry
        if j > 0:
            coef = F[rows, :j, xs]  # (B, j)
            cols -= np.matmul(coef[:, None, :], F[:, :j, :])[:, 0, :]
        piv = np.maximum(cols[rows, xs], DIAG_FLOOR)
        fout = F[:, j, :]
        np.divide(cols, np.sqrt(piv)[:, None], out=fout)
        if live.size < B:
            fout[np.setdiff1d(rows, live, assume_unique=True)] = 0.0
        np.multiply(fout, fout, out=fsq)
        np.subtract(cdiag, fsq, out=cdiag)
        cdiag[rows[live], xs[live]] = 0.0
        chosen[live, t] = xs[live]
        if t == k_max - 1:
            break  # nothing reads K after the last point
        if j + 1 == block:
            blk = F[:, : j + 1, :]
            for b in range(B):
                # accumulates K -= blk^T blk in place; K.T is the
                # Fortran-contiguous view of the symmetric K
                sgemm(
                    -1.0,
                    blk[b],
                    blk[b],
                    beta=1.0,
                    c=K[b].T,
                    trans_a=1,
                    trans_b=0,
                    overwrite_c=1,
                )
            np.copyto(cdiag, K.diagonal(axis1=1, axis2=2))
            for b in range(B):
                done = chosen[b, : t + 1]
                cdiag[b, done[done >= 0]] = 0.0
            start = t + 1
    return [np.sort(chosen[b, : ks[b]]) for b in range(B)]


def _batch_inputs(lam, n, children, b0, b1):
    masks, uniforms = [], []
    for s in range(b0, b1):
        rng = np.random.Generator(np.random.PCG64(children[s]))
        mask = rng.random(n) < lam
        masks.append(mask)
        uniforms.append(rng.random(int(mask.sum())))
    return masks, uniforms


_WORKER_STATE: dict = {}


def _init_worker(eigvec_rows32, lam, seed, n_samples):
    _WORKER_STATE["ev"] = eigvec_rows32
    _WORKER_STATE["lam"] = lam
    _WORKER_STATE["children"] = np.random.SeedSequence(seed).spawn(n_samples)


def _run_batch_range(args):
    b0, b1 = args
    from threadpoolctl import threadpool_limits

    ev = _WORKER_STATE["ev"]
    lam = _WORKER_STATE["lam"]
    children = _WORKER_STATE["children"]
    out = []
    with threadpool_limits(limits=1, user_api="blas"):
        for s0 in range(b0, b1, SAMPLER_BATCH):
            s1 = min(s0 + SAMPLER_BATCH, b1)
            masks, uniforms = _batch_inputs(lam, ev.shape[1], children, s0, s1)
            out.extend(_sample_batch(masks, uniforms, ev))
    return out


def sample(
    kernel: DppKernel, config: SampleConfig, workers: int | None = None
) -> list[Configuration]:
    """Draw seeded samples of the point process restricted to the ball.

    Returns one sorted tuple of ball vertex indices per sample, ordered by
    sample index.  ``workers`` only distributes whole batches over
    processes; BLAS is pinned to one thread during sampling, so the output
    is byte-identical for a fixed seed regardless of the worker count.
    """
    from threadpoolctl import threadpool_limits

    n = kernel.matrix.shape[0]
    lam = kernel.eigenvalues
    eigvec_rows32 = np.ascontiguousarray(kernel.eigenvectors.T, dtype=np.float32)
    if workers is None:
        workers = min(os.cpu_count() or 1, 4)
    heavy = config.n_samples >= 4 * SAMPLER_BATCH and n >= 128
    if workers > 1 and heavy:
        import concurrent.futures as cf
        import multiprocessing as mp

        n_batches = -(-config.n_samples // SAMPLER_BATCH)
        per = -(-n_batches // workers) * SAMPLER_BATCH
        ranges = [
            (b0, min(b0 + per, config.n_samples))
            for b0 in range(0, config.n_samples, per)
        ]
        ctx = mp.get_context("fork")
        with cf.ProcessPoolExecutor(
            max_workers=len(ranges),
            mp_context=ctx,
            initializer=_init_worker,
            initargs=(eigvec_rows32, lam, config.seed, config.n_samples),
        ) as pool:
            parts = list(pool.map(_run_batch_range, ranges))
        out_arrays = [pts for part in parts for pts in part]
    else:
        _init_worker(eigvec_rows32, lam, config.seed, config.n_samples)
        out_arrays = []
        with threadpool_limits(limits=1, user_api="blas"):
            for b0 in range(0, config.n_samples, SAMPLER_BATCH):
                b1 = min(b0 + SAMPLER_BATCH, config.n_samples)
                masks, uniforms = _batch_inputs(lam, n, _WORKER_STATE["children"], b0, b1)
                out_arrays.extend(_sample_batch(masks, uniforms, eigvec_rows32))
    return [tuple(int(i) for i in pts) for pts in out_arrays]


def write_samples_jsonl(samples: Sequence[Configuration], path) -> None:
    """One line per sample: {"sample": i, "points": [...]} in index order."""
    with open(path, "w") as fh:
        for i, pts in enumerate(samples):
            fh.write(
                json.dumps({"sample": i, "points": list(pts)}, separators=(",", ":"))
            )
            fh.write("\n")


def inclusion_probability(kernel: DppKernel, points: Sequence[int]) -> float:
    """det of the kernel minor on ``points`` (empty minor gives 1)."""
    pts = list(points)
    if len(set(pts)) != len(pts):
        raise ValidationError("inclusion set has duplicate points")
    if not pts:
        return 1.0
    minor = kernel.matrix[np.ix_(pts, pts)]
    return float(np.linalg.det(minor))


@dataclass(frozen=True)
class CorrelationRow:
    points: Configuration
    determinant: float
    frequency: float
    std_error: float

    @property
    def deviation(self) -> float:
        return abs(self.frequency - self.determinant)

    @property
    def ok(self) -> bool:
        if self.std_error == 0.0:
            return self.deviation == 0.0
        return self.deviation <= 4.0 * self.std_error


@dataclass(frozen=True)
class CorrelationReport:
    n_samples: int
    rows: tuple[CorrelationRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.rows)

    @property
    def worst_sigma(self) -> float:
        worst = 0.0
        for r in self.rows:
            if r.std_error > 0:
                worst = max(worst, r.deviation / r.std_error)
            elif r.deviation > 0:
                worst = math.inf
        return worst

    def to_csv_rows(self) -> list[list]:
        rows = [["points", "det", "frequency", "std_error", "ok"]]
        for r in self.rows:
            rows.append(
                [
                    " ".join(map(str, r.points)),
                    repr(r.determinant),
                    repr(r.frequency),
                    repr(r.std_error),
                    int(r.ok),
                ]
            )
        return rows


def verify_correlations(
    kernel: DppKernel,
    samples: Sequence[Configuration],
    point_sets: Iterable[Sequence[int]],
) -> CorrelationReport:
    """Monte-Carlo check of P(xi contains Lambda) = det K_Lambda.

    The binomial standard error uses the theoretical determinant; a row
    passes when the empirical frequency sits within 4 standard errors.
    """
    n = kernel.matrix.shape[0]
    N = len(samples)
    occupancy = np.zeros((N, n), dtype=bool)
    for i, pts in enumerate(samples):
        occupancy[i, list(pts)] = True
    rows = []
    for pts in point_sets:
        pts = tuple(int(p) for p in pts)
        det = inclusion_probability(kernel, pts)
        freq = float(occupancy[:, pts].all(axis=1).mean()) if pts else 1.0
        det_c = min(max(det, 0.0), 1.0)
        se = math.sqrt(det_c * (1.0 - det_c) / N) if N else math.inf
        rows.append(
            CorrelationRow(points=pts, determinant=det, frequency=freq, std_error=se)
        )
    return CorrelationReport(n_samples=N, rows=tuple(rows))


@dataclass(frozen=True)
class CountStatistics:
    region_size: int
    mean: float
    variance: float
    boundary_energy: float
    empirical_mean: float | None = None
    empirical_variance: float | None = None


def count_statistics(
    kernel: DppKernel,
    region: Sequence[int],
    samples: Sequence[Configuration] | None = None,
) -> CountStatistics:
    """Exact mean/variance of the point count in ``region``.

    mean = sum_x K(x, x);  variance = mean - sum_{x,y in region} K(x, y)^2.
    ``boundary_energy`` reports sum_{x in region, y outside} K(x, y)^2,
    which equals the variance when the kernel is an exact projection.
    """
    idx = np.asarray(sorted(set(int(i) for i in region)), dtype=np.int64)
    K = kernel.matrix
    sub = K[np.ix_(idx, idx)]
    mean = float(sub.diagonal().sum())
    variance = mean - float((sub * sub).sum())
    outside = np.setdiff1d(np.arange(K.shape[0]), idx, assume_unique=False)
    cross = K[np.ix_(idx, outside)]
    boundary = float((cross * cross).sum())
    emp_mean = emp_var = None
    if samples is not None and len(samples):
        counts = np.array([len(set(pts) & set(idx.tolist())) for pts in samples])
        emp_mean = float(counts.mean())
        emp_var = float(counts.var())
    return CountStatistics(
        region_size=int(idx.size),
        mean=mean,
        variance=variance,
        boundary_energy=boundary,
        empirical_mean=emp_mean,
        empirical_variance=emp_var,
    )


@dataclass(frozen=True)
class RigidityRow:
    radius: int
    region_radius: int
    region_size: int
    mean: float
    variance: float


def rigidity_probe(
    kappa: int,
    interval: tuple[float, float],
    radii: Sequence[int],
    n_nodes: int = DEFAULT_QUAD_NODES,
    budget: int = DEFAULT_MATRIX_BUDGET,
) -> list[RigidityRow]:
    """Count-variance growth table for the indicator-symbol process.

    For each radius R the kernel is built on B_R and the exact variance
    of the count in B_{R-2} is recorded.  Sub-linear growth in the region
    size is suggestive of number rigidity; no conclusion is drawn here,
    the table is exploratory output.
    """
    from .symbols import indicator_symbol

    a, b = interval
    phi = indicator_symbol(a, b)
    rows = []
    for radius in sorted(radii):
        if radius < 2:
            raise ValidationError("rigidity probe needs radius >= 2")
        kernel = validate_kernel(phi, kappa, radius, n_nodes=n_nodes, budget=budget)
        depths = kernel.ball.depths()
        region = np.flatnonzero(depths <= radius - 2)
        stats = count_statistics(kernel, region)
        rows.append(
            RigidityRow(
                radius=radius,
                region_radius=radius - 2,
                region_size=stats.region_size,
                mean=stats.mean,
                variance=stats.variance,
            )
        )
    return rows
