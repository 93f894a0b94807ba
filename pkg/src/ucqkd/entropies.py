"""Scalar information-theoretic kernels.

Rényi divergence, conditional Rényi entropy (Sibson closed form and a
direct-optimization cross-check), von Neumann conditional entropy, relative
entropy variance, the binary relative entropy with its concentration-bound
root-finders delta_1 / delta_2 / r_err, the i.i.d.-reduction factor f_q, and
the alpha seed heuristic.

All logarithms are base 2; every entropy is in bits.  alpha = 1 is always
handled by the dedicated von Neumann path, never by a limiting formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, rel_entr, xlogy

from .errors import DomainError, InvariantError, UsageError
from .matfun import (
    EIG_CLAMP,
    check_hermitian,
    herm_eig,
    mlog2,
    mpow,
    partial_trace,
)

LN2 = math.log(2.0)


@dataclass(frozen=True)
class CqSource:
    """Classical distribution p(x) with conditional states rho_B^x."""

    probs: np.ndarray
    states: tuple[np.ndarray, ...]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.min() < 0 or abs(p.sum() - 1.0) > 1e-12:
            raise UsageError("probs must be a probability vector")
        if len(self.states) != len(p):
            raise UsageError("one conditional state per symbol required")
        object.__setattr__(self, "probs", p)

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    def blocks(self) -> list[np.ndarray]:
        """Subnormalized blocks p(x) rho_B^x."""
        return [p * np.asarray(s, dtype=complex) for p, s in zip(self.probs, self.states)]

    def cq_state(self) -> np.ndarray:
        """Block-diagonal rho_XB with X as the outer classical index."""
        d = self.dim
        k = len(self.states)
        out = np.zeros((k * d, k * d), dtype=complex)
        for x, blk in enumerate(self.blocks()):
            out[x * d : (x + 1) * d, x * d : (x + 1) * d] = blk
        return out


# ---------------------------------------------------------------------------
# Rényi and von Neumann quantities
# ---------------------------------------------------------------------------


def renyi_divergence(rho: np.ndarray, sigma: np.ndarray, alpha: float) -> float:
    """D_alpha(rho||sigma) in bits; +inf if alpha > 1 and supp rho !<= supp sigma."""
    if alpha == 1 or alpha < 0:
        raise UsageError(f"alpha must be in [0,1) or (1,inf), got {alpha}")
    rho = check_hermitian(rho, what="rho")
    sigma = check_hermitian(sigma, what="sigma")
    if alpha > 1:
        lam_s, U = herm_eig(sigma)
        kernel = U[:, lam_s <= 1e-10]
        if kernel.shape[1] and np.linalg.norm(kernel.conj().T @ rho @ kernel) > 1e-10:
            return math.inf
    val = np.trace(mpow(rho, alpha) @ mpow(sigma, 1.0 - alpha)).real
    return math.log2(max(val, 1e-300)) / (alpha - 1.0)


def quantum_relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """D(rho||sigma) in bits; +inf on support violation."""
    lam_s, U = herm_eig(sigma)
    kernel = U[:, lam_s <= 1e-10]
    if kernel.shape[1] and np.linalg.norm(kernel.conj().T @ rho @ kernel) > 1e-10:
        return math.inf
    return float(np.trace(rho @ (mlog2(rho) - mlog2(sigma))).real)


def _sibson_from_blocks(blocks, alpha: float) -> float:
    """-(a/(a-1)) log2 Tr[(sum_x A_x^a)^(1/a)] on (sub)normalized blocks A_x."""
    s = sum(mpow(b, alpha) for b in blocks)
    val = np.trace(mpow(s, 1.0 / alpha)).real
    return -(alpha / (alpha - 1.0)) * math.log2(max(val, 1e-300))


def conditional_renyi_sibson(source, alpha: float) -> float:
    """H^up_alpha(X|B) of a cq source via the Sibson closed form.

    `source` may be a CqSource or an explicit list of (sub)normalized blocks
    A_x = p(x) rho_B^x; subnormalized input returns the value including the
    normalization offset (the formula is applied to the blocks as given).
    """
    if not 0 < alpha < 1:
        raise UsageError(f"Sibson path requires alpha in (0,1), got {alpha}")
    blocks = source.blocks() if isinstance(source, CqSource) else list(source)
    if not blocks:
        raise UsageError("empty block list")
    return _sibson_from_blocks(blocks, alpha)


def conditional_renyi_direct(
    source,
    alpha: float,
    restarts: int = 20,
    iters: int = 400,
    seed: int = 7,
) -> float:
    """max_sigma -D_alpha(rho_XB || I x sigma) by projected gradient ascent.

    Cross-check oracle only: maximizes the concave map
    sigma -> Tr[M sigma^(1-alpha)] with M = sum_x (p(x) rho_B^x)^alpha over
    the density-matrix simplex, with random restarts.
    """
    if not 0 < alpha < 1:
        raise UsageError(f"direct path requires alpha in (0,1), got {alpha}")
    blocks = source.blocks() if isinstance(source, CqSource) else list(source)
    d = blocks[0].shape[0]
    if d > 8:
        raise UsageError("direct optimization capped at dim 8")
    M = sum(mpow(b, alpha) for b in blocks)
    rng = np.random.default_rng(seed)
    beta = 1.0 - alpha

    def objective(sig):
        return np.trace(M @ mpow(sig, beta)).real

    best = -math.inf
    for r in range(restarts):
        if r == 0:
            sig = np.eye(d, dtype=complex) / d
        else:
            G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            sig = G @ G.conj().T
            sig /= np.trace(sig).real
        step = 0.5
        cur = objective(sig)
        for _ in range(iters):
            lam, U = herm_eig(sig)
            lam = np.maximum(lam, EIG_CLAMP)
            Mt = U.conj().T @ M @ U
            a, b = lam[:, None], lam[None, :]
            diff = a - b
            close = np.abs(diff) < 1e-9
            fd = np.where(
                close,
                beta * ((a + b) / 2.0) ** (beta - 1.0),
                (a**beta - b**beta) / np.where(close, 1.0, diff),
            )
            grad = U @ (fd * Mt) @ U.conj().T
            grad = 0.5 * (grad + grad.conj().T)
            while step > 1e-12:
                cand = _simplex_project(sig + step * grad)
                cval = objective(cand)
                if cval > cur + 1e-15:
                    sig, cur = cand, cval
                    step *= 1.3
                    break
                step *= 0.5
            else:
                break
        best = max(best, cur)
    return (1.0 / beta) * math.log2(max(best, 1e-300))


def _simplex_project(H: np.ndarray) -> np.ndarray:
    """Euclidean projection of a Hermitian matrix onto density matrices."""
    lam, U = herm_eig(H)
    mu = _project_prob_simplex(lam)
    return (U * mu) @ U.conj().T


def _project_prob_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho_idx = np.nonzero(u - css / (np.arange(len(v)) + 1) > 0)[0][-1]
    theta = css[rho_idx] / (rho_idx + 1)
    return np.maximum(v - theta, 0.0)


def von_neumann_entropy(rho: np.ndarray) -> float:
    lam = np.linalg.eigvalsh(check_hermitian(rho, what="state"))
    lam = lam[lam > EIG_CLAMP]
    return float(-np.sum(lam * np.log2(lam)))


def von_neumann_conditional(rho_ab: np.ndarray, dims: tuple[int, int]) -> float:
    """H(A|B) = H(AB) - H(B) in bits."""
    rho_b = partial_trace(rho_ab, dims, keep=[1])
    return von_neumann_entropy(rho_ab) - von_neumann_entropy(rho_b)


def relative_entropy_variance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """V(rho||sigma) = Tr[rho (log rho - log sigma)^2] - D(rho||sigma)^2, bits^2."""
    lam_s, U = herm_eig(sigma)
    kernel = U[:, lam_s <= 1e-10]
    if kernel.shape[1] and np.linalg.norm(kernel.conj().T @ rho @ kernel) > 1e-8:
        raise DomainError("relative entropy variance requires supp rho <= supp sigma")
    L = mlog2(rho) - mlog2(sigma)
    mean = np.trace(rho @ L).real
    second = np.trace(rho @ L @ L).real
    v = second - mean**2
    if v < -1e-9:
        raise InvariantError(f"negative relative entropy variance {v}")
    return max(v, 0.0)


# ---------------------------------------------------------------------------
# Binary relative entropy and concentration root-finders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarSolverConfig:
    absTol: float = 1e-12
    maxIter: int = 200

    def __post_init__(self):
        if self.absTol <= 0:
            raise UsageError("absTol must be positive")


DEFAULT_SOLVER = ScalarSolverConfig()


def binary_relative_entropy(p: float, q: float) -> float:
    """D(p||q) in bits; +inf when q in {0,1} disagrees with p."""
    if not (0 <= p <= 1 and 0 <= q <= 1):
        raise UsageError("arguments must lie in [0,1]")
    val = rel_entr(p, q) + rel_entr(1.0 - p, 1.0 - q)
    return float(val) / LN2 if math.isfinite(val) else math.inf


def _bisect_monotone(f, lo: float, hi: float, cfg: ScalarSolverConfig):
    """Root of increasing f on [lo, hi] via Brent with a residual guarantee."""
    flo, fhi = f(lo), f(hi)
    if flo > 0 or fhi < 0:
        raise DomainError("root finder: no sign change on the given bracket")
    root = brentq(f, lo, hi, xtol=1e-16, rtol=8.9e-16, maxiter=cfg.maxIter)
    return float(root)


def _log2_eps(eps, log2_eps):
    """log2 of a failure probability; the log form avoids underflow."""
    if (eps is None) == (log2_eps is None):
        raise UsageError("give exactly one of eps and log2_eps")
    if eps is not None:
        if not 0 < eps < 1:
            raise UsageError("eps must lie in (0,1)")
        return math.log2(eps)
    if not log2_eps < 0:
        raise UsageError("log2_eps must be negative")
    return float(log2_eps)


def solve_delta1(
    p: float,
    n: int,
    eps: float | None = None,
    cfg: ScalarSolverConfig = DEFAULT_SOLVER,
    *,
    log2_eps: float | None = None,
) -> float:
    """delta_1(p,n,eps): n D(p+delta||p) = -log2 eps, or 1-p when eps < p^n."""
    leps = _log2_eps(eps, log2_eps)
    if not 0 <= p <= 1 or n < 1:
        raise UsageError("need p in [0,1], n >= 1")
    if p == 1.0:
        return 0.0
    target = -leps / n
    # eps < p^n  <=>  target > -log2 p  = D(1||p)
    if p > 0 and target > -math.log2(p):
        return 1.0 - p
    f = lambda delta: binary_relative_entropy(p + delta, p) - target
    return _bisect_monotone(f, 0.0, 1.0 - p, cfg)


def solve_delta2(
    p: float,
    n: int,
    eps: float | None = None,
    cfg: ScalarSolverConfig = DEFAULT_SOLVER,
    *,
    log2_eps: float | None = None,
) -> float:
    """delta_2(p,n,eps): n D(p||p+delta) = -log2 eps."""
    leps = _log2_eps(eps, log2_eps)
    if not 0 <= p <= 1 or n < 1:
        raise UsageError("need p in [0,1], n >= 1")
    if p == 1.0:
        return 0.0
    if p == 0.0:
        # D(0||q) = -log2(1-q) gives the closed form directly.
        return -math.expm1(leps * LN2 / n)
    target = -leps / n
    f = lambda delta: binary_relative_entropy(p, p + delta) - target
    hi = 1.0 - p
    if f(hi) < 0:  # target beyond D(p||1) = inf cannot happen for p<1; guard p~1
        raise DomainError("delta_2: no root below 1-p")
    return _bisect_monotone(f, 0.0, hi, cfg)


def solve_r_err(
    n_sift: float,
    n_suc: float,
    n_err: float,
    eps_cor: float,
    cfg: ScalarSolverConfig = DEFAULT_SOLVER,
) -> float:
    """Bit-error-rate bound r with D(n_err/n_suc || (n_sift r + n_err)/(n_sift+n_suc))
    = -log2(eps_cor)/(n_sift+n_suc)."""
    if min(n_sift, n_suc) <= 0 or n_err < 0 or n_err > n_suc or not 0 < eps_cor <= 1:
        raise UsageError("invalid r_err arguments")
    p_obs = n_err / n_suc
    total = n_sift + n_suc
    target = -math.log2(eps_cor) / total

    def f(r):
        q = (n_sift * r + n_err) / total
        return binary_relative_entropy(p_obs, q) - target

    lo = p_obs  # q(lo) = p_obs => D = 0
    hi = 1.0
    if f(hi) < 0:
        raise DomainError("r_err: required confidence unreachable (rate bound > 1)")
    if target == 0.0:
        return p_obs
    return _bisect_monotone(f, lo, hi, cfg)


# ---------------------------------------------------------------------------
# f_q factor and the alpha seed
# ---------------------------------------------------------------------------


def log2_fq_factor(n: int, d: int) -> float:
    """log2 of f_q(n,d) = (n+d-1)^((d^2-1)/2) / (sqrt(2 pi (d/e^2)^d) prod i!)."""
    if n < 1 or d < 2:
        raise UsageError("need n >= 1, d >= 2")
    log2e = 1.0 / LN2
    num = ((d * d - 1) / 2.0) * math.log2(n + d - 1)
    log_denom_ln = 0.5 * (math.log(2 * math.pi) + d * (math.log(d) - 2.0))
    log_denom_ln += sum(gammaln(i + 1) for i in range(d))
    return num - log_denom_ln * log2e


def fq_factor(n: int, d: int) -> float:
    return 2.0 ** log2_fq_factor(n, d)


def alpha_heuristic(
    n_sift: float,
    eps_p: float | None,
    variance: float,
    *,
    log2_eps_p: float | None = None,
) -> float:
    """Seed alpha = sqrt(-2 ln(eps_p) / (n_sift V)), clamped to (0,1).

    Only a search seed; the natural-log convention reproduces the reference
    value 0.0094 at (n_sift=1e6, eps_p=2^-64, V=1).
    """
    if variance <= 0 or n_sift <= 0:
        raise UsageError("need n_sift > 0 and V > 0")
    leps = _log2_eps(eps_p, log2_eps_p)
    raw = math.sqrt(-2.0 * (leps * LN2) / (n_sift * variance))
    return min(max(raw, 1e-12), 1.0 - 1e-12)


def binary_entropy(p: float) -> float:
    """h(p) in bits."""
    if not 0 <= p <= 1:
        raise UsageError("binary entropy argument outside [0,1]")
    return float(-(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)) / LN2)
