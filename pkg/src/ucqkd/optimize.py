"""Convex optimization kernels: a self-contained log-barrier interior-point
solver for linear SDPs with certified dual bounds, concave entropy objectives
with Frechet-derivative gradients, sequential linearization (outer
approximation) for maximizing those objectives over SDP feasible sets, and an
alternating (Csiszar-Tusnady) minimizer for classical relative entropy over a
product of convex sets.

All certified bounds are one-sided in the safe direction: SDP maximizations
report a dual upper bound, sequential linearization reports the minimum of
accumulated linearized upper bounds together with the best feasible value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import DomainError, InfeasibleError, UsageError
from .matfun import frechet_derivative, herm_eig, mpow

LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# Hermitian <-> real-vector coordinates
# ---------------------------------------------------------------------------


def herm_basis(d: int) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of d x d Hermitian matrices.

    Returned as an array of shape (d*d, d, d); coordinates of Hermitian M are
    Tr[B_k M], all real.
    """
    out = np.zeros((d * d, d, d), dtype=complex)
    k = 0
    s = 1.0 / math.sqrt(2.0)
    for i in range(d):
        out[k, i, i] = 1.0
        k += 1
    for i in range(d):
        for j in range(i + 1, d):
            out[k, i, j] = s
            out[k, j, i] = s
            k += 1
            out[k, i, j] = -1j * s
            out[k, j, i] = 1j * s
            k += 1
    return out


def mat_to_vec(M: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return np.einsum("kij,ji->k", basis, M).real


def vec_to_mat(v: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return np.einsum("k,kij->ij", v, basis)


# ---------------------------------------------------------------------------
# Feasible sets and facial reduction
# ---------------------------------------------------------------------------


@dataclass
class FeasibleSet:
    """{rho >= 0 : Tr[rho] = trace, Tr[A rho] = b, Tr[E rho] <= f}."""

    dim: int
    eq: list = field(default_factory=list)  # (matrix, value)
    ineq: list = field(default_factory=list)  # (matrix, upper bound)
    trace: float = 1.0


def facial_reduce(fs: FeasibleSet, tol: float = 1e-11) -> tuple[FeasibleSet, np.ndarray]:
    """Restrict to the face forced by constraints Tr[M rho] <= 0 with M >= 0.

    Such a constraint pins supp(rho) to ker(M).  Returns the reduced set and
    the isometry V with rho = V rho' V^dag; iterates until no reduction fires.
    """
    V = np.eye(fs.dim, dtype=complex)
    cur = fs
    while True:
        kern = None
        drop = None
        # inequality Tr[M rho] <= 0 with M >= 0, and equality Tr[M rho] = b
        # shifted by the trace constraint to Tr[(M - (b/tau) I) rho] = 0: if
        # the shifted operator is semidefinite, the face is its kernel
        scan = [(idx, np.asarray(M, dtype=complex), "ineq") for idx, (M, ub) in
                enumerate(cur.ineq) if ub <= tol]
        for idx, (M, b) in enumerate(cur.eq):
            N = np.asarray(M, dtype=complex) - (b / cur.trace) * np.eye(cur.dim)
            scan.append((idx, N, "eq"))
            scan.append((idx, -N, "eq"))
        for idx, M, kind in scan:
            lam, U = herm_eig(M)
            if lam.min() >= -tol:
                keep = lam <= tol
                if keep.sum() == 0:
                    raise InfeasibleError(
                        "facial reduction leaves an empty face", constraint_index=idx
                    )
                if keep.sum() == cur.dim and kind == "ineq":
                    continue  # vacuous, nothing to reduce or drop here
                kern = U[:, keep]
                drop = (kind, idx)
                break
        if kern is None:
            return cur, V
        red = lambda M: kern.conj().T @ np.asarray(M, dtype=complex) @ kern
        cur = FeasibleSet(
            dim=kern.shape[1],
            eq=[
                (red(A), b)
                for j, (A, b) in enumerate(cur.eq)
                if drop != ("eq", j)
            ],
            ineq=[
                (red(E), f)
                for j, (E, f) in enumerate(cur.ineq)
                if drop != ("ineq", j)
            ],
            trace=cur.trace,
        )
        V = V @ kern


# ---------------------------------------------------------------------------
# Linear SDP via log-barrier interior point
# ---------------------------------------------------------------------------


@dataclass
class SdpResult:
    rho: np.ndarray
    primal: float
    dual_bound: float  # certified: optimum <= dual_bound
    eq_multipliers: np.ndarray
    ineq_multipliers: np.ndarray

    @property
    def gap(self) -> float:
        return self.dual_bound - self.primal


def _assemble(fs: FeasibleSet, basis: np.ndarray):
    d = fs.dim
    eq_mats = [np.eye(d, dtype=complex)] + [np.asarray(A, dtype=complex) for A, _ in fs.eq]
    b = np.array([fs.trace] + [float(v) for _, v in fs.eq])
    Aeq = np.array([mat_to_vec(A, basis) for A in eq_mats])
    in_mats = [np.asarray(E, dtype=complex) for E, _ in fs.ineq]
    f = np.array([float(v) for _, v in fs.ineq])
    Evec = (
        np.array([mat_to_vec(E, basis) for E in in_mats])
        if in_mats
        else np.zeros((0, d * d))
    )
    return eq_mats, Aeq, b, in_mats, Evec, f


def _pinch_hessian(Minv: np.ndarray, basis: np.ndarray) -> np.ndarray:
    # H_kl = Tr[B_k Minv B_l Minv], real symmetric PSD
    n = basis.shape[0]
    MB = np.einsum("ab,kbc,cd->kad", Minv, basis, Minv)
    return np.einsum("kab,lba->kl", basis, MB).real


def _newton_equality(Hm, g, Aeq, resid):
    n = Hm.shape[0]
    m = Aeq.shape[0]
    K = np.zeros((n + m, n + m))
    K[:n, :n] = Hm + 1e-13 * np.eye(n)
    K[:n, n:] = Aeq.T
    K[n:, :n] = Aeq
    rhs = np.concatenate([-g, resid])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[:n], sol[n:]


def _max_step(rho, drho, tvals, dt):
    """Largest step in (0, 1] keeping rho + a*drho > 0 and t + a*dt > 0."""
    alpha = 1.0
    lam = herm_eig(rho)[0].min()
    # eigenvalue-based bound via generalized problem; bisect for simplicity
    for _ in range(60):
        ok = herm_eig(rho + alpha * drho)[0].min() > 1e-14 * max(1.0, lam)
        if ok and (len(tvals) == 0 or (tvals + alpha * dt).min() > 0):
            break
        alpha *= 0.7
    else:
        return 0.0
    return alpha


def _phase_one(fs: FeasibleSet, basis: np.ndarray):
    """Maximize s with rho - s I >= 0, slack_j >= s; returns strictly feasible
    rho or raises InfeasibleError with the most violated constraint index."""
    d = fs.dim
    n = d * d
    eq_mats, Aeq, b, in_mats, Evec, f = _assemble(fs, basis)
    x = np.linalg.lstsq(Aeq, b, rcond=None)[0]
    if np.abs(Aeq @ x - b).max() > 1e-9 * max(1.0, np.abs(b).max()):
        raise InfeasibleError("equality constraints are inconsistent", constraint_index=0)
    rho = vec_to_mat(x, basis)
    tvals = f - Evec @ x if len(f) else np.zeros(0)
    lam_min = herm_eig(rho)[0].min()
    s = min(lam_min, tvals.min() if len(tvals) else lam_min) - 1.0
    scale = max(1.0, np.abs(b).max(), np.abs(f).max() if len(f) else 0.0)
    target = 1e-9 * scale

    mu = max(1.0, abs(s))
    while mu > 1e-14 * scale:
        for _ in range(80):
            M = rho - s * np.eye(d)
            Minv = np.linalg.inv(M)
            tv = tvals - s if len(tvals) else tvals
            g_rho = -mu * mat_to_vec(Minv, basis)
            g_s = -1.0 + mu * np.trace(Minv).real
            if len(tv):
                g_rho += mu * (Evec.T @ (1.0 / tv))
                g_s += mu * np.sum(1.0 / tv)
            H_rr = mu * _pinch_hessian(Minv, basis)
            M2v = mat_to_vec(Minv @ Minv, basis)
            H_rs = -mu * M2v
            H_ss = mu * np.trace(Minv @ Minv).real
            if len(tv):
                H_rr += mu * (Evec.T * (1.0 / tv**2)) @ Evec
                H_rs += mu * (Evec.T @ (1.0 / tv**2))
                H_ss += mu * np.sum(1.0 / tv**2)
            Hm = np.zeros((n + 1, n + 1))
            Hm[:n, :n] = H_rr
            Hm[:n, n] = H_rs
            Hm[n, :n] = H_rs
            Hm[n, n] = H_ss
            Aext = np.hstack([Aeq, np.zeros((Aeq.shape[0], 1))])
            g = np.concatenate([g_rho, [g_s]])
            dx, _ = _newton_equality(Hm, g, Aext, b - Aeq @ (x))
            drho = vec_to_mat(dx[:n], basis)
            ds = dx[n]
            dec2 = float(dx @ (Hm @ dx))
            dE = -Evec @ dx[:n] - ds * np.ones(len(tv)) if len(tv) else np.zeros(0)
            a = _max_step(rho - s * np.eye(d), drho - ds * np.eye(d),
                          tv, dE) * 0.98
            if a <= 0 or dec2 < 1e-18:
                break
            x = x + a * dx[:n]
            rho = vec_to_mat(x, basis)
            tvals = f - Evec @ x if len(f) else tvals
            s = s + a * ds
            if s > 10 * target:
                return rho, x
            if dec2 < 1e-14:
                break
        mu *= 0.2
        if s > 10 * target:
            return rho, x
    if s <= target:
        viol = -np.inf
        idx = -1
        if len(f):
            slack = f - Evec @ x
            idx = int(np.argmin(slack))
            viol = -slack[idx]
        if herm_eig(rho)[0].min() < -abs(viol):
            idx = -1
        raise InfeasibleError(
            "no strictly feasible point (phase-1 optimum <= 0)", constraint_index=idx
        )
    return rho, x


def solve_linear_sdp(
    C: np.ndarray,
    fs: FeasibleSet,
    gap_tol: float = 1e-7,
) -> SdpResult:
    """Maximize Tr[C rho] over the feasible set, with a certified dual bound.

    The trace constraint is always active, so the dual matrix can be shifted
    along the identity to repair tiny negative eigenvalues; the reported
    dual_bound accounts for the shift and satisfies optimum <= dual_bound.
    """
    d = fs.dim
    C = np.asarray(C, dtype=complex)
    basis = herm_basis(d)
    eq_mats, Aeq, b, in_mats, Evec, f = _assemble(fs, basis)
    cvec = mat_to_vec(C, basis)
    rho, x = _phase_one(fs, basis)
    tvals = f - Evec @ x if len(f) else np.zeros(0)

    scale = max(1.0, np.abs(herm_eig(C)[0]).max())
    mu = scale
    n = d * d
    lam_eq = np.zeros(len(b))
    best = None  # (gap, SdpResult); dual bounds stay valid across mu values
    while True:
        for _ in range(100):
            Minv = np.linalg.inv(rho)
            g = -cvec - mu * mat_to_vec(Minv, basis)
            if len(tvals):
                g += mu * (Evec.T @ (1.0 / tvals))
            Hm = mu * _pinch_hessian(Minv, basis)
            if len(tvals):
                Hm += mu * (Evec.T * (1.0 / tvals**2)) @ Evec
            dx, lam = _newton_equality(Hm, g, Aeq, b - Aeq @ x)
            lam_eq = lam / mu if mu else lam
            dec2 = float(dx @ (Hm @ dx))
            drho = vec_to_mat(dx, basis)
            dt = -Evec @ dx if len(tvals) else tvals
            a = _max_step(rho, drho, tvals, dt) * 0.98
            if a <= 0:
                break
            x = x + a * dx
            rho = vec_to_mat(x, basis)
            if len(f):
                tvals = f - Evec @ x
            if dec2 < 1e-16:
                break
        # dual candidate from barrier multipliers
        nu = mu / tvals if len(tvals) else np.zeros(0)
        lam_use = _dual_from_kkt(C, eq_mats, in_mats, nu, rho, mu)
        Z = -C + sum(l * A for l, A in zip(lam_use, eq_mats))
        for j, E in enumerate(in_mats):
            Z = Z + nu[j] * E
        zmin = herm_eig(Z)[0].min()
        shift = max(0.0, -zmin) + 1e-15 * scale
        lam_use = lam_use.copy()
        lam_use[0] += shift  # eq index 0 is the trace constraint
        dual = float(lam_use @ b + (nu @ f if len(f) else 0.0))
        primal = float(cvec @ x)
        cand = SdpResult(rho, primal, dual, lam_use, nu)
        if best is not None:  # earlier dual bounds remain certified
            cand.dual_bound = min(cand.dual_bound, best[1].dual_bound)
        gap = cand.dual_bound - cand.primal
        if best is None or gap < best[0]:
            best = (gap, cand)
        if best[0] <= gap_tol * scale:
            return best[1]
        if mu < 1e-12 * scale:
            # numerical floor of the central path; return the best certified
            # answer if it is close, otherwise give up loudly
            if best[0] <= 100 * gap_tol * scale:
                return best[1]
            raise DomainError(
                f"interior-point solver stalled with duality gap {best[0]:.3e}"
            )
        mu *= 0.1


def _dual_from_kkt(C, eq_mats, in_mats, nu, rho, mu):
    """Least-squares equality multipliers making Z ~ mu rho^{-1} >= 0."""
    target = C + mu * np.linalg.inv(rho)
    for j, E in enumerate(in_mats):
        target = target - nu[j] * E
    d = rho.shape[0]
    basis = herm_basis(d)
    Amat = np.array([mat_to_vec(A, basis) for A in eq_mats]).T
    tv = mat_to_vec(target, basis)
    lam, *_ = np.linalg.lstsq(Amat, tv, rcond=None)
    return lam


# ---------------------------------------------------------------------------
# Entropic objectives (concave in the state)
# ---------------------------------------------------------------------------


def pinch(sigma: np.ndarray, projectors: list[np.ndarray]) -> np.ndarray:
    return sum(P @ sigma @ P for P in projectors)


def renyi_objective_and_gradient(
    sigma: np.ndarray,
    alpha: float,
    projectors: list[np.ndarray],
    log_alphabet: float,
) -> tuple[float, np.ndarray]:
    """Concave reformulation of the order-(1-alpha) conditional Renyi entropy
    of the pinching outcome given the quantum system,

        f(sigma) = log|X| + ((1-a)/a) log2 Tr[(P(sigma^{1-a}))^{1/(1-a)}],

    for alpha in (0, 1), valid for subnormalized sigma >= 0.  Returns the
    value in bits and the (Hermitian) gradient so that
    f(sigma + D) ~= f(sigma) + Tr[grad D].
    """
    if not 0.0 < alpha < 1.0:
        raise UsageError("alpha must lie strictly inside (0, 1)")
    beta = 1.0 - alpha
    sig_b = mpow(sigma, beta)
    T = pinch(sig_b, projectors)
    T = 0.5 * (T + T.conj().T)
    lamT, UT = herm_eig(T)
    lamT = np.clip(lamT, 1e-300, None)
    g = float(np.sum(lamT ** (1.0 / beta)))
    value = log_alphabet + (beta / alpha) * math.log2(g)
    # dG = Tr[(1/beta) T^{1/beta - 1} P(d sigma^beta)]
    W = UT @ np.diag(lamT ** (1.0 / beta - 1.0)) @ UT.conj().T
    inner = pinch(W, projectors)  # pinching is self-adjoint
    fd = frechet_derivative(
        lambda t: np.power(t, beta),
        lambda t: beta * np.power(t, beta - 1.0),
        _floor_state(sigma),
        inner,
    )
    grad = fd / (alpha * LN2 * g)
    return value, 0.5 * (grad + grad.conj().T)


def _floor_state(sigma: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    lam, U = herm_eig(sigma)
    lam = np.clip(lam, floor, None)
    return U @ np.diag(lam) @ U.conj().T


def von_neumann_objective_and_gradient(
    sigma: np.ndarray,
    projectors: list[np.ndarray],
    log_alphabet: float,
) -> tuple[float, np.ndarray]:
    """alpha -> 0 limit of the Renyi objective:

        f(sigma) = log|X| - [H(P(sigma)) - H(sigma)]  (bits),

    i.e. log|X| minus the pinching relative entropy; concave with gradient
    P(log2 P(sigma)) - log2(sigma).
    """
    s = _floor_state(sigma)
    Ps = _floor_state(pinch(s, projectors))
    lam_s, U_s = herm_eig(s)
    lam_p, U_p = herm_eig(Ps)
    H_s = float(-np.sum(lam_s * np.log2(lam_s)))
    H_p = float(-np.sum(lam_p * np.log2(lam_p)))
    value = log_alphabet - (H_p - H_s)
    log_s = U_s @ np.diag(np.log2(lam_s)) @ U_s.conj().T
    log_p = U_p @ np.diag(np.log2(lam_p)) @ U_p.conj().T
    grad = pinch(log_p, projectors) - log_s
    return value, 0.5 * (grad + grad.conj().T)


# ---------------------------------------------------------------------------
# Sequential linearization / fully-corrective Frank-Wolfe
# ---------------------------------------------------------------------------


@dataclass
class MaximizeResult:
    value: float  # best feasible (lower) value
    upper_bound: float  # certified upper bound on the optimum
    sigma: np.ndarray
    iterations: int

    @property
    def gap(self) -> float:
        return self.upper_bound - self.value


def _fcfw_weights(objective, atoms, w0):
    """Maximize objective(sum_i w_i atom_i) over the simplex via SLSQP."""
    k = len(atoms)
    if k == 1:
        return np.array([1.0])
    stack = np.array(atoms)

    def neg(w):
        return -objective(np.einsum("i,ijk->jk", w, stack))[0]

    res = minimize(
        neg,
        w0,
        method="SLSQP",
        bounds=[(0.0, 1.0)] * k,
        constraints=[{"type": "eq", "fun": lambda w: np.sum(w) - 1.0}],
        options={"maxiter": 120, "ftol": 1e-12},
    )
    w = np.clip(res.x, 0.0, None)
    return w / w.sum()


def sequential_linearization(
    objective,
    fs: FeasibleSet,
    sigma0: np.ndarray | None = None,
    tol: float = 1e-8,
    max_outer: int = 50,
    mix: float = 1e-9,
    sdp_gap_tol: float = 1e-7,
) -> MaximizeResult:
    """Maximize a concave objective(sigma) -> (value, gradient) over an SDP
    feasible set by outer linearization with fully-corrective Frank-Wolfe.

    By concavity every linearization gives a certified upper bound
    f* <= f(s_k) + max_feasible Tr[G_k (s - s_k)], evaluated with the SDP
    dual bound; the reported upper bound is the running minimum.  Iterates
    are kept strictly positive by mixing in mix * (trace/d) I.
    """
    d = fs.dim
    eye = np.eye(d, dtype=complex) * (fs.trace / d)
    if sigma0 is None:
        basis = herm_basis(d)
        sigma0, _ = _phase_one(fs, basis)
    atoms = [np.asarray(sigma0, dtype=complex)]
    weights = np.array([1.0])
    upper = math.inf
    best_val = -math.inf
    best_sigma = atoms[0]
    for it in range(1, max_outer + 1):
        sigma = np.einsum("i,ijk->jk", weights, np.array(atoms))
        sig_reg = (1.0 - mix) * sigma + mix * eye
        val, grad = objective(sig_reg)
        if val > best_val:
            best_val, best_sigma = val, sig_reg
        res = solve_linear_sdp(grad, fs, gap_tol=sdp_gap_tol)
        lin_upper = val + (res.dual_bound - float(np.trace(grad @ sig_reg).real))
        upper = min(upper, lin_upper)
        if upper - best_val <= max(tol, 2.0 * sdp_gap_tol):
            break
        atoms.append(res.rho)
        w0 = np.concatenate([weights * (1 - 1e-2), [1e-2]])
        weights = _fcfw_weights(objective, atoms, w0)
        # prune dead atoms to keep the correction cheap
        keep = weights > 1e-12
        if keep.sum() < len(atoms):
            atoms = [a for a, k in zip(atoms, keep) if k]
            weights = weights[keep]
            weights = weights / weights.sum()
    return MaximizeResult(value=best_val, upper_bound=upper, sigma=best_sigma, iterations=it)


# ---------------------------------------------------------------------------
# Classical divergence minimization over a product of convex sets
# ---------------------------------------------------------------------------


def tilted_projection(q: np.ndarray, gamma: np.ndarray, c: float, tol: float = 1e-13):
    """min_p D(p||q) over the halfspace <gamma, p> >= c (p a distribution).

    The minimizer is the exponential tilting p_t = q e^{t gamma} / Z(t) with
    the smallest t >= 0 meeting the constraint.  Returns (p, D in bits).
    """
    q = np.asarray(q, dtype=float)
    if q.min() < -1e-14:
        raise DomainError("reference distribution has negative entries")
    q = np.clip(q, 0.0, None)
    q = q / q.sum()
    gamma = np.asarray(gamma, dtype=float)

    def mean(t):
        w = q * np.exp(t * (gamma - gamma.max()))
        p = w / w.sum()
        return p

    if float(gamma @ q) >= c - tol:
        return q.copy(), 0.0
    sup = gamma[q > 0].max()
    if sup < c - tol:
        raise DomainError("halfspace unreachable from the support of q")
    hi = 1.0
    while float(gamma @ mean(hi)) < c and hi < 1e8:
        hi *= 2.0
    if float(gamma @ mean(hi)) < c:
        raise DomainError("tilting failed to reach the halfspace boundary")
    t = brentq(lambda t: float(gamma @ mean(t)) - c, 0.0, hi, xtol=tol)
    p = mean(t)
    mask = p > 0
    div = float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))
    return p, div


def divergence_bits(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def joint_divergence_minimizer(
    q_mats: list[np.ndarray],
    q_offsets: np.ndarray,
    fs: FeasibleSet,
    gamma: np.ndarray,
    c: float,
    tol: float = 1e-9,
    max_iter: int = 200,
) -> tuple[float, np.ndarray, np.ndarray]:
    """min D(p||q(rho)) over p in {<gamma,p> >= c} and rho feasible, where
    q_i(rho) = Tr[Q_i rho] + offset_i is an affine probability vector.

    Alternates the exact tilted projection in p with a fully-corrective
    Frank-Wolfe step in rho (D(p||q) is convex in q and q is affine in rho).
    Returns (divergence in bits, p, rho).
    """
    q_mats = [np.asarray(Q, dtype=complex) for Q in q_mats]
    q_offsets = np.asarray(q_offsets, dtype=float)
    basis = herm_basis(fs.dim)
    rho, _ = _phase_one(fs, basis)
    atoms = [rho]
    weights = np.array([1.0])

    def q_of(r):
        return np.array([float(np.trace(Q @ r).real) for Q in q_mats]) + q_offsets

    def obj_rho(p):
        def f(r):
            q = np.clip(q_of(r), 1e-300, None)
            val = -float(np.sum(p[p > 0] * np.log2(q[p > 0])))
            grad = -sum(
                (p[i] / (q[i] * LN2)) * q_mats[i] for i in range(len(p)) if p[i] > 0
            )
            return val, 0.5 * (grad + grad.conj().T)

        return f

    prev = math.inf
    p = None
    for it in range(max_iter):
        rho = np.einsum("i,ijk->jk", weights, np.array(atoms))
        q = np.clip(q_of(rho), 0.0, None)
        p, _ = tilted_projection(q, gamma, c)
        div = divergence_bits(p, q_of(rho))
        if abs(prev - div) <= tol * max(1.0, abs(div)):
            return div, p, rho
        prev = div
        f = obj_rho(p)
        _, grad = f(rho)
        res = solve_linear_sdp(-grad, fs, gap_tol=1e-8)  # minimize Tr[grad rho]
        atoms.append(res.rho)
        w0 = np.concatenate([weights * (1 - 0.05), [0.05]])
        kneg = lambda w: f(np.einsum("i,ijk->jk", w, np.array(atoms)))[0]
        resw = minimize(
            kneg,
            w0,
            method="SLSQP",
            bounds=[(0.0, 1.0)] * len(atoms),
            constraints=[{"type": "eq", "fun": lambda w: np.sum(w) - 1.0}],
            options={"maxiter": 150, "ftol": 1e-13},
        )
        weights = np.clip(resw.x, 0.0, None)
        weights = weights / weights.sum()
        keep = weights > 1e-12
        if keep.sum() < len(atoms):
            atoms = [a for a, k in zip(atoms, keep) if k]
            weights = weights[keep] / weights[keep].sum()
    return prev, p, rho
