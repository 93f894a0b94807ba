"""Linear 2-universal hash families over GF(q) and their hashing unitaries.

A hash member is an n x m matrix H of full column rank over the field; the
hash of a row string x is x H.  For a surjective linear family the collision
bound holds with equality: for x != y, Pr_H[xH = yH] = 1/q^m.

The *dual quadruple* (G, Gbar, H, Hbar) extends H to a basis change:

* ``G``     n x (n-m), columns span {g : g^T H = 0}
* ``Gbar``  n x m with ``Gbar^T H = I_m``
* ``Hbar``  n x (n-m) completing ``(H Hbar) = (Gbar G)^{-T}``

so that ``(Gbar G)^T (H Hbar) = I_n``.  The hashing unitary is the basis
relabeling ``U|z> = |z (H Hbar)>``: after applying it, the first m qudits
carry the hash value z H and the remaining n-m qudits carry z Hbar.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InvariantError, UsageError
from .fields import GaloisField, _string_map_unitary

# Cap on exhaustive family enumeration: q**(n*m) matrices.
MAX_FAMILY_ENUM = 2**20


def hash_apply(field: GaloisField, H, x):
    """Hash value x H of the row string x (length n) under member H (n x m)."""
    x = np.asarray(x, dtype=np.int64).reshape(1, -1)
    return field.mat_mul(x, np.asarray(H)).ravel()


def sample_toeplitz(
    field: GaloisField, n: int, m: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw a full-column-rank n x m Toeplitz matrix, resampling if singular.

    Entries H[i, j] = t[i - j + m - 1] for n + m - 1 uniform field symbols t.
    """
    if not 1 <= m <= n:
        raise UsageError(f"need 1 <= m <= n, got n={n}, m={m}")
    for _ in range(1000):
        t = rng.integers(0, field.q, size=n + m - 1)
        H = np.empty((n, m), dtype=np.int64)
        for i in range(n):
            for j in range(m):
                H[i, j] = t[i - j + m - 1]
        if field.mat_rank(H) == m:
            return H
    raise InvariantError("failed to sample a full-rank Toeplitz matrix")


def enumerate_surjective_family(field: GaloisField, n: int, m: int) -> list[np.ndarray]:
    """All n x m matrices of full column rank (exhaustive; small sizes only)."""
    if not 1 <= m <= n:
        raise UsageError(f"need 1 <= m <= n, got n={n}, m={m}")
    total = field.q ** (n * m)
    if total > MAX_FAMILY_ENUM:
        raise CapacityError(
            f"family enumeration size {total} exceeds {MAX_FAMILY_ENUM}"
        )
    out = []
    for flat in itertools.product(range(field.q), repeat=n * m):
        H = np.array(flat, dtype=np.int64).reshape(n, m)
        if field.mat_rank(H) == m:
            out.append(H)
    return out


def verify_two_universal(field: GaloisField, family, n: int, m: int):
    """Exact collision statistics of a linear family.

    Returns ``(max_fraction, bound)`` where ``max_fraction`` is the largest
    collision probability Pr_H[xH = yH] over pairs x != y (equivalently over
    nonzero difference strings z, since the family is linear) and ``bound``
    is 1/q^m.  The family is 2-universal iff max_fraction <= bound.
    """
    q = field.q
    worst = 0
    for idx in range(1, q**n):
        z = field.index_vector(idx, n)
        hits = sum(1 for H in family if not hash_apply(field, H, z).any())
        worst = max(worst, hits)
    return worst / len(family), 1.0 / q**m


@dataclass(frozen=True)
class DualQuadruple:
    """Matrices (G, Gbar, H, Hbar) with (Gbar G)^T (H Hbar) = I_n."""

    H: np.ndarray
    Hbar: np.ndarray
    G: np.ndarray
    Gbar: np.ndarray

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def m(self) -> int:
        return self.H.shape[1]


def build_dual_quadruple(field: GaloisField, H) -> DualQuadruple:
    """Complete a full-column-rank hash member H to its dual quadruple."""
    H = np.asarray(H, dtype=np.int64)
    n, m = H.shape
    if field.mat_rank(H) != m:
        raise UsageError("hash member must have full column rank")
    # G columns: kernel of H^T (vectors g with g^T H = 0).
    ker = field.mat_kernel(H.T)  # rows are kernel vectors, shape (n-m, n)
    G = ker.T
    # Gbar: any solution of H^T X = I_m.
    Gbar = field.mat_solve(H.T, np.eye(m, dtype=np.int64))
    S = np.concatenate([Gbar, G], axis=1)  # (Gbar G), always invertible
    T = field.mat_inv(S.T)  # (H Hbar) = S^{-T}
    if not np.array_equal(T[:, :m], H):
        raise InvariantError("dual quadruple completion lost the hash member")
    Hbar = T[:, m:]
    quad = DualQuadruple(H=H, Hbar=Hbar, G=G, Gbar=Gbar)
    _check_quadruple(field, quad)
    return quad


def _check_quadruple(field: GaloisField, quad: DualQuadruple) -> None:
    n, m = quad.n, quad.m
    S = np.concatenate([quad.Gbar, quad.G], axis=1)
    T = np.concatenate([quad.H, quad.Hbar], axis=1)
    if not np.array_equal(field.mat_mul(S.T, T), np.eye(n, dtype=np.int64)):
        raise InvariantError("dual quadruple identity (Gbar G)^T (H Hbar) = I failed")
    if field.mat_mul(quad.G.T, quad.H).any():
        raise InvariantError("G^T H = 0 failed")
    if not np.array_equal(
        field.mat_mul(quad.Gbar.T, quad.H), np.eye(m, dtype=np.int64)
    ):
        raise InvariantError("Gbar^T H = I failed")


def hashing_unitary(field: GaloisField, quad: DualQuadruple) -> np.ndarray:
    """Permutation unitary U|z> = |z (H Hbar)> on n qudits.

    Equals the relabeling U(C) with C = (Gbar G); the first m output qudits
    hold the hash value z H.
    """
    T = np.concatenate([quad.H, quad.Hbar], axis=1)
    return _string_map_unitary(field, T, n_in=quad.n, n_out=quad.n)


def hash_preimages(field: GaloisField, H, n: int) -> dict[int, list[np.ndarray]]:
    """Group all length-n strings by hash value index (dense enumeration)."""
    out: dict[int, list[np.ndarray]] = {}
    m = np.asarray(H).shape[1]
    for idx in range(field.q**n):
        x = field.index_vector(idx, n)
        b = field.vector_index(hash_apply(field, H, x))
        out.setdefault(b, []).append(x)
    if len(out) != field.q**m:
        raise InvariantError("surjective hash member missed a bin")
    return out
