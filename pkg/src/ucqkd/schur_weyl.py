"""Schur-Weyl isotypic projectors, universal symmetric states, and type theory.

Everything here is brute force and exact-at-desk-scale: isotypic projectors
of the (SU(d), S_n) duality are built by symmetric-group character averaging

    Pi_lambda = (dim zeta_lambda / n!) * sum_{s in S_n} chi_lambda(s) V_s,

with S_n characters from the Murnaghan-Nakayama rule and V_s the natural
permutation action on (C^d)^{tensor n}.  The universal symmetric state

    sigma_{U,n} = |Y_n^d|^{-1} sum_lambda Pi_lambda / Tr[Pi_lambda]

dominates every i.i.d. state up to a polynomial factor, and the
string-dependent states sigma_x transport tensor products of universal
symmetric states along the sorting permutation of x.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import CapacityError, UsageError

MAX_TENSOR_DIM = 4096


# ---------------------------------------------------------------------------
# Young diagrams and representation dimensions
# ---------------------------------------------------------------------------


def enumerate_young(n: int, d: int) -> list[tuple[int, ...]]:
    """All Young diagrams with n boxes and at most d rows (weakly decreasing)."""
    if n < 1 or d < 1:
        raise UsageError("need n >= 1 and d >= 1")

    out: list[tuple[int, ...]] = []

    def rec(remaining: int, max_part: int, prefix: tuple[int, ...]):
        if remaining == 0:
            out.append(prefix)
            return
        if len(prefix) == d:
            return
        for part in range(min(remaining, max_part), 0, -1):
            rec(remaining - part, part, prefix + (part,))

    rec(n, n, ())
    return out


def dim_permutation_irrep(diagram: tuple[int, ...]) -> int:
    """Dimension of the S_n irrep zeta_lambda via the hook length formula."""
    n = sum(diagram)
    cols = _conjugate(diagram)
    prod = 1
    for i, row in enumerate(diagram):
        for j in range(row):
            hook = (row - j) + (cols[j] - i) - 1
            prod *= hook
    return math.factorial(n) // prod


def dim_unitary_irrep(diagram: tuple[int, ...], d: int) -> int:
    """Dimension of the SU(d) irrep U_lambda via the Weyl dimension formula."""
    lam = list(diagram) + [0] * (d - len(diagram))
    val = Fraction(1)
    for i in range(d):
        for j in range(i + 1, d):
            val *= Fraction(lam[i] - lam[j] + j - i, j - i)
    assert val.denominator == 1
    return int(val)


def _conjugate(diagram: tuple[int, ...]) -> list[int]:
    if not diagram:
        return []
    return [sum(1 for row in diagram if row > j) for j in range(diagram[0])]


@lru_cache(maxsize=None)
def sn_character(diagram: tuple[int, ...], cycle_type: tuple[int, ...]) -> int:
    """Character chi_lambda on the conjugacy class of the given cycle type.

    Murnaghan-Nakayama rule: strip border strips of length equal to the
    first cycle, with sign (-1)^(strip height - 1).
    """
    if not cycle_type:
        return 1 if not diagram else 0
    t = cycle_type[0]
    rest = cycle_type[1:]
    total = 0
    for stripped, height in _border_strips(diagram, t):
        total += (-1) ** (height - 1) * sn_character(stripped, rest)
    return total


def _border_strips(diagram: tuple[int, ...], t: int):
    """Yield (diagram with a length-t border strip removed, strip height)."""
    k = len(diagram)
    for start in range(k):  # row where the strip begins (its topmost row)
        for end in range(start, k):
            # Candidate strip occupying rows start..end of the rim.
            new = list(diagram)
            # Strip along the rim: row `end` keeps cells up to diagram[end+1]-1
            # style boundary; construct by setting row i to diagram[i+1]-1
            # for start <= i < end, and computing row `end` from the length.
            used = 0
            ok = True
            for i in range(start, end):
                new[i] = diagram[i + 1] - 1
                used += diagram[i] - new[i]
                if new[i] < 0:
                    ok = False
                    break
            if not ok:
                continue
            rem = t - used
            new_end = diagram[end] - rem
            if rem <= 0 or new_end < 0:
                continue
            new[end] = new_end
            # Must remain a valid (weakly decreasing) diagram and the strip
            # must be connected: row `end` must recede to at most the next
            # row's new length... validity check below covers connectivity.
            if end + 1 < k and new[end] < diagram[end + 1]:
                continue
            if start > 0 and new[start] > diagram[start - 1]:
                continue
            cand = tuple(x for x in new if x > 0)
            if all(cand[i] >= cand[i + 1] for i in range(len(cand) - 1)):
                yield cand, end - start + 1


# ---------------------------------------------------------------------------
# Permutation operators and isotypic blocks
# ---------------------------------------------------------------------------


def permutation_operator(perm: tuple[int, ...], d: int) -> np.ndarray:
    """V_s on (C^d)^{tensor n}: output tensor slot s(i) carries input slot i.

    Satisfies V_s V_t = V_{s o t} and V_s (A_1 x...x A_n) V_s^{-1} puts A_i
    at slot s(i).
    """
    n = len(perm)
    dim = d**n
    if dim > MAX_TENSOR_DIM:
        raise CapacityError(f"tensor dimension {dim} exceeds {MAX_TENSOR_DIM}")
    V = np.zeros((dim, dim), dtype=float)
    radix = [d] * n
    for idx in range(dim):
        digits = _digits(idx, radix)
        out = [0] * n
        for i in range(n):
            out[perm[i]] = digits[i]
        V[_undigits(out, radix), idx] = 1.0
    return V


def _digits(idx: int, radix: list[int]) -> list[int]:
    out = [0] * len(radix)
    for k in range(len(radix) - 1, -1, -1):
        out[k] = idx % radix[k]
        idx //= radix[k]
    return out


def _undigits(digits, radix) -> int:
    idx = 0
    for dig, r in zip(digits, radix):
        idx = idx * r + dig
    return idx


def _cycle_type(perm: tuple[int, ...]) -> tuple[int, ...]:
    seen = [False] * len(perm)
    lens = []
    for i in range(len(perm)):
        if seen[i]:
            continue
        ln = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            ln += 1
        lens.append(ln)
    return tuple(sorted(lens, reverse=True))


@dataclass(frozen=True)
class IsotypicBlock:
    diagram: tuple[int, ...]
    projector: np.ndarray
    dimU: int
    dimV: int


_block_cache: dict[tuple[int, int], list[IsotypicBlock]] = {}
_block_lock = threading.Lock()


def build_isotypic_blocks(n: int, d: int) -> list[IsotypicBlock]:
    """Central Young projectors for (C^d)^{tensor n}, memoized per (n, d)."""
    key = (n, d)
    blocks = _block_cache.get(key)
    if blocks is not None:
        return blocks
    with _block_lock:
        blocks = _block_cache.get(key)
        if blocks is None:
            blocks = _build_isotypic_blocks(n, d)
            _block_cache[key] = blocks
    return blocks


def _build_isotypic_blocks(n: int, d: int) -> list[IsotypicBlock]:
    dim = d**n
    if dim > MAX_TENSOR_DIM:
        raise CapacityError(f"tensor dimension {dim} exceeds {MAX_TENSOR_DIM}")
    # Class sums of permutation operators, keyed by cycle type.
    class_sums: dict[tuple[int, ...], np.ndarray] = {}
    for perm in itertools.permutations(range(n)):
        ct = _cycle_type(perm)
        V = permutation_operator(perm, d)
        if ct in class_sums:
            class_sums[ct] += V
        else:
            class_sums[ct] = V

    blocks = []
    nfact = math.factorial(n)
    for lam in enumerate_young(n, d):
        dv = dim_permutation_irrep(lam)
        Pi = np.zeros((dim, dim), dtype=float)
        for ct, S in class_sums.items():
            Pi += sn_character(lam, ct) * S
        Pi *= dv / nfact
        du = dim_unitary_irrep(lam, d)
        tr = np.trace(Pi)
        if abs(tr - du * dv) > 1e-8:
            raise CapacityError(
                f"projector trace {tr} != dimU*dimV = {du * dv} for {lam}"
            )
        blocks.append(IsotypicBlock(diagram=lam, projector=Pi, dimU=du, dimV=dv))
    return blocks


def universal_symmetric_state(n: int, d: int) -> np.ndarray:
    """sigma_{U,n}: uniform mixture of normalized isotypic projectors."""
    blocks = build_isotypic_blocks(n, d)
    dim = d**n
    out = np.zeros((dim, dim), dtype=float)
    for blk in blocks:
        out += blk.projector / np.trace(blk.projector)
    return out / len(blocks)


def domination_factor(n: int, d: int, alphabet_size: int = 1) -> float:
    """(n+1)^{(d+2)(d-1)|X|/2}: the i.i.d.-domination polynomial coefficient."""
    return float(n + 1) ** ((d + 2) * (d - 1) * alphabet_size / 2.0)


# ---------------------------------------------------------------------------
# Types, sorting permutations, string-dependent symmetric states
# ---------------------------------------------------------------------------


def type_of(x, alphabet_size: int) -> tuple[Fraction, ...]:
    """Empirical distribution of the string x, exact rational."""
    x = list(x)
    n = len(x)
    return tuple(Fraction(x.count(a), n) for a in range(alphabet_size))


def enumerate_types(n: int, alphabet_size: int) -> list[tuple[Fraction, ...]]:
    """All empirical distributions of length-n strings over the alphabet."""
    out = []
    for counts in itertools.product(range(n + 1), repeat=alphabet_size - 1):
        rest = n - sum(counts)
        if rest >= 0:
            out.append(
                tuple(Fraction(c, n) for c in counts) + (Fraction(rest, n),)
            )
    return out


def type_class_size(ptype: tuple[Fraction, ...], n: int) -> int:
    """|T_P| = multinomial coefficient of the count vector n*P."""
    counts = [int(p * n) for p in ptype]
    if sum(counts) != n:
        raise UsageError("type is not an n-type")
    out = math.factorial(n)
    for c in counts:
        out //= math.factorial(c)
    return out


def type_class(ptype: tuple[Fraction, ...], n: int):
    """All strings of the given type (desk scale)."""
    counts = [int(p * n) for p in ptype]
    symbols = [a for a, c in enumerate(counts) for _ in range(c)]
    return sorted(set(itertools.permutations(symbols)))


def empirical_entropy(x, alphabet_size: int) -> float:
    """H(x) in bits; depends only on the type of x."""
    n = len(list(x))
    h = 0.0
    for p in type_of(x, alphabet_size):
        if p > 0:
            h -= float(p) * math.log2(float(p))
    return h


def sorting_permutation(x) -> tuple[int, ...]:
    """Permutation s with (s.x) sorted ascending, where (s.x)_{s(i)} = x_i.

    Stable: equal symbols keep their relative order.
    """
    order = sorted(range(len(x)), key=lambda i: (x[i], i))
    perm = [0] * len(x)
    for target, src in enumerate(order):
        perm[src] = target
    return tuple(perm)


def sigma_for_string(x, d: int) -> np.ndarray:
    """sigma_x = V_{s_x}^{-1} (sigma_{U,m_1} x...x sigma_{U,m_k}) V_{s_x}.

    m_1..m_k are the multiplicities of the distinct symbols of x in sorted
    order; commutes with every product state rho^x = tensor_i rho^{x_i} and
    dominates it up to (n+1)^{(d+2)(d-1)|X|/2}.
    """
    x = list(x)
    n = len(x)
    if d**n > MAX_TENSOR_DIM:
        raise CapacityError(f"tensor dimension {d**n} exceeds {MAX_TENSOR_DIM}")
    mults = [len(list(g)) for _, g in itertools.groupby(sorted(x))]
    core = np.eye(1)
    for m in mults:
        core = np.kron(core, universal_symmetric_state(m, d))
    s = sorting_permutation(x)
    V = permutation_operator(s, d)
    return V.T @ core @ V  # V is real orthogonal; V^{-1} = V.T


def universal_type_state(ptype: tuple[Fraction, ...], n: int, d: int) -> np.ndarray:
    """sigma_{U,P}: uniform mixture of sigma_x over the type class of P."""
    members = type_class(ptype, n)
    out = np.zeros((d**n, d**n), dtype=float)
    for x in members:
        out += sigma_for_string(x, d)
    return out / len(members)


def block_dimension_summary(n: int, d: int) -> list[dict]:
    """Diagnostic dump of block dimensions (JSON-friendly)."""
    return [
        {
            "diagram": list(blk.diagram),
            "dimU": blk.dimU,
            "dimV": blk.dimV,
            "trace": float(np.trace(blk.projector)),
        }
        for blk in build_isotypic_blocks(n, d)
    ]
