"""Operator division, universal decoders, and the error-exponent bound."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from ucqkd.compression import (
    CompressionExperiment,
    build_decoder_povm,
    comparison_exponents,
    exact_error_probability,
    operator_division,
    operator_division_on_support,
    operator_division_quadrature,
    run_experiment,
    theorem_bound,
    theorem_overhead,
)
from ucqkd.entropies import CqSource
from ucqkd.errors import CapacityError, UsageError
from ucqkd.fields import field
from ucqkd.hashing import enumerate_surjective_family, hash_apply
from ucqkd.matfun import herm_eig, random_density, support_projector


def _random_source(rng, k=2, d=2, full_rank=True):
    states = []
    for _ in range(k):
        rho = random_density(d, rng)
        if full_rank:
            rho = 0.95 * rho + 0.05 * np.eye(d) / d
        states.append(rho)
    return CqSource(probs=rng.dirichlet(np.ones(k)), states=tuple(states))


# ---------------------------------------------------------------------------
# Operator division
# ---------------------------------------------------------------------------


def test_division_matches_quadrature():
    rng = np.random.default_rng(0)
    for _ in range(30):
        d = int(rng.integers(2, 6))
        A = random_density(d, rng)
        B = random_density(d, rng) + 0.02 * np.eye(d)
        Y = operator_division(A, B)
        Yq = operator_division_quadrature(A, B)
        assert np.abs(Y - Yq).max() <= 1e-8


def test_division_matches_scalar_quadrature_oracle():
    """Independent oracle: the defining integral evaluated entrywise in the
    eigenbasis of B gives the divided-difference kernel."""
    rng = np.random.default_rng(1)
    d = 3
    A = random_density(d, rng)
    B = random_density(d, rng) + 0.05 * np.eye(d)
    lam, U = herm_eig(B)
    At = U.conj().T @ A @ U
    Y = U.conj().T @ operator_division(A, B) @ U
    for i in range(d):
        for j in range(d):
            kern, _ = quad(
                lambda t: 1.0 / ((lam[i] + t) * (lam[j] + t)), 0.0, np.inf
            )
            assert abs(Y[i, j] - At[i, j] * kern) <= 1e-8


def test_division_completeness():
    # A/A = support projector; sums of decoder elements hit the support
    rng = np.random.default_rng(2)
    for _ in range(10):
        d = int(rng.integers(2, 5))
        B = random_density(d, rng, rank=max(1, d - 1))
        Y = operator_division_on_support(B, B)
        assert np.abs(Y - support_projector(B)).max() <= 1e-10


def test_division_linearity_and_order():
    rng = np.random.default_rng(3)
    d = 3
    B = random_density(d, rng) + 0.1 * np.eye(d)
    A1 = random_density(d, rng)
    A2 = random_density(d, rng)
    lhs = operator_division(A1 + A2, B)
    assert np.allclose(lhs, operator_division(A1, B) + operator_division(A2, B),
                       atol=1e-10)
    # positivity: A >= 0 implies A/B >= 0
    assert herm_eig(operator_division(A1, B))[0].min() >= -1e-12


# ---------------------------------------------------------------------------
# Decoder POVMs
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["fully-universal", "partially-universal"])
def test_decoder_povm_is_valid(kind):
    rng = np.random.default_rng(4)
    src = _random_source(rng)
    gf = field(2, 1)
    fam = enumerate_surjective_family(gf, 2, 1)
    H = fam[0]

    def h(x):
        return int(hash_apply(gf, H, np.array(x, dtype=np.int64))[0])

    for b in (0, 1):
        povm = build_decoder_povm(kind, h, b, src, 2)
        total = sum(povm.values())
        # decoder elements are positive and sum to (at most) the bin support
        for Y in povm.values():
            assert herm_eig(Y)[0].min() >= -1e-10
        assert herm_eig(np.eye(total.shape[0]) - total)[0].min() >= -1e-8


def test_injective_hash_decodes_perfectly():
    rng = np.random.default_rng(5)
    src = _random_source(rng)
    exp = CompressionExperiment(
        source=src, n=1, bins_log=1.0, decoder_kind="partially-universal",
        hash_dits=1, seed=5,
    )
    perr, _ = exact_error_probability(exp)
    assert perr <= 1e-10


@pytest.mark.parametrize("kind", ["fully-universal", "partially-universal"])
def test_exact_error_within_theorem_bound(kind):
    rng = np.random.default_rng(6)
    for _ in range(5):
        src = _random_source(rng)
        for n in (1, 2):
            exp = CompressionExperiment(
                source=src, n=n, bins_log=1.0, decoder_kind=kind,
                hash_dits=1, seed=6,
            )
            perr, _ = exact_error_probability(exp)
            bound = theorem_bound(exp).boundPerr
            assert perr <= bound + 1e-12


def test_theorem_overhead_values():
    # |X|(d+2)(d-1), plus 2(d-1) for the fully universal decoder
    assert theorem_overhead("partially-universal", 2, 2) == 8
    assert theorem_overhead("fully-universal", 2, 2) == 10
    assert theorem_overhead("partially-universal", 3, 2) == 12


def test_bound_decreases_with_more_bins():
    rng = np.random.default_rng(7)
    src = _random_source(rng)
    bounds = []
    for bins_log in (0.5, 1.0, 1.5, 2.0):
        exp = CompressionExperiment(
            source=src, n=2, bins_log=bins_log,
            decoder_kind="partially-universal", hash_dits=1, seed=7,
        )
        bounds.append(theorem_bound(exp).boundPerr)
    assert all(x >= y - 1e-12 for x, y in zip(bounds, bounds[1:]))


def test_comparison_exponents_sign():
    # above H(X|B) the exponent is positive, below it is zero/negative
    rng = np.random.default_rng(8)
    src = _random_source(rng)
    from ucqkd.entropies import von_neumann_conditional

    hxb = von_neumann_conditional(src.cq_state(), (2, src.dim))
    rc_hi, sp_hi = comparison_exponents(src, min(1.0, hxb + 0.3))
    rc_lo, sp_lo = comparison_exponents(src, max(0.0, hxb - 0.3))
    assert rc_hi >= rc_lo - 1e-9
    assert sp_hi >= rc_hi - 1e-9  # sphere packing dominates random coding


def test_capacity_and_usage_errors():
    rng = np.random.default_rng(9)
    src = _random_source(rng)
    with pytest.raises(CapacityError):
        CompressionExperiment(
            source=src, n=9, bins_log=1.0,
            decoder_kind="partially-universal", hash_dits=1,
        )
    with pytest.raises(UsageError):
        CompressionExperiment(
            source=src, n=2, bins_log=5.0,
            decoder_kind="partially-universal", hash_dits=1,
        )
    with pytest.raises(UsageError):
        CompressionExperiment(
            source=src, n=2, bins_log=1.0, decoder_kind="bogus", hash_dits=1,
        )


def test_run_experiment_report_roundtrip():
    rng = np.random.default_rng(10)
    src = _random_source(rng)
    exp = CompressionExperiment(
        source=src, n=2, bins_log=1.0, decoder_kind="fully-universal",
        hash_dits=1, seed=10,
    )
    rep = run_experiment(exp)
    doc = rep.to_dict()
    assert doc["exactPerr"] <= doc["boundPerr"] + 1e-12
    assert all(len(pair) == 2 for pair in doc["exponentCurve"])
    assert math.isfinite(doc["stdError"])
