import numpy as np
import pytest

from chanstruct.channel import from_kraus
from chanstruct.cycles import (
    NotRootsOfUnity,
    NotSimple,
    component_decompose,
    fixed_multiblock,
    mfnc_decompose,
    period_irreducible,
    structured_kraus,
    verify_power_fixed_points,
)
from chanstruct.numerics import (
    dagger,
    hs_norm,
    random_unitary,
    spectral_norm,
    unvec,
    vec,
)
from chanstruct.structure import (
    dfa,
    fixed_points,
    invariant_states,
    peripheral_subalgebra,
)
from tests.conftest import I2, X, Z


def classical_cycle(d):
    """Kraus |i+1><i|: shifts populations around Z_d, kills coherences."""
    kraus = []
    for i in range(d):
        V = np.zeros((d, d), dtype=complex)
        V[(i + 1) % d, i] = 1
        kraus.append(V)
    return from_kraus(kraus, label=f"cycle-{d}")


def shift_walk(unitaries):
    """Kraus U_i (x) |i><i-1| on h (x) C^d."""
    d = len(unitaries)
    h = unitaries[0].shape[0]
    kraus = []
    for i in range(d):
        E = np.zeros((d, d), dtype=complex)
        E[i, (i - 1) % d] = 1
        kraus.append(np.kron(unitaries[i], E))
    return from_kraus(kraus, label=f"shift-{d}")


def pauli_channel():
    return from_kraus([X / np.sqrt(2), Z / np.sqrt(2)])


def peripheral_of(c):
    inv = invariant_states(c)
    assert inv.faithful
    return inv, peripheral_subalgebra(c, inv)


def test_period_classical_cycle():
    c = classical_cycle(4)
    _, p = peripheral_of(c)
    rep = period_irreducible(c, p)
    assert rep.period == 4
    Qs = rep.projections
    assert np.allclose(sum(Qs), np.eye(4), atol=1e-8)
    # projections are the standard basis projections, cyclically numbered
    for Q in Qs:
        assert np.allclose(Q, np.diag(np.round(np.diag(Q).real)), atol=1e-8)
    for j in range(4):
        assert spectral_norm(c.apply(Qs[j]) - Qs[(j - 1) % 4]) < 1e-8
    U = rep.unitary
    assert np.allclose(np.linalg.matrix_power(U, 4), np.eye(4), atol=1e-8)
    assert np.allclose(U, sum(np.exp(2j * np.pi * j / 4) * Qs[j]
                              for j in range(4)), atol=1e-8)


def test_period_pauli_channel():
    c = pauli_channel()
    _, p = peripheral_of(c)
    rep = period_irreducible(c, p)
    assert rep.period == 2
    Q0, Q1 = rep.projections
    assert np.linalg.matrix_rank(Q0) == 1
    assert spectral_norm(c.apply(Q0) - Q1) < 1e-8
    assert spectral_norm(c.apply(Q1) - Q0) < 1e-8


def test_period_one_aperiodic():
    rng = np.random.default_rng(7)
    kraus = [random_unitary(3, rng) / np.sqrt(2) for _ in range(2)]
    c = from_kraus(kraus)
    inv, p = peripheral_of(c)
    if len(p.eigenvalues) == 1:  # aperiodic for this seed
        rep = period_irreducible(c, p)
        assert rep.period == 1
        assert np.allclose(rep.projections[0], np.eye(3))


def test_period_rejects_reducible():
    # unitary conjugation: eigenvalue 1 appears with multiplicity >= 2
    c = from_kraus([np.diag([1.0, np.exp(0.7j)])])
    _, p = peripheral_of(c)
    with pytest.raises((NotSimple, NotRootsOfUnity)):
        period_irreducible(c, p)


def test_cycle_seed_independence():
    c = classical_cycle(3)
    _, p = peripheral_of(c)
    rep1 = period_irreducible(c, p)
    # recompute peripheral data (fresh eigendecomposition) and compare sets
    rep2 = period_irreducible(c, peripheral_of(c)[1])
    for Q in rep1.projections:
        assert min(spectral_norm(Q - R) for R in rep2.projections) < 1e-8


def test_mfnc_two_components():
    a = classical_cycle(3)
    b = classical_cycle(3)
    kraus = []
    for V in a.kraus:
        W = np.zeros((6, 6), dtype=complex)
        W[:3, :3] = V
        kraus.append(W)
    for V in b.kraus:
        W = np.zeros((6, 6), dtype=complex)
        W[3:, 3:] = V
        kraus.append(W)
    c = from_kraus(kraus)
    F = fixed_points(c).as_algebra()
    N = dfa(c)
    assert F.dim == 2
    assert N.dim == 6
    dec = mfnc_decompose(c, F, N, seed=1)
    assert dec.n_components == 2
    assert np.allclose(sum(dec.z_projections), np.eye(6), atol=1e-8)
    for comp in dec.components:
        assert comp.cycle.period == 3
        assert comp.channel.dim == 3


def test_mfnc_identity_channel():
    c = from_kraus([np.eye(2)])
    F = fixed_points(c).as_algebra()
    N = dfa(c)
    dec = mfnc_decompose(c, F, N)
    assert dec.n_components == 1
    assert dec.components[0].cycle.period == 1


def test_mfnc_shift_walk_single_component():
    rng = np.random.default_rng(42)
    c = shift_walk([random_unitary(2, rng) for _ in range(3)])
    F = fixed_points(c).as_algebra()
    N = dfa(c)
    assert F.dim == 2          # commutant of a generic 2x2 unitary
    assert N.dim == 3 * 4      # block diagonals
    dec = mfnc_decompose(c, F, N, seed=0)
    assert dec.n_components == 1
    assert dec.components[0].cycle.period == 3


def test_component_decompose_classical_cycle():
    c = classical_cycle(3)
    F = fixed_points(c).as_algebra()
    N = dfa(c)
    dec = mfnc_decompose(c, F, N)
    cd = component_decompose(dec.components[0])
    assert cd.left_dim == 1
    assert cd.right_dims == (1, 1, 1)
    for rho in cd.block_states:
        assert np.allclose(rho, np.eye(1))
    rebuilt = structured_kraus(cd)
    assert spectral_norm(rebuilt.transfer - c.transfer) < 1e-8


def test_component_decompose_shift_walk():
    rng = np.random.default_rng(5)
    Us = [random_unitary(2, rng) for _ in range(3)]
    c = shift_walk(Us)
    F = fixed_points(c).as_algebra()
    N = dfa(c)
    dec = mfnc_decompose(c, F, N, seed=2)
    cd = component_decompose(dec.components[0], seed=2)
    assert cd.left_dim == 2
    assert cd.right_dims == (1, 1, 1)
    for T in cd.shift_unitaries:
        assert np.allclose(T @ dagger(T), np.eye(2), atol=1e-8)
    # each reduced map is the trivial scalar channel
    for m in range(3):
        assert np.allclose(cd.xi_transfer(m), np.eye(1), atol=1e-8)
    rebuilt = structured_kraus(cd)
    assert spectral_norm(rebuilt.transfer - c.transfer) < 1e-8


def test_component_decompose_pauli():
    c = pauli_channel()
    F = fixed_points(c).as_algebra()
    N = dfa(c)
    dec = mfnc_decompose(c, F, N)
    cd = component_decompose(dec.components[0])
    assert cd.period == 2
    assert cd.left_dim == 1
    assert cd.right_dims == (1, 1)
    # round-trip composition has a unique peripheral eigenvalue 1
    M = cd.cycle_composition(0)
    lam = np.linalg.eigvals(M)
    assert np.sum(np.abs(lam) > 1 - 1e-7) == 1
    rebuilt = structured_kraus(cd)
    assert spectral_norm(rebuilt.transfer - c.transfer) < 1e-8


def test_fixed_multiblock_shift_walk():
    rng = np.random.default_rng(11)
    Us = [random_unitary(2, rng) for _ in range(3)]
    c = shift_walk(Us)
    F = fixed_points(c).as_algebra()
    N = dfa(c)
    dec = mfnc_decompose(c, F, N, seed=3)
    cd = component_decompose(dec.components[0], seed=3)
    fb = fixed_multiblock(cd, F)
    assert fb.n_blocks == 2                   # generic monodromy: 2 eigenlines
    assert np.allclose(sum(fb.central_projections), np.eye(6), atol=1e-8)
    # monodromy spectrum matches the loop unitary up to a global phase
    loop = Us[0]
    for m in range(2, 0, -1):
        loop = loop @ Us[m]
    lam_loop = np.sort(np.angle(np.linalg.eigvals(loop)))
    lam_mono = np.linalg.eigvals(fb.t_products[0])
    ratio_loop = np.exp(1j * (lam_loop[1] - lam_loop[0]))
    ratio_mono = lam_mono[1] / lam_mono[0]
    assert min(abs(ratio_mono - np.conj(ratio_loop)),
               abs(ratio_mono - ratio_loop)) < 1e-7
    # sampled invariant states really are invariant
    sigma_tr = np.trace(fb.sigma)
    assert sigma_tr == pytest.approx(1.0)
    for w in ([1.0, 0.0], [0.3, 0.7]):
        xi = fb.invariant_state(w, [np.eye(1), np.eye(1)])
        assert np.trace(xi).real == pytest.approx(sum(w))
        assert hs_norm(c.preadjoint_apply(xi) - xi) < 1e-8
    # each induced right-factor channel fixes sigma uniquely
    for Tpsi in fb.psi_transfers:
        pre = dagger(Tpsi)
        v = vec(fb.sigma)
        assert np.linalg.norm(pre @ v - v) < 1e-8
        lam = np.linalg.eigvals(pre)
        assert np.sum(np.abs(lam - 1) < 1e-7) == 1


def test_fixed_multiblock_pauli():
    c = pauli_channel()
    F = fixed_points(c).as_algebra()
    N = dfa(c)
    dec = mfnc_decompose(c, F, N)
    cd = component_decompose(dec.components[0])
    fb = fixed_multiblock(cd, F)
    assert fb.n_blocks == 1
    assert np.allclose(fb.central_projections[0], np.eye(2), atol=1e-10)
    assert np.allclose(fb.sigma, np.eye(2) / 2, atol=1e-8)
    Tpsi = fb.psi_transfers[0]
    pre = dagger(Tpsi)
    v = vec(fb.sigma)
    assert np.linalg.norm(pre @ v - v) < 1e-8


def test_verify_power_fixed_points_cycle4():
    c = classical_cycle(4)
    _, p = peripheral_of(c)
    rep = period_irreducible(c, p)
    table = verify_power_fixed_points(c, rep, m_max=8)
    assert table.all_pass
    dims = {row.power: row.fixed_dim for row in table.rows}
    # dim F(Phi^m) = gcd(m, 4) for the classical cycle
    for m in range(1, 9):
        assert dims[m] == np.gcd(m, 4)


def test_verify_power_fixed_points_period1():
    rng = np.random.default_rng(7)
    kraus = [random_unitary(3, rng) / np.sqrt(2) for _ in range(2)]
    c = from_kraus(kraus)
    inv, p = peripheral_of(c)
    if len(p.eigenvalues) == 1:
        rep = period_irreducible(c, p)
        table = verify_power_fixed_points(c, rep, m_max=4)
        assert table.all_pass
        assert all(row.fixed_dim == 1 for row in table.rows)
