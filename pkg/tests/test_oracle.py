"""Grid wavefunction engine: gate unitarity, cross-engine moments, identities."""

import numpy as np
import pytest

from bslsim.graphstate import (GraphState, apply, covariance, gate_beamsplitter,
                               gate_cz, gate_displacement, gate_rotation,
                               gate_shear, gate_squeeze, squeezed_vacua, vacuum)
from bslsim.identities import (verify_commutation, verify_teleport_identity,
                               verify_cubic_device, verify_teleport_circuit)
from bslsim.mbqc import measure_quadrature
from bslsim.oracle import (GridError, WaveFunction, fidelity_up_to_phase)

L, P1, P2 = 12.0, 1024, 512


def test_norm_and_moments_of_displaced_vacuum():
    wf = WaveFunction.vacuum(L, P1, 1.3, -0.7)
    assert abs(wf.norm() - 1) < 1e-12
    mean, cov = wf.moments()
    assert np.allclose(mean, [1.3, -0.7], atol=1e-9)
    assert np.allclose(cov, 0.5 * np.eye(2), atol=1e-9)


def test_rotate_pi_over_2_twice_is_parity():
    wf = WaveFunction.vacuum(L, P1, 1.3, -0.7)
    twice = wf.rotate(np.pi / 2).rotate(np.pi / 2)
    parity = WaveFunction(np.roll(np.flip(wf.psi), 1), L)
    assert np.abs(twice.psi - parity.psi).max() < 1e-8


def test_rotate_composition_includes_phase():
    wf = WaveFunction.vacuum(L, P1, 0.8, 0.4)
    a, b = 0.62, 1.17
    d = wf.rotate(a).rotate(b).psi - wf.rotate(a + b).psi
    assert np.abs(d).max() < 1e-12


def test_squeeze_roundtrip_identity():
    wf = WaveFunction.vacuum(L, P1, 0.4, -0.3)
    back = wf.squeeze(0.6).squeeze(-0.6)
    assert np.abs(back.psi - wf.psi).max() < 1e-7


def test_gate_unitarity():
    wf = WaveFunction.vacuum(L, P1, 0.5, -0.2)
    for out in (wf.rotate(0.9), wf.squeeze(0.5), wf.squeeze(-0.5),
                wf.shear(1.1), wf.kubic(0.2), wf.x_shift(0.7),
                wf.z_shift(-1.2)):
        assert abs(out.norm() - 1) < 1e-7


def test_commutation_surrogate_phase():
    # X(s) Z(t) = e^{-i s t} Z(t) X(s)
    wf = WaveFunction.vacuum(L, P1)
    s, t = 0.9, -1.4
    lhs = wf.z_shift(t).x_shift(s)
    rhs = wf.x_shift(s).z_shift(t)
    assert abs(fidelity_up_to_phase(lhs, rhs) - 1) < 1e-9
    phase = np.vdot(rhs.psi, lhs.psi) / np.vdot(wf.psi, wf.psi)
    assert abs(phase - np.exp(-1j * s * t)) < 1e-6


def _random_gaussian_circuit(rng, n):
    ops = []
    for _ in range(rng.integers(3, 7)):
        kind = rng.integers(0, 7 if n == 2 else 5)
        mode = int(rng.integers(n))
        if kind == 0:
            ops.append(("rotate", rng.uniform(-np.pi, np.pi), mode))
        elif kind == 1:
            ops.append(("squeeze", rng.uniform(-0.6, 0.6), mode))
        elif kind == 2:
            ops.append(("shear", rng.uniform(-0.8, 0.8), mode))
        elif kind == 3:
            ops.append(("x_shift", rng.uniform(-1, 1), mode))
        elif kind == 4:
            ops.append(("z_shift", rng.uniform(-1, 1), mode))
        elif kind == 5:
            ops.append(("beamsplitter", rng.uniform(-np.pi, np.pi), None))
        else:
            ops.append(("cz", rng.uniform(-0.8, 0.8), None))
    return ops


def _apply_both(ops, n):
    wf = WaveFunction.vacuum(L, P2 if n == 2 else P1)
    if n == 2:
        wf = wf.product(WaveFunction.vacuum(L, P2))
    gs = vacuum(n)
    for kind, val, mode in ops:
        if kind == "rotate":
            wf = wf.rotate(val, mode)
            gs = apply(gs, gate_rotation(val, mode, n))
        elif kind == "squeeze":
            wf = wf.squeeze(val, mode)
            gs = apply(gs, gate_squeeze(val, mode, n))
        elif kind == "shear":
            wf = wf.shear(val, mode)
            gs = apply(gs, gate_shear(val, mode, n))
        elif kind == "x_shift":
            wf = wf.x_shift(val, mode)
            gs = apply(gs, gate_displacement(val, 0.0, mode, n))
        elif kind == "z_shift":
            wf = wf.z_shift(val, mode)
            gs = apply(gs, gate_displacement(0.0, val, mode, n))
        elif kind == "beamsplitter":
            wf = wf.beamsplitter(val)
            gs = apply(gs, gate_beamsplitter(val, 0, 1, n))
        elif kind == "cz":
            wf = wf.cz(val)
            gs = apply(gs, gate_cz(val, 0, 1, n))
    return wf, gs


def test_cross_engine_single_gates():
    rng = np.random.default_rng(42)
    for kind in ("rotate", "squeeze", "shear", "x_shift", "z_shift"):
        ops = [(kind, float(rng.uniform(-0.8, 0.8)), 0)]
        wf, gs = _apply_both(ops, 1)
        mean, cov = wf.moments()
        assert np.abs(mean - gs.mean).max() < 1e-6
        assert np.abs(cov - covariance(gs)).max() < 1e-6
    for kind in ("beamsplitter", "cz"):
        ops = [(kind, float(rng.uniform(-0.8, 0.8)), None)]
        wf, gs = _apply_both(ops, 2)
        mean, cov = wf.moments()
        assert np.abs(mean - gs.mean).max() < 1e-6
        assert np.abs(cov - covariance(gs)).max() < 1e-6


def test_cross_engine_random_circuits():
    # 30 random Gaussian circuits, <= 6 gates, 1-2 modes
    rng = np.random.default_rng(7)
    for trial in range(30):
        n = 1 + trial % 2
        ops = _random_gaussian_circuit(rng, n)
        wf, gs = _apply_both(ops, n)
        assert abs(wf.norm() - 1) < 1e-6
        mean, cov = wf.moments()
        assert np.abs(mean - gs.mean).max() < 1e-5
        assert np.abs(cov - covariance(gs)).max() < 1e-5


def test_from_graphstate_matches_engine():
    rng = np.random.default_rng(9)
    gs = squeezed_vacua([0.4, -0.3])
    gs = apply(gs, gate_beamsplitter(0.7, 0, 1, 2))
    gs = apply(gs, gate_displacement(0.5, -0.2, 0, 2))
    wf = WaveFunction.from_graphstate(gs, L, 256)
    mean, cov = wf.moments()
    assert np.abs(mean - gs.mean).max() < 1e-7
    assert np.abs(cov - covariance(gs)).max() < 1e-7


def test_project_q_product_state_returns_other_factor():
    a = WaveFunction.vacuum(L, P2, 0.4, 0.1)
    b = WaveFunction.vacuum(L, P2, -0.6, 0.3)
    sliced = a.product(b).project_q(0, 0.2)
    f = fidelity_up_to_phase(sliced, b)
    assert f > 1 - 1e-10


def test_project_q_norm_is_marginal_density():
    a = WaveFunction.vacuum(L, P2, 0.4, 0.1)
    b = WaveFunction.vacuum(L, P2, -0.6, 0.3)
    m = 0.9
    sliced = a.product(b).project_q(0, m)
    # marginal |psi_a(m)|^2 for a displaced vacuum
    density = np.sqrt(1 / np.pi) * np.exp(-(m - 0.4) ** 2)
    assert abs(sliced.norm() ** 2 - density) < 1e-6


def test_pair_slice_shifts_partner_like_gaussian_engine():
    # cluster pair: slicing one mode conditions the other; cross-check the
    # posterior mean against the exact Gaussian conditional update
    r, m = 1.0, 0.8
    z = 1j / np.cosh(2 * r) * np.eye(2) + np.tanh(2 * r) * np.array([[0., 1.], [1., 0.]])
    gs = GraphState(z, np.zeros(4))
    wf = WaveFunction.from_graphstate(gs, L, P2).project_q(0, m).normalized()
    mean, _ = wf.moments()
    post, _ = measure_quadrature(gs, 0, 0.0, m)
    assert np.abs(mean - post.mean).max() < 1e-6
    assert abs(mean[1]) > 0.1    # the partner mean really shifted


def test_fidelity_up_to_phase_basics():
    a = WaveFunction.vacuum(L, P1, 0.3, 0.0)
    assert abs(fidelity_up_to_phase(a, a) - 1) < 1e-12
    b = WaveFunction(np.exp(1j * np.pi / 7) * a.psi, L)
    assert abs(fidelity_up_to_phase(a, b) - 1) < 1e-12
    far = WaveFunction.vacuum(L, P1, -8.0, 0.0)
    assert fidelity_up_to_phase(a, far) < 1e-6


def test_boundary_mass_checks():
    ok = WaveFunction.vacuum(L, P1)
    ok.require_resident()
    wide = WaveFunction.squeezed(3.0, L, P1)
    with pytest.raises(GridError, match="boundary mass"):
        wide.require_resident()
    with pytest.raises(GridError, match="outside the grid"):
        WaveFunction.vacuum(L, P2).product(WaveFunction.vacuum(L, P2)).project_q(0, 20.0)


# -- identity batteries ------------------------------------------------------


def test_teleport_identity_gaussian_ancilla():
    psi = WaveFunction.vacuum(L, P1, 0.5, -0.3)
    rep = verify_teleport_identity(WaveFunction.squeezed(1.0, L, P1), psi, 0.4)
    assert rep["pass"]
    assert rep["fidelity"] >= 1 - 1e-5
    assert rep["norm_agreement"] < 1e-4


def test_teleport_identity_cubic_ancilla():
    psi = WaveFunction.vacuum(L, P1)
    rep = verify_teleport_identity(WaveFunction.cubic_phase(0.1, 2.0, L, P1), psi, -0.3)
    assert rep["pass"]


def test_teleport_identity_zero_outcome_closed_gaussian():
    # phi = vacuum, m = 0: the map reduces to 2^(1/4) S(ln sqrt2) applied to
    # the Gaussian-envelope product; the output of vacuum input is the
    # analytic Gaussian pi^(-1/2) exp(-q^2 / 2)
    psi = WaveFunction.vacuum(L, P1)
    from bslsim.identities import teleport_step
    lhs = teleport_step(psi, WaveFunction.vacuum(L, P1), 0.0)
    q = lhs.q()
    target = WaveFunction((1 / np.sqrt(np.pi)) * np.exp(-0.5 * q ** 2), L)
    assert np.abs(lhs.psi - target.psi).max() < 1e-6


def test_teleport_identity_random_nongaussian_ancillas():
    rng = np.random.default_rng(17)
    psi = WaveFunction.vacuum(L, P1, 0.2, 0.1)
    for _ in range(5):
        coef = rng.normal(size=3)
        width = rng.uniform(0.3, 0.6)

        def phi(s, c=coef, w=width):
            return (c[0] + c[1] * s + c[2] * s * s) * np.exp(-w * s ** 2)

        rep = verify_teleport_identity(phi, psi, float(rng.normal(0, 0.7)))
        assert rep["fidelity"] >= 1 - 1e-5
        assert rep["norm_agreement"] < 1e-4


def test_teleport_circuit_zero_angle_moments():
    # theta = 0, m = 0, vacuum input: output is R(-pi/2) S(ln 1/2) |0>;
    # oracle: transport the vacuum covariance through those gates
    rep = verify_teleport_circuit(0.0, 0.0, 4.0, WaveFunction.vacuum(L, P2))
    assert rep["pass"]
    from bslsim.identities import mb_teleport_circuit
    out = mb_teleport_circuit(WaveFunction.vacuum(L, P2), 4.0, 0.0, 0.0)
    mean, cov = out.normalized().moments()
    gs = apply(vacuum(1), gate_squeeze(np.log(0.5), 0, 1))
    gs = apply(gs, gate_rotation(-np.pi / 2, 0, 1))
    # O(e^{-2r}) finite-squeezing allowance at r = 4
    assert np.abs(cov - covariance(gs)).max() < 1e-2


def test_teleport_circuit_fidelity_and_convergence():
    psi = WaveFunction.vacuum(L, P2, 0.6, -0.4)
    eps = []
    for r in (2.0, 3.0, 4.0):
        rep = verify_teleport_circuit(np.pi / 6, 0.5, r, psi)
        eps.append(1 - rep["fidelity"])
    assert 1 - eps[-1] >= 0.999
    assert eps[0] > eps[1] > eps[2]


def test_cubic_device_chi_zero_matches_gaussian_composition():
    from bslsim.identities import cubic_gate_product
    from bslsim.mbqc import cubic_kick, cubic_shear
    sigma, m_a, m_e, m_f = 0.3, 0.1, -0.2, 0.4
    psi = WaveFunction.vacuum(L, P2, 0.3, -0.2)
    out = cubic_gate_product(psi, 6.0, 0.0, sigma, m_a, m_e, m_f)
    mean, cov = out.normalized().moments()
    gs = GraphState(np.array([[1j]]), np.array([0.3, -0.2]))
    gs = apply(gs, gate_shear(cubic_shear(sigma, 0.0, m_a, m_f), 0, 1))
    gs = apply(gs, gate_rotation(-np.pi / 2, 0, 1))
    gs = apply(gs, gate_displacement(cubic_kick(sigma, 0.0, m_a, m_e, m_f),
                                     np.sqrt(2) * m_a, 0, 1))
    assert np.abs(mean - gs.mean).max() < 1e-4
    assert np.abs(cov - covariance(gs)).max() < 1e-4


def test_cubic_device_three_way_agreement():
    psi = WaveFunction.vacuum(L, P2, 0.3, -0.2)
    eps = []
    for r in (2.0, 3.0, 4.0):
        rep = verify_cubic_device(0.2, 0.3, (0.1, -0.2, 0.4), r, psi)
        assert rep["pass"]
        assert rep["fidelities"]["exact_product_vs_closed"] >= 1 - 1e-5
        eps.append(1 - rep["fidelity"])
    assert eps[0] > eps[1] > eps[2]
    assert 1 - eps[-1] >= 0.999


def test_cubic_device_zero_outcomes_parameters():
    from bslsim.mbqc import cubic_kick, cubic_shear
    assert cubic_shear(0.3, 0.2, 0.0, 0.0) == pytest.approx(4 * 0.3)
    assert cubic_kick(0.3, 0.2, 0.0, 0.0, 0.0) == 0.0
    # spec-fixture arithmetic: tau at chi=0.2, sigma=0.3, m_a=0.1, m_f=0.4
    tau = cubic_shear(0.3, 0.2, 0.1, 0.4)
    assert tau == pytest.approx(4 * 0.3 + 4 * 0.2 * (0.1 + np.sqrt(2) * 0.4))


def test_cubic_device_rejects_out_of_range():
    psi = WaveFunction.vacuum(L, P2)
    with pytest.raises(GridError, match="range"):
        verify_cubic_device(5.0, 0.3, (0.1, -0.2, 0.4), 4.0, psi)


def test_commutation_cases():
    psi = WaveFunction.vacuum(L, P2, 0.3, -0.2)
    rep = verify_commutation(0.0, -0.4, 0.2, 0.3, (0.1, -0.2, 0.4), 4.0, psi)
    assert rep["pass"] and rep["zeta"] == 0.0
    rep = verify_commutation(0.3, 0.0, 0.0, 0.4, (0.1, -0.2, 0.4), 4.0, psi)
    assert rep["zeta"] == pytest.approx(4 * 0.3 * 0.4)
    assert rep["sigma_adapted"] == pytest.approx(0.4)
    rep = verify_commutation(0.3, -0.2, 0.15, 0.4, (0.1, -0.2, 0.4), 4.0, psi)
    assert rep["pass"]
    assert rep["fidelity"] >= 0.999
    assert abs(rep["zeta_observed"] - rep["zeta"]) < 5e-3
