import cvxpy as cp
import numpy as np
import pytest
from scipy.linalg import sqrtm

from mfris_ee.domain.exceptions import DimensionMismatchError, NotPositiveSemidefiniteError
from mfris_ee.infrastructure.conic.program import ConicProgram, SolveStatus
from mfris_ee.infrastructure.linalg.complex_linalg import outer
from mfris_ee.infrastructure.robust.robustify import (
    QuadraticUncertainForm, SurfaceGram, bernstein_blocks, bernstein_certified_rate, bernstein_explicit,
    bernstein_margin, build_interference_lmi, build_noise_lmi, build_ris_power_lmi, build_signal_lmi, cub,
    exp_tangent, expected_quadratic, expected_ris_power, kron_vector, kronecker_error, lift_surface, lifted_channel,
    s_procedure, sign_definiteness, taylor_square_lower,
)
from mfris_ee.infrastructure.evaluation.system_model import sinr, sinr_to_rate
from mfris_ee.domain.entities.solution import BeamformerSet, RisProfile
from tests.helpers import ball_draws, random_complex, random_hermitian


def _ball_form(c0):
    """Protect c0 - ||x||^2 >= 0 over the unit ball"""
    n = 2
    return QuadraticUncertainForm(
        B=[-np.eye(n), -np.eye(n)],
        b=[np.zeros(n), np.zeros(n)],
        c=[c0, 1.0],
    )


def test_kron_vector_matches_numpy_for_numeric_and_variable_operands(rng):
    w, u = random_complex(rng, 3), random_complex(rng, 2)
    assert np.allclose(kron_vector(w, u), np.kron(w, u))

    var = cp.Variable(3, complex=True)
    var.value = w
    assert np.allclose(kron_vector(var, u).value, np.kron(w, u))
    with pytest.raises(TypeError):
        kron_vector(var, cp.Variable(2, complex=True))


def test_s_procedure_nested_balls():
    inside = s_procedure(_ball_form(4.0), [2.0])
    assert inside.is_hermitian()
    assert inside.min_eigenvalue() == pytest.approx(1.0)

    # c0 = 0.5 is not implied by the unit ball: every multiplier fails
    for omega in (0.5, 1.0, 2.0):
        assert s_procedure(_ball_form(0.5), [omega]).min_eigenvalue() < 0


def test_s_procedure_rejects_wrong_multiplier_count():
    with pytest.raises(DimensionMismatchError):
        s_procedure(_ball_form(4.0), [1.0, 1.0])


def test_quadratic_form_needs_a_set_defining_quadratic():
    with pytest.raises(DimensionMismatchError):
        QuadraticUncertainForm(B=[-np.eye(2)], b=[np.zeros(2)], c=[1.0])


def test_quadratic_form_evaluate(rng):
    form = _ball_form(4.0)
    x = random_complex(rng, 2)
    assert form.evaluate(0, x) == pytest.approx(4.0 - np.sum(np.abs(x) ** 2))


def test_sign_definiteness_scalar_case():
    # b >= 2 Re(X) for all |X| <= 1 holds iff b >= 2
    one = np.ones((1, 1))
    holds = sign_definiteness(np.array([[3.0]]), [one], [one], [1.0], [1.5])
    assert holds.min_eigenvalue() >= 0

    fails = sign_definiteness(np.array([[1.5]]), [one], [one], [1.0], [0.75])
    assert fails.min_eigenvalue() < 0


def test_sign_definiteness_length_mismatch():
    one = np.ones((1, 1))
    with pytest.raises(DimensionMismatchError):
        sign_definiteness(one, [one, one], [one], [1.0], [1.0])


def _signal_program(h, w, xi, alpha):
    prog = ConicProgram("signal")
    omega = prog.add_scalar("omega", nonneg=True)
    block = build_signal_lmi(w, None, w, None, h, None, xi, 0.0, alpha, omega)
    block.register(prog)
    prog.feasibility()
    return prog.solve()


def test_signal_lmi_matches_direct_link_worst_case(rng):
    h, w = random_complex(rng, 3), random_complex(rng, 3)
    s0 = abs(h @ w)
    xi = 0.2 * s0 / np.linalg.norm(w)
    worst = (s0 - xi * np.linalg.norm(w)) ** 2

    assert _signal_program(h, w, xi, 0.9 * worst).status is SolveStatus.OPTIMAL
    assert _signal_program(h, w, xi, 1.2 * worst).status is SolveStatus.INFEASIBLE


def test_noise_lmi_matches_worst_case_amplification(rng):
    M = 3
    # equal magnitudes make the worst error align with f * u
    f, u = random_complex(rng, M), 1.5 * np.exp(1j * rng.uniform(0, 2 * np.pi, M))
    xi_f, sigma1_sq = 0.3, 0.5
    worst = sigma1_sq * (np.linalg.norm(f * u) + xi_f * 1.5) ** 2

    def solve(slack):
        prog = ConicProgram("noise")
        upsilon = prog.add_scalar("upsilon", nonneg=True)
        build_noise_lmi(f, u, xi_f, slack, upsilon, sigma1_sq).register(prog)
        prog.feasibility()
        return prog.solve().status

    assert solve(1.05 * worst) is SolveStatus.OPTIMAL
    assert solve(0.9 * worst) is SolveStatus.INFEASIBLE


def test_ris_power_lmi_without_error_reduces_to_nominal_budget(rng):
    M, N, K = 3, 2, 2
    G = random_complex(rng, M, N)
    W = random_complex(rng, N, K)
    surfaces = [random_complex(rng, M), random_complex(rng, M)]
    sigma1_sq = 0.1
    nominal = sum(
        np.linalg.norm(u[:, None] * (G @ W)) ** 2 + sigma1_sq * np.sum(np.abs(u) ** 2) for u in surfaces
    )
    big = [1e4, 1e4]
    roomy = build_ris_power_lmi(surfaces, G, W, 0.0, big, 1.05 * nominal, sigma1_sq)
    tight = build_ris_power_lmi(surfaces, G, W, 0.0, big, 0.95 * nominal, sigma1_sq)
    assert roomy.min_eigenvalue() >= -1e-9
    assert tight.min_eigenvalue() < 0


def test_expected_quadratic_trivial_cases(rng):
    G = random_complex(rng, 2, 3)
    X = random_hermitian(rng, 3)
    assert np.allclose(expected_quadratic(G, X, np.zeros((2, 2)), np.eye(3)), G @ X @ G.conj().T)
    assert np.allclose(
        expected_quadratic(np.zeros((2, 3)), X, np.eye(2), np.eye(3)), np.trace(X) * np.eye(2)
    )


def test_expected_quadratic_matches_monte_carlo(rng):
    G = random_complex(rng, 2, 3)
    a = random_complex(rng, 3, 3)
    X = a @ a.conj().T
    A, B = 0.5 * np.eye(2), 0.5 * np.eye(3)
    draws = 4000
    acc = np.zeros((2, 2), dtype=complex)
    for _ in range(draws):
        Gp = G + kronecker_error(A, B, rng)
        acc += Gp @ X @ Gp.conj().T
    expected = expected_quadratic(G, X, A, B)
    assert np.linalg.norm(acc / draws - expected) < 0.1 * np.linalg.norm(expected)


def test_expected_quadratic_rejects_indefinite_covariance(rng):
    G = random_complex(rng, 2, 2)
    with pytest.raises(NotPositiveSemidefiniteError):
        expected_quadratic(G, np.eye(2), np.diag([1.0, -1.0]), np.eye(2))


def test_expected_ris_power_without_error_equals_nominal(rng):
    M, N, K = 4, 3, 2
    G = random_complex(rng, M, N)
    w = random_complex(rng, K, N)
    u_r, u_t = random_complex(rng, M), random_complex(rng, M)
    sigma1_sq = 0.01
    W = w.T
    nominal = sum(
        np.linalg.norm(u[:, None] * (G @ W)) ** 2 + sigma1_sq * np.sum(np.abs(u) ** 2) for u in (u_r, u_t)
    )
    psi = np.abs(u_r) ** 2 + np.abs(u_t) ** 2
    assert expected_ris_power(psi, G, w.T @ np.conj(w), 0.0, sigma1_sq) == pytest.approx(nominal)
    assert expected_ris_power(psi, G, w.T @ np.conj(w), 0.1, sigma1_sq) > nominal


def test_lifted_channel_reproduces_effective_gain(rng):
    N, M = 3, 4
    h, F, u = random_complex(rng, N), random_complex(rng, M, N), random_complex(rng, M)
    w = random_complex(rng, N)
    H = lifted_channel(h, F)
    V = lift_surface(u)
    gain = np.real(np.trace(H @ outer(w, w) @ H.conj().T @ V))
    assert gain == pytest.approx(abs((h + u @ F) @ w) ** 2)
    assert np.allclose(SurfaceGram.from_lifted(V).phi, np.abs(u) ** 2)


def test_bernstein_explicit_matches_perturbed_quadratic(rng):
    N, M = 2, 3
    h, f, F, u = random_complex(rng, N), random_complex(rng, M), random_complex(rng, M, N), random_complex(rng, M)
    C = random_hermitian(rng, N)
    varpi = (0.3, 0.2, 0.1)
    s1, s2 = 0.5, 0.7
    E, e, e0 = bernstein_explicit(C, u, h, f, F, *varpi, s1, s2)

    i_h, I_F, i_f = random_complex(rng, N), random_complex(rng, M, N), random_complex(rng, M)
    x = np.conj(np.concatenate([i_h, I_F.reshape(-1, order="F"), i_f]))
    quadratic = np.real(np.conj(x) @ E @ x + 2 * np.conj(e) @ x + e0)

    h_bar = h + varpi[0] * i_h + u @ (F + varpi[2] * I_F)
    d = np.conj(h_bar)
    direct = np.real(np.conj(d) @ C @ d) - s1 * np.sum(np.abs(u) ** 2 * np.abs(f + varpi[1] * i_f) ** 2) - s2
    assert quadratic == pytest.approx(direct)


def test_bernstein_blocks_agree_with_explicit_form(rng):
    N, M = 2, 3
    h, f, F, u = random_complex(rng, N), random_complex(rng, M), random_complex(rng, M, N), random_complex(rng, M)
    C = random_hermitian(rng, N)
    varpi = (0.3, 0.2, 0.1)
    s1, s2 = 0.5, 0.7
    E, e, e0 = bernstein_explicit(C, u, h, f, F, *varpi, s1, s2)
    block = bernstein_blocks(C, SurfaceGram.from_profile(u), h, f, F, *varpi, s1, s2, rho=0.05)

    assert block.trace_term == pytest.approx(np.real(np.trace(E)))
    assert block.e_const == pytest.approx(e0)
    assert block.sq_norm == pytest.approx(np.sum(np.abs(E) ** 2) + 2 * np.sum(np.abs(e) ** 2))
    lam_E = np.linalg.eigvalsh(E)[0]
    lam_block = np.linalg.eigvalsh(block.spectral)[0]
    assert lam_E == pytest.approx(min(lam_block, 0.0), abs=1e-9)


def test_bernstein_rejects_outage_outside_unit_interval(rng):
    h, f, F, u = random_complex(rng, 2), random_complex(rng, 2), random_complex(rng, 2, 2), random_complex(rng, 2)
    with pytest.raises(ValueError):
        bernstein_blocks(np.eye(2), SurfaceGram.from_profile(u), h, f, F, 0.1, 0.1, 0.1, 1.0, 1.0, rho=1.0)


def test_bernstein_margin_without_variance_is_nominal_slack(rng):
    N, M = 2, 3
    h, f, F, u = random_complex(rng, N), random_complex(rng, M), random_complex(rng, M, N), random_complex(rng, M)
    C = random_hermitian(rng, N)
    block = bernstein_blocks(C, SurfaceGram.from_profile(u), h, f, F, 0.0, 0.0, 0.0, 0.5, 0.7, rho=0.1)
    _, _, e0 = bernstein_explicit(C, u, h, f, F, 0.0, 0.0, 0.0, 0.5, 0.7)
    assert bernstein_margin(block) == pytest.approx(e0)


def test_certified_rate_without_variance_is_nominal_rate(tiny_scenario, rng):
    scenario = tiny_scenario
    params, ch = scenario.params, scenario.channels
    beams = BeamformerSet(w=0.05 * random_complex(rng, params.K, params.N))
    ris = RisProfile(beta=np.full((2, params.M), 0.5), theta=rng.uniform(0, 2 * np.pi, (2, params.M)), beta_max=4.0)
    lifted = np.array([outer(w, w) for w in beams.w])
    for k in range(params.K):
        u = ris.u(scenario.spaces[k])
        nominal = float(sinr_to_rate(sinr(k, scenario, beams, ris)))
        certified = bernstein_certified_rate(
            k, lifted, u, ch.h[k], ch.f[k], ch.F[k], (0.0, 0.0, 0.0),
            params.sigma1_sq, params.sigma2_sq, 0.05, range(params.K), upper=nominal + 1.0,
        )
        assert certified == pytest.approx(nominal, abs=1e-4)

        noisy = bernstein_certified_rate(
            k, lifted, u, ch.h[k], ch.f[k], ch.F[k],
            (0.1 * np.linalg.norm(ch.h[k]), 0.0, 0.1 * np.linalg.norm(ch.F[k])),
            params.sigma1_sq, params.sigma2_sq, 0.05, range(params.K), upper=nominal + 1.0,
        )
        assert noisy <= certified + 1e-6


def test_cub_bounds_product_and_is_tight():
    for x, y in [(1.0, 2.0), (0.3, 0.7), (5.0, 0.1)]:
        for t in (0.1, 1.0, 3.0):
            assert cub(x, y, t) >= x * y - 1e-12
        assert cub(x, y, y / x) == pytest.approx(x * y)
    with pytest.raises(ValueError):
        cub(1.0, 1.0, 0.0)


def test_taylor_square_lower_is_a_tangent_minorant(rng):
    z0 = random_complex(rng, 2, 2)
    assert taylor_square_lower(z0, z0) == pytest.approx(np.sum(np.abs(z0) ** 2))
    for _ in range(5):
        z = random_complex(rng, 2, 2)
        assert taylor_square_lower(z, z0) <= np.sum(np.abs(z) ** 2) + 1e-12
    assert taylor_square_lower(1.5, 1.0) == pytest.approx(2.0)


def test_exp_tangent_is_a_minorant():
    for x in (-1.0, 0.0, 0.5, 2.0):
        assert exp_tangent(x, 0.5) <= np.exp(x) + 1e-12
    assert exp_tangent(0.5, 0.5) == pytest.approx(np.exp(0.5))


@pytest.mark.slow
def test_interference_lmi_holds_over_sampled_errors(rng):
    N, M, K_other = 3, 4, 2
    h, F = random_complex(rng, N), random_complex(rng, M, N)
    u = 0.8 * np.exp(1j * rng.uniform(0, 2 * np.pi, M))
    W = 0.3 * random_complex(rng, N, K_other)
    xi_h, xi_F = 0.1 * np.linalg.norm(h), 0.1 * np.linalg.norm(F)

    prog = ConicProgram("interference")
    eta = prog.add_scalar("eta")
    upsilon_h = prog.add_scalar("upsilon_h", nonneg=True)
    upsilon_F = prog.add_scalar("upsilon_F", nonneg=True)
    build_interference_lmi(W, u, h, F, xi_h, xi_F, eta, 0.0, 1.0, upsilon_h, upsilon_F).register(prog)
    prog.minimize(eta)
    report = prog.solve()
    assert report.ok
    bound = float(report["eta"])

    n = 10_000
    dh = ball_draws(rng, n, (N,), xi_h)
    dF = ball_draws(rng, n, (M, N), xi_F)
    h_bar = h + dh + np.einsum("m,smn->sn", u, F + dF)
    interference = np.sum(np.abs(h_bar @ W) ** 2, axis=1) + 1.0
    assert np.max(interference) <= bound + 1e-6 * (1 + bound)
    # the nominal channel alone never reaches the worst case
    assert np.sum(np.abs((h + u @ F) @ W) ** 2) + 1.0 < bound


@pytest.mark.slow
def test_ris_power_lmi_holds_over_sampled_errors(rng):
    M, N, K = 3, 2, 2
    G = random_complex(rng, M, N)
    W = 0.5 * random_complex(rng, N, K)
    surfaces = [1.5 * np.exp(1j * rng.uniform(0, 2 * np.pi, M)), 0.7 * np.exp(1j * rng.uniform(0, 2 * np.pi, M))]
    xi_G, sigma1_sq = 0.1 * np.linalg.norm(G), 0.05

    prog = ConicProgram("ris_power")
    sigma = prog.add_vector("sigma", 2, nonneg=True)
    budget = prog.add_scalar("budget")
    build_ris_power_lmi(surfaces, G, W, xi_G, [sigma[0], sigma[1]], budget, sigma1_sq).register(prog)
    prog.minimize(budget)
    report = prog.solve()
    assert report.ok
    cap = float(report["budget"])

    n = 10_000
    G_err = G + ball_draws(rng, n, (M, N), xi_G)
    power = sum(
        np.sum(np.abs(u[None, :, None] * (G_err @ W)) ** 2, axis=(1, 2)) + sigma1_sq * np.sum(np.abs(u) ** 2)
        for u in surfaces
    )
    assert np.max(power) <= cap + 1e-6 * (1 + cap)


@pytest.mark.slow
def test_expected_quadratic_matches_a_long_monte_carlo_run(rng):
    M = N = 8
    G = random_complex(rng, M, N)
    a = random_complex(rng, N, N)
    X = a @ a.conj().T
    A = 0.3 * np.eye(M) + 0.05 * np.ones((M, M))
    B = 0.5 * np.eye(N)
    root_A, root_B = sqrtm(A), np.conj(sqrtm(B))
    acc = np.zeros((M, M), dtype=complex)
    batches, batch = 10, 10_000
    for _ in range(batches):
        Z = random_complex(rng, batch, M, N) / np.sqrt(2)
        Gp = G + root_A @ Z @ root_B
        acc += np.sum(Gp @ X @ np.conj(np.swapaxes(Gp, 1, 2)), axis=0)
    expected = expected_quadratic(G, X, A, B)
    assert np.linalg.norm(acc / (batches * batch) - expected) < 0.01 * np.linalg.norm(expected)
