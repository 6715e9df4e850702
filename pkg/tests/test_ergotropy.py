import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from dqdbattery.ergotropy import (
    BlochState,
    QubitHamiltonian,
    SpectralDecomposition,
    ergotropy_closed_form,
    ergotropy_nc,
    ergotropy_spectral,
    ergotropy_spherical,
    ergotropy_surface,
    max_ergotropy,
    passive_state,
)

SQRT5 = math.sqrt(5.0)

energies = st.floats(-5.0, 5.0, allow_nan=False)
radii = st.floats(0.0, 1.0)
angles = st.floats(0.0, 2 * math.pi)


@st.composite
def states(draw):
    return BlochState.from_spherical(draw(radii), draw(st.floats(0.0, math.pi)), draw(angles))


@st.composite
def hamiltonians(draw):
    return QubitHamiltonian(draw(energies), draw(energies))


def brute_force_ergotropy(state: BlochState, h: QubitHamiltonian) -> float:
    """tr(rho H) minus the lowest energy reachable by any SU(2) rotation."""
    rho, ham = state.density_matrix(), h.matrix()
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1.0, -1.0]).astype(complex)

    def energy(x):
        a, b, c = x
        n = np.array([a, b, c])
        th = np.linalg.norm(n)
        if th == 0:
            u = np.eye(2)
        else:
            k = n / th
            u = math.cos(th) * np.eye(2) - 1j * math.sin(th) * (k[0] * sx + k[1] * sy + k[2] * sz)
        return float(np.trace(u @ rho @ u.conj().T @ ham).real)

    best = min(minimize(energy, x0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000}).fun
               for x0 in ([0.1, 0.2, 0.3], [1.0, -0.5, 0.2], [-0.7, 0.9, 1.3], [0.0, 1.5, 0.0]))
    return float(np.trace(rho @ ham).real) - best


# -- BlochState / QubitHamiltonian ---------------------------------------------------


@given(radii, st.floats(0.0, math.pi), angles)
def test_spherical_cartesian_consistency(r, theta, phi):
    s = BlochState.from_spherical(r, theta, phi)
    assert s.sx == pytest.approx(r * math.sin(theta) * math.cos(phi), abs=1e-15)
    assert s.sy == pytest.approx(r * math.sin(theta) * math.sin(phi), abs=1e-15)
    assert s.sz == pytest.approx(r * math.cos(theta), abs=1e-15)
    rho = s.density_matrix()
    assert np.trace(rho).real == pytest.approx(1.0)
    ev = np.linalg.eigvalsh(rho)
    assert ev == pytest.approx([(1 - r) / 2, (1 + r) / 2], abs=1e-12)


def test_spherical_view_round_trip():
    s = BlochState.from_spherical(0.7, 1.1, 0.3)
    assert (s.r, s.theta, s.phi) == pytest.approx((0.7, 1.1, 0.3))
    assert BlochState.from_density_matrix(s.density_matrix()).vector == pytest.approx(s.vector)


def test_bloch_norm_validation():
    with pytest.raises(ValueError):
        BlochState(1.0, 0.1, 0.0)
    with pytest.raises(ValueError):
        BlochState(math.nan, 0.0, 0.0)
    with pytest.raises(ValueError):
        BlochState.from_spherical(1.0 + 1e-9, 0.2, 0.0)
    clamped = BlochState.from_spherical(1.0 + 1e-13, 0.2, 0.0)
    assert clamped.r <= 1.0


@given(hamiltonians())
def test_hamiltonian_eigensystem(h):
    assert h.delta >= abs(h.epsilon) and h.delta >= 2 * abs(h.tc)
    vecs = h.eigenvectors()
    assert vecs.conj().T @ vecs == pytest.approx(np.eye(2), abs=1e-12)
    for k, lam in enumerate(h.eigenvalues):
        assert h.matrix() @ vecs[:, k] == pytest.approx(lam * vecs[:, k], abs=1e-12)


def test_spectral_decomposition_ordering():
    rho = BlochState.from_spherical(0.6, 0.4, 1.0).density_matrix()
    dec = SpectralDecomposition.of(rho, descending=True)
    assert dec.values[0] >= dec.values[1]
    assert dec.vectors @ dec.vectors.conj().T == pytest.approx(np.eye(2), abs=1e-12)
    assert dec.reconstruct() == pytest.approx(rho, abs=1e-12)
    ham = SpectralDecomposition.of(QubitHamiltonian(1, 1).matrix(), descending=False)
    assert ham.values[0] <= ham.values[1]


# -- ergotropy_spectral ------------------------------------------------------------------


def test_spectral_maximally_mixed_is_passive(h11):
    assert ergotropy_spectral(BlochState(0, 0, 0), h11) == 0.0


def test_spectral_ground_state_is_passive(h11):
    ground = BlochState(-2 / SQRT5, 0.0, -1 / SQRT5)
    assert ergotropy_spectral(ground, h11) == pytest.approx(0.0, abs=1e-14)


def test_spectral_up_state(h11):
    up = BlochState.from_spherical(1.0, 0.0, 0.0)
    w = ergotropy_spectral(up, h11)
    assert w == pytest.approx((SQRT5 + 1) / 2, abs=1e-12)
    assert brute_force_ergotropy(up, h11) == pytest.approx(1.6180339887498949, abs=1e-8)


@pytest.mark.parametrize(
    "r,theta,phi,eps,tc",
    [(0.7, 1.1, 0.3, 2.0, 0.5), (0.3, 2.5, 4.0, -1.0, 0.8), (1.0, 0.9, 1.7, 0.4, -1.2)],
)
def test_spectral_matches_brute_force(r, theta, phi, eps, tc):
    s, h = BlochState.from_spherical(r, theta, phi), QubitHamiltonian(eps, tc)
    assert ergotropy_spectral(s, h) == pytest.approx(brute_force_ergotropy(s, h), abs=1e-8)


# -- ergotropy_closed_form ------------------------------------------------------------------


def test_closed_form_maximum(h11):
    s = BlochState.from_spherical(1.0, math.atan2(2.0, 1.0), 0.0)
    assert ergotropy_closed_form(s, h11) == pytest.approx(SQRT5, abs=1e-12)


def test_closed_form_up_state(h11):
    s = BlochState.from_spherical(1.0, 0.0, 0.0)
    assert ergotropy_closed_form(s, h11) == pytest.approx((h11.delta + 1.0) / 2, abs=1e-14)


def test_closed_form_half_mixed(h11):
    s = BlochState.from_spherical(0.5, math.pi / 2, math.pi)
    w = ergotropy_closed_form(s, h11)
    assert w == pytest.approx(0.5 * (0.5 * SQRT5 - 1.0), abs=1e-12)
    assert w == pytest.approx(ergotropy_spectral(s, h11), abs=1e-12)
    assert w == pytest.approx(0.05901699437494742, abs=1e-12)


@given(radii, st.floats(0.0, math.pi), angles, hamiltonians())
def test_spherical_form_equals_cartesian(r, theta, phi, h):
    s = BlochState.from_spherical(r, theta, phi)
    assert ergotropy_spherical(r, theta, phi, h) == pytest.approx(ergotropy_closed_form(s, h), abs=1e-12)


# -- properties -------------------------------------------------------------------------------


@given(states(), hamiltonians())
def test_oracle_equivalence(s, h):
    assert abs(ergotropy_spectral(s, h) - ergotropy_closed_form(s, h)) <= 1e-10 * max(1.0, h.delta)


@given(states(), hamiltonians())
def test_non_negative_and_bounded(s, h):
    w = ergotropy_closed_form(s, h)
    assert w >= -1e-12
    assert ergotropy_spectral(s, h) >= -1e-12
    assert w <= s.r * h.delta + 1e-12


@given(states(), hamiltonians())
def test_passivity(s, h):
    p = passive_state(s, h)
    assert ergotropy_spectral(p, h) <= 1e-12
    assert ergotropy_closed_form(p, h) <= 1e-12
    assert p.r == pytest.approx(s.r, abs=1e-12)


@given(states(), hamiltonians(), angles)
def test_depends_on_norm_and_field_projection_only(s, h, alpha):
    """Rotating the Bloch vector about the field axis leaves W unchanged."""
    b = h.field
    if np.linalg.norm(b) == 0:
        return
    k = b / np.linalg.norm(b)
    v = s.vector
    rot = v * math.cos(alpha) + np.cross(k, v) * math.sin(alpha) + k * (k @ v) * (1 - math.cos(alpha))
    norm = np.linalg.norm(rot)
    if norm > 1.0:
        rot = rot / norm
    s2 = BlochState(*rot)
    assert ergotropy_spectral(s2, h) == pytest.approx(ergotropy_spectral(s, h), abs=1e-10)


@given(energies.filter(lambda e: e >= 0), energies)
def test_hierarchy_at_maximizers(eps, tc):
    h = QubitHamiltonian(eps, tc)
    w_max, w_nc = max_ergotropy(h).value, ergotropy_nc(1.0, h)
    assert w_max >= w_nc - 1e-12
    if tc == 0.0:
        assert w_max == pytest.approx(w_nc)


@pytest.mark.parametrize("eps,tc", [(1.0, 1.0), (2.0, 0.5), (0.3, -1.4), (-1.0, 2.0)])
def test_maximizer_is_stationary(eps, tc):
    h = QubitHamiltonian(eps, tc)
    m = max_ergotropy(h)
    theta0, phi0 = BlochState(m.sx, m.sy, m.sz).theta, math.atan2(m.sy, m.sx)
    step = 1e-6

    def w(theta, phi):
        return ergotropy_spherical(1.0, theta, phi, h)

    d_theta = (w(theta0 + step, phi0) - w(theta0 - step, phi0)) / (2 * step)
    d_phi = (w(theta0, phi0 + step) - w(theta0, phi0 - step)) / (2 * step)
    assert abs(d_theta) < 1e-6 and abs(d_phi) < 1e-6
    assert w(theta0, phi0) == pytest.approx(h.delta, abs=1e-12)


# -- passive_state / max / nc ------------------------------------------------------------------


def test_passive_of_up_state_is_ground(h11):
    p = passive_state(BlochState(0, 0, 1), h11)
    assert p.vector == pytest.approx(-np.array([2.0, 0.0, 1.0]) / SQRT5, abs=1e-12)


def test_passive_of_mixed_is_itself():
    s = BlochState(0, 0, 0)
    assert passive_state(s, QubitHamiltonian(0.3, 2.0)) == s


def test_passive_mixed_example():
    h = QubitHamiltonian(2.0, 0.5)
    p = passive_state(BlochState.from_spherical(0.7, 1.1, 0.3), h)
    assert p.r == pytest.approx(0.7, abs=1e-12)
    assert ergotropy_spectral(p, h) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("eps,tc,expected", [(1, 1, SQRT5), (1, 0, 1.0), (0, 1, 2.0)])
def test_max_ergotropy(eps, tc, expected):
    m = max_ergotropy(QubitHamiltonian(eps, tc))
    assert m.value == pytest.approx(expected, abs=1e-15)
    assert ergotropy_closed_form(m.state, QubitHamiltonian(eps, tc)) == pytest.approx(expected, abs=1e-12)


def test_max_ergotropy_coordinates(h11):
    m = max_ergotropy(h11)
    assert (m.sx, m.sy, m.sz) == pytest.approx((2 / SQRT5, 0.0, 1 / SQRT5))


def test_ergotropy_nc_examples(h11):
    assert ergotropy_nc(1.0, h11) == pytest.approx((SQRT5 + 1) / 2)
    assert ergotropy_nc(0.0, h11) == 0.0
    h = QubitHamiltonian(3.0, 2.0)
    assert ergotropy_nc(0.5, h) == pytest.approx(2.0, abs=1e-14)
    assert ergotropy_nc(0.5, h) == pytest.approx(ergotropy_closed_form(BlochState(0, 0, 0.5), h), abs=1e-14)


# -- surface -----------------------------------------------------------------------------------


def test_surface_max_on_degree_grid(h11):
    surf = ergotropy_surface(h11, 1.0, 181, 361)
    theta, phi, wmax = surf.argmax()
    assert wmax == pytest.approx(SQRT5, abs=1e-4)
    assert phi == pytest.approx(0.0)
    assert theta == pytest.approx(math.atan(2.0), abs=math.pi / 180)


def test_surface_cells_are_closed_form(h11):
    surf = ergotropy_surface(h11, 0.8, 7, 9)
    for i, t in enumerate(surf.theta):
        for j, p in enumerate(surf.phi):
            s = BlochState.from_spherical(0.8, t, p)
            assert surf.values[i, j] == pytest.approx(ergotropy_closed_form(s, h11), abs=1e-14)


def test_surface_zero_for_mixed_state():
    surf = ergotropy_surface(QubitHamiltonian(0.7, -1.3), 0.0, 11, 13)
    assert np.all(surf.values == 0.0)


def test_surface_minimum_at_passive_direction(h11):
    surf = ergotropy_surface(h11, 1.0, 721, 1441)
    theta, phi, wmin = surf.argmin()
    assert wmin == pytest.approx(0.0, abs=1e-4)
    ground = passive_state(BlochState(0, 0, 1), h11)
    assert theta == pytest.approx(ground.theta, abs=math.pi / 720)
    assert phi == pytest.approx(ground.phi, abs=math.pi / 720)


def test_surface_refinement_converges(h11):
    errs = [SQRT5 - ergotropy_surface(h11, 1.0, n, 2 * n - 1).argmax()[2] for n in (19, 73, 289)]
    assert errs[0] > errs[1] > errs[2] >= 0.0


def test_surface_csv_layout(h11):
    surf = ergotropy_surface(h11, 1.0, 3, 4)
    rows = list(csv.reader(io.StringIO(surf.to_csv())))
    assert rows[0] == ["theta", "phi", "ergotropy"]
    assert len(rows) == 1 + 12
    # row-major: theta outer, phi inner
    assert float(rows[1][0]) == float(rows[4][0]) == 0.0
    assert float(rows[2][1]) == pytest.approx(2 * math.pi / 3)


def test_surface_rejects_small_grid(h11):
    with pytest.raises(ValueError):
        ergotropy_surface(h11, 1.0, 1, 5)
