import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cgl_lab import hermite, multiindex as mi
from cgl_lab.errors import IncompleteSpec
from cgl_lab.field import Grid, GridField, dilate, integrate, lq_norm
from cgl_lab.moments import MomentTable, moment_table
from cgl_lab.profiles import (
    ExpansionSpec, assemble_A, layer, layer_coefficients, laplacian_series, linear_profile,
    remainder_bound, write_layer_csv,
)
from cgl_lab.rates import fit_decay, fit_log_corrected, scaled_exponent
from cgl_lab.samples import packet, shifted_gaussian
from cgl_lab.semigroup import KernelSpec, apply, gaussian

NU = 1 + 0.5j
G1 = Grid(1, 120.0, 2048)
G2 = Grid(2, 100.0, 512)

cplx = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


def random_spec(data, m, n, grid, nu=NU):
    """ExpansionSpec with arbitrary moment tables drawn by hypothesis."""
    def table(order, src):
        return MomentTable(src, {b: data.draw(cplx) for b in mi.enumerate_upto(order, n)}, order, n)
    psi = {k: table(m - 2 * k, f"psi_{k}") for k in range(m // 2 + 1)}
    return ExpansionSpec(m, nu, table(m, "u0"), psi, grid)


def test_order_zero_profile_is_mass_times_kernel():
    phi = shifted_gaussian(G1, NU, 0.8, amplitude=1.7)
    tab = moment_table(phi, 0)
    for t in (0.5, 3.0):
        prof = linear_profile((0,), 0, t, tab, NU, G1)
        assert lq_norm(prof - gaussian(KernelSpec(NU, t), G1) * tab[(0,)], np.inf) < 1e-14


def test_profile_of_heat_kernel_leads_with_kernel():
    tab = moment_table(shifted_gaussian(G1, NU), 3)
    assert tab[(0,)] == pytest.approx(1, abs=1e-10)
    for N in range(4):
        prof = linear_profile((0,), N, 2.0, tab, NU, G1)
        # every higher moment of G_nu below order 2 vanishes, so only M_0 and M_2 terms enter
        lead = gaussian(KernelSpec(NU, 2.0), G1)
        assert abs(integrate(prof) - integrate(lead)) < 1e-10


def test_profile_requires_enough_moments():
    tab = moment_table(shifted_gaussian(G1, NU), 1)
    with pytest.raises(IncompleteSpec):
        linear_profile((0,), 2, 1.0, tab, NU, G1)
    with pytest.raises(ValueError):
        linear_profile((0,), 0, 0.0, tab, NU, G1)


@pytest.mark.parametrize("t", [4.0, 16.0, 64.0])
def test_remainder_bound_order_zero_real_viscosity(t):
    g = Grid(1, 400.0, 4096)
    phi = shifted_gaussian(g, 1.0, 1.0)
    r = lq_norm(apply(phi, KernelSpec(1.0, t)) - linear_profile((0,), 0, t, moment_table(phi, 0), 1.0, g), 1)
    bound = 0.5 * t ** -0.5 * lq_norm(hermite.hermite_gaussian(1.0, (1,), g), 1) * lq_norm(
        GridField(g, g.x * phi.values), 1)
    assert r <= bound
    assert remainder_bound((0,), 0, t, phi, 1.0, 1) == pytest.approx(bound, rel=1e-12)


@pytest.mark.parametrize("alpha", [0, 1, 2])
@pytest.mark.parametrize("m", [0, 1, 2])
@pytest.mark.parametrize("q", [1.0, np.inf])
def test_remainder_bound_holds_for_derivatives(alpha, m, q):
    g = Grid(1, 200.0, 2048)
    phi = packet(g, center=0.6, width=1.1, wavenumber=0.9)
    tab = moment_table(phi, m)
    for t in (0.5, 2.0, 8.0, 32.0):
        r = lq_norm(apply(phi, KernelSpec(NU, t), (alpha,)) - linear_profile((alpha,), m, t, tab, NU, g), q)
        scaled = t ** scaled_exponent(1, q, alpha + m) * r
        assert scaled <= remainder_bound((alpha,), m, t, phi, NU, q)


def test_vanishing_remainder_for_symmetric_data():
    # an even field has M_1 = 0, so the order-1 remainder decays faster than t^{-1/2}
    g = Grid(1, 640.0, 8192)
    phi = GridField(g, np.exp(-g.x ** 2 / 2) * (1 + 0.3 * np.cos(g.x)))
    tab = moment_table(phi, 1)
    for q in (1.0, np.inf):
        vals = [t ** scaled_exponent(1, q, 1) * lq_norm(
            apply(phi, KernelSpec(NU, t)) - linear_profile((0,), 1, t, tab, NU, g), q)
            for t in 2.0 ** np.arange(2, 11)]
        assert all(b < a for a, b in zip(vals, vals[1:]))


def _spec_from_fields(u0, psi0, m):
    n = u0.grid.n
    return ExpansionSpec(m, NU, moment_table(u0, m, "u0"), {0: moment_table(psi0, m, "psi_0")}
                         | {k: MomentTable.zeros(m - 2 * k, n) for k in range(1, m // 2 + 1)}, u0.grid)


def test_assemble_order_zero():
    u0 = shifted_gaussian(G1, 1.0, 1.0, 0.3)
    psi0 = packet(G1, center=-0.5, width=0.8, wavenumber=0.3, amplitude=0.1)
    spec = _spec_from_fields(u0, psi0, 0)
    mass = spec.u0_moments[(0,)] + spec.psi_moments[0][(0,)]
    for t in (1.0, 5.0):
        A = assemble_A(spec, t)
        assert lq_norm(A - gaussian(KernelSpec(NU, t), G1) * mass, np.inf) < 1e-14


def test_assemble_without_nonlinearity_is_linear_profile():
    u0 = packet(G1, center=0.2, width=1.0, wavenumber=0.5)
    n = 1
    m = 3
    spec = ExpansionSpec(m, NU, moment_table(u0, m), {k: MomentTable.zeros(m - 2 * k, n) for k in range(2)}, G1)
    for t in (1.0, 7.0):
        assert lq_norm(assemble_A(spec, t) - linear_profile((0,), m, t, spec.u0_moments, NU, G1), np.inf) < 1e-15


def test_first_layer_formula():
    u0 = shifted_gaussian(G1, 1.0, 1.0, 0.3)
    psi0 = packet(G1, center=-0.5, width=0.8, wavenumber=0.3, amplitude=0.1)
    s1, s0 = _spec_from_fields(u0, psi0, 1), _spec_from_fields(u0, psi0, 0)
    c = s1.u0_moments[(1,)] + s1.psi_moments[0][(1,)]
    t = 3.0
    expected = hermite.hermite_gaussian(NU, (1,), G1, t) * (0.5 * c * t ** -0.5)
    assert lq_norm(assemble_A(s1, t) - assemble_A(s0, t) - expected, np.inf) < 1e-15


def test_spec_completeness_is_enforced():
    n = 1
    with pytest.raises(IncompleteSpec):
        ExpansionSpec(2, NU, MomentTable.zeros(2, n), {0: MomentTable.zeros(2, n)}, G1)
    with pytest.raises(IncompleteSpec):
        ExpansionSpec(2, NU, MomentTable.zeros(1, n), {0: MomentTable.zeros(2, n), 1: MomentTable.zeros(0, n)}, G1)
    with pytest.raises(IncompleteSpec):
        ExpansionSpec(1, NU, MomentTable.zeros(1, n), {0: MomentTable.zeros(0, n)}, G1)


@settings(max_examples=15, deadline=None)
@given(st.data(), st.integers(0, 3), st.sampled_from([1, 2]))
def test_layers_telescope_to_profile(data, m, n):
    grid = G1 if n == 1 else G2
    spec = random_spec(data, m, n, grid)
    for t in (1.0, 4.0):
        total = sum((layer(spec, k, t) for k in range(m + 1)), GridField.zeros(grid))
        A = assemble_A(spec, t)
        assert lq_norm(total - A, np.inf) < 1e-10 * (1 + lq_norm(A, np.inf))


@settings(max_examples=10, deadline=None)
@given(st.data(), st.integers(0, 3))
def test_layer_zero_is_profile_at_unit_time(data, m):
    spec = random_spec(data, m, 1, G1)
    A0 = assemble_A(ExpansionSpec(0, NU, spec.u0_moments, spec.psi_moments, G1), 1.0)
    assert lq_norm(layer(spec, 0, 1.0) - A0, np.inf) < 1e-14


@settings(max_examples=8, deadline=None)
@given(st.data(), st.sampled_from([1, 2]))
def test_layers_are_self_similar(data, n):
    grid = G1 if n == 1 else G2
    spec = random_spec(data, 3, n, grid)
    t = 9.0
    for k in range(4):
        lhs = layer(spec, k, t)
        rhs = dilate(layer(spec, k, 1.0), t) * t ** (-k / 2)
        assert lq_norm(lhs - rhs, np.inf) < 1e-9 * (1 + lq_norm(lhs, np.inf))


@settings(max_examples=8, deadline=None)
@given(st.data())
def test_layers_live_in_their_hermite_shell(data):
    # project layer(k, 1) onto h_beta G_nu using the bilinear orthogonality relation
    g = Grid(1, 80.0, 1024)
    spec = random_spec(data, 3, 1, g)
    for k in range(4):
        L = layer(spec, k, 1.0)
        for j in range(7):
            h = hermite.build(NU, (j,))(g.x)
            proj = (L.values * h).sum() * g.h / hermite.gram_diagonal(NU, (j,))
            if j != k:
                assert abs(proj) < 1e-8 * (1 + lq_norm(L, np.inf))
            else:
                c = layer_coefficients(spec, k)[(k,)]
                assert abs(proj - 2.0 ** -k * c) < 1e-8 * (1 + abs(c))


def test_layer_order_checks():
    spec = ExpansionSpec(1, NU, MomentTable.zeros(1, 1), {0: MomentTable.zeros(1, 1)}, G1)
    with pytest.raises(ValueError):
        layer(spec, 2, 1.0)
    with pytest.raises(ValueError):
        layer(spec, -1, 1.0)


def test_layer_coefficients_combine_psi_moments():
    n = 1
    u0 = MomentTable("u0", {(0,): 1, (1,): 2, (2,): 3}, 2, n)
    psi0 = MomentTable("psi_0", {(0,): 0.5, (1,): 0.25, (2,): 0.125}, 2, n)
    psi1 = MomentTable("psi_1", {(0,): 4.0}, 0, n)
    spec = ExpansionSpec(2, NU, u0, {0: psi0, 1: psi1}, G1)
    c = layer_coefficients(spec, 2)
    assert c[(2,)] == pytest.approx(3 + 0.125 + (-NU) * 4.0)


def test_layer_csv(tmp_path):
    spec = ExpansionSpec(1, NU, MomentTable("u0", {(0,): 1, (1,): 2j}, 1, 1),
                         {0: MomentTable.zeros(1, 1)}, G1)
    p = tmp_path / "layers.csv"
    write_layer_csv(p, spec)
    rows = list(csv.reader(open(p)))
    assert rows == [["k", "alpha", "re", "im"], ["0", "0", "1.0", "0.0"], ["1", "1", "0.0", "2.0"]]


def test_laplacian_series_trivial_cases():
    u0 = shifted_gaussian(G1, 1.0, 0.5, 0.2)
    psi = [packet(G1, width=1.0, amplitude=0.01), packet(G1, width=1.3, amplitude=0.002)]
    spec = KernelSpec(NU, 2.0)
    zero = [GridField.zeros(G1)] * 2
    assert lq_norm(laplacian_series(2.0, u0, zero, NU, 1) - apply(u0, spec), np.inf) < 1e-16
    assert lq_norm(laplacian_series(2.0, u0, psi, NU, 0) - apply(u0 + psi[0], spec), np.inf) < 1e-16


def test_laplacian_series_rate(long_run):
    # n = 1, p = 5 puts the N = 0 series at the boundary case: t^{-1} log t decay
    u0 = long_run.config.u0
    psi = [long_run.psi[0].field]
    for q in (1.0, np.inf):
        ser = [(t, t ** scaled_exponent(1, q, 0) * lq_norm(u - laplacian_series(t, u0, psi, NU, 0), q))
               for t, u in sorted(long_run.snapshots.items()) if 16 <= t <= 256]
        fit = fit_log_corrected(ser)
        plain = fit_decay(ser)
        assert abs(fit.slope + 1) <= 0.1
        # the uncorrected fit is visibly contaminated by the logarithm
        assert plain.slope > fit.slope
