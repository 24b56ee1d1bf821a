import numpy as np
import pytest

import dnwr.stepper as stepper
from dnwr import (
    Decomposition,
    DelayBuffer,
    EndCondition,
    ProblemSpec,
    SubdomainField,
    TooFewNodesError,
    build_grid,
    extract_dirichlet_trace,
    extract_flux,
    manufactured_problem,
    solve_subdomain,
    step_subdomain,
    transmission_flux,
)


def dense_step(nu, a1, a2, dx, dt, left, right, current, delayed, source):
    """Assemble the step system row by row and solve it densely."""
    n = len(current)
    A = np.zeros((n, n))
    b = np.zeros(n)
    c = nu**2 / dx**2
    for j in range(n):
        b[j] = current[j] / dt - a2 * delayed[j] + source[j]
        A[j, j] = 1 / dt + a1 + 2 * c
        if 0 < j < n - 1:
            A[j, j - 1] = A[j, j + 1] = -c
    kind, val = left
    if kind == "dirichlet":
        A[0] = 0
        A[0, 0] = 1
        b[0] = val
    else:
        # ghost u_{-1} = u_1 - 2 dx g
        A[0, 1] = -2 * c
        b[0] -= 2 * nu**2 * val / dx
    kind, val = right
    if kind == "dirichlet":
        A[-1] = 0
        A[-1, -1] = 1
        b[-1] = val
    else:
        # ghost u_{n} = u_{n-2} + 2 dx g
        A[-1, -2] = -2 * c
        b[-1] += 2 * nu**2 * val / dx
    return np.linalg.solve(A, b)


def _end(kind, value, levels=2):
    vals = np.full(levels, value)
    return EndCondition.dirichlet(vals) if kind == "dirichlet" else EndCondition.neumann(vals)


def test_step_zero_fixed_point():
    spec = ProblemSpec(tau=0.2, T=1)
    grid = build_grid(spec, 0.1, 0.1)
    z = np.zeros(6)
    out = step_subdomain(spec, grid, _end("dirichlet", 0), _end("neumann", 0), z, z, z, 0)
    assert np.all(out == 0)


def test_step_constant_steady_state():
    spec = ProblemSpec(a1=0, a2=0, tau=0.2, T=1)
    grid = build_grid(spec, 0.1, 0.1)
    c = 0.7 * np.ones(8)
    out = step_subdomain(spec, grid, _end("dirichlet", 0.7), _end("dirichlet", 0.7),
                         c, np.zeros(8), np.zeros(8), 0)
    np.testing.assert_allclose(out, c, atol=1e-14)


def test_step_matches_dense_solve_random():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(3, 13))
        nu = rng.uniform(0.2, 2)
        a1, a2 = rng.uniform(-1, 2), rng.uniform(-1, 1)
        dx, dt = rng.uniform(0.05, 0.5), rng.uniform(0.01, 0.5)
        spec = ProblemSpec(nu=nu, a1=a1, a2=a2, tau=dt, T=dt, x_left=0, x_right=dx * (n - 1))
        grid = build_grid(spec, dx, dt)
        kinds = rng.choice(["dirichlet", "neumann"], size=2)
        lv, rv = rng.standard_normal(2)
        cur, dly, src = rng.standard_normal((3, n))
        got = step_subdomain(spec, grid, _end(kinds[0], lv), _end(kinds[1], rv), cur, dly, src, 0)
        want = dense_step(nu, a1, a2, dx, dt, (kinds[0], lv), (kinds[1], rv), cur, dly, src)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12 * max(1, np.abs(want).max()))


def _whole(grid):
    return Decomposition(np.array([grid.x[0], grid.x[-1]]), (0, grid.num_nodes - 1))


def test_solve_error_mode_zero():
    spec = ProblemSpec(source=lambda x, t: 1 + x, tau=0.2, T=1)
    grid = build_grid(spec, 0.1, 0.1)
    z = EndCondition.dirichlet(np.zeros(grid.num_steps + 1))
    fld = solve_subdomain(spec, grid, _whole(grid), 0, z, z, mode="error")
    assert np.all(fld.values == 0)


def test_discrete_maximum_principle():
    rng = np.random.default_rng(7)
    spec = ProblemSpec(a1=0, a2=0, tau=0.1, T=2, x_left=0, x_right=1)
    grid = build_grid(spec, 0.05, 0.1)
    left = EndCondition.dirichlet(rng.uniform(0, 1, grid.num_steps + 1))
    right = EndCondition.dirichlet(rng.uniform(0, 1, grid.num_steps + 1))
    fld = solve_subdomain(spec, grid, _whole(grid), 0, left, right)
    assert fld.values.min() >= 0.0 and fld.values.max() <= 1.0


def no_delay_solver(nu, a1, source, u0, x, dt, steps, left, right):
    """Plain backward-Euler heat/reaction solver with Dirichlet ends."""
    n = len(x)
    dx = x[1] - x[0]
    A = np.zeros((n, n))
    A[0, 0] = A[-1, -1] = 1
    for j in range(1, n - 1):
        A[j, j - 1] = A[j, j + 1] = -nu**2 / dx**2
        A[j, j] = 1 / dt + a1 + 2 * nu**2 / dx**2
    u = [u0]
    for m in range(steps):
        b = u[-1] / dt + source(x, (m + 1) * dt)
        b[0], b[-1] = left[m + 1], right[m + 1]
        u.append(np.linalg.solve(A, b))
    return np.array(u)


def test_a2_zero_matches_no_delay_solver():
    spec = manufactured_problem(nu=0.8, a1=0.4, a2=0.0, tau=0.3, domain=(0, 2), T=1.5)
    grid = build_grid(spec, 0.1, 0.05)
    t = grid.t
    lvals = np.sin(3 * t)
    rvals = np.cos(t) - 1
    fld = solve_subdomain(spec, grid, _whole(grid), 0,
                          EndCondition.dirichlet(lvals), EndCondition.dirichlet(rvals))
    ref = no_delay_solver(0.8, 0.4, spec.source, spec.history(grid.x, 0.0), grid.x,
                          grid.dt, grid.num_steps, lvals, rvals)
    np.testing.assert_allclose(fld.values, ref, rtol=0, atol=1e-12)


def test_delayed_operand_equals_history(monkeypatch):
    history = lambda x, t: np.cos(x) * (1 + t) ** 2  # noqa: E731
    spec = ProblemSpec(a2=0.5, tau=0.3, T=1.0, x_left=0, x_right=1, history=history)
    grid = build_grid(spec, 0.1, 0.05)
    seen = []
    orig = DelayBuffer.lookup

    def spy(self, m):
        out = orig(self, m)
        seen.append((m, np.array(out)))
        return out

    monkeypatch.setattr(stepper.DelayBuffer, "lookup", spy)
    z = EndCondition.dirichlet(np.zeros(grid.num_steps + 1))
    solve_subdomain(spec, grid, _whole(grid), 0, z, z)
    k = grid.delay_steps
    checked = 0
    for step, (level, val) in enumerate(seen):
        assert level == step + 1 - k
        t_delayed = (step + 1) * grid.dt - spec.tau
        if t_delayed <= 1e-12:
            np.testing.assert_array_equal(val, history(grid.x, level * grid.dt))
            checked += 1
    assert checked == k


def test_delay_buffer_ring():
    hist = np.arange(6.0).reshape(3, 2)
    buf = DelayBuffer(hist, 3)
    assert np.array_equal(buf.lookup(-3), hist[0])
    assert np.array_equal(buf.lookup(-1), hist[2])
    for m in range(6):
        buf.push(np.full(2, 10.0 + m))
    assert buf.lookup(5)[0] == 15 and buf.lookup(2)[0] == 12
    with pytest.raises(IndexError):
        buf.lookup(1)
    with pytest.raises(IndexError):
        buf.lookup(-4)


def _field(values, dx=0.1):
    values = np.atleast_2d(values)
    x = dx * np.arange(values.shape[1])
    return SubdomainField(1, x, values, np.zeros((1, values.shape[1])))


def test_dirichlet_trace_copy():
    assert np.all(extract_dirichlet_trace(_field(np.zeros((4, 5))), "left").values == 0)
    t = 0.2 * np.arange(6)
    vals = np.zeros((6, 4))
    vals[:, -1] = t**2
    h = extract_dirichlet_trace(_field(vals), "right")
    np.testing.assert_allclose(h.values[:3], [0, 0.04, 0.16])
    assert h.interface_index == 1


def test_flux_constant_and_linear():
    x = 0.1 * np.arange(6)
    assert np.all(extract_flux(_field(np.full((3, 6), 2.5)), "left").values == 0)
    lin = _field(np.tile(x, (3, 1)))
    np.testing.assert_allclose(extract_flux(lin, "left").values, 1.0, atol=1e-12)
    np.testing.assert_allclose(extract_flux(lin, "right").values, 1.0, atol=1e-12)


def test_flux_quadratic_hand_value():
    fld = _field(np.array([[0.0, 0.01, 0.04]]))
    assert extract_flux(fld, "right", dx=0.1).values[0] == pytest.approx(0.4, abs=1e-12)


def test_flux_exact_on_quadratics():
    rng = np.random.default_rng(3)
    x = 0.5 + 0.1 * np.arange(7)
    for _ in range(20):
        a, b, c = rng.standard_normal(3)
        u = a + b * x + c * x**2
        fld = SubdomainField(0, x, u[None, :], np.zeros((1, 7)))
        assert extract_flux(fld, "left", dx=0.1).values[0] == pytest.approx(b + 2 * c * x[0], abs=1e-12)
        assert extract_flux(fld, "right", dx=0.1).values[0] == pytest.approx(b + 2 * c * x[-1], abs=1e-12)


def test_flux_too_few_nodes():
    with pytest.raises(TooFewNodesError):
        extract_flux(_field(np.zeros((2, 2))), "left")


def test_transmission_flux_reproduces_neighbour():
    """A Neumann solve fed the transmission flux of the undecomposed solution
    reproduces that solution on its strip."""
    spec = manufactured_problem(a1=0.3, a2=0.4, tau=0.2, domain=(0, 2), T=1)
    grid = build_grid(spec, 0.1, 0.05)
    whole = _whole(grid)
    z = EndCondition.dirichlet(np.zeros(grid.num_steps + 1))
    full = solve_subdomain(spec, grid, whole, 0, z, z).values
    d = Decomposition(np.array([0, 0.8, 2]), (0, 8, 20))
    left_part = solve_subdomain(spec, grid, d, 0, z, EndCondition.dirichlet(full[:, 8]))
    g = transmission_flux(spec, grid, left_part, "right")
    right_part = solve_subdomain(spec, grid, d, 1, EndCondition.neumann(g), z)
    np.testing.assert_allclose(right_part.values, full[:, 8:], atol=1e-12)
    # and the other orientation
    right_d = solve_subdomain(spec, grid, d, 1, EndCondition.dirichlet(full[:, 8]), z)
    g = transmission_flux(spec, grid, right_d, "left")
    left_n = solve_subdomain(spec, grid, d, 0, z, EndCondition.neumann(g))
    np.testing.assert_allclose(left_n.values, full[:, :9], atol=1e-12)


def test_manufactured_first_order_in_time():
    errs = []
    for dt in (0.05, 0.025):
        spec = manufactured_problem(a1=0.5, a2=0.8, tau=0.25, domain=(0, 1), T=1, profile="trig")
        grid = build_grid(spec, 1 / 400, dt)
        z = EndCondition.dirichlet(np.zeros(grid.num_steps + 1))
        u = solve_subdomain(spec, grid, _whole(grid), 0, z, z).values
        exact = np.array([spec.exact(grid.x, t) for t in grid.t])
        errs.append(np.abs(u - exact).max())
    assert 1.6 <= errs[0] / errs[1] <= 2.4
