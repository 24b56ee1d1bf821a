"""Verification backbone: monodomain reference solve, norms, manufactured solutions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InterfaceMismatchError
from .model import Decomposition, ProblemSpec, SubdomainField
from .stepper import EndCondition, solve_subdomain


@dataclass(frozen=True)
class GlobalField:
    """Solution on the whole grid, ``values[m, l]`` at level m and node l."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def _values(field):
    return field.values if hasattr(field, "values") else np.asarray(field, dtype=float)


def norm_l2t_linfx(field, grid) -> float:
    """Discrete L2-in-time, max-in-space norm over levels 1..M."""
    u = _values(field)
    peak = np.abs(u[1:]).max(axis=1)
    return float(np.sqrt(grid.dt * np.sum(peak**2)))


def interface_norm(trace, grid) -> float:
    """Discrete L2-in-time norm of an interface trace over levels 1..M."""
    h = _values(trace)
    return float(np.sqrt(grid.dt * np.sum(h[1:] ** 2)))


def monodomain_solve(spec, grid, mode="full") -> GlobalField:
    """Undecomposed solve; the whole interval is one Dirichlet-Dirichlet subdomain."""
    if mode == "error":
        spec = spec.as_error_equation()
    whole = Decomposition(
        breakpoints=np.array([spec.x_left, spec.x_right]), nodes=(0, grid.num_nodes - 1)
    )
    t = grid.t
    left = EndCondition.dirichlet(np.array([spec.outer_bc[0](s) for s in t], dtype=float))
    right = EndCondition.dirichlet(np.array([spec.outer_bc[1](s) for s in t], dtype=float))
    fld = solve_subdomain(spec, grid, whole, 0, left, right, mode)
    return GlobalField(fld.values)


def restrict(global_field, decomp, grid=None, spec=None) -> list:
    """Cut a global field into per-subdomain fields (shared interface nodes copied)."""
    u = _values(global_field)
    fields = []
    for i in range(decomp.num_subdomains):
        sl = decomp.local_slice(i)
        n = sl.stop - sl.start
        if grid is not None:
            x = grid.x[sl]
        else:
            x = np.arange(sl.start, sl.stop, dtype=float)
        if spec is not None and grid is not None:
            history = np.array(
                [spec.history(x, -j * grid.dt) for j in range(grid.delay_steps, 0, -1)]
            ).reshape(grid.delay_steps, n)
        else:
            history = np.zeros((0, n))
        fields.append(SubdomainField(i, x, u[:, sl], history))
    return fields


def glue(decomp, fields, tol=1e-6, dirichlet_side=None) -> GlobalField:
    """Concatenate subdomain fields into one global field.

    Neighbouring fields must agree at their shared node within ``tol``;
    the value kept there comes from ``dirichlet_side[i]`` ("left" or
    "right") of interface ``i`` (default "left").
    """
    if len(fields) != decomp.num_subdomains:
        raise ValueError(f"{len(fields)} fields for {decomp.num_subdomains} subdomains")
    if dirichlet_side is None:
        dirichlet_side = ["left"] * decomp.num_interfaces
    levels = fields[0].values.shape[0]
    num_nodes = decomp.nodes[-1] - decomp.nodes[0] + 1
    out = np.empty((levels, num_nodes))
    for i, fld in enumerate(fields):
        out[:, decomp.local_slice(i)] = fld.values
    for i in range(decomp.num_interfaces):
        a = fields[i].values[:, -1]
        b = fields[i + 1].values[:, 0]
        gap = float(np.max(np.abs(a - b))) if a.size else 0.0
        if not gap <= tol:
            raise InterfaceMismatchError(i, gap, tol)
        out[:, decomp.nodes[i + 1]] = a if dirichlet_side[i] == "left" else b
    return GlobalField(out)


def manufactured_problem(nu=1.0, a1=0.0, a2=0.028, tau=0.3, domain=(0.0, 1.0), T=1.0,
                         profile="linear") -> ProblemSpec:
    """Problem whose exact solution is ``sin(pi (x - x_L) / L) * g(t)``.

    ``profile="linear"`` uses ``g(t) = 1 + t``, which backward Euler
    integrates exactly in time, so only the spatial error remains.
    ``profile="trig"`` uses ``g(t) = 1 + sin(2 t)`` to expose the temporal
    error. The history is the same formula for t in [-tau, 0]; the outer
    boundary data are zero.
    """
    x_left, x_right = map(float, domain)
    L = x_right - x_left
    k = np.pi / L
    if profile == "linear":
        g = lambda t: 1.0 + t  # noqa: E731
        dg = lambda t: 1.0 + 0.0 * t  # noqa: E731
    elif profile == "trig":
        g = lambda t: 1.0 + np.sin(2.0 * t)  # noqa: E731
        dg = lambda t: 2.0 * np.cos(2.0 * t)  # noqa: E731
    else:
        raise ValueError(f"unknown profile {profile!r}")

    def exact(x, t):
        return np.sin(k * (np.asarray(x, dtype=float) - x_left)) * g(t)

    def source(x, t):
        s = np.sin(k * (np.asarray(x, dtype=float) - x_left))
        return s * (dg(t) + (nu**2 * k**2 + a1) * g(t) + a2 * g(t - tau))

    return ProblemSpec(
        nu=nu, a1=a1, a2=a2, tau=tau, T=T, x_left=x_left, x_right=x_right,
        source=source, history=exact, exact=exact,
    )
