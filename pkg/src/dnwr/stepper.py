"""Backward-Euler stepping of the delayed reaction-diffusion operator on one strip.

Each step solves

    (1/dt + a1) u^{m+1} - nu^2 D_xx u^{m+1} = u^m / dt - a2 u^{m+1-k} + f(., t_{m+1})

with the 3-point second difference ``D_xx``. A Dirichlet end pins the end
value; a Neumann end prescribes the +x derivative through a ghost node,
which keeps the system tridiagonal.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import ShapeMismatchError, SingularSystemError, TooFewNodesError
from .model import FluxTrace, InterfaceTrace, SubdomainField

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


@dataclass(frozen=True)
class EndCondition:
    """Boundary data at one end of a subdomain, for every time level."""

    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in (DIRICHLET, NEUMANN):
            raise ValueError(f"unknown end condition kind {self.kind!r}")
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def dirichlet(cls, trace) -> "EndCondition":
        values = trace.values if isinstance(trace, InterfaceTrace) else trace
        return cls(DIRICHLET, values)

    @classmethod
    def neumann(cls, flux) -> "EndCondition":
        values = flux.values if isinstance(flux, FluxTrace) else flux
        return cls(NEUMANN, values)

    @property
    def is_dirichlet(self) -> bool:
        return self.kind == DIRICHLET


class DelayBuffer:
    """Last ``k + 1`` computed levels plus the sampled history on [-tau, 0]."""

    def __init__(self, history, delay_steps):
        # history rows are levels -k .. -1
        self.history = np.asarray(history, dtype=float)
        self.delay_steps = delay_steps
        self._ring = deque(maxlen=delay_steps + 1)
        self._newest = -1

    def push(self, level_values):
        self._ring.append(np.asarray(level_values))
        self._newest += 1

    def lookup(self, m):
        if m < 0:
            if m < -self.delay_steps:
                raise IndexError(f"level {m} is older than the history segment")
            return self.history[self.delay_steps + m]
        age = self._newest - m
        if age < 0 or age >= len(self._ring):
            raise IndexError(f"level {m} is not held in the delay buffer")
        return self._ring[len(self._ring) - 1 - age]


def assemble_step_matrix(spec, grid, n, left_kind, right_kind):
    """Banded (3, n) storage of the step matrix, in ``solve_banded`` layout."""
    if n < 2:
        raise TooFewNodesError(f"a subdomain needs at least 2 nodes, got {n}")
    r = spec.nu**2 / grid.dx**2
    diag = np.full(n, 1.0 / grid.dt + spec.a1 + 2.0 * r)
    upper = np.full(n - 1, -r)
    lower = np.full(n - 1, -r)
    if left_kind == DIRICHLET:
        diag[0], upper[0] = 1.0, 0.0
    else:
        upper[0] = -2.0 * r
    if right_kind == DIRICHLET:
        diag[-1], lower[-1] = 1.0, 0.0
    else:
        lower[-1] = -2.0 * r
    if np.any(diag == 0.0):
        raise SingularSystemError("zero pivot in the step matrix")
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return ab


def step_rhs(spec, grid, left, right, current, delayed, source_next, m):
    """Right-hand side for the step from level ``m`` to ``m + 1``."""
    rhs = current / grid.dt - spec.a2 * delayed + source_next
    g = 2.0 * spec.nu**2 / grid.dx
    if left.is_dirichlet:
        rhs[0] = left.values[m + 1]
    else:
        rhs[0] -= g * left.values[m + 1]
    if right.is_dirichlet:
        rhs[-1] = right.values[m + 1]
    else:
        rhs[-1] += g * right.values[m + 1]
    return rhs


def _solve(ab, rhs):
    try:
        return solve_banded((1, 1), ab, rhs, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc


def step_subdomain(spec, grid, left, right, current, delayed, source_next, m):
    """Advance one subdomain from level ``m`` to level ``m + 1``.

    Parameters
    ----------
    left, right : EndCondition
        Boundary data; ``values[m + 1]`` is used.
    current : array
        Solution at level ``m``.
    delayed : array
        Solution at time ``t_{m+1} - tau``.
    source_next : array
        ``f(x, t_{m+1})`` at the local nodes.
    """
    current = np.asarray(current, dtype=float)
    n = current.shape[0]
    for name, arr in (("delayed", delayed), ("source_next", source_next)):
        if np.shape(arr) != (n,):
            raise ShapeMismatchError(f"{name} has shape {np.shape(arr)}, expected ({n},)")
    ab = assemble_step_matrix(spec, grid, n, left.kind, right.kind)
    rhs = step_rhs(spec, grid, left, right, current, np.asarray(delayed, float),
                   np.asarray(source_next, float), m)
    return _solve(ab, rhs)


def _local_x(grid, decomp, subdomain_index):
    return grid.x[decomp.local_slice(subdomain_index)]


def solve_subdomain(spec, grid, decomp, subdomain_index, left, right, mode="full"):
    """March one subdomain over the whole time window.

    In ``mode="error"`` the source and history are forced to zero.
    """
    if mode == "error":
        spec = spec.as_error_equation()
    elif mode != "full":
        raise ValueError(f"mode must be 'error' or 'full', got {mode!r}")
    M, k = grid.num_steps, grid.delay_steps
    for side, bc in (("left", left), ("right", right)):
        if bc.values.shape != (M + 1,):
            raise ShapeMismatchError(
                f"{side} end condition has {bc.values.shape[0]} levels, expected {M + 1}"
            )
    x = _local_x(grid, decomp, subdomain_index)
    n = x.shape[0]
    t = grid.t

    history = np.array([spec.history(x, -j * grid.dt) for j in range(k, 0, -1)])
    history = history.reshape(k, n)
    values = np.empty((M + 1, n))
    values[0] = spec.history(x, 0.0)

    ab = assemble_step_matrix(spec, grid, n, left.kind, right.kind)
    buf = DelayBuffer(history, k)
    buf.push(values[0])
    for m in range(M):
        delayed = buf.lookup(m + 1 - k)
        src = np.broadcast_to(spec.source(x, t[m + 1]), (n,))
        rhs = step_rhs(spec, grid, left, right, values[m], delayed, src, m)
        values[m + 1] = _solve(ab, rhs)
        buf.push(values[m + 1])
    return SubdomainField(subdomain_index, x, values, history)


def extract_dirichlet_trace(field, side, interface_index=None):
    """End-node values of ``field`` at every level."""
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    col = 0 if side == "left" else -1
    if interface_index is None:
        interface_index = _default_interface(field, side)
    return InterfaceTrace(interface_index, field.values[:, col].copy())


def _default_interface(field, side):
    return field.subdomain_index - 1 if side == "left" else field.subdomain_index


def extract_flux(field, side, dx=None, interface_index=None):
    """+x derivative at an end node by the one-sided 3-point formula.

    Exact for quadratics in x. ``dx`` defaults to the spacing of the first
    two nodes of ``field``.
    """
    if dx is None:
        dx = field.x[1] - field.x[0]
    if field.local_nodes < 3:
        raise TooFewNodesError(f"3-point flux needs 3 nodes, subdomain has {field.local_nodes}")
    u = field.values
    if side == "left":
        g = (-3.0 * u[:, 0] + 4.0 * u[:, 1] - u[:, 2]) / (2.0 * dx)
    elif side == "right":
        g = (3.0 * u[:, -1] - 4.0 * u[:, -2] + u[:, -3]) / (2.0 * dx)
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if interface_index is None:
        interface_index = _default_interface(field, side)
    return FluxTrace(interface_index, g)


def transmission_flux(spec, grid, field, side, mode="full", interface_index=None):
    """+x derivative at an end node, consistent with the ghost-node Neumann rows.

    The flux is recovered from the half-cell balance next to the end node,
    so a neighbour that imposes it through a ghost node reproduces the
    undecomposed discrete equation at the interface exactly. Level 0 has no
    balance and falls back to the 3-point formula.
    """
    if mode == "error":
        spec = spec.as_error_equation()
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    u = field.values
    M, k, dt, dx = grid.num_steps, grid.delay_steps, grid.dt, grid.dx
    col, inner = (0, 1) if side == "left" else (-1, -2)
    xe = field.x[col]
    t = grid.t
    up = u[:, col]
    delayed = np.array([field.level(m - k)[col] for m in range(1, M + 1)])
    src = np.array([float(np.ravel(spec.source(np.array([xe]), t[m]))[0]) for m in range(1, M + 1)])
    residual = (1.0 / dt + spec.a1) * up[1:] - up[:-1] / dt + spec.a2 * delayed - src
    half = dx * residual / (2.0 * spec.nu**2)
    g = np.empty(M + 1)
    if side == "left":
        g[1:] = (u[1:, inner] - up[1:]) / dx - half
    else:
        g[1:] = (up[1:] - u[1:, inner]) / dx + half
    g[0] = extract_flux(field, side, dx).values[0] if field.local_nodes >= 3 else 0.0
    if interface_index is None:
        interface_index = _default_interface(field, side)
    return FluxTrace(interface_index, g)
