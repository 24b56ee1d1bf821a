"""Problem definition, space-time grid, strip decomposition and data containers.

Everything in this module is immutable once constructed; arrays are stored
read-only so that subdomain solves can share them across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ArityMismatchError,
    MisalignedBreakpointError,
    NonCommensurateError,
    TooThinSubdomainError,
)

_REL_TOL = 1e-12
_RATIO_TOL = 1e-12


def _zero_source(x, t):
    return np.zeros_like(np.asarray(x, dtype=float) + t)


def _zero_history(x, t):
    return np.zeros_like(np.asarray(x, dtype=float) + t)


def _zero_bc(t):
    return 0.0


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ProblemSpec:
    """Continuous delayed reaction-diffusion problem on an interval.

    Solves ``w_t - nu**2 w_xx + a1 w + a2 w(x, t - tau) = f`` on
    ``(x_left, x_right) x (0, T)`` with history ``w0`` on ``[-tau, 0]`` and
    Dirichlet data ``outer_bc`` at the two ends.

    ``source(x, t)`` and ``history(x, t)`` must accept a numpy array of
    positions and a scalar time.
    """

    nu: float = 1.0
    a1: float = 0.0
    a2: float = 0.028
    tau: float = 3.0
    T: float = 10.0
    x_left: float = 0.0
    x_right: float = 5.0
    source: Callable = _zero_source
    history: Callable = _zero_history
    outer_bc: tuple = (_zero_bc, _zero_bc)
    error_mode: bool = False
    # closed-form solution, when known
    exact: Callable | None = None

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not self.x_left < self.x_right:
            raise ValueError(f"empty domain ({self.x_left}, {self.x_right})")
        if len(self.outer_bc) != 2:
            raise ValueError("outer_bc must be a (left, right) pair")
        if self.error_mode:
            object.__setattr__(self, "source", _zero_source)
            object.__setattr__(self, "history", _zero_history)
            object.__setattr__(self, "outer_bc", (_zero_bc, _zero_bc))
            object.__setattr__(self, "exact", _zero_history)

    @classmethod
    def error_equation(cls, **kwargs) -> "ProblemSpec":
        """Homogeneous problem satisfied by the iteration error."""
        for key in ("source", "history", "outer_bc", "exact"):
            kwargs.pop(key, None)
        return cls(error_mode=True, **kwargs)

    def as_error_equation(self) -> "ProblemSpec":
        if self.error_mode:
            return self
        return ProblemSpec.error_equation(
            nu=self.nu, a1=self.a1, a2=self.a2, tau=self.tau, T=self.T,
            x_left=self.x_left, x_right=self.x_right,
        )

    @property
    def length(self) -> float:
        return self.x_right - self.x_left


@dataclass(frozen=True)
class SpaceTimeGrid:
    x_left: float
    dx: float
    dt: float
    num_nodes: int
    num_steps: int
    delay_steps: int

    @property
    def x(self) -> np.ndarray:
        return self.x_left + self.dx * np.arange(self.num_nodes)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.num_steps + 1)

    @property
    def T(self) -> float:
        return self.num_steps * self.dt

    @property
    def tau(self) -> float:
        return self.delay_steps * self.dt


def _integral_ratio(num, den, name):
    r = num / den
    n = int(round(r))
    if n < 1 or abs(r - n) > _RATIO_TOL * max(1.0, abs(r)):
        raise NonCommensurateError(f"{name} = {r!r} is not a positive integer")
    return n


def build_grid(spec: ProblemSpec, dx: float, dt: float) -> SpaceTimeGrid:
    """Uniform grid for ``spec``; the delay must be a whole number of steps."""
    if not (dx > 0 and dt > 0):
        raise ValueError(f"dx and dt must be positive, got dx={dx}, dt={dt}")
    cells = _integral_ratio(spec.length, dx, "domain/dx")
    steps = _integral_ratio(spec.T, dt, "T/dt")
    delay = _integral_ratio(spec.tau, dt, "tau/dt")
    return SpaceTimeGrid(
        x_left=spec.x_left, dx=dx, dt=dt,
        num_nodes=cells + 1, num_steps=steps, delay_steps=delay,
    )


@dataclass(frozen=True)
class Decomposition:
    """Strip partition of the grid; breakpoints sit on grid nodes.

    Subdomain ``i`` (0-based) owns global nodes ``bounds[i][0] ..
    bounds[i][1]`` inclusive; neighbouring subdomains share the interface
    node. Interface ``i`` separates subdomains ``i`` and ``i + 1``.
    """

    breakpoints: np.ndarray
    nodes: tuple

    @property
    def num_subdomains(self) -> int:
        return len(self.nodes) - 1

    @property
    def num_interfaces(self) -> int:
        return len(self.nodes) - 2

    @property
    def interface_nodes(self) -> tuple:
        return self.nodes[1:-1]

    def bounds(self, i: int) -> tuple:
        return self.nodes[i], self.nodes[i + 1]

    def local_slice(self, i: int) -> slice:
        lo, hi = self.bounds(i)
        return slice(lo, hi + 1)

    def num_local_nodes(self, i: int) -> int:
        lo, hi = self.bounds(i)
        return hi - lo + 1


def partition(grid: SpaceTimeGrid, sizes: Sequence[float]) -> Decomposition:
    """Split the grid into strips of the given widths."""
    sizes = np.asarray(sizes, dtype=float)
    if sizes.ndim != 1 or len(sizes) < 1 or np.any(sizes <= 0):
        raise ValueError(f"sizes must be a non-empty list of positive widths, got {sizes}")
    length = (grid.num_nodes - 1) * grid.dx
    if abs(sizes.sum() - length) > _REL_TOL * 10 * length:
        raise ValueError(f"sizes sum to {sizes.sum()!r}, domain length is {length!r}")
    breakpoints = grid.x_left + np.concatenate(([0.0], np.cumsum(sizes)))
    breakpoints[-1] = grid.x_left + length
    nodes = []
    for xb in breakpoints:
        l = int(round((xb - grid.x_left) / grid.dx))
        xl = grid.x_left + l * grid.dx
        slack = _REL_TOL * grid.dx + 8 * np.finfo(float).eps * max(abs(xb), abs(xl))
        if abs(xb - xl) > slack:
            raise MisalignedBreakpointError(
                f"breakpoint {xb!r} does not lie on a grid node (dx={grid.dx!r})"
            )
        nodes.append(l)
    for i in range(len(sizes)):
        cells = nodes[i + 1] - nodes[i]
        if cells < 2:
            raise TooThinSubdomainError(
                f"subdomain {i} spans {cells} cell(s); at least 2 are required"
            )
    return Decomposition(breakpoints=_frozen(breakpoints), nodes=tuple(nodes))


def equal_partition(grid: SpaceTimeGrid, count: int) -> Decomposition:
    length = (grid.num_nodes - 1) * grid.dx
    return partition(grid, [length / count] * count)


@dataclass(frozen=True)
class InterfaceTrace:
    """Dirichlet values ``h_i(t_m)`` at one interface node, m = 0..M."""

    interface_index: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))


@dataclass(frozen=True)
class FluxTrace:
    """+x derivative at one interface node, m = 0..M."""

    interface_index: int
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if not np.all(np.isfinite(v)):
            raise ValueError(f"non-finite flux at interface {self.interface_index}")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SubdomainField:
    """Space-time solution on one subdomain.

    ``values[m, j]`` is the solution at level ``m`` and local node ``j``;
    ``history[k + m, j]`` for ``m = -k .. -1`` holds the sampled history.
    """

    subdomain_index: int
    x: np.ndarray
    values: np.ndarray
    history: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x))
        object.__setattr__(self, "values", _frozen(self.values))
        object.__setattr__(self, "history", _frozen(self.history))

    @property
    def local_nodes(self) -> int:
        return self.values.shape[1]

    def level(self, m: int) -> np.ndarray:
        """Solution at level ``m``; negative levels come from the history."""
        if m >= 0:
            return self.values[m]
        return self.history[len(self.history) + m]


@dataclass
class ConvergenceRecord:
    """Per-iteration interface norms of one DNWR run.

    ``iterations[r]`` is the iteration number of row ``r`` of
    ``interface_norms`` (shape ``(rows, S - 1)``).
    """

    tolerance: float
    iterations: list = field(default_factory=list)
    interface_norms: list = field(default_factory=list)
    stop_reason: str = ""

    def append(self, k: int, norms) -> None:
        self.iterations.append(int(k))
        self.interface_norms.append(np.array(norms, dtype=float))

    @property
    def aggregate(self) -> np.ndarray:
        return np.array([n.max() if n.size else 0.0 for n in self.interface_norms])

    @property
    def iteration_count(self) -> int:
        return self.iterations[-1] if self.iterations else 0

    @property
    def converged(self) -> bool:
        return self.stop_reason == "tolerance"

    def iterations_to_tolerance(self):
        """First iteration ``k >= 1`` meeting the tolerance, or None."""
        for k, agg in zip(self.iterations, self.aggregate):
            if k >= 1 and agg <= self.tolerance:
                return k
        return None

    def norm_at(self, k: int) -> float:
        return float(self.aggregate[self.iterations.index(k)])


# -- interface initializers -------------------------------------------------

def _piecewise(t):
    t = np.asarray(t, dtype=float)
    return np.where(t <= 0.4, t, np.where(t <= 0.8, t**2, np.sin(t)))


INITIALIZERS = {
    "t2": lambda t: np.asarray(t, dtype=float) ** 2,
    "t": lambda t: np.asarray(t, dtype=float) * 1.0,
    "sin": lambda t: np.sin(np.asarray(t, dtype=float)),
    "piecewise": _piecewise,
    "zero": lambda t: np.zeros_like(np.asarray(t, dtype=float)),
}


def resolve_initializer(init) -> Callable:
    if callable(init):
        return init
    try:
        return INITIALIZERS[init]
    except KeyError:
        raise KeyError(
            f"unknown initializer {init!r}; choose from {sorted(INITIALIZERS)}"
        ) from None


def initialize_interfaces(grid: SpaceTimeGrid, decomp: Decomposition, initializers) -> list:
    """Sample one initial guess per interior interface at t_0 .. t_M.

    ``initializers`` is a callable or registered name (broadcast to every
    interface) or a sequence with exactly one entry per interface.
    """
    if callable(initializers) or isinstance(initializers, str):
        initializers = [initializers] * decomp.num_interfaces
    initializers = list(initializers)
    if len(initializers) == 1 and decomp.num_interfaces > 1:
        initializers = initializers * decomp.num_interfaces
    if len(initializers) != decomp.num_interfaces:
        raise ArityMismatchError(
            f"{len(initializers)} initializers for {decomp.num_interfaces} interfaces"
        )
    t = grid.t
    traces = []
    for i, init in enumerate(initializers):
        fn = resolve_initializer(init)
        values = np.broadcast_to(np.asarray(fn(t), dtype=float), t.shape)
        traces.append(InterfaceTrace(i, values))
    return traces
