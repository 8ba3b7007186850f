"""Additive and multiplicative renormalization and the running of renormalized parameters.

Models are specified by their renormalized value at the reference
subtraction point ``q_s = 0``. Bare parameters are derived quantities and
depend on the regulator scale (see :func:`running_bare`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

from .divergence import sdd
from .errors import InsufficientOrder, PerturbativityWarning
from .expr import Expression, parse
from .quad import DEFAULT_TOL
from .regfin import (
    DEFAULT_INTEGRAND,
    Regulator,
    SubtractionSpec,
    finite_part_direct,
    regularized_value,
)

PERTURBATIVE_COUPLING = 0.3
PERTURBATIVE_SHIFT = 0.5


def _default_integrand() -> Expression:
    return parse(DEFAULT_INTEGRAND)


def _default_bindings() -> dict[str, float]:
    return {"m": 1.0}


def _check_log_divergent(e: Expression) -> None:
    # a single parameter only absorbs a q-independent subtraction constant
    omega = sdd(e)
    if omega > 0:
        raise InsufficientOrder(omega, 0)


@dataclass(frozen=True)
class AdditiveModel:
    """``E = mu_0 + I(q)``, parameterized by ``mu_R = mu_R(q_s=0)``."""

    mu_R: float
    integrand: Expression = field(default_factory=_default_integrand)
    bindings: Mapping[str, float] = field(default_factory=_default_bindings)

    def __post_init__(self):
        if not math.isfinite(self.mu_R):
            raise ValueError(f"mu_R must be finite, got {self.mu_R}")
        _check_log_divergent(self.integrand)


@dataclass(frozen=True)
class MultiplicativeModel:
    """``E' = g_0 (1 + g_0 I(q))``, parameterized by ``g_R = g_R(q_s=0)``."""

    g_R: float
    integrand: Expression = field(default_factory=_default_integrand)
    bindings: Mapping[str, float] = field(default_factory=_default_bindings)

    def __post_init__(self):
        if not math.isfinite(self.g_R):
            raise ValueError(f"g_R must be finite, got {self.g_R}")
        _check_log_divergent(self.integrand)
        if abs(self.g_R) >= PERTURBATIVE_COUPLING:
            warnings.warn(
                f"|g_R| = {abs(self.g_R)} is outside the perturbative regime; "
                f"first-order running is unreliable",
                PerturbativityWarning,
                stacklevel=3,
            )


Model = Union[AdditiveModel, MultiplicativeModel]


def finite_part(model: Model, q: float, q_s: float, tol: float = DEFAULT_TOL) -> float:
    """``I~(q, q_s)``, the finite part with subtraction point ``q_s``."""
    return finite_part_direct(model.integrand, SubtractionSpec(0, q_s), q, model.bindings, tol).value


def delta(e: Expression, b: Mapping[str, float], q_s1: float, q_s2: float,
          tol: float = DEFAULT_TOL, order: int = 0) -> float:
    """Finite renormalization ``lim [I_Reg(q_s1) - I_Reg(q_s2)]``.

    This is the finite part at ``q = q_s1`` with subtraction point ``q_s2``,
    so ``delta(e, b, 0, q_s)`` is the shift induced by moving the
    subtraction point from 0 to ``q_s``.
    """
    return finite_part_direct(e, SubtractionSpec(order, q_s2), q_s1, b, tol).value


def running_mu(model: AdditiveModel, q_s: float, tol: float = DEFAULT_TOL) -> float:
    """``mu_R(q_s) = mu_R(0) - delta(0, q_s)``; the free additive constant is fixed to 0."""
    if q_s == 0:
        return model.mu_R
    return model.mu_R - delta(model.integrand, model.bindings, 0.0, q_s, tol)


def running_g(model: MultiplicativeModel, q_s: float, tol: float = DEFAULT_TOL) -> float:
    """``g_R(q_s) = g_R(0) [1 - g_R(0) delta(0, q_s)]`` to first order; constant fixed to 0."""
    if q_s == 0 or model.g_R == 0:
        return model.g_R
    return _first_order_running(model.g_R, delta(model.integrand, model.bindings, 0.0, q_s, tol), q_s)


def _first_order_running(g: float, d: float, q_s: float) -> float:
    if abs(g * d) > PERTURBATIVE_SHIFT:
        warnings.warn(
            f"|g_R * delta| = {abs(g * d):.3g} at q_s={q_s}; first-order running is unreliable",
            PerturbativityWarning,
            stacklevel=3,
        )
    return g * (1.0 - g * d)


def observable_additive(model: AdditiveModel, q: float, q_s: float = 0.0,
                        tol: float = DEFAULT_TOL) -> float:
    """``E = mu_R(q_s) + I~(q, q_s)``; independent of ``q_s``."""
    return running_mu(model, q_s, tol) + finite_part(model, q, q_s, tol)


def observable_multiplicative(model: MultiplicativeModel, q: float, q_s: float = 0.0,
                              tol: float = DEFAULT_TOL) -> float:
    """``E' = g(q_s) [1 + g(q_s) I~(q, q_s)]`` with ``g(q_s) = running_g(model, q_s)``."""
    g = running_g(model, q_s, tol)
    if g == 0:
        return 0.0
    return g * (1.0 + g * finite_part(model, q, q_s, tol))


def bare_coupling(g_R: float, i_reg: float) -> float:
    """Exact root of ``g_R = g_0 (1 + g_0 I_Reg)`` continuous with ``g_0 = g_R`` at ``I_Reg = 0``."""
    disc = 1.0 + 4.0 * g_R * i_reg
    if disc < 0:
        raise ValueError(f"no real bare coupling for g_R={g_R}, I_Reg={i_reg}")
    return 2.0 * g_R / (1.0 + math.sqrt(disc))


def observable_multiplicative_unexpanded(model: MultiplicativeModel, q: float, reg: Regulator,
                                         tol: float = DEFAULT_TOL) -> float:
    """``E' = g_R + g_0^2 I~(q)`` with ``g_0`` from the exact inversion at the given regulator.

    Differs from :func:`observable_multiplicative` at ``O(g_R^3)``.
    """
    i0 = regularized_value(model.integrand, reg, 0.0, model.bindings, tol).value
    g0 = bare_coupling(model.g_R, i0)
    return model.g_R + g0 * g0 * finite_part(model, q, 0.0, tol)


def running_bare(model: Model, reg: Regulator, q_s: float = 0.0, tol: float = DEFAULT_TOL) -> float:
    """Bare parameter at regulator ``reg`` that yields the model's renormalized value at ``q_s``.

    Additive: ``mu_0 = mu_R(q_s) - I_Reg(q_s)``. Multiplicative, first order
    in the coupling: ``g_0 = g_R(q_s) [1 - g_R(q_s) I_Reg(q_s)]``. Both
    diverge as the regulator is removed.
    """
    i_reg = regularized_value(model.integrand, reg, q_s, model.bindings, tol).value
    if isinstance(model, AdditiveModel):
        return running_mu(model, q_s, tol) - i_reg
    g = running_g(model, q_s, tol)
    return g * (1.0 - g * i_reg)


def _observable(model: Model, q: float, q_s: float, tol: float) -> float:
    if isinstance(model, AdditiveModel):
        return observable_additive(model, q, q_s, tol)
    return observable_multiplicative(model, q, q_s, tol)


def _check_grid(grid: Sequence[float], min_len: int = 1) -> list[float]:
    grid = [float(x) for x in grid]
    if len(grid) < min_len:
        raise ValueError(f"grid needs at least {min_len} points, got {len(grid)}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    if grid and grid[0] < 0:
        raise ValueError("subtraction points must be >= 0")
    return grid


def rg_residual(model: Model, q: float, q_s_grid: Sequence[float], tol: float = DEFAULT_TOL) -> float:
    """Largest central-difference ``|dE/dq_s|`` over the interior of the grid.

    Zero up to quadrature noise for additive models; ``O(g_R^3)`` for
    multiplicative ones, where first-order running only cancels the
    ``O(g_R^2)`` dependence.
    """
    grid = _check_grid(q_s_grid, 3)
    values = [_observable(model, q, x, tol) for x in grid]
    return max(
        abs((values[i + 1] - values[i - 1]) / (grid[i + 1] - grid[i - 1]))
        for i in range(1, len(grid) - 1)
    )


@dataclass(frozen=True)
class RGFlowRow:
    q_s: float
    delta: float
    mu_R: float
    g_R: float


@dataclass(frozen=True)
class RGFlowTable:
    rows: tuple[RGFlowRow, ...]

    def __post_init__(self):
        qs = [r.q_s for r in self.rows]
        if any(b <= a for a, b in zip(qs, qs[1:])):
            raise ValueError("q_s must be strictly increasing")
        for r in self.rows:
            if not all(math.isfinite(v) for v in (r.q_s, r.delta, r.mu_R, r.g_R)):
                raise ValueError(f"non-finite entry in row {r}")

    def column(self, name: str) -> list[float]:
        return [getattr(r, name) for r in self.rows]


def rg_flow(additive: AdditiveModel, multiplicative: MultiplicativeModel,
            q_s_grid: Sequence[float], tol: float = DEFAULT_TOL) -> RGFlowTable:
    """Tabulate ``delta(0, q_s)``, ``mu_R(q_s)`` and ``g_R(q_s)`` over the grid."""
    if (additive.integrand != multiplicative.integrand
            or dict(additive.bindings) != dict(multiplicative.bindings)):
        raise ValueError("both models must share the integrand and bindings")
    rows = []
    for q_s in _check_grid(q_s_grid):
        d = 0.0 if q_s == 0 else delta(additive.integrand, additive.bindings, 0.0, q_s, tol)
        rows.append(RGFlowRow(
            q_s,
            d,
            additive.mu_R - d,
            _first_order_running(multiplicative.g_R, d, q_s),
        ))
    return RGFlowTable(tuple(rows))
