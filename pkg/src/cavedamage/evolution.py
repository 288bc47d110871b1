"""Quasi-static damage evolution by alternate minimization."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    A_MIN,
    BoundaryConditions,
    Constraints,
    DamageFunctional,
    active_dofs,
    apply_dirichlet,
    assemble_elasticity,
    body_load,
    elastic_potential,
    element_damage,
    equilibrium_residual,
)
from .constitutive import DamageModel, MaterialParams
from .mesh import CavitySpec, Mesh, carve_cavity
from .solvers import BoxConstraints, KktReport, minimize_box, solve_spd

log = logging.getLogger(__name__)


class EvolutionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances of the nested solves.

    ``am_tol`` bounds the sup-norm damage change between alternate
    minimization sweeps; ``kkt_tol`` bounds the damage-step KKT residual of
    the gradient scaled by ``w1`` times the lumped nodal area.
    """

    am_tol: float = 1e-3
    am_max_iter: int = 200
    kkt_tol: float = 1e-6
    box_max_iter: int = 100
    lin_tol: float = 1e-10
    a_min: float = A_MIN
    best_effort: bool = False


@dataclass(frozen=True, eq=False)
class State:
    """Fields at one loading step; arrays cover every mesh node.

    Nodes outside the active region hold zeros and are ignored by every solve.
    """

    t: int
    u: np.ndarray
    alpha: np.ndarray
    alpha_prev: np.ndarray
    mesh: Mesh


@dataclass(frozen=True)
class EnergyBreakdown:
    elastic: float
    local_dissipation: float
    gradient_dissipation: float
    external_work: float

    @property
    def total(self) -> float:
        return self.elastic + self.local_dissipation + self.gradient_dissipation - self.external_work


@dataclass(frozen=True)
class HalfSteps:
    """Objectives before and after both half-steps of one sweep.

    ``elastic_*`` is ``u.K.u/2 - b.u`` at the damage of the previous sweep;
    ``damage_*`` is the damage functional at the new displacement.
    """

    p: int
    elastic_before: float
    elastic_after: float
    damage_before: float
    damage_after: float
    error: float
    kkt: KktReport


@dataclass
class AMResult:
    state: State
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    kkt: KktReport | None = None
    # objective of the closing elastic solve at the converged damage
    final_elastic: tuple[float, float] | None = None
    equilibrium_residual: float = 0.0


def _constraints(bc, mesh: Mesh) -> Constraints:
    if isinstance(bc, Constraints):
        return bc
    return (bc or BoundaryConditions()).constraints(mesh)


def elastic_solve(mesh: Mesh, alpha, model, mat: MaterialParams, cons: Constraints,
                  settings: SolverSettings = SolverSettings()):
    """Equilibrium displacement at fixed damage; returns ``(u, K, b)``."""
    K, b = assemble_elasticity(mesh, alpha, model, mat, settings.a_min)
    red = apply_dirichlet(K, b, cons, active_dofs(mesh))
    x = solve_spd(red.K, red.b, settings.lin_tol)
    return red.expand(x), K, b


def alternate_minimization(state: State, model, mat: MaterialParams, bc=None,
                           settings: SolverSettings = SolverSettings()) -> AMResult:
    """Alternate elastic and damage minimizations until the damage settles.

    Each sweep solves equilibrium at the current damage, then minimizes the
    damage functional at that displacement over ``alpha_prev <= alpha <= 1``
    starting from the current damage. Stops when the sup-norm change of the
    damage is at most ``settings.am_tol``; a closing elastic solve makes the
    returned displacement consistent with the returned damage.
    """
    model = DamageModel.parse(model)
    mesh = state.mesh
    cons = _constraints(bc, mesh)
    alpha = np.array(state.alpha, dtype=float)
    lower = np.asarray(state.alpha_prev, dtype=float)
    if np.any(alpha < lower) or np.any((alpha < 0) | (alpha > 1)):
        raise ValueError("initial damage is infeasible")
    u = np.array(state.u, dtype=float)
    u[cons.dofs] = cons.values

    trace = []
    converged = False
    report = None
    p = 0
    for p in range(1, settings.am_max_iter + 1):
        K, b = assemble_elasticity(mesh, alpha, model, mat, settings.a_min)
        red = apply_dirichlet(K, b, cons, active_dofs(mesh))
        el_before = elastic_potential(K, b, u)
        u = red.expand(solve_spd(red.K, red.b, settings.lin_tol))
        el_after = elastic_potential(K, b, u)

        F = DamageFunctional(mesh, u, model, mat, lower)
        a0 = F.restrict(alpha)
        dm_before = F.value(a0)
        a1, report = minimize_box(F, BoxConstraints(F.lower, F.upper), a0, settings.kkt_tol,
                                  settings.box_max_iter, F.scale)
        dm_after = F.value(a1)
        err = float(np.max(np.abs(a1 - a0), initial=0.0))
        alpha = F.extend(a1)
        trace.append(HalfSteps(p, el_before, el_after, dm_before, dm_after, err, report))
        log.debug("t=%d sweep %d: |dalpha|=%.3e kkt=%.2e (%d its)", state.t, p, err, report.residual,
                  report.iterations)
        if not report.converged:
            log.warning("t=%d sweep %d: damage step not converged (kkt %.3e)", state.t, p, report.residual)
        if err <= settings.am_tol:
            converged = True
            break

    K, b = assemble_elasticity(mesh, alpha, model, mat, settings.a_min)
    red = apply_dirichlet(K, b, cons, active_dofs(mesh))
    closing_before = elastic_potential(K, b, u)
    u = red.expand(solve_spd(red.K, red.b, settings.lin_tol))
    closing_after = elastic_potential(K, b, u)
    residual = float(np.linalg.norm(red.K @ u[red.free] - red.b))

    out = State(state.t, u, alpha, lower, mesh)
    ok = converged and report is not None and report.converged
    return AMResult(out, p, ok, trace, report, (closing_before, closing_after), residual)


def initial_state(mesh: Mesh, model, mat: MaterialParams, bc=None,
                  settings: SolverSettings = SolverSettings()) -> State:
    """Undamaged state at ``t = 0`` with the gravity equilibrium of the intact body."""
    zero = np.zeros(mesh.n_nodes)
    u, _, _ = elastic_solve(mesh, zero, model, mat, _constraints(bc, mesh), settings)
    return State(0, u, zero.copy(), zero.copy(), mesh)


def advance_step(state: State, model, mat: MaterialParams, cavity: CavitySpec, bc=None,
                 settings: SolverSettings = SolverSettings()) -> AMResult:
    """Carve the cavity of step ``t + 1`` and re-equilibrate from the current state.

    The current damage becomes the irreversibility bound. Nodes swallowed by
    the cavity are dropped (set to zero).
    """
    t = state.t + 1
    mesh = carve_cavity(state.mesh, t, cavity)
    keep = mesh.active_nodes
    alpha_prev = np.where(keep, state.alpha, 0.0)
    u = np.where(np.repeat(keep, 2), state.u, 0.0)
    result = alternate_minimization(State(t, u, alpha_prev.copy(), alpha_prev, mesh), model, mat, bc, settings)
    check_irreversibility(alpha_prev, result.state.alpha, keep)
    return result


def check_irreversibility(before, after, keep):
    if np.any(after[keep] < before[keep]):
        raise EvolutionError("damage decreased on a surviving node")
    if np.any((after < 0.0) | (after > 1.0)):
        raise EvolutionError("damage left [0, 1]")


def energy_report(state: State, model, mat: MaterialParams) -> EnergyBreakdown:
    """Energy split of a state over its active region."""
    F = DamageFunctional(state.mesh, state.u, model, mat)
    parts = F.parts(F.restrict(state.alpha))
    work = float(body_load(state.mesh, mat) @ state.u)
    return EnergyBreakdown(parts["elastic"], parts["local"], parts["gradient"], work)


def total_energy(state: State, model, mat: MaterialParams) -> float:
    """Damage functional plus external-work potential, evaluated directly."""
    F = DamageFunctional(state.mesh, state.u, model, mat)
    return F.value(F.restrict(state.alpha)) - float(body_load(state.mesh, mat) @ state.u)


@dataclass
class StepRecord:
    state: State
    energy: EnergyBreakdown
    am: AMResult

    @property
    def t(self) -> int:
        return self.state.t

    def max_damage(self) -> float:
        return float(np.max(self.state.alpha[self.state.mesh.active_nodes], initial=0.0))

    def damaged_area_fraction(self, threshold: float = 1e-2) -> float:
        """Share of the active area whose element-mean damage exceeds ``threshold``."""
        mesh = self.state.mesh
        abar = element_damage(mesh, self.state.alpha)
        hit = mesh.active & (abar > threshold)
        return float(mesh.area[hit].sum() / mesh.active_area)


def run(mesh: Mesh, model, mat: MaterialParams, cavity: CavitySpec, T: int, bc=None,
        settings: SolverSettings = SolverSettings(), callback=None) -> list[StepRecord]:
    """Evolve steps ``t = 0 .. T``; ``callback(record)`` is invoked after each step."""
    model = DamageModel.parse(model)
    if T < 0:
        raise ValueError("final step must be non-negative")
    mesh0 = carve_cavity(mesh, 0, cavity)
    state = initial_state(mesh0, model, mat, bc, settings)
    result = alternate_minimization(state, model, mat, bc, settings)
    records = []
    while True:
        if not result.converged:
            msg = f"step t={result.state.t} did not converge after {result.iterations} sweeps"
            if not settings.best_effort:
                raise EvolutionError(msg)
            log.warning("%s; continuing (best effort)", msg)
        rec = StepRecord(result.state, energy_report(result.state, model, mat), result)
        records.append(rec)
        log.info("t=%d: %d sweeps, max alpha %.4f, total energy %.6e", rec.t, result.iterations,
                 rec.max_damage(), rec.energy.total)
        if callback is not None:
            callback(rec)
        if rec.t >= T:
            return records
        result = advance_step(result.state, model, mat, cavity, bc, settings)


def residual_of(state: State, model, mat: MaterialParams, bc=None, a_min: float = A_MIN) -> float:
    """Equilibrium residual of a state under its boundary conditions."""
    return equilibrium_residual(state.mesh, state.u, state.alpha, model, mat, _constraints(bc, state.mesh), a_min)



def run_evolution(config, callback=None) -> list[StepRecord]:
    """Full evolution ``t = 0 .. config.T`` described by a :class:`~cavedamage.config.Config`."""
    return run(config.build_mesh(), config.damage_model(), config.material(), config.cavity(), config.T,
               config.boundary_conditions(), config.solver_settings(), callback)


def step_from(state: State, config) -> AMResult:
    """Next step after ``state`` under ``config`` (which must describe the same mesh)."""
    return advance_step(state, config.damage_model(), config.material(), config.cavity(),
                        config.boundary_conditions(), config.solver_settings())
