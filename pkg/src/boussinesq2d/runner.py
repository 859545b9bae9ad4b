"""Time-integration driver shared by the CLI and the verification experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from boussinesq2d.diagnostics import BudgetLedger, record
from boussinesq2d.errors import BlowUpError
from boussinesq2d.model import cfl_dt, step


@dataclass
class RunResult:
    state: object
    history: list
    ledger: BudgetLedger
    steps: int = 0
    states: list = field(default_factory=list)


def fixed_step_plan(t0, t_final, dt):
    """Number of steps and uniform step size reaching ``t_final`` exactly.

    The step is ``(t_final - t0) / n`` with ``n = ceil((t_final - t0)/dt)``, so a
    run split at any multiple of ``dt`` replays the same step sequence.
    """
    remaining = t_final - t0
    if remaining <= 1e-12 * max(1.0, abs(t_final)):
        return 0, 0.0
    n = max(1, math.ceil(remaining / dt - 1e-9))
    return n, remaining / n


def simulate(state, visc, F, cfg, t_final, cadence=10, lp=(4,), ledger=None,
             on_record=None, on_step=None, keep_states=False, record_initial=True):
    """Integrate ``state`` to ``t_final``.

    Records are taken at the start, every ``cadence`` steps and at the end. The
    budget ledger is updated after every step.

    Raises:
        BlowUpError: carrying ``last_record`` and the partial ``history``.
    """
    history = []
    states = [state] if keep_states else []
    if ledger is None:
        ledger = BudgetLedger(state, F)
    last = None

    def take(s):
        nonlocal last
        rec = record(s, visc, F, lp, ledger.snapshot(), ledger.work)
        history.append(rec)
        last = rec
        if on_record is not None:
            on_record(rec, s)

    if record_initial:
        take(state)

    fixed = cfg.dt != "auto"
    if fixed:
        n_steps, dt = fixed_step_plan(state.t, t_final, float(cfg.dt))
    t0 = state.t
    i = 0
    try:
        while True:
            if fixed:
                if i >= n_steps:
                    break
                h = dt
            else:
                remaining = t_final - state.t
                if remaining <= 1e-12 * max(1.0, abs(t_final)):
                    break
                h = min(cfl_dt(state, cfg), remaining)
            new = step(state, visc, F, cfg, dt=h)
            i += 1
            if fixed:
                new = type(new)(new.u, new.theta, t_final if i == n_steps else t0 + i * dt)
            state = new
            ledger.update(state)
            if keep_states:
                states.append(state)
            if on_step is not None:
                on_step(state, i)
            done = (fixed and i >= n_steps) or (not fixed and t_final - state.t <= 1e-12 * max(1.0, abs(t_final)))
            if i % cadence == 0 or done:
                take(state)
    except BlowUpError as exc:
        err = BlowUpError(exc.t, last, f"blow-up detected at t={exc.t:.6g}")
        err.history = history
        raise err from None
    return RunResult(state, history, ledger, i, states)
