"""Thin wrapper around scipy's adaptive integrators with error reporting."""

from __future__ import annotations

from scipy.integrate import solve_ivp


class IntegrationError(RuntimeError):
    """Raised when the ODE solver aborts (e.g. step-size underflow)."""


def integrate_adaptive(rhs, t_span, y0, *, method="DOP853", rtol, atol,
                       t_eval=None, events=None, jac=None, args=None,
                       max_step=None):
    """Run ``solve_ivp`` and raise :class:`IntegrationError` on failure.

    ``DOP853`` (embedded adaptive Runge-Kutta with dense output) is the
    default; stiff paths pass ``method="BDF"`` together with a sparse ``jac``.
    """
    kwargs = {}
    if jac is not None:
        kwargs["jac"] = jac
    if max_step is not None:
        kwargs["max_step"] = max_step
    sol = solve_ivp(rhs, t_span, y0, method=method, rtol=rtol, atol=atol,
                    t_eval=t_eval, events=events, args=args, **kwargs)
    if sol.status < 0:
        raise IntegrationError(
            f"integrator aborted on t_span={t_span}: {sol.message}")
    return sol
