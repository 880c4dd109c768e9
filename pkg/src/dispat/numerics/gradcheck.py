"""Central finite-difference verification of analytic gradients."""
from dataclasses import dataclass

import numpy as np

from .tensor import no_grad


@dataclass
class GradCheckReport:
    errors: dict
    tolerance: float

    @property
    def passed(self):
        return all(e < self.tolerance for e in self.errors.values())

    @property
    def worst(self):
        return max(self.errors.items(), key=lambda kv: kv[1]) if self.errors else (None, 0.0)

    def to_dict(self):
        return {"passed": self.passed, "tolerance": self.tolerance,
                "max_rel_error": dict(sorted(self.errors.items()))}


def relative_error(analytic, numeric):
    """``|a - n| / (|a| + |n|)``; two exact zeros count as agreement."""
    diff = np.abs(analytic - numeric)
    denom = np.abs(analytic) + np.abs(numeric)
    return np.where(denom > 0, diff / np.where(denom > 0, denom, 1.0), 0.0)


def grad_check(loss_fn, params, tolerance=1e-4, h=1e-5):
    """Compare backprop gradients of ``loss_fn()`` with central differences.

    ``loss_fn`` must be deterministic (no dropout) and return a scalar tensor
    built from ``params``. Returns the max relative error per parameter.
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    loss_fn().backward()
    analytic = {p.name: p.grad.copy() for p in params}
    for p in params:
        p.zero_grad()

    errors = {}
    with no_grad():
        for p in params:
            flat = p.data.reshape(-1)
            numeric = np.empty_like(flat)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                fp = float(loss_fn().data)
                flat[i] = orig - h
                fm = float(loss_fn().data)
                flat[i] = orig
                numeric[i] = (fp - fm) / (2.0 * h)
            err = relative_error(analytic[p.name].reshape(-1), numeric)
            errors[p.name] = float(err.max()) if err.size else 0.0
    return GradCheckReport(errors=errors, tolerance=tolerance)
