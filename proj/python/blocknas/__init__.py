"""Python bindings for the blocknas C++ core.

Structured results (predictions, search results, reports) come back as
plain dicts.
"""

import json

from . import _core
from ._core import DeltaTable, Error, Oracle, SearchSpace, kendall_tau, spearman

__version__ = _core.__version__

__all__ = [
    "DeltaTable",
    "Error",
    "Oracle",
    "SearchSpace",
    "deployment_plan",
    "estimate",
    "evaluate",
    "fit_delta_law",
    "kendall_tau",
    "predict",
    "search",
    "spearman",
    "validate",
]


def estimate(space, oracle, mode="single", samples=1, seed=0, without_replacement=False):
    return _core.estimate(space, oracle, mode, samples, seed, without_replacement)


def evaluate(oracle, config):
    return json.loads(oracle.evaluate(config))


def predict(table, space, config, device, flops_scaling=True):
    return json.loads(_core.predict(table, space, config, device, flops_scaling))


def search(space, table, device, lat_budget=None, eng_budget=None, unconstrained=False,
           time_limit=10.0, solver="auto", objective="eq6"):
    return json.loads(_core.search(space, table, device, lat_budget, eng_budget, unconstrained,
                                   time_limit, solver, objective))


def validate(space, oracle, table, device, samples=1000, seed=0, flops_scaling=True):
    return json.loads(_core.validate(space, oracle, table, device, samples, seed, flops_scaling))


def fit_delta_law(flops, delta):
    return json.loads(_core.fit_delta_law(list(flops), list(delta)))


def deployment_plan(space, table, device, k=5):
    return json.loads(_core.deployment_plan(space, table, device, k))
