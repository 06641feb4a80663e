"""Decentralized projected Riemannian gradient methods on Stiefel manifolds."""

from __future__ import annotations

from typing import Any, Mapping

try:
    from . import _decman as _core
except ImportError:  # development build: the module sits next to this package
    import _decman as _core

Error = _core.Error
InvalidInput = _core.InvalidInput
SingularityError = _core.SingularityError
FormatError = _core.FormatError
ConfigError = _core.ConfigError
TubeViolation = _core.TubeViolation

ManifoldSpec = _core.ManifoldSpec
Problem = _core.Problem
gen_pca = _core.gen_pca
gen_gevp = _core.gen_gevp
gen_lrmc = _core.gen_lrmc
mixing_matrix = _core.mixing_matrix
consensus_radius_t = _core.consensus_radius_t
subspace_distance = _core.subspace_distance
check_projection_lipschitz = _core.check_projection_lipschitz
config_keys = _core.config_keys


def _config(values: Mapping[str, Any]) -> dict[str, str]:
    out = {}
    for key, value in values.items():
        if isinstance(value, bool):
            out[key] = "true" if value else "false"
        elif isinstance(value, (list, tuple)):
            out[key] = ",".join(repr(float(v)) for v in value)
        elif isinstance(value, float):
            out[key] = repr(value)
        else:
            out[key] = str(value)
    return out


def run(config: Mapping[str, Any] | None = None, workers: int = 1) -> dict:
    """Run one experiment in memory. Keys are the dotted config keys."""
    return _core.run(_config(config or {}), workers)


def run_experiment(config: Mapping[str, Any], workers: int = 1, no_clobber: bool = False) -> str:
    return _core.run_experiment(_config(config), workers, no_clobber)


def cli(*args: str) -> tuple[int, str, str]:
    return _core.cli(list(args))


__all__ = [
    "ConfigError", "Error", "FormatError", "InvalidInput", "ManifoldSpec", "Problem",
    "SingularityError", "TubeViolation", "check_projection_lipschitz", "cli", "config_keys",
    "consensus_radius_t", "gen_gevp", "gen_lrmc", "gen_pca", "mixing_matrix", "run",
    "run_experiment", "subspace_distance",
]
