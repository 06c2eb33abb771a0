"""Named experiment presets with per-algorithm parameter tables.

Each preset fixes the network scale, noise level, and field, and carries
one parameter row (step size, slab width, coherence threshold, kernel
bandwidths) per supported algorithm.  Desk-scale iteration/trial counts
are the default; :func:`full_scale` switches to the long benchmark runs.
The non-cooperative variant reuses the diffusion row (it is the same
update without the combine stage), and the centralized reference scales
that row's step size by the node count when no dedicated value exists.
"""

from __future__ import annotations

from dataclasses import replace

from .harness import SimConfig

PRESETS = ("multi-gauss", "altitude", "time-varying")

_BASE = {
    "multi-gauss": dict(
        field="multi-gauss", n_nodes=60, radius=0.3, noise_var=0.3,
        iterations=2000, trials=20,
    ),
    "altitude": dict(
        field="altitude", n_nodes=200, radius=0.2, noise_var=0.3,
        iterations=2000, trials=20,
    ),
    "time-varying": dict(
        field="time-varying", n_nodes=80, radius=0.3, noise_var=0.3,
        iterations=2000, trials=20,
    ),
}

# mu, epsilon, tau, bandwidths per (preset, algorithm); r_rff where it applies
_ROWS = {
    "multi-gauss": {
        "dchypass": dict(mu=0.2, epsilon=0.0, tau=0.95, bandwidths=(0.1, 0.3)),
        "dmklms": dict(mu=0.1, epsilon=0.0, tau=0.95, bandwidths=(0.1, 0.3)),
        "fatc-klms": dict(mu=0.07, epsilon=0.0, tau=0.9, bandwidths=(0.2,)),
        "rff-dklms": dict(mu=0.1, epsilon=0.0, tau=0.95, bandwidths=(0.2,), r_rff=100),
        "central": dict(mu=3.3e-3, epsilon=0.0, tau=0.95, bandwidths=(0.1, 0.3)),
        "local": dict(mu=0.2, epsilon=0.0, tau=0.95, bandwidths=(0.1, 0.3)),
    },
    "altitude": {
        "dchypass": dict(mu=0.5, epsilon=0.0, tau=0.85, bandwidths=(0.06, 0.1)),
        "dmklms": dict(mu=0.05, epsilon=0.0, tau=0.85, bandwidths=(0.06, 0.1)),
        "fatc-klms": dict(mu=0.05, epsilon=0.0, tau=0.78, bandwidths=(0.08,)),
        "rff-dklms": dict(mu=0.2, epsilon=0.0, tau=0.85, bandwidths=(0.08,), r_rff=200),
        "central": dict(mu=0.5 / 200, epsilon=0.0, tau=0.85, bandwidths=(0.06, 0.1)),
        "local": dict(mu=0.5, epsilon=0.0, tau=0.85, bandwidths=(0.06, 0.1)),
    },
    "time-varying": {
        "dchypass": dict(mu=0.5, epsilon=0.0, tau=0.95, bandwidths=(0.1, 0.3)),
        "dmklms": dict(mu=0.1, epsilon=0.0, tau=0.95, bandwidths=(0.1, 0.3)),
        "central": dict(mu=0.5 / 80, epsilon=0.0, tau=0.95, bandwidths=(0.1, 0.3)),
        "local": dict(mu=0.5, epsilon=0.0, tau=0.95, bandwidths=(0.1, 0.3)),
    },
}


def preset(name: str, algorithm: str = "dchypass") -> SimConfig:
    """Expand a named preset for one algorithm into a full config."""
    if name not in _BASE:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")
    rows = _ROWS[name]
    if algorithm not in rows:
        raise ValueError(
            f"preset {name!r} has no parameter row for {algorithm!r}; "
            f"supported: {tuple(rows)}"
        )
    return SimConfig(algorithm=algorithm, **_BASE[name], **rows[algorithm])


def full_scale(config: SimConfig) -> SimConfig:
    """Switch a desk-scale config to the long benchmark runs."""
    return replace(config, iterations=15000, trials=200)
