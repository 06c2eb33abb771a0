"""Experiment orchestration: trials, NMSE curves, sweeps, and cost tables.

A trial draws a connected network, builds the shared dictionary from the
node positions, and iterates the chosen algorithm with fresh noisy
measurements each step.  Node positions are fixed, so per-node kernel
features and their metric solves are precomputed once and the iteration
loop runs vectorized across nodes.  Every trial owns an RNG stream keyed
by (seed, trial index); aggregation averages the per-trial error
numerators in fixed trial order, which keeps results bit-identical
regardless of how many worker threads execute the trials.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dictionary import Dictionary, build_coherence, select_top_s
from .fields import breathing_field, load_grid, synthetic_altitude_field, two_bump_field
from .kernels import GramFactorizationError, KernelBank, build_gram
from .learners import RffModel
from .network import Graph, metropolis_hastings, random_geometric

logger = logging.getLogger("diffkern.harness")

ALGORITHMS = ("dchypass", "dmklms", "fatc-klms", "rff-dklms", "central", "local")
_SLAB_FAMILY = ("dchypass", "central", "local")
FIELDS = ("multi-gauss", "time-varying", "altitude")

_INT_KEYS = ("n_nodes", "iterations", "trials", "seed", "nmse_resolution", "nmse_every", "r_rff", "selective_s")
_FLOAT_KEYS = ("radius", "tau", "gamma", "mu", "epsilon", "noise_var")
_STR_KEYS = ("algorithm", "field", "grid_path")
_BOOL_KEYS = ("identity_mixing",)


@dataclass(frozen=True)
class SimConfig:
    """Everything one experiment needs; round-trips through flat key=value text."""

    algorithm: str = "dchypass"
    n_nodes: int = 60
    radius: float = 0.3
    field: str = "multi-gauss"
    grid_path: str | None = None
    bandwidths: tuple[float, ...] = (0.1, 0.3)
    tau: float = 0.95
    gamma: float = 0.0
    mu: float = 0.2
    epsilon: float = 0.0
    noise_var: float = 0.3
    iterations: int = 2000
    trials: int = 20
    seed: int = 0
    nmse_resolution: int = 50
    nmse_every: int = 1
    r_rff: int = 100
    selective_s: int = 0
    identity_mixing: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.field not in FIELDS:
            raise ValueError(f"unknown field {self.field!r}; choose from {FIELDS}")
        if self.n_nodes < 2:
            raise ValueError("n_nodes must be at least 2")
        if not 0.0 < self.radius <= np.sqrt(2.0) + 1e-12:
            raise ValueError("radius must lie in (0, sqrt(2)]")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.algorithm in _SLAB_FAMILY and not self.mu < 2.0:
            raise ValueError("projection-family step sizes must stay below 2")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.noise_var < 0:
            raise ValueError("noise_var must be nonnegative")
        if self.iterations < 1 or self.trials < 1:
            raise ValueError("iterations and trials must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.nmse_resolution < 2:
            raise ValueError("nmse_resolution must be at least 2")
        if self.nmse_every < 1:
            raise ValueError("nmse_every must be at least 1")
        if self.r_rff < 1:
            raise ValueError("r_rff must be at least 1")
        if self.selective_s < 0:
            raise ValueError("selective_s must be nonnegative (0 disables)")
        if self.selective_s > 0 and self.algorithm not in ("dchypass", "local"):
            raise ValueError("the selective update applies to dchypass/local only")
        if len(self.bandwidths) < 1 or any(b <= 0 for b in self.bandwidths):
            raise ValueError("bandwidths must be a nonempty list of positive values")
        if self.algorithm in ("fatc-klms", "rff-dklms") and len(self.bandwidths) != 1:
            raise ValueError(f"{self.algorithm} is single-kernel; give exactly one bandwidth")

    def to_flat(self) -> str:
        """Render as one ``key=value`` line per field, in declaration order."""
        lines = []
        for key in (*_STR_KEYS, "bandwidths", *_INT_KEYS, *_FLOAT_KEYS, *_BOOL_KEYS):
            value = getattr(self, key)
            if key == "bandwidths":
                value = ",".join(f"{b:g}" for b in value)
            elif key == "grid_path":
                value = value or ""
            elif isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = f"{value:g}"
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"

    def with_overrides(self, mapping: dict[str, str]) -> "SimConfig":
        """Apply textual ``key=value`` overrides, last-wins per key."""
        parsed = {key: _parse_value(key, value) for key, value in mapping.items()}
        return replace(self, **parsed)

    @classmethod
    def from_flat(cls, text: str) -> "SimConfig":
        mapping = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            mapping[key.strip()] = value.strip()
        return cls().with_overrides(mapping)

    @classmethod
    def from_file(cls, path) -> "SimConfig":
        with open(path) as fh:
            return cls.from_flat(fh.read())


def _parse_value(key: str, value: str):
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _BOOL_KEYS:
            lowered = value.lower()
            if lowered not in ("true", "false"):
                raise ValueError(f"expected true/false, got {value!r}")
            return lowered == "true"
        if key == "bandwidths":
            return tuple(float(v) for v in value.split(",") if v.strip())
        if key == "grid_path":
            return value or None
        if key in _STR_KEYS:
            return value
    except ValueError as exc:
        raise ValueError(f"bad value for {key!r}: {exc}") from None
    raise ValueError(f"unknown config key {key!r}")


@dataclass
class NmseCurve:
    """Recorded error trajectory of one trial or a trial average."""

    iterations: np.ndarray  # recorded iteration numbers, 1-based
    numerators: np.ndarray  # node-averaged squared error summed over the grid
    denominators: np.ndarray  # field energy over the grid per recorded iteration
    updates: np.ndarray  # per-node cumulative update counts
    wall_time: float
    final_weights: np.ndarray  # (J, n) coefficient snapshot after the last iteration
    dictionary: Dictionary | None
    graph: Graph
    rff_model: RffModel | None = None
    trials: int = 1

    @property
    def nmse(self) -> np.ndarray:
        return self.numerators / self.denominators

    @property
    def nmse_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.nmse)


def unit_grid(resolution: int) -> np.ndarray:
    """Regular grid over the unit square, first coordinate varying fastest."""
    lin = np.linspace(0.0, 1.0, resolution)
    x1, x2 = np.meshgrid(lin, lin)
    return np.column_stack([x1.ravel(), x2.ravel()])


def resolve_field(config: SimConfig):
    """Instantiate the field model a config names."""
    if config.field == "multi-gauss":
        return two_bump_field()
    if config.field == "time-varying":
        return breathing_field()
    if config.grid_path:
        return load_grid(config.grid_path)
    return synthetic_altitude_field(seed=config.seed)


def kernel_matrix(bank: KernelBank, centers: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Stacked kernel features for many points at once, one row per point."""
    sq = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    return np.concatenate(
        [np.exp(-sq / (2.0 * b**2)) for b in bank.bandwidths], axis=1
    )


def _weights_matrix(states) -> np.ndarray:
    if isinstance(states, np.ndarray):
        return states if states.ndim == 2 else states[None, :]
    try:
        return np.array([s.w for s in states])
    except AttributeError:
        return np.atleast_2d(np.asarray(states, dtype=float))


def nmse(states, field_model, bank: KernelBank, dictionary: Dictionary, k: int = 0,
         resolution: int = 50) -> float:
    """Grid-approximated reconstruction error, normalized by field energy.

    Mean over nodes of ``sum_grid (field - estimate_j)^2 / sum_grid field^2``.
    ``states`` may be a (J, n) weight matrix, a single weight vector, or a
    list of node states.
    """
    weights = _weights_matrix(states)
    pts = unit_grid(resolution)
    psi = np.asarray(field_model.evaluate(pts, k), dtype=float)
    denom = float(np.sum(psi * psi))
    if denom == 0.0:
        raise ValueError("field is identically zero on the evaluation grid")
    phi = kernel_matrix(bank, dictionary.centers, pts)
    diff = psi[None, :] - weights @ phi.T
    # per-node normalization first: the zero estimator scores exactly 1
    per_node = np.sum(diff * diff, axis=1)
    return float(np.mean(per_node / denom))


def trial_network(config: SimConfig, trial: int = 0):
    """Draw the network and shared dictionary of one trial.

    Returns ``(graph, bank, dictionary, rng)`` with the generator already
    advanced past the placement draws, so :func:`run_trial` continues the
    same stream; callers that only need the network ignore it.
    """
    rng = np.random.default_rng([config.seed, trial])
    graph = random_geometric(config.n_nodes, config.radius, rng)
    bank = KernelBank.from_bandwidths(config.bandwidths)
    dictionary = build_coherence(bank, graph.positions, config.tau)
    return graph, bank, dictionary, rng


def _build_gram_with_fallback(bank, dictionary, gamma):
    try:
        return build_gram(bank, dictionary, gamma)
    except GramFactorizationError:
        if gamma >= 0.01:
            raise
        logger.warning(
            "Gram factorization failed at gamma=%g (r=%d); retrying with gamma=0.01",
            gamma,
            dictionary.size,
        )
        return build_gram(bank, dictionary, 0.01)


def run_trial(config: SimConfig, trial: int = 0) -> NmseCurve:
    """Execute one simulation trial, deterministic in (config.seed, trial).

    Draws the network, builds the shared dictionary from node positions
    (in node index order), precomputes each node's kernel features and
    metric solves, then iterates the configured algorithm with a fresh
    measurement per node per step.  Records the NMSE numerator every
    ``nmse_every`` iterations and always at the last one.
    """
    start = time.perf_counter()
    field_model = resolve_field(config)
    graph, bank, dictionary, rng = trial_network(config, trial)
    positions = graph.positions
    n_nodes = config.n_nodes

    if config.algorithm == "local" or config.identity_mixing:
        mixing = None  # identity combine: skip the matmul entirely
    else:
        mixing = metropolis_hastings(graph)

    grid_pts = unit_grid(config.nmse_resolution)
    time_varying = config.field == "time-varying"

    rff_model = None
    if config.algorithm == "rff-dklms":
        rff_model = RffModel.initialize(
            bank.bandwidths[0], config.r_rff, n_nodes, positions.shape[1], rng
        )
        node_feats = rff_model.features(positions)
        grid_feats = rff_model.features(grid_pts)
        weights = np.zeros((n_nodes, config.r_rff))
        dictionary = None
    else:
        gram = _build_gram_with_fallback(bank, dictionary, config.gamma)
        node_feats = kernel_matrix(bank, dictionary.centers, positions)
        grid_feats = kernel_matrix(bank, dictionary.centers, grid_pts)
        if config.algorithm == "central":
            weights = np.zeros((1, gram.size))
        else:
            weights = np.zeros((n_nodes, gram.size))

    if config.algorithm in _SLAB_FAMILY:
        if config.selective_s > 0:
            r = dictionary.size
            sel = np.array(
                [select_top_s(bank, dictionary, p, config.selective_s)
                 for p in positions]
            )
            flat_idx = np.concatenate(
                [q * r + sel for q in range(bank.num_kernels)], axis=1
            )
            directions = np.empty_like(flat_idx, dtype=float)
            for j in range(n_nodes):
                sub_metric = gram.metric[np.ix_(flat_idx[j], flat_idx[j])]
                directions[j] = np.linalg.solve(sub_metric, node_feats[j, flat_idx[j]])
            denom = np.einsum(
                "jn,jn->j", np.take_along_axis(node_feats, flat_idx, axis=1), directions
            )
        else:
            flat_idx = None
            directions = gram.solve(node_feats.T).T
            denom = np.einsum("jn,jn->j", node_feats, directions)
        if not np.all(denom > 0.0):
            raise ValueError(
                "projection direction vanished for at least one node: inputs are "
                "numerically orthogonal to every dictionary center"
            )

    psi_nodes = None if time_varying else np.asarray(field_model.evaluate(positions, 0))
    psi_grid = None if time_varying else np.asarray(field_model.evaluate(grid_pts, 0))
    if psi_grid is not None and float(np.sum(psi_grid**2)) == 0.0:
        raise ValueError("field is identically zero on the evaluation grid")

    noise_std = np.sqrt(config.noise_var)
    counters = np.zeros(n_nodes, dtype=np.int64)
    rec_iters, rec_num, rec_den = [], [], []
    mu, eps = config.mu, config.epsilon
    mix_weights = mixing.weights if mixing is not None else None
    algo = config.algorithm

    for k in range(config.iterations):
        truth = (
            np.asarray(field_model.evaluate(positions, k)) if time_varying else psi_nodes
        )
        y = truth + noise_std * rng.standard_normal(n_nodes)

        if algo in ("dchypass", "local"):
            out = np.einsum("jn,jn->j", weights, node_feats)
            err = out - y
            shift = np.where(err > eps, err - eps, np.where(err < -eps, err + eps, 0.0))
            active = shift != 0.0
            scale = (mu * shift / denom)[:, None]
            if flat_idx is None:
                weights = weights - scale * directions
            else:
                weights = weights.copy()
                np.subtract.at(weights, (np.arange(n_nodes)[:, None], flat_idx),
                               scale * directions)
            counters += active
            if mix_weights is not None:
                weights = mix_weights @ weights
        elif algo == "central":
            out = node_feats @ weights[0]
            err = out - y
            shift = np.where(err > eps, err - eps, np.where(err < -eps, err + eps, 0.0))
            counters += shift != 0.0
            weights = weights - mu * (directions.T @ (shift / denom))[None, :]
        else:  # dmklms, fatc-klms, rff-dklms share the LMS form
            out = np.einsum("jn,jn->j", weights, node_feats)
            err = y - out
            counters += err != 0.0
            weights = weights + mu * err[:, None] * node_feats
            if mix_weights is not None:
                weights = mix_weights @ weights

        t = k + 1
        if t % config.nmse_every == 0 or t == config.iterations:
            psi = (
                np.asarray(field_model.evaluate(grid_pts, k)) if time_varying else psi_grid
            )
            den = float(np.sum(psi**2))
            if den == 0.0:
                raise ValueError("field is identically zero on the evaluation grid")
            diff = psi[None, :] - weights @ grid_feats.T
            rec_iters.append(t)
            rec_num.append(float(np.einsum("jn,jn->j", diff, diff).mean()))
            rec_den.append(den)

    if rff_model is not None:
        rff_model = replace(rff_model, weights=weights)
    return NmseCurve(
        iterations=np.asarray(rec_iters, dtype=np.int64),
        numerators=np.asarray(rec_num),
        denominators=np.asarray(rec_den),
        updates=counters.astype(float),
        wall_time=time.perf_counter() - start,
        final_weights=weights,
        dictionary=dictionary,
        graph=graph,
        rff_model=rff_model,
    )


def thread_count() -> int:
    """Worker threads for trial execution; capped by DIFFKERN_THREADS."""
    env = os.environ.get("DIFFKERN_THREADS", "").strip()
    if env:
        value = int(env)
        if value < 1:
            raise ValueError(f"DIFFKERN_THREADS must be positive, got {value}")
        return value
    return min(4, os.cpu_count() or 1)


def average_trials(config: SimConfig) -> NmseCurve:
    """Run all configured trials and average the error numerators.

    The per-trial numerators are averaged before normalization (the
    denominator is the deterministic field energy, identical across
    trials), matching a trial-expectation taken inside the numerator.
    Per-node update counts are averaged too.  Trials execute on a thread
    pool but are aggregated in trial-index order, so the result does not
    depend on the degree of parallelism.
    """
    workers = min(thread_count(), config.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            curves = list(pool.map(lambda t: run_trial(config, t), range(config.trials)))
    else:
        curves = [run_trial(config, t) for t in range(config.trials)]
    first = curves[0]
    return NmseCurve(
        iterations=first.iterations,
        numerators=np.mean([c.numerators for c in curves], axis=0),
        denominators=first.denominators,
        updates=np.mean([c.updates for c in curves], axis=0),
        wall_time=sum(c.wall_time for c in curves),
        final_weights=first.final_weights,
        dictionary=first.dictionary,
        graph=first.graph,
        rff_model=first.rff_model,
        trials=config.trials,
    )


def steady_state_nmse(curve: NmseCurve, window: int = 200) -> float:
    """Mean linear NMSE over the last ``window`` recorded iterations."""
    values = curve.nmse
    return float(values[-min(window, len(values)):].mean())


@dataclass(frozen=True)
class SweepPoint:
    epsilon: float
    mu: float
    mean_updates: float  # per node, averaged over trials
    steady_nmse: float

    @property
    def steady_nmse_db(self) -> float:
        return float(10.0 * np.log10(self.steady_nmse)) if self.steady_nmse > 0 else -np.inf


def hyperslab_sweep(config: SimConfig, epsilons, mus=None) -> list[SweepPoint]:
    """Trade-off curve: per-node update counts and steady error vs slab width.

    ``mus`` optionally supplies one step size per slab width (the
    benchmark configuration pairs the zero width with a smaller step);
    defaults to the config's step size everywhere.
    """
    epsilons = list(epsilons)
    if any(e < 0 for e in epsilons):
        raise ValueError("slab widths must be nonnegative")
    if mus is None:
        mus = [config.mu] * len(epsilons)
    mus = list(mus)
    if len(mus) != len(epsilons):
        raise ValueError("need exactly one step size per slab width")
    points = []
    for eps, mu in zip(epsilons, mus):
        curve = average_trials(replace(config, epsilon=eps, mu=mu))
        points.append(
            SweepPoint(
                epsilon=float(eps),
                mu=float(mu),
                mean_updates=float(curve.updates.mean()),
                steady_nmse=steady_state_nmse(curve),
            )
        )
    return points


@dataclass(frozen=True)
class ComplexityRow:
    algorithm: str
    multiplications: int
    transmitted_scalars: int


def complexity_table(
    n_nodes: int,
    n_edges: int,
    dict_size: int,
    n_kernels: int,
    input_dim: int,
    select_size: int,
    n_features: int,
) -> list[ComplexityRow]:
    """Per-iteration multiplication and transmission counts for each algorithm.

    Pure integer arithmetic; matrix inversion of size p is costed as p^3.
    The ADMM-based multikernel consensus scheme appears as an analytic
    row only (it is never simulated here).
    """
    J, E, r, Q, L, s, m = (
        int(n_nodes),
        int(n_edges),
        int(dict_size),
        int(n_kernels),
        int(input_dim),
        int(select_size),
        int(n_features),
    )
    if min(J, E, r, Q, L, s, m) <= 0:
        raise ValueError("all complexity parameters must be positive")
    qr = Q * r
    return [
        ComplexityRow("dchypass", (2 * E + J * (L + 4)) * qr + (Q * r * r + 2) * J, J * qr),
        ComplexityRow(
            "dchypass-selective",
            ((L + 1) * qr + s**3 + s * s + 2) * J + (2 * E + 3 * J) * s,
            J * qr,
        ),
        ComplexityRow("dmklms", (2 * E + J * (L + 4)) * qr + J, J * qr),
        ComplexityRow("fatc-klms", (2 * E + J * (L + 4)) * r + J, J * r),
        ComplexityRow(
            "mkdice",
            (6 * E + 4 * J + L + 2) * qr + J * (1 + qr * qr + qr**3),
            2 * J * qr + 2 * E * qr,
        ),
        ComplexityRow("rff-dklms", J * (4 * m + 1) + (2 * E + J) * m, J * m),
    ]


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_nmse_csv(curve: NmseCurve, path) -> None:
    """Columns: iter, nmse_linear, nmse_db."""
    lin = curve.nmse
    db = curve.nmse_db
    with open(path, "w") as fh:
        fh.write("iter,nmse_linear,nmse_db\n")
        for it, v, d in zip(curve.iterations, lin, db):
            fh.write(f"{it},{_fmt(v)},{_fmt(d)}\n")


def write_updates_csv(curve: NmseCurve, path) -> None:
    """Columns: node, count (trial-averaged counts may be fractional)."""
    with open(path, "w") as fh:
        fh.write("node,count\n")
        for j, c in enumerate(curve.updates):
            fh.write(f"{j},{_fmt(c)}\n")


def field_grid_table(curve: NmseCurve, config: SimConfig):
    """True and reconstructed field values over the NMSE grid.

    The reconstruction uses node 0's final coefficients from the
    representative trial (after convergence all nodes agree); returns
    ``(points, true_values, estimates)``.
    """
    field_model = resolve_field(config)
    pts = unit_grid(config.nmse_resolution)
    true_vals = np.asarray(field_model.evaluate(pts, config.iterations - 1))
    if curve.rff_model is not None:
        feats = curve.rff_model.features(pts)
    else:
        bank = KernelBank.from_bandwidths(config.bandwidths)
        feats = kernel_matrix(bank, curve.dictionary.centers, pts)
    estimates = feats @ curve.final_weights[0]
    return pts, true_vals, estimates


def write_field_grid_csv(path, points, true_values, estimates) -> None:
    """Columns: x1, x2, true, estimate."""
    with open(path, "w") as fh:
        fh.write("x1,x2,true,estimate\n")
        for (x1, x2), t, e in zip(points, true_values, estimates):
            fh.write(f"{_fmt(x1)},{_fmt(x2)},{_fmt(t)},{_fmt(e)}\n")


def write_sweep_csv(points, path) -> None:
    """Columns: epsilon, mean_updates, steady_nmse_db."""
    with open(path, "w") as fh:
        fh.write("epsilon,mean_updates,steady_nmse_db\n")
        for p in points:
            fh.write(f"{_fmt(p.epsilon)},{_fmt(p.mean_updates)},{_fmt(p.steady_nmse_db)}\n")


def write_complexity_csv(rows, path) -> None:
    """Columns: algorithm, multiplications, transmitted_scalars."""
    with open(path, "w") as fh:
        fh.write("algorithm,multiplications,transmitted_scalars\n")
        for row in rows:
            fh.write(f"{row.algorithm},{row.multiplications},{row.transmitted_scalars}\n")
