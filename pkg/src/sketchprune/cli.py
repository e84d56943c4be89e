"""Command-line front end.

Four subcommands, all writing CSV atomically (temp file then rename):

* verify     -- runs the numerical verification suites, one row per check
* pipeline   -- prune/train/measure cells, one row per (seed, method, s)
* histogram  -- selected-vs-all weight-magnitude histogram for one method
* ntk-demo   -- kernel-regime bound demo on a tiny dense network

Every invocation is deterministic for a fixed flag set: wall_time_ms is
written as 0 unless --timing is passed, and all randomness derives from
--seed (or the SKETCHPRUNE_SEED environment variable when the flag and
config file are silent).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from .bounds import (
    enumerate_exact_error,
    exact_expected_error,
    lemma1_exact_error,
    lemma2_bound,
    lemma3_bound,
    mc_error_over_data,
    mc_error_over_masks,
)
from .core import DataMatrix, RngStream, row_norms
from .experiments import (
    METHODS,
    PipelineConfig,
    gen_normal_X,
    gen_sparse_X,
    run_prune_pipeline,
)
from .ntk import (
    TinyMLP,
    analytic_jacobian,
    finite_difference_jacobian,
    mask_probabilities,
    take_snapshot,
    theorem2_report,
    train_linearized_gd,
)
from .scores import (
    scores_to_probabilities,
    select_randomized,
    select_topk,
    snip_scores_l1,
    synflow_scores,
)
from .sketch import optimal_probabilities, uniform_probabilities

__all__ = ["main", "ResultRow", "RESULT_HEADER", "HISTOGRAM_HEADER", "VERIFY_SUITES"]

RESULT_HEADER = (
    "run_id",
    "seed",
    "d",
    "n",
    "s",
    "method",
    "empirical_error",
    "bound",
    "kind",
    "standard_error",
    "distance",
    "wall_time_ms",
)
HISTOGRAM_HEADER = ("bin_left", "bin_right", "count_selected", "count_all")
VERIFY_SUITES = (
    "lemma1",
    "lemma2",
    "lemma3",
    "theorem1",
    "lemma4",
    "synflow-equiv",
    "snip-equiv",
    "ntk",
)
HISTOGRAM_METHODS = (
    "topk-synflow",
    "randomized-synflow",
    "randomized-snip-sparse",
    "uniform",
)
SEED_ENV_VAR = "SKETCHPRUNE_SEED"


class ConfigError(ValueError):
    """Invalid or inconsistent command-line configuration."""


@dataclasses.dataclass
class ResultRow:
    run_id: str
    seed: int
    d: int
    n: int
    s: int
    method: str
    empirical_error: float
    bound: float
    kind: str
    standard_error: float
    distance: float
    wall_time_ms: float = 0.0
    passed: bool | None = None


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _result_lines(rows: list[ResultRow], include_passed: bool) -> str:
    header = RESULT_HEADER + (("passed",) if include_passed else ())
    lines = [",".join(header)]
    for r in rows:
        fields = [
            r.run_id,
            str(r.seed),
            str(r.d),
            str(r.n),
            str(r.s),
            r.method,
            _fmt(r.empirical_error),
            _fmt(r.bound),
            r.kind,
            _fmt(r.standard_error),
            _fmt(r.distance),
            _fmt(r.wall_time_ms),
        ]
        if include_passed:
            fields.append("true" if r.passed else "false")
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(
        dir=parent, prefix=path.name + ".", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


# ---------------------------------------------------------------------------
# verification suites


def _relative_gap(observed: np.ndarray, expected: np.ndarray) -> float:
    return float(
        np.max(np.abs(observed - expected) / np.maximum(np.abs(expected), 1e-12))
    )


def _concentrated_weights(d: int) -> np.ndarray:
    # geometric magnitude decay keeps the l1/l2 ratio small, the regime
    # where the random-data self-mask bound actually holds
    return (-0.25) ** np.arange(d)


def _flat_pair_at_ratio(d: int, ratio: float, rng: RngStream):
    # constant-magnitude w0: the scale-per-coordinate term of the trained
    # -weights bound is exact there, so the bound is valid for any w_star
    signs = np.where(rng.uniform(d) < 0.5, -1.0, 1.0)
    w0 = signs / math.sqrt(d)
    delta = rng.normal(d)
    delta *= ratio * np.linalg.norm(w0) / np.linalg.norm(delta)
    return w0, w0 + delta


def _suite_lemma1(seed: int, trials: int | None) -> list[ResultRow]:
    mask_trials = trials or 20_000
    rng = RngStream(seed, 101)
    rows = []
    worst = 0.0
    for _ in range(30):
        d = int(rng.integers(2, 7))
        n = int(rng.integers(1, 6))
        s = int(rng.integers(1, 4))
        X = DataMatrix(rng.normal((d, n)))
        w = rng.normal(d)
        closed = lemma1_exact_error(X, w, s)
        enum = enumerate_exact_error(X, w, optimal_probabilities(X, w), s)
        worst = max(worst, abs(enum - closed) / max(closed, 1e-12))
    rows.append(
        ResultRow(
            "lemma1/enumeration", seed, 0, 0, 0, "lemma1",
            worst, 1e-10, "equality", 0.0, math.nan,
            passed=worst <= 1e-10,
        )
    )
    d, n = 32, 16
    for s in (4, 16):
        X = gen_normal_X(d, n, rng)
        w = rng.normal(d)
        exact = lemma1_exact_error(X, w, s)
        rep = mc_error_over_masks(
            X, w, optimal_probabilities(X, w), s, mask_trials, rng, reference=exact
        )
        rows.append(
            ResultRow(
                f"lemma1/mc-s{s}", seed, d, n, s, "lemma1",
                rep.empirical_error, rep.closed_form_or_bound, rep.kind,
                rep.standard_error, math.nan, passed=rep.satisfied(),
            )
        )
    return rows


def _suite_lemma2(seed: int, trials: int | None) -> list[ResultRow]:
    x_trials = trials or 2_000
    rng = RngStream(seed, 102)
    d, n = 64, 32
    w0 = _concentrated_weights(d)
    rows = []
    for s in (8, 32):
        rep = mc_error_over_data(
            w0, w0, s, n, x_trials, rng.substream(s), reference=lemma2_bound(w0, s)
        )
        rows.append(
            ResultRow(
                f"lemma2/self-mask-s{s}", seed, d, n, s, "lemma2",
                rep.empirical_error, rep.closed_form_or_bound, rep.kind,
                rep.standard_error, 0.0, passed=rep.satisfied(),
            )
        )
    return rows


def _suite_lemma3(seed: int, trials: int | None) -> list[ResultRow]:
    del trials
    rng = RngStream(seed, 103)
    worst = 0.0
    bounded = True
    for _ in range(20):
        d = int(rng.integers(2, 7))
        n = int(rng.integers(1, 6))
        s = int(rng.integers(1, 4))
        X = DataMatrix(rng.normal((d, n)))
        w0 = rng.normal(d)
        w_star = rng.normal(d)
        exact, bound = lemma3_bound(X, X, w0, w_star, s)
        enum = enumerate_exact_error(
            X, w_star, optimal_probabilities(X, w0), s
        )
        worst = max(worst, abs(enum - exact) / max(abs(exact), 1e-12))
        bounded = bounded and exact <= bound + 1e-12
    return [
        ResultRow(
            "lemma3/exact-vs-enumeration", seed, 0, 0, 0, "lemma3",
            worst, 1e-10, "equality", 0.0, math.nan, passed=worst <= 1e-10,
        ),
        ResultRow(
            "lemma3/exact-le-bound", seed, 0, 0, 0, "lemma3",
            0.0 if bounded else 1.0, 0.0, "upper-bound", 0.0, math.nan,
            passed=bounded,
        ),
    ]


def _suite_theorem1(seed: int, trials: int | None) -> list[ResultRow]:
    x_trials = trials or 2_000
    rng = RngStream(seed, 104)
    d, n, s = 64, 32, 8
    rows = []
    for ratio in (0.1, 0.5, 1.0):
        w0, w_star = _flat_pair_at_ratio(d, ratio, rng)
        rep = mc_error_over_data(
            w0, w_star, s, n, x_trials, rng.substream(int(ratio * 10))
        )
        distance = float(np.linalg.norm(w_star - w0))
        rows.append(
            ResultRow(
                f"theorem1/ratio-{ratio}", seed, d, n, s, "theorem1",
                rep.empirical_error, rep.closed_form_or_bound, rep.kind,
                rep.standard_error, distance, passed=rep.satisfied(),
            )
        )
    return rows


def _suite_lemma4(seed: int, trials: int | None) -> list[ResultRow]:
    x_trials = trials or 2_000
    rng = RngStream(seed, 105)
    d, n, s = 64, 32, 8
    w0, w_star = _flat_pair_at_ratio(d, 0.5, rng)
    rep = mc_error_over_data(
        w0, w_star, s, n, x_trials, rng.substream(1), distribution="uniform"
    )
    rows = [
        ResultRow(
            "lemma4/uniform-bound", seed, d, n, s, "lemma4",
            rep.empirical_error, rep.closed_form_or_bound, rep.kind,
            rep.standard_error, float(np.linalg.norm(w_star - w0)),
            passed=rep.satisfied(),
        )
    ]
    uniform = uniform_probabilities(d)
    tuned = np.empty(200)
    untuned = np.empty(200)
    pair_rng = rng.substream(2)
    for k in range(200):
        X = gen_normal_X(d, n, pair_rng)
        w = pair_rng.normal(d) / math.sqrt(d)
        tuned[k] = exact_expected_error(X, w, optimal_probabilities(X, w), s)
        untuned[k] = exact_expected_error(X, w, uniform, s)
    gap_se = float((tuned - untuned).std(ddof=1) / math.sqrt(200))
    rows.append(
        ResultRow(
            "lemma4/p0-beats-uniform", seed, d, n, s, "lemma4",
            float(tuned.mean()), float(untuned.mean()), "upper-bound",
            gap_se, math.nan, passed=bool(tuned.mean() < untuned.mean()),
        )
    )
    return rows


def _suite_synflow_equiv(seed: int, trials: int | None) -> list[ResultRow]:
    count = trials or 100
    rng = RngStream(seed, 106)
    worst = 0.0
    for _ in range(count):
        d = int(rng.integers(2, 51))
        n = int(rng.integers(1, 21))
        X = DataMatrix(rng.normal((d, n)))
        w = rng.normal(d)
        via_scores = scores_to_probabilities(synflow_scores(row_norms(X), w))
        direct = optimal_probabilities(X, w)
        worst = max(worst, _relative_gap(via_scores.values, direct.values))
    return [
        ResultRow(
            "synflow-equiv/row-norm-probe", seed, 0, 0, 0, "synflow-equiv",
            worst, 1e-12, "equality", 0.0, math.nan, passed=worst <= 1e-12,
        )
    ]


def _suite_snip_equiv(seed: int, trials: int | None) -> list[ResultRow]:
    count = trials or 100
    rng = RngStream(seed, 107)
    worst = 0.0
    for _ in range(count):
        d = int(rng.integers(2, 51))
        n = int(rng.integers(1, 21))
        X = gen_sparse_X(d, n, rng)
        w = rng.normal(d)
        via_scores = scores_to_probabilities(snip_scores_l1(X, np.zeros(n), w))
        direct = optimal_probabilities(X, w)
        worst = max(worst, _relative_gap(via_scores.values, direct.values))
    return [
        ResultRow(
            "snip-equiv/sparse-data", seed, 0, 0, 0, "snip-equiv",
            worst, 1e-12, "equality", 0.0, math.nan, passed=worst <= 1e-12,
        )
    ]


def _ntk_instance(width: int, seed: int, steps: int):
    rng = RngStream(seed, 108)
    X = DataMatrix(rng.normal((4, 8)))
    y = rng.normal(8)
    model = TinyMLP.init(4, width, 1, "tanh", rng)
    snapshot = take_snapshot(model, X, y)
    trajectory = train_linearized_gd(
        snapshot, y, eta0=1.0 / snapshot.lambda_max, steps=steps
    )
    return model, X, y, snapshot, trajectory, rng


def _suite_ntk(seed: int, trials: int | None, width: int) -> list[ResultRow]:
    mask_trials = trials or 200
    rng = RngStream(seed, 109)
    worst = 0.0
    for k in range(5):
        activation = ("tanh", "softplus")[k % 2]
        model = TinyMLP.init(3, 8, 2, activation, rng)
        X = DataMatrix(rng.normal((3, 4)))
        J = analytic_jacobian(model, X)
        J_fd = finite_difference_jacobian(model, X, step=1e-5)
        worst = max(worst, float(np.abs(J - J_fd).max() / np.abs(J).max()))
    rows = [
        ResultRow(
            "ntk/jacobian-vs-fd", seed, 0, 0, 0, "ntk",
            worst, 1e-5, "equality", 0.0, math.nan, passed=worst <= 1e-5,
        )
    ]

    model, X, y, snapshot, trajectory, inst_rng = _ntk_instance(width, seed, steps=100)
    s = math.isqrt(model.n_params - 1) + 1
    rep = theorem2_report(model, snapshot, trajectory, X, s, mask_trials, inst_rng)
    rows.append(
        ResultRow(
            "ntk/masked-error-bound", seed, model.n_params, 8, s, "ntk",
            rep.empirical_error, rep.closed_form_or_bound, rep.kind,
            rep.standard_error, float(trajectory.movement[-1]),
            passed=rep.satisfied(),
        )
    )

    model, X, y, snapshot, trajectory, inst_rng = _ntk_instance(4, seed + 1, steps=0)
    rep = theorem2_report(model, snapshot, trajectory, X, 2, 4_000, inst_rng)
    exact = enumerate_exact_error(
        DataMatrix(snapshot.jacobian.T), snapshot.theta0, mask_probabilities(snapshot), 2
    )
    gap = abs(rep.empirical_error - exact)
    rows.append(
        ResultRow(
            "ntk/zero-step-enumeration", seed, model.n_params, 8, 2, "ntk",
            rep.empirical_error, exact, "equality", rep.standard_error, 0.0,
            passed=gap <= 4.0 * rep.standard_error,
        )
    )
    return rows


def _cmd_verify(settings: dict) -> tuple[list[ResultRow], bool]:
    suites = settings["suites"]
    seed = settings["seed"]
    trials = settings["trials"]
    rows: list[ResultRow] = []
    for suite in suites:
        started = time.perf_counter()
        if suite == "lemma1":
            produced = _suite_lemma1(seed, trials)
        elif suite == "lemma2":
            produced = _suite_lemma2(seed, trials)
        elif suite == "lemma3":
            produced = _suite_lemma3(seed, trials)
        elif suite == "theorem1":
            produced = _suite_theorem1(seed, trials)
        elif suite == "lemma4":
            produced = _suite_lemma4(seed, trials)
        elif suite == "synflow-equiv":
            produced = _suite_synflow_equiv(seed, trials)
        elif suite == "snip-equiv":
            produced = _suite_snip_equiv(seed, trials)
        else:
            produced = _suite_ntk(seed, trials, settings["width"])
        if settings["timing"]:
            elapsed_ms = (time.perf_counter() - started) * 1000.0 / len(produced)
            produced = [
                dataclasses.replace(row, wall_time_ms=elapsed_ms) for row in produced
            ]
        rows.extend(produced)
    return rows, all(row.passed for row in rows)


# ---------------------------------------------------------------------------
# pipeline, histogram, demo


def _cmd_pipeline(settings: dict) -> list[ResultRow]:
    rows = []
    for seed in range(settings["seed"], settings["seed"] + settings["trials"]):
        for method in settings["methods"]:
            for s in settings["s_values"]:
                config = PipelineConfig(
                    d=settings["d"],
                    n=settings["n"],
                    s=s,
                    method=method,
                    seed=seed,
                    noise_std=settings["noise_std"],
                    steps=settings["steps"],
                    lr=settings["lr"],
                )
                started = time.perf_counter()
                result = run_prune_pipeline(config)
                elapsed = (
                    (time.perf_counter() - started) * 1000.0
                    if settings["timing"]
                    else 0.0
                )
                rows.append(
                    ResultRow(
                        run_id=f"pipeline/{seed}/{method}/{s}",
                        seed=seed,
                        d=config.d,
                        n=config.n,
                        s=s,
                        method=method,
                        empirical_error=result.masked_error,
                        bound=result.bound,
                        kind="upper-bound" if math.isfinite(result.bound) else "none",
                        standard_error=math.nan,
                        distance=result.w0_wstar_distance,
                        wall_time_ms=elapsed,
                    )
                )
    rows.sort(key=lambda r: (r.seed, r.method, r.s))
    return rows


def _histogram_mask(method: str, w: np.ndarray, X: DataMatrix, s: int, rng: RngStream):
    if method == "topk-synflow":
        return select_topk(synflow_scores(row_norms(X), w), s)
    if method == "randomized-synflow":
        return select_randomized(synflow_scores(row_norms(X), w), s, rng)
    if method == "randomized-snip-sparse":
        X_tilde = gen_sparse_X(w.size, X.n, rng)
        return select_randomized(
            snip_scores_l1(X_tilde, np.zeros(X.n), w), s, rng
        )
    return select_randomized(np.ones(w.size), s, rng)


def _cmd_histogram(settings: dict) -> str:
    d = settings["d"]
    bins = settings["bins"]
    s = math.ceil(settings["density"] * d)
    if not 1 <= s <= d:
        raise ConfigError(f"density {settings['density']} gives keep count {s}")
    root = RngStream(settings["seed"])
    w = root.substream(0).normal(d)
    X = gen_normal_X(d, 128, root.substream(1))
    mask = _histogram_mask(settings["method"], w, X, s, root.substream(2))
    magnitudes = np.abs(w)
    edges = np.linspace(0.0, float(magnitudes.max()), bins + 1)
    count_all, _ = np.histogram(magnitudes, bins=edges)
    count_selected, _ = np.histogram(magnitudes[mask.values > 0], bins=edges)
    lines = [",".join(HISTOGRAM_HEADER)]
    for b in range(bins):
        lines.append(
            f"{_fmt(edges[b])},{_fmt(edges[b + 1])},"
            f"{count_selected[b]},{count_all[b]}"
        )
    return "\n".join(lines) + "\n"


def _cmd_ntk_demo(settings: dict) -> list[ResultRow]:
    started = time.perf_counter()
    model, X, y, snapshot, trajectory, rng = _ntk_instance(
        settings["width"], settings["seed"], settings["steps"]
    )
    s = settings["s"] or math.isqrt(model.n_params - 1) + 1
    if not 1 <= s <= model.n_params:
        raise ConfigError(f"keep count {s} outside [1, {model.n_params}]")
    rep = theorem2_report(model, snapshot, trajectory, X, s, settings["trials"], rng)
    elapsed = (time.perf_counter() - started) * 1000.0 if settings["timing"] else 0.0
    print(
        f"width={settings['width']} n_params={model.n_params} s={s} "
        f"lambda_min={snapshot.lambda_min:.6g} lambda_max={snapshot.lambda_max:.6g} "
        f"k_hat={snapshot.k_hat:.6g} r0_hat={snapshot.r0_hat:.6g} "
        f"movement={trajectory.movement[-1]:.6g} "
        f"empirical={rep.empirical_error:.6g} bound={rep.closed_form_or_bound:.6g}"
    )
    return [
        ResultRow(
            run_id="ntk-demo",
            seed=settings["seed"],
            d=model.n_params,
            n=X.n,
            s=s,
            method="ntk-sketch",
            empirical_error=rep.empirical_error,
            bound=rep.closed_form_or_bound,
            kind=rep.kind,
            standard_error=rep.standard_error,
            distance=float(trajectory.movement[-1]),
            wall_time_ms=elapsed,
        )
    ]


# ---------------------------------------------------------------------------
# argument handling


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketchprune",
        description="Sketch-based pruning masks, error bounds, and experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--seed", type=int, default=None,
                       help=f"base seed (falls back to ${SEED_ENV_VAR}, then 0)")
        p.add_argument("--out", type=str, default=None, help="output CSV path")
        p.add_argument("--config", type=str, default=None,
                       help="JSON file with flag defaults; flags override it")
        p.add_argument("--threads", type=int, default=None,
                       help="reserved; execution is sequential and deterministic")
        p.add_argument("--timing", action="store_true", default=None,
                       help="record real wall_time_ms (breaks byte determinism)")

    p = sub.add_parser("verify", help="run numerical verification suites")
    p.add_argument("--methods", type=str, default=None,
                   help="comma-separated suites (default: all)")
    p.add_argument("--trials", type=int, default=None,
                   help="Monte Carlo trials per check (default: per-suite)")
    p.add_argument("--width", type=int, default=None,
                   help="network width for the ntk suite")
    common(p)

    p = sub.add_parser("pipeline", help="prune, train, and measure")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--s", type=str, default=None,
                   help="comma-separated keep counts")
    p.add_argument("--density", type=float, default=None,
                   help="keep ceil(density*d) weights when --s is absent")
    p.add_argument("--method", type=str, default=None, help="single method")
    p.add_argument("--methods", type=str, default=None,
                   help="comma-separated methods (default: all)")
    p.add_argument("--trials", type=int, default=None,
                   help="number of consecutive seeds to run")
    p.add_argument("--noise-std", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    common(p)

    p = sub.add_parser("histogram", help="weight-magnitude selection histogram")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--density", type=float, default=None)
    p.add_argument("--method", type=str, default=None,
                   help=f"one of {', '.join(HISTOGRAM_METHODS)}")
    p.add_argument("--bins", type=int, default=None)
    common(p)

    p = sub.add_parser("ntk-demo", help="kernel-regime bound demo")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--trials", type=int, default=None,
                   help="mask draws for the empirical error")
    common(p)

    return parser


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        payload = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError("config file must hold a JSON object")
    return payload


def _setting(args, file_config: dict, name: str, default, cast=None):
    """Flag if given, else config-file entry, else default."""
    value = getattr(args, name.replace("-", "_"), None)
    if value is None:
        value = file_config.get(name, default)
    if value is not None and cast is not None:
        try:
            value = cast(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {name}: {value!r}") from exc
    return value


def _resolve_seed(args, file_config: dict) -> int:
    seed = _setting(args, file_config, "seed", None, int)
    if seed is None:
        env = os.environ.get(SEED_ENV_VAR)
        if env is not None:
            try:
                seed = int(env)
            except ValueError as exc:
                raise ConfigError(
                    f"{SEED_ENV_VAR} must be an integer, got {env!r}"
                ) from exc
        else:
            seed = 0
    if seed < 0:
        raise ConfigError(f"seed must be nonnegative, got {seed}")
    return seed


def _split_list(raw: str) -> list[str]:
    items = [item.strip() for item in str(raw).split(",")]
    return [item for item in items if item]


_COMMON_KEYS = frozenset({"seed", "out", "config", "threads", "timing"})
_COMMAND_KEYS = {
    "verify": _COMMON_KEYS | {"methods", "trials", "width"},
    "pipeline": _COMMON_KEYS
    | {"d", "n", "s", "density", "method", "methods", "trials",
       "noise-std", "steps", "lr"},
    "histogram": _COMMON_KEYS | {"d", "density", "method", "bins"},
    "ntk-demo": _COMMON_KEYS | {"width", "s", "steps", "trials"},
}


def _resolve_settings(args) -> dict:
    file_config = _load_config_file(getattr(args, "config", None))
    unknown = set(file_config) - _COMMAND_KEYS[args.command]
    if unknown:
        raise ConfigError(
            f"config keys {sorted(unknown)} are not flags of {args.command!r}"
        )

    settings: dict = {
        "seed": _resolve_seed(args, file_config),
        "out": _setting(args, file_config, "out", f"{args.command}.csv", str),
        "timing": bool(_setting(args, file_config, "timing", False)),
    }
    threads = _setting(args, file_config, "threads", 1, int)
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    settings["threads"] = threads

    if args.command == "verify":
        raw = _setting(args, file_config, "methods", None)
        suites = _split_list(raw) if raw else list(VERIFY_SUITES)
        for suite in suites:
            if suite not in VERIFY_SUITES:
                raise ConfigError(
                    f"unknown suite {suite!r}; choose from {', '.join(VERIFY_SUITES)}"
                )
        settings["suites"] = suites
        settings["trials"] = _setting(args, file_config, "trials", None, int)
        settings["width"] = _setting(args, file_config, "width", 64, int)
        if settings["trials"] is not None and settings["trials"] < 2:
            raise ConfigError("trials must be >= 2")
        if settings["width"] < 1:
            raise ConfigError("width must be >= 1")

    elif args.command == "pipeline":
        settings["d"] = _setting(args, file_config, "d", 64, int)
        settings["n"] = _setting(args, file_config, "n", 32, int)
        raw_methods = _setting(args, file_config, "methods", None)
        single = _setting(args, file_config, "method", None)
        if raw_methods:
            methods = _split_list(raw_methods)
        elif single:
            methods = [str(single)]
        else:
            methods = list(METHODS)
        for method in methods:
            if method not in METHODS:
                raise ConfigError(
                    f"unknown method {method!r}; choose from {', '.join(METHODS)}"
                )
        settings["methods"] = methods
        raw_s = _setting(args, file_config, "s", None)
        density = _setting(args, file_config, "density", None, float)
        if raw_s is not None:
            try:
                s_values = [int(part) for part in _split_list(raw_s)]
            except ValueError as exc:
                raise ConfigError(f"bad keep counts {raw_s!r}") from exc
        elif density is not None:
            s_values = [math.ceil(density * settings["d"])]
        else:
            s_values = [8]
        for s in s_values:
            if not 1 <= s <= settings["d"]:
                raise ConfigError(
                    f"keep count {s} outside [1, {settings['d']}]"
                )
        settings["s_values"] = s_values
        settings["trials"] = _setting(args, file_config, "trials", 10, int)
        settings["noise_std"] = _setting(args, file_config, "noise-std", 0.0, float)
        settings["steps"] = _setting(args, file_config, "steps", 100, int)
        settings["lr"] = _setting(args, file_config, "lr", None, float)
        if settings["trials"] < 1:
            raise ConfigError("trials must be >= 1")

    elif args.command == "histogram":
        settings["d"] = _setting(args, file_config, "d", 1024, int)
        settings["density"] = _setting(args, file_config, "density", 0.1, float)
        settings["bins"] = _setting(args, file_config, "bins", 50, int)
        settings["method"] = _setting(
            args, file_config, "method", "randomized-synflow", str
        )
        if settings["method"] not in HISTOGRAM_METHODS:
            raise ConfigError(
                f"histogram needs a binary-mask method, one of "
                f"{', '.join(HISTOGRAM_METHODS)}"
            )
        if settings["bins"] < 1:
            raise ConfigError("bins must be >= 1")
        if settings["d"] < 1:
            raise ConfigError("d must be >= 1")

    else:  # ntk-demo
        settings["width"] = _setting(args, file_config, "width", 64, int)
        settings["s"] = _setting(args, file_config, "s", None, int)
        settings["steps"] = _setting(args, file_config, "steps", 100, int)
        settings["trials"] = _setting(args, file_config, "trials", 200, int)
        if settings["width"] < 1:
            raise ConfigError("width must be >= 1")
        if settings["steps"] < 0:
            raise ConfigError("steps must be >= 0")
        if settings["trials"] < 2:
            raise ConfigError("trials must be >= 2")

    return settings


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        settings = _resolve_settings(args)
        out = Path(settings["out"])
        if args.command == "verify":
            rows, ok = _cmd_verify(settings)
            _atomic_write(out, _result_lines(rows, include_passed=True))
            failed = [row.run_id for row in rows if not row.passed]
            if failed:
                print(f"FAILED checks: {', '.join(failed)}", file=sys.stderr)
                return 1
            return 0
        if args.command == "pipeline":
            rows = _cmd_pipeline(settings)
            _atomic_write(out, _result_lines(rows, include_passed=False))
            return 0
        if args.command == "histogram":
            _atomic_write(out, _cmd_histogram(settings))
            return 0
        rows = _cmd_ntk_demo(settings)
        _atomic_write(out, _result_lines(rows, include_passed=False))
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
