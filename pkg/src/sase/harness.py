"""Monte Carlo experiment runner.

Every trial derives two independent generators from ``(seed, trial_index)``
through :class:`numpy.random.SeedSequence` spawn keys, one for the channel and
one for the noise. A trial is therefore reproducible in isolation, and grid
points of a sweep share channel draws (common random numbers).
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import metrics
from .channel import numerical_rank, random_channel
from .errors import InvalidParameterError, SaseError
from .linalg import hermitian
from .reconstruct import estimate_channel
from .sounding import NoiseModel
from .subspace import HYBRID, LARGEST_GAP, UNCONSTRAINED, SaseSettings, run_sase

log = logging.getLogger(__name__)

SWEEPS = ("snr", "channel_uses", "paths", "mismatch", "rank_check")

CSV_COLUMNS = (
    "sweep_var",
    "eta_mean",
    "eta_se",
    "eta_c_mean",
    "eta_c_se",
    "eta_r_mean",
    "eta_r_se",
    "nmse_mean",
    "nmse_se",
    "rate_mean",
    "rate_se",
    "rate_perfect_csi",
    "col_bound_mean",
    "row_bound_mean",
    "joint_bound_mean",
    "delta1_mean",
    "delta2_mean",
    "channel_uses",
    "trials",
)


def m_from_channel_uses(k: int, n_r: int, m_rf: int, n_t: int) -> int:
    """Invert the SASE channel-use count for the stage-one column budget."""
    if n_r % m_rf:
        raise InvalidParameterError(f"N_r={n_r} is not a multiple of M_RF={m_rf}")
    per_column = n_r // m_rf - 1  # extra uses per stage-one column
    if per_column <= 0:
        raise InvalidParameterError("with N_r = M_RF every K maps to many m; give m directly")
    num = k - n_t
    if num % per_column or not 1 <= num // per_column <= n_t:
        lo = max(1, math.floor(num / per_column))
        hi = lo + 1
        suggestions = [
            metrics.sase_channel_uses(x, n_r, m_rf, n_t) for x in (lo, hi) if 1 <= x <= n_t
        ]
        raise InvalidParameterError(
            f"K={k} is not reachable at N_r={n_r}, N_t={n_t}, M_RF={m_rf};"
            f" nearest valid values: {suggestions}"
        )
    return num // per_column


def _default_snr_grid() -> tuple[float, ...]:
    return tuple(float(x) for x in range(-20, 21, 5))


@dataclass(frozen=True)
class ExperimentConfig:
    n_r: int = 36
    n_t: int = 144
    m_rf: int = 6
    n_rf: int = 8
    true_l: int = 4
    assumed_l: int | str | None = None
    m: int | None = None
    channel_uses: int | None = 244
    snr_db: float = 20.0
    snr_db_grid: tuple[float, ...] = field(default_factory=_default_snr_grid)
    trials: int = 200
    seed: int = 0
    mode: str = HYBRID
    geometry: str = "ula"
    dict_factor: int = 8
    dict_grid: str = "sine"
    path_policy: str = LARGEST_GAP
    sweep: str = "snr"
    m_grid: tuple[int, ...] | None = None
    paths_grid: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    mismatch_grid: tuple[int, ...] = (3, 4, 5, 6)
    rank_grid: tuple[int, ...] = tuple(range(4, 41, 4))
    workers: int = 1

    @property
    def column_budget(self) -> int:
        if self.m is not None:
            return self.m
        if self.channel_uses is None:
            raise InvalidParameterError("set either m or channel_uses")
        return m_from_channel_uses(self.channel_uses, self.n_r, self.m_rf, self.n_t)

    @property
    def path_cap(self) -> int:
        return min(self.m_rf, self.n_rf)

    @property
    def estimator_paths(self) -> int | str:
        """Path count handed to the estimator, clamped to the RF-chain cap."""
        if self.assumed_l == "auto":
            return "auto"
        wanted = self.true_l if self.assumed_l is None else int(self.assumed_l)
        if wanted > self.path_cap:
            log.warning("assumed L=%d clamped to min(M_RF, N_RF)=%d", wanted, self.path_cap)
            return self.path_cap
        return wanted

    def validate(self) -> "ExperimentConfig":
        if min(self.n_r, self.n_t, self.m_rf, self.n_rf, self.true_l) < 1:
            raise InvalidParameterError("dimensions and path count must be positive")
        if self.n_r % self.m_rf:
            raise InvalidParameterError(f"N_r={self.n_r} is not a multiple of M_RF={self.m_rf}")
        if self.n_rf < 2:
            raise InvalidParameterError("stage-one transmit sounders need N_RF >= 2")
        m = self.column_budget
        if not self.true_l <= m <= self.n_t:
            raise InvalidParameterError(f"need L={self.true_l} <= m={m} <= N_t={self.n_t}")
        paths = self.estimator_paths
        if paths != "auto" and paths > m:
            raise InvalidParameterError(f"assumed L={paths} exceeds m={m}")
        if self.mode not in (HYBRID, UNCONSTRAINED):
            raise InvalidParameterError(f"unknown mode {self.mode!r}")
        if self.geometry not in ("ula", "upa"):
            raise InvalidParameterError(f"unknown geometry {self.geometry!r}")
        if self.geometry == "upa":
            for n in (self.n_r, self.n_t):
                if math.isqrt(n) ** 2 != n:
                    raise InvalidParameterError(f"UPA needs square antenna counts, got {n}")
        if self.sweep not in SWEEPS:
            raise InvalidParameterError(f"unknown sweep {self.sweep!r}")
        if self.trials < 1:
            raise InvalidParameterError("trials must be positive")
        if self.dict_factor < 1:
            raise InvalidParameterError("dict_factor must be at least 1")
        return self

    def settings(self) -> SaseSettings:
        return SaseSettings(
            m=self.column_budget,
            m_rf=self.m_rf,
            n_rf=self.n_rf,
            num_paths=self.estimator_paths,
            mode=self.mode,
            dict_factor=self.dict_factor,
            dict_grid="planar" if self.geometry == "upa" else self.dict_grid,
            path_policy=self.path_policy,
        )

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def trial_streams(seed: int, trial_index: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (channel, noise) generators for one trial."""
    make = lambda k: np.random.default_rng(  # noqa: E731
        np.random.SeedSequence(seed, spawn_key=(trial_index, k))
    )
    return make(0), make(1)


def run_trial(config: ExperimentConfig, trial_index: int) -> metrics.AccuracyReport:
    try:
        return _run_trial(config, trial_index)
    except SaseError as exc:
        raise type(exc)(f"trial {trial_index}: {exc}") from exc


def _run_trial(config: ExperimentConfig, trial_index: int) -> metrics.AccuracyReport:
    rng_channel, rng_noise = trial_streams(config.seed, trial_index)
    channel = random_channel(rng_channel, config.n_r, config.n_t, config.true_l, config.geometry)
    noise = NoiseModel.from_snr_db(config.snr_db, rng_noise)
    settings = config.settings()
    m = settings.m
    res = run_sase(channel, settings, noise)
    estimate = estimate_channel(res.w, res.f, res.stage1.y_post_dft, res.stage2.q_c, m)

    true_l = config.true_l
    if res.num_paths > true_l:
        w_eval, f_eval = estimate.dominant_modes(true_l)
    else:
        w_eval, f_eval = res.w, res.f
    streams = w_eval.shape[1]
    sigma2 = noise.sigma2
    h = channel.matrix

    q_bar = hermitian(res.w) @ h
    if res.num_paths >= true_l and not metrics.rank_deficient(q_bar, true_l):
        row_b = metrics.row_bound(sigma2, q_bar, true_l)
    else:
        row_b = 0.0

    return metrics.AccuracyReport(
        eta=metrics.eta(w_eval, f_eval, h),
        eta_c=metrics.eta_c(w_eval, h),
        eta_r=metrics.eta_r(f_eval, h),
        nmse=metrics.nmse(h, estimate),
        rate=metrics.spectrum_efficiency(w_eval, f_eval, h, sigma2),
        rate_perfect_csi=metrics.perfect_csi_rate(h, sigma2, streams),
        gamma=metrics.effective_snr(w_eval, f_eval, h, sigma2),
        col_bound=metrics.column_bound(sigma2, h[:, :m], true_l),
        row_bound=row_b,
        joint_bound=metrics.joint_bound(
            res.u_hat.frame, channel.true_left, res.v_hat.frame, channel.true_right
        ),
        delta1=res.delta1,
        delta2=res.delta2,
        channel_uses=res.channel_uses,
        num_paths_used=res.num_paths,
    )


@dataclass(frozen=True)
class SweepRow:
    sweep_var: float
    eta_mean: float
    eta_se: float
    eta_c_mean: float
    eta_c_se: float
    eta_r_mean: float
    eta_r_se: float
    nmse_mean: float
    nmse_se: float
    rate_mean: float
    rate_se: float
    rate_perfect_csi: float
    col_bound_mean: float
    row_bound_mean: float
    joint_bound_mean: float
    delta1_mean: float
    delta2_mean: float
    channel_uses: int
    trials: int


def _mean_se(values) -> tuple[float, float]:
    x = np.asarray(values, dtype=float)
    mean = float(np.mean(x))
    if x.size < 2 or not np.all(np.isfinite(x)):
        return mean, 0.0
    return mean, float(np.std(x, ddof=1) / math.sqrt(x.size))


def aggregate(sweep_var: float, reports: list[metrics.AccuracyReport]) -> SweepRow:
    col = lambda name: [getattr(r, name) for r in reports]  # noqa: E731
    stats = {name: _mean_se(col(name)) for name in ("eta", "eta_c", "eta_r", "nmse", "rate")}
    return SweepRow(
        sweep_var=float(sweep_var),
        eta_mean=stats["eta"][0],
        eta_se=stats["eta"][1],
        eta_c_mean=stats["eta_c"][0],
        eta_c_se=stats["eta_c"][1],
        eta_r_mean=stats["eta_r"][0],
        eta_r_se=stats["eta_r"][1],
        nmse_mean=stats["nmse"][0],
        nmse_se=stats["nmse"][1],
        rate_mean=stats["rate"][0],
        rate_se=stats["rate"][1],
        rate_perfect_csi=float(np.mean(col("rate_perfect_csi"))),
        col_bound_mean=float(np.mean(col("col_bound"))),
        row_bound_mean=float(np.mean(col("row_bound"))),
        joint_bound_mean=float(np.mean(col("joint_bound"))),
        delta1_mean=float(np.mean(col("delta1"))),
        delta2_mean=float(np.mean(col("delta2"))),
        channel_uses=int(round(np.mean(col("channel_uses")))),
        trials=len(reports),
    )


@dataclass
class SweepResult:
    sweep: str
    rows: list[SweepRow]
    config: ExperimentConfig
    wall_time: float = 0.0
    reports: dict[float, list[metrics.AccuracyReport]] | None = field(default=None, repr=False)

    def to_json(self) -> str:
        return json.dumps(
            {
                "sweep": self.sweep,
                "columns": list(CSV_COLUMNS),
                "rows": [dataclasses.asdict(r) for r in self.rows],
                "config": self.config.to_dict(),
                "wall_time": self.wall_time,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "SweepResult":
        d = json.loads(text)
        return cls(
            sweep=d["sweep"],
            rows=[SweepRow(**r) for r in d["rows"]],
            config=config_from_mapping(d["config"]),
            wall_time=d["wall_time"],
        )


@dataclass
class RankCheckResult:
    rows: list[tuple[int, int, float, int, int]]  # (m, min, mean, max, trials)
    config: ExperimentConfig
    wall_time: float = 0.0


def sweep_points(config: ExperimentConfig) -> list[tuple[float, ExperimentConfig]]:
    """Grid of (sweep value, per-point config); every point is validated up front."""
    replace = dataclasses.replace
    if config.sweep == "snr":
        points = [(v, replace(config, snr_db=float(v))) for v in config.snr_db_grid]
    elif config.sweep == "channel_uses":
        grid = config.m_grid or tuple(config.true_l * k for k in range(1, 13))
        points = []
        for m in grid:
            point = replace(config, m=int(m))
            k = metrics.sase_channel_uses(int(m), config.n_r, config.m_rf, config.n_t)
            points.append((k, point))
    elif config.sweep == "paths":
        points = [(v, replace(config, true_l=int(v), assumed_l=None)) for v in config.paths_grid]
    elif config.sweep == "mismatch":
        points = [(v, replace(config, assumed_l=int(v))) for v in config.mismatch_grid]
    else:
        raise InvalidParameterError(f"sweep {config.sweep!r} has no metric grid")
    for value, point in points:
        try:
            point.validate()
        except InvalidParameterError as exc:
            raise InvalidParameterError(f"{config.sweep} grid point {value}: {exc}") from exc
    return points


def _run_point(point: ExperimentConfig, pool: ProcessPoolExecutor | None):
    indices = range(point.trials)
    if pool is None:
        return [run_trial(point, i) for i in indices]
    return list(pool.map(run_trial, [point] * point.trials, indices, chunksize=16))


def run_sweep(config: ExperimentConfig, *, keep_reports: bool = False):
    """Run a full sweep; returns :class:`SweepResult` (or :class:`RankCheckResult`)."""
    config.validate()
    if config.sweep == "rank_check":
        return run_rank_check(config)
    points = sweep_points(config)
    start = time.perf_counter()
    rows, kept = [], {}
    pool = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for value, point in points:
            reports = _run_point(point, pool)
            rows.append(aggregate(value, reports))
            if keep_reports:
                kept[float(value)] = reports
    finally:
        if pool is not None:
            pool.shutdown()
    return SweepResult(
        config.sweep, rows, config, time.perf_counter() - start, kept if keep_reports else None
    )


def run_rank_check(config: ExperimentConfig) -> RankCheckResult:
    """Numerical rank of the first-m-column block for fresh channel draws."""
    start = time.perf_counter()
    channels = [
        random_channel(trial_streams(config.seed, t)[0], config.n_r, config.n_t, config.true_l, config.geometry)
        for t in range(config.trials)
    ]
    rows = []
    for m in config.rank_grid:
        if not 1 <= m <= config.n_t:
            raise InvalidParameterError(f"rank_check grid point m={m} outside 1..{config.n_t}")
        ranks = [numerical_rank(ch.matrix[:, :m]) for ch in channels]
        rows.append((int(m), min(ranks), float(np.mean(ranks)), max(ranks), len(ranks)))
    return RankCheckResult(rows, config, time.perf_counter() - start)


def _format(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in result.rows:
        writer.writerow([_format(getattr(row, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


RANK_COLUMNS = ("m", "rank_min", "rank_mean", "rank_max", "trials")


def rank_check_csv(result: RankCheckResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RANK_COLUMNS)
    for row in result.rows:
        writer.writerow([_format(v) for v in row])
    return buf.getvalue()


def emit(result: SweepResult, fmt: str, path) -> None:
    """Write a sweep as CSV or JSON (UTF-8)."""
    if fmt == "csv":
        text = to_csv(result)
    elif fmt == "json":
        text = result.to_json()
    else:
        raise InvalidParameterError(f"unknown output format {fmt!r}")
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc


# --- flat key = value config files -------------------------------------------------

def _is_none(text) -> bool:
    return text is None or str(text).strip().lower() in ("", "none")


def _parse_optional_int(text):
    return None if _is_none(text) else int(text)


def _parse_assumed(text):
    if _is_none(text):
        return None
    return "auto" if str(text).strip().lower() == "auto" else int(text)


def _parse_tuple(kind):
    def parse(text):
        items = text if isinstance(text, (list, tuple)) else str(text).replace(",", " ").split()
        return tuple(kind(x) for x in items)
    return parse


def _parse_optional_tuple(text):
    return None if _is_none(text) else _parse_tuple(int)(text)


_PARSERS = {
    "n_r": int,
    "n_t": int,
    "m_rf": int,
    "n_rf": int,
    "true_l": int,
    "assumed_l": _parse_assumed,
    "m": _parse_optional_int,
    "channel_uses": _parse_optional_int,
    "snr_db": float,
    "snr_db_grid": _parse_tuple(float),
    "trials": int,
    "seed": int,
    "mode": str,
    "geometry": str,
    "dict_factor": int,
    "dict_grid": str,
    "path_policy": str,
    "sweep": str,
    "m_grid": _parse_optional_tuple,
    "paths_grid": _parse_tuple(int),
    "mismatch_grid": _parse_tuple(int),
    "rank_grid": _parse_tuple(int),
    "workers": int,
}


def config_from_mapping(mapping: dict[str, Any], base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply string or native overrides to `base` (defaults if omitted)."""
    base = base or ExperimentConfig()
    values = {}
    for key, raw in mapping.items():
        if key not in _PARSERS:
            raise InvalidParameterError(f"unknown config key {key!r}")
        try:
            values[key] = _PARSERS[key](raw.strip() if isinstance(raw, str) else raw)
        except (TypeError, ValueError) as exc:
            raise InvalidParameterError(f"bad value for {key}: {raw!r}") from exc
    return dataclasses.replace(base, **values)


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(f"config line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidParameterError(f"cannot read config {path}: {exc}") from exc
    return config_from_mapping(parse_config_text(text), base)


def format_config(config: ExperimentConfig) -> str:
    """Render `config` in the same flat format :func:`load_config` reads."""
    lines = []
    for key, value in config.to_dict().items():
        if isinstance(value, (list, tuple)):
            value = ", ".join(_format(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
