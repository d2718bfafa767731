"""Seeded Monte-Carlo experiments comparing the three inner decoders."""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from fractions import Fraction
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .channel import final_offset, realized_rates, transmit
from .codec import (
    CODEWORD_BITS,
    SYMBOL_BITS,
    Watermark,
    apply_watermark,
    desparsify,
    generate_watermark,
    sparsify,
    strip_watermark,
)
from .decoder import (
    DECODERS,
    LatticeConfig,
    WindowTable,
    build_window_table,
    decode,
    extract_path,
    resynchronize,
)
from .exceptions import ConfigError, DecoderFailure, MatrixNotFoundError
from .markov import (
    BANDS,
    ChannelParams,
    EntropyBand,
    TransitionMatrix,
    average_entropy,
    band_for_entropy,
    derive_iid_params,
    generate_matrix_for_entropy,
    reduce_to_three_state,
)
from .metrics import ber, niis, sao

log = logging.getLogger(__name__)

# spawn-key streams, so matrix draws, runs and the shared watermark never overlap
_MATRIX_STREAM, _RUN_STREAM, _WATERMARK_STREAM = 0, 1, 2

OVERALL_COLUMNS = ["entropy_target", "entropy_achieved_mean", "decoder", "mean_ber",
                   "mean_niis", "mean_sao", "n_matrices", "n_runs", "base_seed"]
CONSTANT_COLUMNS = ["entropy", "matrix_id", "run_id", "decoder", "ber", "niis", "sao",
                    "realized_pd", "realized_pi", "realized_ps", "final_offset", "failed"]


def default_targets() -> tuple[float, ...]:
    return tuple(round(0.01 * i, 2) for i in range(1, 31))


@dataclass
class ExperimentConfig:
    base_seed: int = 0
    message_bits: int = 480
    max_insertions: int = 1
    targets: tuple = field(default_factory=default_targets)
    tol: float = 0.001
    n_matrices: int = 20
    runs_per_matrix: int = 100
    constant_iterations: int = 5000
    decoders: tuple = DECODERS
    bands: dict = field(default_factory=lambda: dict(BANDS))
    out_dir: str = "results"
    workers: int = 1
    initial_state: str = "T"
    max_attempts: int = 100_000
    failure_threshold: float = 0.05

    def __post_init__(self):
        self.targets = tuple(float(x) for x in self.targets)
        self.decoders = tuple(self.decoders)
        for name in ("message_bits", "n_matrices", "runs_per_matrix",
                     "constant_iterations", "workers", "max_attempts"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.message_bits % SYMBOL_BITS:
            raise ConfigError(f"message_bits must be a multiple of {SYMBOL_BITS}")
        unknown = set(self.decoders) - set(DECODERS)
        if unknown or not self.decoders:
            raise ConfigError(f"unknown decoders {sorted(unknown)}")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        for t in self.targets:
            self.band_for(t)

    @property
    def gamma(self) -> int:
        return self.message_bits // SYMBOL_BITS * CODEWORD_BITS

    def band_for(self, target: float) -> EntropyBand:
        for band in self.bands.values():
            lo, hi = band.entropy_range
            if lo <= target < hi:
                return band
        if self.bands == BANDS:
            try:
                return band_for_entropy(target)
            except ValueError:
                pass
        raise ConfigError(f"target entropy {target} is outside every band")

    @classmethod
    def preset(cls, name: str, **overrides) -> "ExperimentConfig":
        if name == "desk":
            base = dict(n_matrices=5, runs_per_matrix=50, constant_iterations=500,
                        targets=(0.02, 0.074, 0.15, 0.25))
        elif name == "paper":
            base = {}
        else:
            raise ConfigError(f"unknown preset {name!r}")
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_dict(cls, data: dict, base: "ExperimentConfig | None" = None):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "bands" in data:
            data["bands"] = {
                int(k): EntropyBand(int(k), tuple(v["trans_to_error"]),
                                    tuple(v["error_to_error"]),
                                    tuple(v["entropy_range"]))
                for k, v in data["bands"].items()}
        merged = dataclasses.asdict(base) if base is not None else {}
        if base is not None:
            merged["bands"] = base.bands
        merged.update(data)
        return cls(**merged)


@dataclass(frozen=True)
class ChannelModel:
    """A four-state matrix with everything the channel and decoders derive from it."""

    a4: TransitionMatrix
    a3: TransitionMatrix
    params: ChannelParams
    table: WindowTable
    entropy: float

    @classmethod
    def from_matrix(cls, a4: TransitionMatrix, max_insertions: int = 1) -> "ChannelModel":
        a3 = reduce_to_three_state(a4)
        return cls(a4, a3, derive_iid_params(a4, max_insertions),
                   build_window_table(a3, max_insertions), average_entropy(a3))


@dataclass(frozen=True)
class RunResult:
    entropy_target: float
    entropy_achieved: float
    matrix_id: int
    run_id: int
    decoder: str
    ber: float
    niis: float
    sao: int
    realized_pd: float
    realized_pi: float
    realized_ps: float
    final_offset: int
    failed: bool

    def constant_row(self) -> list:
        return [repr(self.entropy_target), self.matrix_id, self.run_id, self.decoder,
                repr(self.ber), repr(self.niis), self.sao, repr(self.realized_pd),
                repr(self.realized_pi), repr(self.realized_ps), self.final_offset,
                int(self.failed)]


def _rng(base_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=key))


def run_single(model: ChannelModel | TransitionMatrix, seed, decoders: Sequence[str] = DECODERS,
               message_bits: int = 480, watermark: Watermark | np.ndarray | None = None,
               initial_state: str = "T", entropy_target: float = math.nan,
               matrix_id: int = 0, run_id: int = 0) -> list[RunResult]:
    """One message through encoder, channel and every selected decoder.

    All decoders see the same received sequence. A decoder failure falls back
    to the all-zero drift path and is flagged on the result.
    """
    if isinstance(model, TransitionMatrix):
        model = ChannelModel.from_matrix(model)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    im = model.params.max_insertions

    d = rng.integers(0, 2, size=message_bits, dtype=np.uint8)
    s = sparsify(d)
    if watermark is None:
        watermark = generate_watermark(s.size, int(rng.integers(2 ** 63)))
    w = np.asarray(watermark)
    t = apply_watermark(s, w)
    rec = transmit(t, model.a3, model.params.p_s, im, rng, initial_state)
    psi = final_offset(rec)
    pd, pi, ps = realized_rates(rec)
    cfg = LatticeConfig.build(t.size, rec.t_hat.size, model.params, model.a3)

    results = []
    for name in decoders:
        failed = False
        try:
            lattice = decode(name, cfg, rec.t_hat, w, model.table)
            path = extract_path(lattice.posterior, im)
        except DecoderFailure as exc:
            log.warning("decoder %s failed on matrix %d run %d: %s", name, matrix_id, run_id, exc)
            path = np.zeros(t.size, dtype=np.int64)
            failed = True
        r = resynchronize(rec.t_hat, path, psi)
        d_hat = desparsify(strip_watermark(r, w))
        results.append(RunResult(
            entropy_target, model.entropy, matrix_id, run_id, name,
            ber(d, d_hat), niis(rec.drift, path), sao(rec.drift, path),
            pd, pi, ps, psi, failed))
    return results


def _run_task(task) -> list[RunResult]:
    model, base_seed, ti, mi, run_ids, cfg_bits, watermark, target = task
    decoders, message_bits, initial_state = cfg_bits
    out = []
    for ri in run_ids:
        out.extend(run_single(model, _rng(base_seed, _RUN_STREAM, ti, mi, ri), decoders,
                              message_bits, watermark, initial_state, target, mi, ri))
    return out


def _execute(tasks: list, workers: int) -> list[RunResult]:
    if workers <= 1 or len(tasks) <= 1:
        chunks = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_task, tasks))
    results = [r for chunk in chunks for r in chunk]
    order = {name: i for i, name in enumerate(DECODERS)}
    results.sort(key=lambda r: (r.entropy_target, r.matrix_id, r.run_id, order[r.decoder]))
    return results


def _split(ids: range, workers: int) -> list[range]:
    n = max(1, min(len(ids), workers * 4))
    step = math.ceil(len(ids) / n)
    return [ids[i:i + step] for i in range(0, len(ids), step)]


def _matrix_for(cfg: ExperimentConfig, ti: int, mi: int, target: float) -> ChannelModel:
    a4, _, _ = generate_matrix_for_entropy(
        target, cfg.tol, cfg.band_for(target), _rng(cfg.base_seed, _MATRIX_STREAM, ti, mi),
        cfg.max_attempts)
    return ChannelModel.from_matrix(a4, cfg.max_insertions)


def shared_watermark(cfg: ExperimentConfig) -> Watermark:
    seed = int(np.random.SeedSequence(cfg.base_seed, spawn_key=(_WATERMARK_STREAM,))
               .generate_state(1, dtype=np.uint64)[0])
    return generate_watermark(cfg.gamma, seed)


def sweep_overall_runs(cfg: ExperimentConfig) -> tuple[list[RunResult], dict]:
    """Per-run results over ``n_matrices`` fresh matrices at every target."""
    tasks = []
    skipped = {}
    for ti, target in enumerate(cfg.targets):
        for mi in range(cfg.n_matrices):
            try:
                model = _matrix_for(cfg, ti, mi, target)
            except MatrixNotFoundError as exc:
                log.warning("skipping target %s: %s", target, exc)
                skipped[target] = str(exc)
                tasks = [t for t in tasks if t[7] != target]
                break
            for chunk in _split(range(cfg.runs_per_matrix), cfg.workers):
                tasks.append((model, cfg.base_seed, ti, mi, chunk,
                              (cfg.decoders, cfg.message_bits, cfg.initial_state),
                              None, target))
    return _execute(tasks, cfg.workers), skipped


def _mean(values) -> float:
    """Correctly rounded mean: exact and independent of summation order."""
    values = list(values)
    return float(sum(map(Fraction, values), Fraction(0)) / len(values))


def aggregate_overall(results: Iterable[RunResult], cfg: ExperimentConfig,
                      skipped: dict | None = None) -> list[dict]:
    groups = defaultdict(list)
    for r in results:
        groups[(r.entropy_target, r.decoder)].append(r)
    order = {name: i for i, name in enumerate(DECODERS)}
    rows = []
    for (target, dec) in sorted(groups, key=lambda k: (k[0], order[k[1]])):
        rs = groups[(target, dec)]
        # achieved entropy once per matrix
        per_matrix = {r.matrix_id: r.entropy_achieved for r in rs}
        rows.append({
            "entropy_target": target,
            "entropy_achieved_mean": _mean(per_matrix.values()),
            "decoder": dec,
            "mean_ber": _mean(r.ber for r in rs),
            "mean_niis": _mean(r.niis for r in rs),
            "mean_sao": _mean(r.sao for r in rs),
            "n_matrices": len(per_matrix),
            "n_runs": len(rs),
            "base_seed": cfg.base_seed,
        })
    for target in sorted(skipped or {}):
        rows.append({"entropy_target": target, "entropy_achieved_mean": "",
                     "decoder": "none", "mean_ber": "", "mean_niis": "", "mean_sao": "",
                     "n_matrices": 0, "n_runs": 0, "base_seed": cfg.base_seed})
    rows.sort(key=lambda r: (r["entropy_target"], order.get(r["decoder"], 99)))
    return rows


def sweep_overall(cfg: ExperimentConfig) -> list[dict]:
    results, skipped = sweep_overall_runs(cfg)
    return aggregate_overall(results, cfg, skipped)


def sweep_constant_entropy(cfg: ExperimentConfig) -> tuple[list[RunResult], dict]:
    """One fixed matrix per target and one watermark shared by every run.

    Returns the per-run results and a ``{target: ChannelModel}`` map.
    """
    watermark = shared_watermark(cfg)
    tasks = []
    models = {}
    for ti, target in enumerate(cfg.targets):
        try:
            model = _matrix_for(cfg, ti, 0, target)
        except MatrixNotFoundError as exc:
            log.warning("skipping target %s: %s", target, exc)
            continue
        models[target] = model
        for chunk in _split(range(cfg.constant_iterations), cfg.workers):
            tasks.append((model, cfg.base_seed, ti, 0, chunk,
                          (cfg.decoders, cfg.message_bits, cfg.initial_state),
                          watermark.bits, target))
    return _execute(tasks, cfg.workers), models


# --- analysis of constant-entropy results ---------------------------------

def _pairs_by_run(rows: Sequence[dict]):
    by_run = defaultdict(dict)
    for r in rows:
        by_run[(r["entropy"], r["matrix_id"], r["run_id"])][r["decoder"]] = r
    return by_run


def error_level_analysis(rows: Sequence[dict], stationary: dict | None = None,
                         gamma: int | None = None) -> list[dict]:
    """Count DM1 wins, FSMC wins and ties (by NIIS) per realised error level."""
    if not rows:
        raise ValueError("no constant-entropy results to analyse")
    by_run = _pairs_by_run(rows)
    counts = defaultdict(lambda: [0, 0, 0])
    for (entropy, _, _), decs in by_run.items():
        if "dm1" not in decs or "fsmc" not in decs:
            continue
        dm1, fsmc = decs["dm1"]["niis"], decs["fsmc"]["niis"]
        outcome = 2 if dm1 == fsmc else (0 if dm1 < fsmc else 1)
        for param, col in (("p_d", "realized_pd"), ("p_i", "realized_pi"),
                           ("p_s", "realized_ps")):
            counts[(entropy, param, decs["dm1"][col])][outcome] += 1
    if not counts:
        raise ValueError("results contain no runs with both dm1 and fsmc")
    out = []
    for (entropy, param, value) in sorted(counts):
        c = counts[(entropy, param, value)]
        ref = (stationary or {}).get(entropy, {}).get(param, "")
        out.append({"entropy": entropy, "parameter": param, "realized_value": value,
                    "dm1_better": c[0], "fsmc_better": c[1], "tie": c[2],
                    "stationary_value": ref})
    return out


def ps_effect_analysis(rows: Sequence[dict], gamma: int = 600,
                       max_count: int = 4) -> list[dict]:
    """Mean NIIS per decoder binned by the realised number of substitutions."""
    if not rows:
        raise ValueError("no constant-entropy results to analyse")
    bins = defaultdict(list)
    entropies, decoders = set(), set()
    for r in rows:
        n_sub = int(round(r["realized_ps"] * gamma))
        bins[(r["entropy"], r["decoder"], n_sub)].append(r["niis"])
        entropies.add(r["entropy"])
        decoders.add(r["decoder"])
    order = {name: i for i, name in enumerate(DECODERS)}
    out = []
    for entropy in sorted(entropies):
        observed = {k[2] for k in bins if k[0] == entropy}
        for n_sub in sorted(set(range(max_count + 1)) | observed):
            for dec in sorted(decoders, key=lambda x: order.get(x, 99)):
                vals = bins.get((entropy, dec, n_sub), [])
                out.append({"entropy": entropy, "n_substitutions": n_sub,
                            "p_s": round(n_sub / gamma, 4), "decoder": dec,
                            "count": len(vals),
                            "mean_niis": _mean(vals) if vals else ""})
    return out


# --- csv helpers -----------------------------------------------------------

def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def write_rows(path, columns: Sequence[str], rows: Iterable) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            if isinstance(row, dict):
                row = [_fmt(row[c]) for c in columns]
            w.writerow(row)
    return path


def write_constant_csv(path, results: Iterable[RunResult]) -> Path:
    return write_rows(path, CONSTANT_COLUMNS, (r.constant_row() for r in results))


def write_overall_csv(path, rows: Iterable[dict]) -> Path:
    return write_rows(path, OVERALL_COLUMNS, rows)


def _num(text: str):
    if text == "":
        return ""
    try:
        return int(text)
    except ValueError:
        return float(text)


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: (v if k == "decoder" or k == "parameter" else _num(v))
                 for k, v in row.items()} for row in csv.DictReader(fh)]


def write_models_json(path, models: dict) -> Path:
    """Matrices and stationary error levels behind a constant-entropy sweep."""
    payload = {}
    for target, m in sorted(models.items()):
        payload[repr(target)] = {
            "entropy": m.entropy,
            "matrix4": m.a4.to_dict(),
            "matrix3": m.a3.to_dict(),
            "stationary": {"p_t": m.params.p_t, "p_s": m.params.p_s,
                           "p_d": m.params.p_d, "p_i": m.params.p_i},
        }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def read_stationary(path) -> dict:
    data = json.loads(Path(path).read_text())
    return {float(k): v["stationary"] for k, v in data.items()}
