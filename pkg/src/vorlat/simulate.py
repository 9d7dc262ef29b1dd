"""AWGN experiments: constellation energy, WER sweeps, and encode benchmarks.

Noise and message draws come from counter-based Philox streams keyed by
(seed, trial block), so a run is reproducible from (seed, trial index) no
matter how trials are batched, and parallel or early-stopped runs agree with
sequential ones. The Es/N0 convention is documented in SIGMA_FORMULA and
echoed into CSV headers; only dB differences between paired runs are
calibration-free.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .codes import LinearCode, make_rep_spc_chain
from .lattice import standard_lattice
from .quantize import fold_batch, round_half_up
from .shaping import VoronoiCodeSpec

_TRIAL_BLOCK = 4096
_TABLE_ML_LIMIT = 1 << 14
_EXHAUSTIVE_LIMIT = 1 << 20

SIGMA_FORMULA = "sigma^2 = Es/(2*10^(EsN0_dB/10))*(1/2) with Es = 2*average_energy"


@dataclass(frozen=True)
class ChannelConfig:
    """Per-dimension noise level plus the reproducibility seed."""

    sigma: float
    seed: int = 0
    trials: int = 1

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")


@dataclass(frozen=True)
class WerPoint:
    es_n0_db: float
    wer: float
    errors: int
    trials: int
    ci_low: float
    ci_high: float


def _stream(seed: int, lane: int, block: int) -> np.random.Generator:
    key = np.random.SeedSequence(seed, spawn_key=(lane, block))
    return np.random.Generator(np.random.Philox(key))


def transmit(x, cfg: ChannelConfig, trial_offset: int = 0) -> np.ndarray:
    """y = x + white Gaussian noise, std cfg.sigma per dimension.

    The noise of absolute trial t is a fixed function of (cfg.seed, t):
    trials are grouped into fixed blocks and each block has its own Philox
    stream, so batching and early stopping cannot change any draw.
    """
    arr = np.asarray(x, dtype=np.float64)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[None, :]
    rows, n = arr.shape
    out = arr.copy()
    done = 0
    while done < rows:
        t = trial_offset + done
        block, inner = divmod(t, _TRIAL_BLOCK)
        take = min(_TRIAL_BLOCK - inner, rows - done)
        noise = _stream(cfg.seed, 0, block).normal(0.0, cfg.sigma, (_TRIAL_BLOCK, n))
        out[done : done + take] += noise[inner : inner + take]
        done += take
    return out[0] if squeeze else out


def random_ordinals(spec: VoronoiCodeSpec, count: int, seed: int,
                    trial_offset: int = 0) -> np.ndarray:
    """Uniform message ordinals, reproducible per (seed, trial index)."""
    out = np.empty(count, dtype=np.int64)
    done = 0
    while done < count:
        t = trial_offset + done
        block, inner = divmod(t, _TRIAL_BLOCK)
        take = min(_TRIAL_BLOCK - inner, count - done)
        draws = _stream(seed, 1, block).integers(
            0, spec.message_count, _TRIAL_BLOCK, dtype=np.int64
        )
        out[done : done + take] = draws[inner : inner + take]
        done += take
    return out


# ---------------------------------------------------------------------------
# energy and the Es/N0 mapping


def average_energy(spec: VoronoiCodeSpec, samples: int = 100_000, seed: int = 0) -> float:
    """Mean squared norm per dimension over the constellation.

    Exact (full enumeration) when the constellation is small enough,
    otherwise a Monte Carlo average over `samples` random messages.
    """
    if spec.message_count <= _EXHAUSTIVE_LIMIT:
        pts = spec.enumerate_constellation()
        total = int((pts.astype(np.int64) ** 2).sum())
        return total / (spec.message_count * spec.n)
    energy, _ = sampled_energy(spec, samples, seed)
    return energy


def sampled_energy(spec: VoronoiCodeSpec, samples: int, seed: int = 0) -> tuple:
    """(Monte Carlo energy per dimension, standard error)."""
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        take = min(_TRIAL_BLOCK, samples - done)
        ords = random_ordinals(spec, take, seed, trial_offset=done)
        x = spec.encode_batch(ords).astype(np.float64)
        per = (x * x).sum(axis=1) / spec.n
        total += float(per.sum())
        total_sq += float((per * per).sum())
        done += take
    mean = total / done
    var = max(total_sq / done - mean * mean, 0.0)
    return mean, math.sqrt(var / done)


def sigma_for(energy_per_dim: float, es_n0_db: float) -> float:
    """Noise std per dimension for the documented Es/N0 convention."""
    es = 2.0 * energy_per_dim
    ratio = 10.0 ** (es_n0_db / 10.0)
    return math.sqrt(es / (2.0 * ratio) * 0.5)


def wilson_interval(errors: int, trials: int, z: float = 1.96) -> tuple:
    """95% score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return max(center - half, 0.0), min(center + half, 1.0)


# ---------------------------------------------------------------------------
# decoders


def _table_ml_batch(code: LinearCode, costs: np.ndarray) -> np.ndarray:
    """Exact ML over the full codeword table (first minimal index wins)."""
    words = code.codewords()
    idx = np.arange(code.n)[None, :] * code.q + words
    flat = costs.reshape(costs.shape[0], -1)
    scores = flat[:, idx].sum(axis=2)
    return words[np.argmin(scores, axis=1)]


def _wagner_ml_batch(code: LinearCode, costs: np.ndarray) -> np.ndarray:
    """Exact ML for binary codes with a single parity constraint.

    Take the cheaper bit everywhere; if the dual constraint is violated,
    flip the constrained position with the smallest cost penalty.
    """
    h = code.parity_check()[0]
    delta = costs[:, :, 1] - costs[:, :, 0]
    bits = (delta < 0).astype(np.int64)
    syndrome = (bits @ h) % 2
    penalty = np.abs(delta) + np.where(h[None, :] == 1, 0.0, np.inf)
    flip = np.argmin(penalty, axis=1)
    rows = np.nonzero(syndrome == 1)[0]
    bits[rows, flip[rows]] ^= 1
    return bits


class MultistageDecoder:
    """Level-by-level decoding: per-symbol metrics, code ML, subtract.

    Level i sees the residual of the levels below it; its per-symbol cost for
    symbol v is the squared distance from the residual to the nearest integer
    congruent to v at scale q^i. After the last level the residual is rounded
    to the integer grid and the assembled lattice point is folded back into
    the constellation.
    """

    def __init__(self, spec: VoronoiCodeSpec):
        self.spec = spec
        self._strategies = []
        for level, code in enumerate(spec.chain.codes):
            if code.q**code.k <= _TABLE_ML_LIMIT:
                self._strategies.append(_table_ml_batch)
            elif code.q == 2 and code.k == code.n - 1:
                self._strategies.append(_wagner_ml_batch)
            else:
                raise ValueError(
                    f"level {level} code is too large for exhaustive metrics"
                )

    def decode_batch(self, ys: np.ndarray) -> np.ndarray:
        spec = self.spec
        y = np.asarray(ys, dtype=np.float64)
        t = y - spec._offset_np
        assembled = np.zeros(t.shape, dtype=np.int64)
        for level, (code, ml) in enumerate(zip(spec.chain.codes, self._strategies)):
            scale = float(spec.q**level)
            costs = np.empty(t.shape + (spec.q,), dtype=np.float64)
            for v in range(spec.q):
                z = round_half_up((t / scale - v) / spec.q)
                costs[:, :, v] = (t - scale * (v + spec.q * z)) ** 2
            words = ml(code, costs)
            assembled += spec.q**level * words
            t = t - scale * words
        grid = round_half_up(t / spec.qa).astype(np.int64)
        lattice_points = assembled + spec.qa * grid + spec._offset_np
        return fold_batch(spec._quantizer, lattice_points)

    def decode(self, y) -> np.ndarray:
        return self.decode_batch(np.asarray(y, dtype=np.float64)[None, :])[0]


class ExhaustiveDecoder:
    """Argmin of the Euclidean distance over the whole constellation."""

    def __init__(self, spec: VoronoiCodeSpec, chunk: int = 1024):
        if spec.message_count > _EXHAUSTIVE_LIMIT:
            raise ValueError(
                f"constellation has {spec.message_count} points, "
                f"more than the exhaustive bound {_EXHAUSTIVE_LIMIT}"
            )
        self.spec = spec
        self._points = spec.enumerate_constellation()
        self._float_pts = self._points.astype(np.float64)
        self._norms = (self._float_pts**2).sum(axis=1)
        self._chunk = chunk

    def decode_batch(self, ys: np.ndarray) -> np.ndarray:
        y = np.asarray(ys, dtype=np.float64)
        out = np.empty(y.shape, dtype=np.int64)
        for start in range(0, len(y), self._chunk):
            part = y[start : start + self._chunk]
            scores = self._norms[None, :] - 2.0 * (part @ self._float_pts.T)
            out[start : start + self._chunk] = self._points[np.argmin(scores, axis=1)]
        return out

    def decode(self, y) -> np.ndarray:
        return self.decode_batch(np.asarray(y, dtype=np.float64)[None, :])[0]


def make_decoder(spec: VoronoiCodeSpec, mode: str):
    if mode == "multistage":
        return MultistageDecoder(spec)
    if mode == "exhaustive_ml":
        return ExhaustiveDecoder(spec)
    raise ValueError(f"unknown decode mode {mode!r}")


def decode_lattice(spec: VoronoiCodeSpec, y, mode: str = "multistage") -> np.ndarray:
    """Decode one received vector (or a batch) back to constellation points."""
    decoder = make_decoder(spec, mode)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        return decoder.decode(y)
    return decoder.decode_batch(y)


# ---------------------------------------------------------------------------
# WER sweeps


def wer_sweep(spec: VoronoiCodeSpec, es_n0_list, *, trials: int, seed: int = 0,
              mode: str = "multistage", max_errors: int = 200,
              energy: float | None = None, decoder=None) -> list:
    """WER at each Es/N0 point, stopping a point early after max_errors.

    Messages and noise are paired across points and across specs sharing a
    seed, so dB gaps between paired sweeps are low-variance.
    """
    db_values = [float(v) for v in es_n0_list]
    if energy is None:
        energy = average_energy(spec)
    if decoder is None:
        decoder = make_decoder(spec, mode)
    points = []
    for db in db_values:
        sigma = sigma_for(energy, db)
        errors = 0
        done = 0
        while done < trials and errors < max_errors:
            take = min(_TRIAL_BLOCK, trials - done)
            ords = random_ordinals(spec, take, seed, trial_offset=done)
            x = spec.encode_batch(ords)
            y = transmit(x, ChannelConfig(sigma, seed, take), trial_offset=done)
            decoded = decoder.decode_batch(y)
            errors += int(np.any(decoded != x, axis=1).sum())
            done += take
        lo, hi = wilson_interval(errors, done)
        points.append(WerPoint(db, errors / done, errors, done, lo, hi))
    return points


def interpolate_db_at_wer(points, target_wer: float) -> float:
    """Es/N0 where the sweep crosses target_wer, log-linear in WER."""
    pts = sorted(points, key=lambda p: p.es_n0_db)
    for a, b in zip(pts, pts[1:]):
        if a.wer >= target_wer >= b.wer and a.wer > 0 and b.wer > 0:
            if a.wer == b.wer:
                return a.es_n0_db
            la, lb, lt = math.log10(a.wer), math.log10(b.wer), math.log10(target_wer)
            frac = (lt - la) / (lb - la)
            return a.es_n0_db + frac * (b.es_n0_db - a.es_n0_db)
    raise ValueError(f"sweep does not bracket WER {target_wer:g}")


def wer_gap_db(points_a, points_b, target_wer: float = 1e-3) -> float:
    """Horizontal dB gap between two sweeps at the target WER (a minus b)."""
    return interpolate_db_at_wer(points_a, target_wer) - interpolate_db_at_wer(
        points_b, target_wer
    )


def wer_points_to_csv(points, header_lines=()) -> str:
    lines = ["# " + h for h in header_lines]
    lines.append("es_n0_db,wer,errors,trials,ci_low,ci_high")
    for p in points:
        lines.append(
            f"{p.es_n0_db:.6g},{p.wer:.8g},{p.errors},{p.trials},"
            f"{p.ci_low:.8g},{p.ci_high:.8g}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# encoding benchmark


@dataclass(frozen=True)
class BenchResult:
    dim: int
    baseline_ns: float  # dense generator multiply, per message
    split_encode_ns: float  # code encoders + digit assembly (no fold), per message
    code_encode_ns: float  # code encoders alone, per message
    fold_ns: float  # blockwise fold, per message
    outputs_match: bool


def _random_components(spec: VoronoiCodeSpec, trials: int, rng) -> tuple:
    msgs = [
        rng.integers(0, spec.q, size=(trials, code.k), dtype=np.int64)
        for code in spec.chain.codes
    ]
    box = np.array(spec.s_box, dtype=np.int64)
    s = rng.integers(0, box[None, :], size=(trials, spec.n), dtype=np.int64)
    return msgs, s


def _assemble(spec: VoronoiCodeSpec, encoded_levels, s) -> np.ndarray:
    x = np.zeros(s.shape, dtype=np.int64)
    for level, words in enumerate(encoded_levels):
        x += spec.q**level * words
    return x + spec.qa * s + spec._offset_np


def _exact_coordinates(spec: VoronoiCodeSpec, reps: np.ndarray) -> np.ndarray:
    """Integer coefficient vectors b with G b = rep, by triangular solve."""
    t = spec.coding.float_triangular()
    b = np.linalg.solve(t, (reps - spec._offset_np).astype(np.float64).T)
    bi = np.rint(b).astype(np.int64)
    check = spec.coding.triangular_generator.to_int64() @ bi
    if not np.array_equal(check, (reps - spec._offset_np).T.astype(np.int64)):
        raise AssertionError("baseline coordinates failed exact verification")
    return bi


def complexity_bench(spec: VoronoiCodeSpec, trials: int = 256, repeats: int = 9,
                     seed: int = 0) -> BenchResult:
    """Median per-message cost of dense encoding vs the split encoder.

    Times (a) the dense n x n generator multiply on precomputed coordinates,
    (b) the split path (per-level code encoders plus digit assembly),
    (c) the code encoders alone, and (d) the fold, on identical messages,
    and verifies both paths produce identical points.
    """
    rng = np.random.default_rng(seed)
    msgs, s = _random_components(spec, trials, rng)
    encoded = [c.encode_batch(m) for c, m in zip(spec.chain.codes, msgs)]
    reps = _assemble(spec, encoded, s)
    coords = _exact_coordinates(spec, reps)
    gen = spec.coding.triangular_generator.to_int64()

    def run_baseline():
        return (gen @ coords).T + spec._offset_np

    def run_code_only():
        return [c.encode_batch(m) for c, m in zip(spec.chain.codes, msgs)]

    def run_split():
        return _assemble(spec, [c.encode_batch(m) for c, m in zip(spec.chain.codes, msgs)], s)

    def run_fold():
        return fold_batch(spec._quantizer, reps)

    baseline_pts = run_baseline()
    split_pts = run_split()
    match = np.array_equal(baseline_pts, reps) and np.array_equal(split_pts, reps)

    def med_ns(fn):
        fn()  # warm-up
        times = []
        for _ in range(repeats):
            start = time.perf_counter_ns()
            fn()
            times.append(time.perf_counter_ns() - start)
        return float(np.median(times)) / trials

    return BenchResult(
        dim=spec.n,
        baseline_ns=med_ns(run_baseline),
        split_encode_ns=med_ns(run_split),
        code_encode_ns=med_ns(run_code_only),
        fold_ns=med_ns(run_fold),
        outputs_match=bool(match),
    )


def bench_spec_for_dim(n: int) -> VoronoiCodeSpec:
    """Stock benchmark family: rep/spc chain over direct sums of 8-dim blocks."""
    if n % 8 or n < 8:
        raise ValueError("benchmark dimensions must be positive multiples of 8")
    return VoronoiCodeSpec(
        make_rep_spc_chain(n),
        standard_lattice("E8_int"),
        copies=n // 8,
        name=f"bench{n}",
    )


def bench_family(dims=(8, 16, 32, 64, 128, 256, 512), trials: int = 256,
                 repeats: int = 9, seed: int = 0) -> list:
    return [
        complexity_bench(bench_spec_for_dim(n), trials=trials, repeats=repeats,
                         seed=seed)
        for n in dims
    ]


def bench_to_csv(results, header_lines=()) -> str:
    lines = ["# " + h for h in header_lines]
    lines.append("dim,baseline_ns,split_encode_ns,code_encode_ns,fold_ns,outputs_match")
    for r in results:
        lines.append(
            f"{r.dim},{r.baseline_ns:.1f},{r.split_encode_ns:.1f},"
            f"{r.code_encode_ns:.1f},{r.fold_ns:.1f},{int(r.outputs_match)}"
        )
    return "\n".join(lines) + "\n"
