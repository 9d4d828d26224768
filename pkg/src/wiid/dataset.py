"""Single- and multi-label snapshot datasets.

Records live in one numpy structured array whose dtype is byte-for-byte the
on-disk record layout, so saving and loading are a header plus one buffer.
Every record draws its randomness from ``derive_seed(master_seed, stream,
index)``, which makes generation independent of execution order.
"""
from __future__ import annotations

import hashlib
import json
import math
import struct
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .signals import NUM_CLASSES, SNAPSHOT_LEN, class_spec, measure_power, synthesize_burst

MAX_INTERFERERS = 6
NO_CLASS = 0xFF

STREAM_SINGLE = 0
STREAM_MULTI = 1
STREAM_SPLIT = 2
STREAM_SCENARIO = 3

RECORD_DTYPE = np.dtype([
    ("labels", "<u2"),
    ("utilized", "u1"),
    ("num_interferers", "u1"),
    ("snr_db", "<f4"),
    ("seed", "<u8"),
    ("iq", "<f4", (SNAPSHOT_LEN, 2)),
])


class SirMode(str, Enum):
    POWER_PRESERVING = "POWER_PRESERVING"
    LITERAL_ONE_OVER_N = "LITERAL_ONE_OVER_N"


def interference_weight(n: int, sir_mode: SirMode | str) -> float:
    """Amplitude applied to the sum of ``n`` interferers."""
    if SirMode(sir_mode) is SirMode.POWER_PRESERVING:
        return 1.0 / math.sqrt(n)
    return 1.0 / n


# --------------------------------------------------------------------------
# seeds and labels

def derive_seed(master_seed: int, *keys: int) -> int:
    """Counter-based 64-bit seed for ``keys`` under ``master_seed``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def labels_to_mask(labels: Iterable[int]) -> int:
    mask = 0
    for c in labels:
        if not 0 <= int(c) < NUM_CLASSES:
            raise ValueError(f"class id out of range: {c}")
        mask |= 1 << int(c)
    return mask


def mask_to_labels(mask: int) -> frozenset[int]:
    return frozenset(c for c in range(NUM_CLASSES) if (int(mask) >> c) & 1)


def mask_matrix(masks: np.ndarray) -> np.ndarray:
    """Bitmasks of shape (n,) to a boolean (n, 15) label matrix."""
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[:, None] >> np.arange(NUM_CLASSES)) & 1).astype(bool)


# --------------------------------------------------------------------------
# configuration

@dataclass
class GenConfig:
    snapshots_per_class_snr: int = 715
    snr_grid: list[float] = field(default_factory=lambda: [float(s) for s in range(-20, 21, 2)])
    multi_total: int = 450_000
    interferer_counts: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5, 6])
    sir_mode: SirMode = SirMode.POWER_PRESERVING
    master_seed: int = 0
    train_fraction: float = 0.8
    source_snr_db: float = 20.0

    def __post_init__(self):
        self.sir_mode = SirMode(self.sir_mode)
        self.snr_grid = [float(s) for s in self.snr_grid]
        self.interferer_counts = [int(n) for n in self.interferer_counts]

    def validate(self) -> "GenConfig":
        if self.snapshots_per_class_snr < 1:
            raise ValueError("snapshots_per_class_snr must be positive")
        if not self.snr_grid:
            raise ValueError("snr_grid is empty")
        if any(b <= a for a, b in zip(self.snr_grid, self.snr_grid[1:])):
            raise ValueError("snr_grid must be strictly increasing")
        if not self.interferer_counts:
            raise ValueError("interferer_counts is empty")
        if len(set(self.interferer_counts)) != len(self.interferer_counts):
            raise ValueError("interferer_counts has duplicates")
        if any(not 1 <= n <= MAX_INTERFERERS for n in self.interferer_counts):
            raise ValueError(f"interferer counts must lie in [1, {MAX_INTERFERERS}]")
        if self.multi_total < 0 or self.multi_total % len(self.interferer_counts):
            raise ValueError("multi_total must be a non-negative multiple of len(interferer_counts)")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sir_mode"] = self.sir_mode.value
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "GenConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown generation config keys: {sorted(unknown)}")
        return cls(**data).validate()

    @property
    def single_count(self) -> int:
        return NUM_CLASSES * len(self.snr_grid) * self.snapshots_per_class_snr

    @property
    def per_interferer_count(self) -> int:
        return self.multi_total // len(self.interferer_counts)


# --------------------------------------------------------------------------
# records and datasets

@dataclass(eq=False)
class DatasetRecord:
    snapshot: np.ndarray
    labels: frozenset[int]
    utilized_class: int | None = None
    snr_db: float | None = None
    num_interferers: int = 0
    seed: int = 0


def _record_row(rec: DatasetRecord) -> np.ndarray:
    if not rec.labels:
        raise ValueError("a record needs at least one label")
    if len(rec.labels) > MAX_INTERFERERS + 1:
        raise ValueError("a record carries at most seven labels")
    if rec.utilized_class is not None and rec.utilized_class not in rec.labels:
        raise ValueError("utilized class must be one of the labels")
    row = np.zeros((), dtype=RECORD_DTYPE)
    x = np.asarray(rec.snapshot)
    row["labels"] = labels_to_mask(rec.labels)
    row["utilized"] = NO_CLASS if rec.utilized_class is None else rec.utilized_class
    row["num_interferers"] = rec.num_interferers
    row["snr_db"] = np.nan if rec.snr_db is None else rec.snr_db
    row["seed"] = rec.seed
    row["iq"][:, 0] = x.real
    row["iq"][:, 1] = x.imag
    return row


class Dataset:
    """Columnar collection of snapshot records plus a generation manifest."""

    def __init__(self, records: np.ndarray | None = None, manifest: dict | None = None):
        if records is None:
            records = np.zeros(0, dtype=RECORD_DTYPE)
        if records.dtype != RECORD_DTYPE:
            raise TypeError("records must use RECORD_DTYPE")
        self.records = records
        self.manifest = dict(manifest or {})

    @classmethod
    def from_records(cls, recs: Sequence[DatasetRecord], manifest: dict | None = None) -> "Dataset":
        arr = np.zeros(len(recs), dtype=RECORD_DTYPE)
        for i, rec in enumerate(recs):
            arr[i] = _record_row(rec)
        return cls(arr, manifest)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i: int) -> DatasetRecord:
        row = self.records[i]
        snr = float(row["snr_db"])
        util = int(row["utilized"])
        return DatasetRecord(
            snapshot=(row["iq"][:, 0] + 1j * row["iq"][:, 1]).astype(np.complex64),
            labels=mask_to_labels(row["labels"]),
            utilized_class=None if util == NO_CLASS else util,
            snr_db=None if math.isnan(snr) else snr,
            num_interferers=int(row["num_interferers"]),
            seed=int(row["seed"]),
        )

    def __iter__(self) -> Iterator[DatasetRecord]:
        for i in range(len(self)):
            yield self[i]

    @property
    def samples(self) -> np.ndarray:
        iq = self.records["iq"]
        return (iq[..., 0] + 1j * iq[..., 1]).astype(np.complex64)

    @property
    def label_masks(self) -> np.ndarray:
        return self.records["labels"]

    def label_matrix(self) -> np.ndarray:
        return mask_matrix(self.records["labels"])

    @property
    def utilized(self) -> np.ndarray:
        """Utilized class per record, -1 where there is none."""
        u = self.records["utilized"].astype(np.int64)
        u[u == NO_CLASS] = -1
        return u

    @property
    def num_interferers(self) -> np.ndarray:
        return self.records["num_interferers"].astype(np.int64)

    @property
    def snr_db(self) -> np.ndarray:
        return self.records["snr_db"].astype(np.float64)

    def subset(self, indices, manifest: dict | None = None) -> "Dataset":
        return Dataset(self.records[np.asarray(indices, dtype=np.int64)].copy(),
                       self.manifest if manifest is None else manifest)

    def checksum(self) -> str:
        return hashlib.sha256(self.records.tobytes()).hexdigest()


# --------------------------------------------------------------------------
# noise and single-label generation

def add_awgn(snapshot: np.ndarray, snr_db: float, seed: int) -> np.ndarray:
    """Add circular complex Gaussian noise at ``snr_db`` below the measured signal power."""
    x = np.asarray(snapshot, dtype=complex)
    if math.isinf(snr_db) and snr_db > 0:
        return x.copy()
    p = measure_power(x)
    if abs(p - 1.0) > 1e-3:
        warnings.warn(f"add_awgn expects a unit-power snapshot, measured {p:.4g}", stacklevel=2)
    var = p * 10.0 ** (-snr_db / 10.0)
    rng = np.random.default_rng(int(seed))
    noise = rng.standard_normal((2, x.shape[-1]))
    return x + math.sqrt(var / 2.0) * (noise[0] + 1j * noise[1])


def _single_row(config: GenConfig, index: int) -> np.ndarray:
    per = config.snapshots_per_class_snr
    n_snr = len(config.snr_grid)
    cls = index // (n_snr * per)
    snr = config.snr_grid[(index // per) % n_snr]
    seed = derive_seed(config.master_seed, STREAM_SINGLE, index)
    variants = class_spec(cls).variant_set
    pick = np.random.default_rng(derive_seed(seed, 1)).integers(len(variants))
    burst = synthesize_burst(cls, variants[int(pick)], seed)
    x = add_awgn(burst, snr, derive_seed(seed, 2))
    row = np.zeros((), dtype=RECORD_DTYPE)
    row["labels"] = 1 << cls
    row["utilized"] = NO_CLASS
    row["num_interferers"] = 0
    row["snr_db"] = snr
    row["seed"] = seed
    row["iq"][:, 0] = x.real
    row["iq"][:, 1] = x.imag
    return row


def _single_chunk(config: GenConfig, start: int, stop: int) -> np.ndarray:
    out = np.zeros(stop - start, dtype=RECORD_DTYPE)
    for i in range(start, stop):
        out[i - start] = _single_row(config, i)
    return out


def _chunks(total: int, size: int):
    return [(s, min(s + size, total)) for s in range(0, total, size)]


def _run_chunks(fn, args, total: int, workers: int, chunk: int = 4096) -> np.ndarray:
    out = np.zeros(total, dtype=RECORD_DTYPE)
    spans = _chunks(total, chunk)
    if workers <= 1 or len(spans) <= 1:
        for a, b in spans:
            out[a:b] = fn(*args, a, b)
        return out
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futures = [(a, b, ex.submit(fn, *args, a, b)) for a, b in spans]
        for a, b, fut in futures:
            out[a:b] = fut.result()
    return out


def _manifest(kind: str, config: GenConfig, **extra) -> dict:
    return {"kind": kind, "config": config.to_dict(), **extra}


def generate_single_label(config: GenConfig, workers: int = 1) -> Dataset:
    """Every (class, SNR) pair gets ``snapshots_per_class_snr`` records."""
    config.validate()
    records = _run_chunks(_single_chunk, (config,), config.single_count, workers)
    return Dataset(records, _manifest("single", config, count=len(records)))


# --------------------------------------------------------------------------
# multi-label generation

def _mix(utilized: np.ndarray, interferers: Sequence[np.ndarray], weight: float):
    """Utilized component, weighted interference component, and their sum."""
    acc = np.asarray(interferers[0], dtype=complex)
    for x in interferers[1:]:
        acc = acc + np.asarray(x, dtype=complex)
    interference = weight * acc
    u = np.asarray(utilized, dtype=complex)
    return u, interference, u + interference


def combine_multi_label(utilized: DatasetRecord, interferers: Sequence[DatasetRecord],
                        sir_mode: SirMode | str = SirMode.POWER_PRESERVING,
                        seed: int = 0) -> DatasetRecord:
    n = len(interferers)
    if not 1 <= n <= MAX_INTERFERERS:
        raise ValueError(f"need between 1 and {MAX_INTERFERERS} interferers, got {n}")
    sources = [utilized, *interferers]
    for rec in sources:
        if len(rec.labels) != 1:
            raise ValueError("multi-label records combine single-label sources only")
    classes = [next(iter(rec.labels)) for rec in sources]
    if len(set(classes)) != len(classes):
        raise ValueError(f"source classes must be pairwise distinct, got {classes}")
    _, _, mixed = _mix(utilized.snapshot, [r.snapshot for r in interferers],
                       interference_weight(n, sir_mode))
    snr = utilized.snr_db
    return DatasetRecord(
        snapshot=mixed.astype(np.complex64),
        labels=frozenset(classes),
        utilized_class=classes[0],
        snr_db=snr,
        num_interferers=n,
        seed=int(seed),
    )


def _source_pools(single: Dataset, snr_db: float) -> list[np.ndarray]:
    masks = single.label_masks
    at_snr = single.records["snr_db"] == np.float32(snr_db)
    pools = []
    for c in range(NUM_CLASSES):
        idx = np.flatnonzero(at_snr & (masks == (1 << c)))
        if len(idx) == 0:
            raise ValueError(f"single-label dataset has no {snr_db:g} dB records of class {c}")
        pools.append(idx)
    return pools


def _draw_sources(rng: np.random.Generator, utilized_choices, interferer_choices, n: int, pools):
    utilized = int(rng.choice(utilized_choices))
    others = np.array([c for c in interferer_choices if c != utilized])
    interferers = [int(c) for c in rng.choice(others, size=n, replace=False)]
    sources = [int(pools[c][rng.integers(len(pools[c]))]) for c in [utilized, *interferers]]
    return utilized, interferers, sources


_ALL_CLASSES = np.arange(NUM_CLASSES)


def _draw_multi(config: GenConfig, pools: list[np.ndarray], index: int):
    """Record seed, utilized class, interferer classes, and source record indices."""
    n = config.interferer_counts[index // config.per_interferer_count]
    seed = derive_seed(config.master_seed, STREAM_MULTI, index)
    rng = np.random.default_rng(seed)
    return (seed, *_draw_sources(rng, _ALL_CLASSES, _ALL_CLASSES, n, pools))


def record_components(single: Dataset, config: GenConfig, index: int):
    """Replay multi-label record ``index``: (utilized component, weighted interference)."""
    pools = _source_pools(single, config.source_snr_db)
    _, _, interferers, sources = _draw_multi(config, pools, index)
    samples = single.samples
    u, i, _ = _mix(samples[sources[0]], [samples[s] for s in sources[1:]],
                   interference_weight(len(interferers), config.sir_mode))
    return u, i


def _multi_chunk(config: GenConfig, samples: np.ndarray, pools, start: int, stop: int) -> np.ndarray:
    out = np.zeros(stop - start, dtype=RECORD_DTYPE)
    for i in range(start, stop):
        seed, utilized, interferers, sources = _draw_multi(config, pools, i)
        n = len(interferers)
        _, _, x = _mix(samples[sources[0]], [samples[s] for s in sources[1:]],
                       interference_weight(n, config.sir_mode))
        _fill_row(out[i - start], seed, utilized, interferers, x, config.source_snr_db)
    return out


def generate_multi_label(single: Dataset, config: GenConfig, workers: int = 1) -> Dataset:
    """``multi_total`` records split evenly over ``interferer_counts``, in blocks of equal N."""
    config.validate()
    pools = _source_pools(single, config.source_snr_db)
    samples = single.samples
    records = _run_chunks(_multi_chunk, (config, samples, pools), config.multi_total, workers)
    return Dataset(records, _manifest("multi", config, count=len(records),
                                      source_checksum=single.checksum()))


def _fill_row(row, seed, utilized, interferers, x, snr_db):
    x = x.astype(np.complex64)
    row["labels"] = labels_to_mask([utilized, *interferers])
    row["utilized"] = utilized
    row["num_interferers"] = len(interferers)
    row["snr_db"] = snr_db
    row["seed"] = seed
    row["iq"][:, 0] = x.real
    row["iq"][:, 1] = x.imag


def generate_scenario(single: Dataset, utilized_technology, interferer_technology,
                      interferer_counts: Sequence[int], per_count: int, seed: int,
                      sir_mode: SirMode | str = SirMode.POWER_PRESERVING,
                      source_snr_db: float = 20.0) -> Dataset:
    """Multi-label records with a fixed utilized and interferer technology.

    Same-technology sets (equal technologies) and cross-technology sets are
    both built here; N cannot exceed the number of eligible interferer classes.
    """
    from .signals import Technology, classes_of

    ut, it = Technology(utilized_technology), Technology(interferer_technology)
    u_choices = np.array(classes_of(ut))
    i_choices = classes_of(it)
    most = len(i_choices) - (1 if ut is it else 0)
    counts = [int(n) for n in interferer_counts]
    if any(not 1 <= n <= min(most, MAX_INTERFERERS) for n in counts):
        raise ValueError(f"{it.value} interferers with a {ut.value} utilized signal allow N <= {most}")
    pools = _source_pools(single, source_snr_db)
    samples = single.samples
    tech_key = [t.value for t in Technology].index
    records = np.zeros(len(counts) * per_count, dtype=RECORD_DTYPE)
    for i in range(len(records)):
        n = counts[i // per_count]
        rseed = derive_seed(seed, STREAM_SCENARIO, tech_key(ut.value), tech_key(it.value), i)
        rng = np.random.default_rng(rseed)
        utilized, interferers, sources = _draw_sources(rng, u_choices, i_choices, n, pools)
        _, _, x = _mix(samples[sources[0]], [samples[s] for s in sources[1:]],
                       interference_weight(n, sir_mode))
        _fill_row(records[i], rseed, utilized, interferers, x, source_snr_db)
    manifest = {"kind": "scenario", "utilized_technology": ut.value,
                "interferer_technology": it.value, "interferer_counts": counts,
                "per_count": per_count, "seed": int(seed), "sir_mode": SirMode(sir_mode).value,
                "source_snr_db": source_snr_db, "count": len(records),
                "source_checksum": single.checksum()}
    return Dataset(records, manifest)


def split_train_val(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Random partition stratified by interferer count."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    n_int = dataset.num_interferers
    train_idx, val_idx = [], []
    for n in np.unique(n_int):
        idx = np.flatnonzero(n_int == n)
        perm = np.random.default_rng(derive_seed(seed, STREAM_SPLIT, int(n))).permutation(idx)
        k = int(math.floor(train_fraction * len(idx) + 0.5))
        train_idx.append(perm[:k])
        val_idx.append(perm[k:])
    train_idx = np.sort(np.concatenate(train_idx)) if train_idx else np.zeros(0, np.int64)
    val_idx = np.sort(np.concatenate(val_idx)) if val_idx else np.zeros(0, np.int64)
    if len(train_idx) == 0 or len(val_idx) == 0:
        raise ValueError(f"split of {len(dataset)} records at {train_fraction} leaves an empty side")
    parent = dataset.manifest
    split = {"train_fraction": train_fraction, "seed": int(seed), "parent_checksum": dataset.checksum()}
    train = dataset.subset(train_idx, {**parent, "split": {**split, "side": "train"},
                                       "count": len(train_idx)})
    val = dataset.subset(val_idx, {**parent, "split": {**split, "side": "val"},
                                   "count": len(val_idx)})
    return train, val


# --------------------------------------------------------------------------
# file format

MAGIC = b"WIID"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHQH")


class DatasetFileError(Exception):
    """Base class for dataset file problems."""


class DatasetVersionError(DatasetFileError):
    """Bad magic bytes or unsupported format version."""


class DatasetTruncatedError(DatasetFileError):
    """File is shorter (or longer) than its header promises."""


class DatasetIOError(DatasetFileError):
    """The file could not be read or written."""


def manifest_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    path = Path(path)
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, len(dataset), SNAPSHOT_LEN)
    try:
        with open(path, "wb") as f:
            f.write(header)
            f.write(np.ascontiguousarray(dataset.records).tobytes())
        manifest_path(path).write_text(
            json.dumps(dataset.manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise DatasetIOError(f"cannot write dataset {path}: {e}") from e


def read_header(path: str | Path) -> tuple[int, int]:
    """(format version, record count) after checking magic and size."""
    path = Path(path)
    try:
        with open(path, "rb") as f:
            raw = f.read(_HEADER.size)
        size = path.stat().st_size
    except OSError as e:
        raise DatasetIOError(f"cannot read dataset {path}: {e}") from e
    if len(raw) < _HEADER.size:
        raise DatasetTruncatedError(f"{path}: header truncated ({len(raw)} bytes)")
    magic, version, count, per_record = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise DatasetVersionError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise DatasetVersionError(f"{path}: format version {version} unsupported (want {FORMAT_VERSION})")
    if per_record != SNAPSHOT_LEN:
        raise DatasetVersionError(f"{path}: {per_record} samples per record, expected {SNAPSHOT_LEN}")
    expected = _HEADER.size + count * RECORD_DTYPE.itemsize
    if size != expected:
        raise DatasetTruncatedError(f"{path}: {size} bytes on disk, header implies {expected}")
    return version, count


def load_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    _, count = read_header(path)
    try:
        with open(path, "rb") as f:
            f.seek(_HEADER.size)
            records = np.fromfile(f, dtype=RECORD_DTYPE, count=count)
        mpath = manifest_path(path)
        manifest = json.loads(mpath.read_text(encoding="utf-8")) if mpath.exists() else {}
    except OSError as e:
        raise DatasetIOError(f"cannot read dataset {path}: {e}") from e
    if len(records) != count:
        raise DatasetTruncatedError(f"{path}: read {len(records)} of {count} records")
    return Dataset(records, manifest)
