"""Desk-scale flood benchmark: every node of 1..N blocks receives the same
payload simultaneously, a fixed fraction of each stream transits the shared
master link, and the rest rides the node's direct link.

The master link is a single FIFO resource serving streams in node order, so
its service times accumulate; direct links are independent.  Completion of
stream k is therefore

    latency + cumsum(master_times)[k] + direct_time_k

and a run's elapsed time is the maximum over streams.  That closed form is
exactly what a (time, node-id)-ordered event loop over the two link types
produces, computed without the loop.

Byte accounting is exact rational arithmetic; only durations are floats.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .config import parse_kv
from .errors import InsufficientNodesError, InvalidConfigError, RaggedSamplesError

KB = 1000  # bytes; the size axis scales the paper's MB sweep down to KB


@dataclass(frozen=True)
class LinkModel:
    master_bandwidth: float = 10e6  # bytes/s
    direct_bandwidth: float = 10e6
    latency: float = 1e-3  # seconds, applied once per stream
    jitter: float = 0.0  # ratio; each transfer segment stretches by up to this


@dataclass(frozen=True)
class FloodConfig:
    block_count: Optional[int] = None  # None sweeps 1..4
    nodes_per_block: int = 4
    size_start: int = 1 * KB
    size_stop: int = 100 * KB
    size_step: int = 1 * KB
    repetitions: int = 6
    master_fraction: str = "0.30"  # decimal text, parsed exactly
    link: LinkModel = field(default_factory=LinkModel)
    seed: int = 0

    def validate(self) -> None:
        if self.block_count is not None and not 1 <= self.block_count <= 4:
            raise InvalidConfigError("block_count must be 1..4 (or unset for the sweep)")
        if self.nodes_per_block < 1:
            raise InvalidConfigError("nodes_per_block must be >= 1")
        if self.size_step <= 0:
            raise InvalidConfigError("size_step must be > 0")
        if self.size_start < 0 or self.size_stop < self.size_start:
            raise InvalidConfigError("size range must be 0 <= start <= stop")
        if self.repetitions < 1:
            raise InvalidConfigError("repetitions must be >= 1")
        if not 0 <= self.fraction() <= 1:
            raise InvalidConfigError("master_fraction must be within [0, 1]")
        if self.link.master_bandwidth <= 0 or self.link.direct_bandwidth <= 0:
            raise InvalidConfigError("bandwidths must be positive")
        if self.link.latency < 0 or self.link.jitter < 0:
            raise InvalidConfigError("latency and jitter must be non-negative")

    def fraction(self) -> Fraction:
        try:
            return Fraction(self.master_fraction)
        except (ValueError, ZeroDivisionError):
            raise InvalidConfigError(
                f"master_fraction must be a decimal ratio, got {self.master_fraction!r}"
            ) from None

    def block_counts(self) -> list[int]:
        if self.block_count is not None:
            return [self.block_count]
        return [1, 2, 3, 4]

    def sizes(self) -> list[int]:
        return list(range(self.size_start, self.size_stop + 1, self.size_step))

    @classmethod
    def from_text(cls, text: str) -> "FloodConfig":
        values = parse_kv(text)
        kwargs = {}
        link_kwargs = {}
        int_keys = (
            "nodes_per_block",
            "size_start",
            "size_stop",
            "size_step",
            "repetitions",
            "seed",
        )
        float_link_keys = ("master_bandwidth", "direct_bandwidth", "latency", "jitter")
        for key, raw in values.items():
            try:
                if key == "block_count":
                    kwargs[key] = None if raw in ("", "all") else int(raw)
                elif key in int_keys:
                    kwargs[key] = int(raw)
                elif key == "master_fraction":
                    kwargs[key] = raw
                elif key in float_link_keys:
                    link_kwargs[key] = float(raw)
                else:
                    raise InvalidConfigError(f"unknown flood config key: {key}")
            except ValueError:
                raise InvalidConfigError(f"{key}: cannot parse {raw!r}") from None
        if link_kwargs:
            kwargs["link"] = LinkModel(**link_kwargs)
        config = cls(**kwargs)
        config.validate()
        return config


@dataclass(frozen=True)
class FloodSample:
    block_count: int
    size: int
    rep: int
    elapsed: float
    master_bytes: Fraction
    direct_bytes: Fraction


@dataclass(frozen=True)
class FloodRow:
    blocks: int
    size_bytes: int
    mean_elapsed_s: float
    stddev_s: float
    n: int


@dataclass(frozen=True)
class FloodResult:
    rows: tuple[FloodRow, ...]


def run(config: FloodConfig, fabric=None) -> tuple[FloodResult, list[FloodSample]]:
    """Run the sweep; deterministic for a given (config, seed).

    When a fabric is supplied, the largest swept topology must already have
    its nodes UP; the model itself never touches node state.
    """
    config.validate()
    if fabric is not None:
        needed = max(config.block_counts()) * config.nodes_per_block
        up = len(fabric.up_node_ids())
        if up < needed:
            raise InsufficientNodesError(f"need {needed} nodes UP, have {up}")
    rng = np.random.default_rng(config.seed)
    fraction = config.fraction()
    samples: list[FloodSample] = []
    for blocks in config.block_counts():
        nodes = blocks * config.nodes_per_block
        for size in config.sizes():
            master_each = fraction * size
            direct_each = size - master_each
            master_time = float(master_each) / config.link.master_bandwidth
            direct_time = float(direct_each) / config.link.direct_bandwidth
            for rep in range(config.repetitions):
                elapsed = _one_run(nodes, master_time, direct_time, config.link, rng)
                samples.append(
                    FloodSample(
                        block_count=blocks,
                        size=size,
                        rep=rep,
                        elapsed=elapsed,
                        master_bytes=master_each * nodes,
                        direct_bytes=direct_each * nodes,
                    )
                )
    return aggregate(samples), samples


def _one_run(
    nodes: int, master_time: float, direct_time: float, link: LinkModel, rng
) -> float:
    master_times = np.full(nodes, master_time)
    direct_times = np.full(nodes, direct_time)
    if link.jitter > 0:
        master_times *= 1.0 + link.jitter * rng.random(nodes)
        direct_times *= 1.0 + link.jitter * rng.random(nodes)
    completions = link.latency + np.cumsum(master_times) + direct_times
    return float(completions.max())


def aggregate(samples: list[FloodSample]) -> FloodResult:
    """Mean and population stddev per (blocks, size) cell."""
    if not samples:
        raise RaggedSamplesError("no samples to aggregate")
    cells: dict[tuple[int, int], list[float]] = {}
    for sample in samples:
        cells.setdefault((sample.block_count, sample.size), []).append(sample.elapsed)
    counts = {len(v) for v in cells.values()}
    if len(counts) != 1:
        raise RaggedSamplesError(f"uneven repetition counts: {sorted(counts)}")
    rows = []
    for (blocks, size), elapsed in sorted(cells.items()):
        data = np.asarray(elapsed)
        # identical repetitions spread exactly 0; data.std() leaves a ~1e-19
        # ghost when the mean rounds an ulp away from the common value
        spread = float(data.std(ddof=0)) if np.ptp(data) > 0 else 0.0
        rows.append(
            FloodRow(
                blocks=blocks,
                size_bytes=size,
                mean_elapsed_s=float(data.mean()),
                stddev_s=spread,
                n=len(elapsed),
            )
        )
    return FloodResult(rows=tuple(rows))


CSV_HEADER = "blocks,size_bytes,mean_elapsed_s,stddev_s,n"


def emit(result: FloodResult, format: str = "csv") -> str:
    if format == "csv":
        lines = [CSV_HEADER]
        for row in result.rows:
            lines.append(
                f"{row.blocks},{row.size_bytes},{row.mean_elapsed_s!r},{row.stddev_s!r},{row.n}"
            )
        return "\n".join(lines) + "\n"
    if format == "table":
        header = ("blocks", "size_bytes", "mean_elapsed_s", "stddev_s", "n")
        body = [
            (
                str(row.blocks),
                str(row.size_bytes),
                f"{row.mean_elapsed_s:.6f}",
                f"{row.stddev_s:.6f}",
                str(row.n),
            )
            for row in result.rows
        ]
        widths = [max(len(col[i]) for col in [header] + body) for i in range(len(header))]
        lines = [
            "  ".join(value.ljust(widths[i]) for i, value in enumerate(column))
            for column in [header] + body
        ]
        return "\n".join(lines) + "\n"
    raise InvalidConfigError(f"unknown emit format: {format!r}")


def parse_result_csv(text: str) -> FloodResult:
    reader = csv.DictReader(io.StringIO(text))
    rows = []
    for record in reader:
        rows.append(
            FloodRow(
                blocks=int(record["blocks"]),
                size_bytes=int(record["size_bytes"]),
                mean_elapsed_s=float(record["mean_elapsed_s"]),
                stddev_s=float(record["stddev_s"]),
                n=int(record["n"]),
            )
        )
    return FloodResult(rows=tuple(rows))


def samples_csv(samples: list[FloodSample]) -> str:
    """Raw per-repetition dump for independent recomputation."""
    lines = ["blocks,size_bytes,rep,elapsed_s,master_bytes,direct_bytes"]
    for s in samples:
        master = int(s.master_bytes) if s.master_bytes.denominator == 1 else float(s.master_bytes)
        direct = int(s.direct_bytes) if s.direct_bytes.denominator == 1 else float(s.direct_bytes)
        lines.append(f"{s.block_count},{s.size},{s.rep},{s.elapsed!r},{master},{direct}")
    return "\n".join(lines) + "\n"
