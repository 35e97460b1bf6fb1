"""Append-only CSV store of converged results, shared by table and fit runs."""

from __future__ import annotations

import csv
import fcntl
import io
import logging
import math
import os
from dataclasses import dataclass

from .core import CasimirError, MirrorModel, SolverConfig, geometry_from_x
from .engine import PhiResult, UnconvergedError, phi, rho_from_phi

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
HEADER = ("schema_version", "x", "model", "ell_max", "m_max", "phi", "rho", "beta",
          "conv_est", "status")


class CacheError(CasimirError):
    """Cache file is locked by another process or has a foreign layout."""


def fmt(value: float | None) -> str:
    """17 significant digits, locale independent."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return f"{float(value):.16e}"


@dataclass(frozen=True)
class CacheRecord:
    x: float
    model: MirrorModel
    ell_max: int
    m_max: int
    phi: float
    rho: float
    beta: float
    convergence_estimate: float | None
    status: str = "ok"
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_result(cls, result: PhiResult, status: str = "ok") -> CacheRecord:
        rb = rho_from_phi(result)
        return cls(x=result.x, model=result.model, ell_max=result.ell_max_used,
                   m_max=result.m_max_used, phi=result.phi, rho=rb.rho, beta=rb.beta,
                   convergence_estimate=result.convergence_estimate, status=status)

    @classmethod
    def failed(cls, x: float, model: MirrorModel, status: str) -> CacheRecord:
        nan = float("nan")
        return cls(x=x, model=model, ell_max=0, m_max=0, phi=nan, rho=nan, beta=nan,
                   convergence_estimate=None, status=status)

    def to_row(self) -> list[str]:
        return [str(self.schema_version), fmt(self.x), self.model.value, str(self.ell_max),
                str(self.m_max), fmt(self.phi), fmt(self.rho), fmt(self.beta),
                fmt(self.convergence_estimate), self.status]

    @classmethod
    def from_row(cls, row: list[str]) -> CacheRecord:
        if len(row) != len(HEADER):
            raise ValueError(f"expected {len(HEADER)} fields, got {len(row)}")
        version = int(row[0])
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {version}")
        conv = float(row[8])
        return cls(x=float(row[1]), model=MirrorModel.parse(row[2]), ell_max=int(row[3]),
                   m_max=int(row[4]), phi=float(row[5]), rho=float(row[6]), beta=float(row[7]),
                   convergence_estimate=None if math.isnan(conv) else conv, status=row[9],
                   schema_version=version)

    def satisfies(self, config: SolverConfig) -> bool:
        """Whether this record answers a request made with ``config``."""
        if self.status != "ok":
            return False
        if config.ell_max_override is not None:
            return self.convergence_estimate is None and self.ell_max == config.ell_max_override
        return self.convergence_estimate is not None and self.convergence_estimate < config.refine_tol


def csv_line(fields: list[str] | tuple[str, ...]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(fields)
    return buf.getvalue()


class ResultCache:
    """CSV cache guarded by an exclusive advisory lock.

    Use as a context manager. A truncated last line (interrupted write) is
    dropped; other unreadable lines are skipped with a warning.
    """

    def __init__(self, path: str | os.PathLike):
        self.path = os.fspath(path)
        self.records: list[CacheRecord] = []
        self._fh = None
        self.hits = 0
        self.misses = 0

    def __enter__(self) -> ResultCache:
        self._fh = open(self.path, "a+", encoding="utf-8", newline="")
        try:
            fcntl.flock(self._fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError:
            self._fh.close()
            raise CacheError(f"cache {self.path} is in use by another process") from None
        self._load()
        return self

    def __exit__(self, *exc) -> None:
        if self._fh is not None:
            self._fh.flush()
            fcntl.flock(self._fh.fileno(), fcntl.LOCK_UN)
            self._fh.close()
            self._fh = None

    def _load(self) -> None:
        fh = self._fh
        fh.seek(0)
        text = fh.read()
        if not text:
            fh.write(csv_line(HEADER))
            fh.flush()
            return
        if not text.endswith("\n"):
            cut = text.rfind("\n") + 1
            log.warning("dropping truncated trailing line in %s", self.path)
            fh.truncate(cut)
            text = text[:cut]
            if not text:
                fh.write(csv_line(HEADER))
                fh.flush()
                return
        lines = text.splitlines()
        if tuple(next(csv.reader([lines[0]]))) != HEADER:
            raise CacheError(f"{self.path} does not have the expected header")
        for number, row in enumerate(csv.reader(lines[1:]), start=2):
            try:
                self.records.append(CacheRecord.from_row(row))
            except (ValueError, IndexError) as err:
                log.warning("ignoring unreadable line %d in %s: %s", number, self.path, err)

    def lookup(self, x: float, model: MirrorModel, config: SolverConfig) -> CacheRecord | None:
        for record in reversed(self.records):
            if record.x == x and record.model is model and record.satisfies(config):
                return record
        return None

    def add(self, record: CacheRecord) -> None:
        self.records.append(record)
        self._fh.seek(0, os.SEEK_END)
        self._fh.write(csv_line(record.to_row()))
        self._fh.flush()


def compute_record(x: float, model: MirrorModel, config: SolverConfig,
                   cache: ResultCache | None = None) -> CacheRecord:
    """Cached evaluation of one (x, model) point; failures become status rows."""
    if cache is not None:
        hit = cache.lookup(x, model, config)
        if hit is not None:
            cache.hits += 1
            return hit
        cache.misses += 1
    try:
        record = CacheRecord.from_result(phi(geometry_from_x(x), model, config))
    except UnconvergedError as err:
        log.error("x=%r %s: %s", x, model.value, err)
        return CacheRecord.failed(x, model, "unconverged")
    if cache is not None:
        cache.add(record)
    return record
