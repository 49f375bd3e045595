"""CSID container: position-tagged CSI records in a fixed little-endian
binary layout, plus train/validation splitting and CSV export.

See docs/csid_format.md for the byte-level contract (shared with the
TypeScript positioning frontend). Files are byte deterministic for identical
input and readable record by record with bounded memory.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

MAGIC = b"CSID"
VERSION = 1


@dataclass
class CsidHeader:
    carrier_hz: float
    bandwidth_hz: float
    n_ant: int
    n_sub: int
    array_geometry: str = ""
    scenario_tag: str = ""
    version: int = VERSION

    def record_nbytes(self) -> int:
        return 8 + 24 + 4 * self.n_ant + 8 * self.n_ant * self.n_sub


@dataclass
class TaggedCsiRecord:
    """One (timestamp, position, per-antenna SNR, CSI) database row."""

    timestamp_s: float
    position_m: np.ndarray  # [3] float64
    snr_db: np.ndarray  # [n_ant] float32
    csi: np.ndarray  # [n_ant, n_sub] complex64, antenna-major

    def __post_init__(self):
        self.position_m = np.asarray(self.position_m, dtype=np.float64).reshape(3)
        self.snr_db = np.asarray(self.snr_db, dtype=np.float32).ravel()
        self.csi = np.asarray(self.csi, dtype=np.complex64)
        if not np.all(np.isfinite(self.position_m)):
            raise ValueError("position must be finite")
        if self.csi.ndim != 2:
            raise ValueError("csi must be [n_ant, n_sub]")


def _pack_string(text: str) -> bytes:
    data = text.encode("utf-8")
    return struct.pack("<I", len(data)) + data


def header_nbytes(header: CsidHeader) -> int:
    return (4 + 4 + 8 + 8 + 4 + 4
            + 4 + len(header.array_geometry.encode("utf-8"))
            + 4 + len(header.scenario_tag.encode("utf-8")) + 8)


def write_csid(path, header: CsidHeader, records: Iterable[TaggedCsiRecord]) -> int:
    """Stream records to `path`; returns the record count (patched into the
    header afterwards).

    A record with wrong dimensions truncates the file back to the last valid
    record and raises, reporting how many records were kept.
    """
    count = 0
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", header.version))
        fh.write(struct.pack("<d", header.carrier_hz))
        fh.write(struct.pack("<d", header.bandwidth_hz))
        fh.write(struct.pack("<II", header.n_ant, header.n_sub))
        fh.write(_pack_string(header.array_geometry))
        fh.write(_pack_string(header.scenario_tag))
        count_offset = fh.tell()
        fh.write(struct.pack("<Q", 0))
        for rec in records:
            if rec.snr_db.size != header.n_ant or rec.csi.shape != (header.n_ant,
                                                                    header.n_sub):
                fh.truncate()
                fh.seek(count_offset)
                fh.write(struct.pack("<Q", count))
                raise ValueError(
                    f"record {count} dimensions {rec.csi.shape} do not match "
                    f"header ({header.n_ant}, {header.n_sub}); "
                    f"file truncated to {count} records")
            fh.write(struct.pack("<d", rec.timestamp_s))
            fh.write(rec.position_m.astype("<f8").tobytes())
            fh.write(rec.snr_db.astype("<f4").tobytes())
            fh.write(np.ascontiguousarray(rec.csi, dtype="<c8").tobytes())
            count += 1
        fh.seek(count_offset)
        fh.write(struct.pack("<Q", count))
    return count


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ValueError(f"truncated file while reading {what}")
    return data


def read_csid(path) -> tuple[CsidHeader, Iterator[TaggedCsiRecord]]:
    """Open a CSID file; header is parsed eagerly, records stream lazily.

    Bad magic or version is rejected immediately; a truncated body raises at
    the failing record index during iteration.
    """
    fh = open(path, "rb")
    try:
        if fh.read(4) != MAGIC:
            raise ValueError("not a CSID file (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != VERSION:
            raise ValueError(f"unsupported CSID version {version}")
        (carrier,) = struct.unpack("<d", _read_exact(fh, 8, "carrier"))
        (bandwidth,) = struct.unpack("<d", _read_exact(fh, 8, "bandwidth"))
        n_ant, n_sub = struct.unpack("<II", _read_exact(fh, 8, "dimensions"))
        (geo_len,) = struct.unpack("<I", _read_exact(fh, 4, "geometry length"))
        geometry = _read_exact(fh, geo_len, "geometry").decode("utf-8")
        (tag_len,) = struct.unpack("<I", _read_exact(fh, 4, "tag length"))
        tag = _read_exact(fh, tag_len, "tag").decode("utf-8")
        (count,) = struct.unpack("<Q", _read_exact(fh, 8, "record count"))
    except Exception:
        fh.close()
        raise
    header = CsidHeader(carrier, bandwidth, n_ant, n_sub, geometry, tag, version)

    def _iterate():
        try:
            for i in range(count):
                try:
                    (ts,) = struct.unpack("<d", _read_exact(fh, 8, f"record {i}"))
                    pos = np.frombuffer(_read_exact(fh, 24, f"record {i}"), "<f8")
                    snr = np.frombuffer(_read_exact(fh, 4 * n_ant, f"record {i}"),
                                        "<f4")
                    csi = np.frombuffer(
                        _read_exact(fh, 8 * n_ant * n_sub, f"record {i}"),
                        "<c8").reshape(n_ant, n_sub)
                except ValueError as exc:
                    raise ValueError(f"corrupt body at record {i}: {exc}") from exc
                yield TaggedCsiRecord(ts, pos.copy(), snr.copy(), csi.copy())
        finally:
            fh.close()

    return header, _iterate()


def read_csid_records(path) -> tuple[CsidHeader, list[TaggedCsiRecord]]:
    header, it = read_csid(path)
    return header, list(it)


def split_train_val(records: list, train_fraction: float = 0.9,
                    seed: int = 0) -> tuple[list, list]:
    """Seeded shuffle then split; validation keeps at least one record."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    if not records:
        raise ValueError("cannot split an empty record list")
    n = len(records)
    n_val = max(1, int(n * (1.0 - train_fraction) + 0.5))
    order = np.random.default_rng(seed).permutation(n)
    train = [records[i] for i in order[: n - n_val]]
    val = [records[i] for i in order[n - n_val:]]
    return train, val


_SCALAR_FIELDS = ("timestamp", "position", "snr", "csi_mag", "csi_phase",
                  "csi_re", "csi_im")


def export_csv(records: Iterable[TaggedCsiRecord], fields: list[str],
               stream: io.TextIOBase | None = None) -> str:
    """Flatten selected fields into CSV.

    Column order follows `fields`; vector fields expand to indexed columns
    (position_x/y/z, snr_<ant>, csi_*_<ant>_<sub>). Returns the CSV text and
    also writes it to `stream` when given.
    """
    for f in fields:
        if f not in _SCALAR_FIELDS:
            raise ValueError(f"unknown field {f!r}; choose from {_SCALAR_FIELDS}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header_row: list[str] | None = None
    for rec in records:
        if header_row is None:
            header_row = []
            for f in fields:
                if f == "timestamp":
                    header_row.append("timestamp_s")
                elif f == "position":
                    header_row += ["position_x_m", "position_y_m", "position_z_m"]
                elif f == "snr":
                    header_row += [f"snr_db_{a}" for a in range(rec.snr_db.size)]
                else:
                    header_row += [f"{f}_{a}_{k}"
                                   for a in range(rec.csi.shape[0])
                                   for k in range(rec.csi.shape[1])]
            writer.writerow(header_row)
        row: list[str] = []
        for f in fields:
            if f == "timestamp":
                row.append(repr(float(rec.timestamp_s)))
            elif f == "position":
                row += [repr(float(v)) for v in rec.position_m]
            elif f == "snr":
                row += [repr(float(v)) for v in rec.snr_db]
            elif f == "csi_mag":
                row += [repr(float(v)) for v in np.abs(rec.csi).ravel()]
            elif f == "csi_phase":
                row += [repr(float(v)) for v in np.angle(rec.csi).ravel()]
            elif f == "csi_re":
                row += [repr(float(v)) for v in rec.csi.real.ravel()]
            elif f == "csi_im":
                row += [repr(float(v)) for v in rec.csi.imag.ravel()]
        writer.writerow(row)
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text
