"""Packet observation records and their on-disk CSV format.

The CSV header is fixed: ``ts_us,switch_id,in_port,src_addr,dst_addr,
src_port,dst_port,protocol,length,tcp_flags``.  Rows are sorted by
timestamp; lines starting with ``#`` are comments and are skipped on read.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import DataValidationError, OrderingError

PROTO_ICMP = 1
PROTO_TCP = 6
PROTO_UDP = 17
VALID_PROTOCOLS = frozenset({PROTO_ICMP, PROTO_TCP, PROTO_UDP})

CSV_FIELDS = (
    "ts_us",
    "switch_id",
    "in_port",
    "src_addr",
    "dst_addr",
    "src_port",
    "dst_port",
    "protocol",
    "length",
    "tcp_flags",
)


@dataclass(frozen=True)
class PacketRecord:
    """One observed packet: microsecond timestamp, capture point, 5-tuple,
    size and TCP flags (0 for non-TCP)."""

    ts_us: int
    switch_id: int
    in_port: int
    src_addr: str
    dst_addr: str
    src_port: int
    dst_port: int
    protocol: int
    length: int
    tcp_flags: int = 0

    def validate(self):
        if self.length < 1:
            raise DataValidationError(f"packet length must be >= 1, got {self.length}")
        if self.protocol not in VALID_PROTOCOLS:
            raise DataValidationError(f"unsupported protocol code {self.protocol}")
        if self.ts_us < 0:
            raise DataValidationError(f"negative timestamp {self.ts_us}")
        return self


def write_packet_records(records, path, header_comment=None):
    """Write records (already sorted by ``ts_us``) to ``path``.

    Raises OrderingError if the sequence is out of order rather than
    silently re-sorting: an unsorted log indicates an upstream bug.
    """
    path = Path(path)
    last_ts = None
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for rec in records:
            if last_ts is not None and rec.ts_us < last_ts:
                raise OrderingError(
                    f"packet log out of order at ts {rec.ts_us} after {last_ts}"
                )
            last_ts = rec.ts_us
            writer.writerow(
                (
                    rec.ts_us,
                    rec.switch_id,
                    rec.in_port,
                    rec.src_addr,
                    rec.dst_addr,
                    rec.src_port,
                    rec.dst_port,
                    rec.protocol,
                    rec.length,
                    rec.tcp_flags,
                )
            )
    return path


def read_packet_records(path):
    """Parse a packet-record CSV back into a list of PacketRecord."""
    records = []
    with open(path, newline="") as fh:
        rows = (line for line in fh if not line.startswith("#"))
        reader = csv.reader(rows)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_FIELDS:
            raise DataValidationError(f"{path}: unexpected packet CSV header {header}")
        for row in reader:
            if not row:
                continue
            records.append(
                PacketRecord(
                    ts_us=int(row[0]),
                    switch_id=int(row[1]),
                    in_port=int(row[2]),
                    src_addr=row[3],
                    dst_addr=row[4],
                    src_port=int(row[5]),
                    dst_port=int(row[6]),
                    protocol=int(row[7]),
                    length=int(row[8]),
                    tcp_flags=int(row[9]),
                ).validate()
            )
    return records
