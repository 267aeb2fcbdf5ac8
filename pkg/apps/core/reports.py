# apps/core/reports.py - CSV reports, plot series and snapshot dumps
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from apps.evaluation.metrics import MetricsReport, MetricsRow

from .exceptions import ReportFormatError

logger = logging.getLogger(__name__)

REPORT_HEADER = (
    'policy', 'p_A', 'mean_rate', 'stderr', 'served_fraction',
    'mean_load', 'retained_fraction', 'n_realizations',
)
PLOT_HEADER = ('p_A', 'mean_rate', 'stderr')

SNAPSHOT_MAGIC = '# d2dsim snapshot v1'


def _number(value) -> str:
    # repr is locale independent and round-trips exactly
    return repr(float(value))


def write_report(report: MetricsReport, path):
    """Write the report as CSV with the fixed REPORT_HEADER column order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(REPORT_HEADER)
        for row in report:
            writer.writerow([
                row.policy,
                _number(row.access_probability),
                _number(row.mean_rate),
                _number(row.stderr),
                _number(row.served_fraction),
                _number(row.mean_load),
                _number(row.retained_fraction),
                str(row.n_realizations),
            ])
    logger.info(f"Report with {len(report)} rows written to {path}")


def read_report(path) -> MetricsReport:
    """
    Parse a report CSV.

    Raises:
        ReportFormatError: Wrong header, wrong field count or unparsable value
    """
    report = MetricsReport()
    with open(path, newline='', encoding='utf-8') as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise ReportFormatError(f"{path}: empty file, expected a header row")
        if tuple(name.strip() for name in header) != REPORT_HEADER:
            raise ReportFormatError(f"{path}: header must be {', '.join(REPORT_HEADER)}")

        for line, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != len(REPORT_HEADER):
                raise ReportFormatError(f"{path}, line {line}: expected {len(REPORT_HEADER)} fields, got {len(fields)}")
            try:
                report.append(MetricsRow(
                    policy=fields[0].strip(),
                    access_probability=float(fields[1]),
                    mean_rate=float(fields[2]),
                    stderr=float(fields[3]),
                    served_fraction=float(fields[4]),
                    mean_load=float(fields[5]),
                    retained_fraction=float(fields[6]),
                    n_realizations=int(fields[7]),
                ))
            except ValueError as exc:
                raise ReportFormatError(f"{path}, line {line}: {exc}") from exc
    return report


def emit_plotdata(report_csv, out_dir) -> Dict[str, Path]:
    """
    Split a report into one ``<policy>.dat`` series per policy.

    Each file has a ``#`` header line followed by whitespace separated
    ``p_A mean_rate stderr`` rows in report order.

    Returns:
        dict: Policy name to written file; empty for an empty report
    """
    report = read_report(report_csv)
    if not len(report):
        logger.warning(f"Report {report_csv} has no rows, no plot data written")
        return {}

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for policy in report.policies():
        path = out_dir / f"{policy}.dat"
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write('# ' + ' '.join(PLOT_HEADER) + '\n')
            for row in report.for_policy(policy):
                handle.write(f"{_number(row.access_probability)} {_number(row.mean_rate)} {_number(row.stderr)}\n")
        written[policy] = path
        logger.info(f"Plot series for {policy} written to {path}")
    return written


@dataclass(frozen=True, eq=False)
class SnapshotDump:
    """
    Serializable view of one realization for replotting: transmitters with
    caches, bids, marks and per-policy retention, receivers with requests.
    """
    policy: str
    access_probability: float
    comm_radius: float
    exclusion_radius: Optional[float]
    policies: Tuple[str, ...]
    tx_coordinates: np.ndarray = field(repr=False)
    caches: Tuple[Tuple[int, ...], ...] = field(repr=False)
    bids: np.ndarray = field(repr=False)
    marks: np.ndarray = field(repr=False)
    retained: Dict[str, np.ndarray] = field(repr=False)
    rx_coordinates: np.ndarray = field(repr=False)
    requests: np.ndarray = field(repr=False)

    @classmethod
    def from_snapshot(cls, snapshot, policy) -> 'SnapshotDump':
        realization = snapshot.realization
        ranges = snapshot.ranges[policy]
        return cls(
            policy=policy,
            access_probability=snapshot.access_probability,
            comm_radius=ranges.comm_radius,
            exclusion_radius=ranges.exclusion_radius,
            policies=tuple(snapshot.retained),
            tx_coordinates=np.array(realization.transmitters.coordinates),
            caches=tuple(tuple(cache) for cache in realization.caches),
            bids=np.array(snapshot.bids.values),
            marks=np.array(snapshot.marks.values),
            retained={name: np.array(flags.flags) for name, flags in snapshot.retained.items()},
            rx_coordinates=np.array(realization.receivers.coordinates),
            requests=np.array(realization.requests.files),
        )


def write_snapshot(dump: SnapshotDump, path):
    """
    Write a line-oriented dump.

    Layout, one record per line:
        META policy <name> p_A <x> comm_radius <x> exclusion_radius <x|none> policies <a,b,...>
        TX <i> <x> <y> <bid> <mark> <files,...> <flags>
        RX <u> <x> <y> <request>
    ``flags`` holds one 0/1 digit per policy, in META order.
    """
    exclusion = 'none' if dump.exclusion_radius is None else _number(dump.exclusion_radius)
    lines = [
        SNAPSHOT_MAGIC,
        f"META policy {dump.policy} p_A {_number(dump.access_probability)} "
        f"comm_radius {_number(dump.comm_radius)} exclusion_radius {exclusion} "
        f"policies {','.join(dump.policies)}",
    ]
    for i, (x, y) in enumerate(dump.tx_coordinates):
        flags = ''.join('1' if dump.retained[name][i] else '0' for name in dump.policies)
        files = ','.join(str(f) for f in dump.caches[i])
        lines.append(f"TX {i} {_number(x)} {_number(y)} {_number(dump.bids[i])} {_number(dump.marks[i])} {files} {flags}")
    for u, (x, y) in enumerate(dump.rx_coordinates):
        lines.append(f"RX {u} {_number(x)} {_number(y)} {int(dump.requests[u])}")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write('\n'.join(lines) + '\n')
    logger.info(f"Snapshot of {len(dump.tx_coordinates)} transmitters written to {path}")


def _parse_meta(tokens, line):
    if len(tokens) % 2:
        raise ReportFormatError(f"line {line}: META needs key/value pairs")
    meta = dict(zip(tokens[::2], tokens[1::2]))
    missing = {'policy', 'p_A', 'comm_radius', 'exclusion_radius', 'policies'} - set(meta)
    if missing:
        raise ReportFormatError(f"line {line}: META lacks {', '.join(sorted(missing))}")
    return meta


def read_snapshot(path) -> SnapshotDump:
    """Parse a dump written by write_snapshot."""
    meta = None
    tx_rows, rx_rows = [], []
    with open(path, encoding='utf-8') as handle:
        for line, text in enumerate(handle, start=1):
            tokens = text.split()
            if not tokens or tokens[0].startswith('#'):
                continue
            tag, rest = tokens[0], tokens[1:]
            try:
                if tag == 'META':
                    meta = _parse_meta(rest, line)
                elif tag == 'TX' and len(rest) == 7:
                    tx_rows.append((int(rest[0]), float(rest[1]), float(rest[2]), float(rest[3]),
                                    float(rest[4]), tuple(int(f) for f in rest[5].split(',')), rest[6]))
                elif tag == 'RX' and len(rest) == 4:
                    rx_rows.append((int(rest[0]), float(rest[1]), float(rest[2]), int(rest[3])))
                else:
                    raise ReportFormatError(f"{path}, line {line}: malformed {tag} record")
            except ReportFormatError:
                raise
            except ValueError as exc:
                raise ReportFormatError(f"{path}, line {line}: {exc}") from exc

    if meta is None:
        raise ReportFormatError(f"{path}: missing META record")
    policies = tuple(meta['policies'].split(','))
    if any(len(row[6]) != len(policies) for row in tx_rows):
        raise ReportFormatError(f"{path}: retention flags do not match {len(policies)} policies")

    tx_rows.sort()
    rx_rows.sort()
    return SnapshotDump(
        policy=meta['policy'],
        access_probability=float(meta['p_A']),
        comm_radius=float(meta['comm_radius']),
        exclusion_radius=None if meta['exclusion_radius'] == 'none' else float(meta['exclusion_radius']),
        policies=policies,
        tx_coordinates=np.array([row[1:3] for row in tx_rows], dtype=float).reshape(-1, 2),
        caches=tuple(row[5] for row in tx_rows),
        bids=np.array([row[3] for row in tx_rows], dtype=float),
        marks=np.array([row[4] for row in tx_rows], dtype=float),
        retained={
            name: np.array([row[6][k] == '1' for row in tx_rows], dtype=bool)
            for k, name in enumerate(policies)
        },
        rx_coordinates=np.array([row[1:3] for row in rx_rows], dtype=float).reshape(-1, 2),
        requests=np.array([row[3] for row in rx_rows], dtype=int),
    )
