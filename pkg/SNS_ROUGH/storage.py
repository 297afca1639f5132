"""Files written and read by the toolkit: SNSF binary dumps, CSV tables and run metadata.

An SNSF file is the magic b"SNSF", a little-endian uint32 header length, a UTF-8 JSON header and a
little-endian float64 payload. Field coefficients are stored in FFT index order as interleaved real
and imaginary parts; Wiener increments are stored row-major with shape (steps, modes).

"""

import csv
import hashlib
import json
import logging
import os
import struct
from typing import Dict
from typing import Iterable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np

from SNS_ROUGH import config
from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.noise import WienerPath
from SNS_ROUGH.spectral import SpectralField
from SNS_ROUGH.spectral import TorusGrid


logger = logging.getLogger(__name__)


MAGIC = b"SNSF"

FIELD_KIND = "field"

WIENER_KIND = "wiener"

RUN_META_FILE = "run-meta.json"


def _write_container(path: str, header: Dict, payload: np.ndarray):
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        f.write(np.ascontiguousarray(payload, dtype="<f8").tobytes())


def _read_container(path: str, kind: str) -> Tuple[Dict, np.ndarray]:
    if not os.path.exists(path):
        raise ValidationFailure(f"no such file: {path}")

    with open(path, "rb") as f:
        data = f.read()

    if data[:4] != MAGIC or len(data) < 8:
        raise ValidationFailure(f"{path} is not an SNSF file")
    (length,) = struct.unpack("<I", data[4:8])
    try:
        header = json.loads(data[8:8 + length].decode("utf-8"))
    except (UnicodeDecodeError, json.decoder.JSONDecodeError) as error:
        raise ValidationFailure(f"{path} has a corrupt header: {error}") from error

    if header.get("kind") != kind:
        raise ValidationFailure(f"{path} holds a {header.get('kind')!r} record, expected {kind!r}")

    payload = np.frombuffer(data[8 + length:], dtype="<f8")
    return header, payload


def dump_field(path: str, field: SpectralField, time: float = 0.0):
    """Write a spectral field (and the time it belongs to) to an SNSF file."""
    grid = field.grid
    header = {
        "kind": FIELD_KIND,
        "d": grid.d,
        "N": grid.N,
        "L": grid.L,
        "dealias_fraction": grid.dealias_fraction,
        "components": grid.d,
        "time": time,
        "solenoidal": field.solenoidal
    }
    _write_container(path, header, np.ascontiguousarray(field.coeffs).view(np.float64))


def load_field(path: str) -> Tuple[SpectralField, float]:
    """Read a field written by dump_field.

    Args:
        path: SNSF file

    Returns:
        Tuple of the field and its time

    """
    header, payload = _read_container(path, FIELD_KIND)
    grid = TorusGrid(
        d=header["d"], N=header["N"], L=header["L"], dealias_fraction=header.get("dealias_fraction", 2.0 / 3.0)
    )
    expected = 2 * header["components"] * grid.N ** grid.d
    if payload.size != expected:
        raise ValidationFailure(f"{path} holds {payload.size} values, expected {expected}")

    coeffs = payload.astype(np.float64).view(np.complex128).reshape((header["components"],) + grid.shape)
    return SpectralField(grid, coeffs, solenoidal=header["solenoidal"]), header["time"]


def dump_wiener(path: str, wiener: WienerPath):
    header = {
        "kind": WIENER_KIND,
        "dt": wiener.dt,
        "steps": wiener.steps,
        "modes": wiener.modes,
        "seed": wiener.seed
    }
    _write_container(path, header, wiener.increments)


def load_wiener(path: str) -> WienerPath:
    header, payload = _read_container(path, WIENER_KIND)
    if payload.size != header["steps"] * header["modes"]:
        raise ValidationFailure(f"{path} holds {payload.size} increments, expected {header['steps'] * header['modes']}")
    increments = payload.astype(np.float64).reshape(header["steps"], header["modes"])
    return WienerPath(dt=header["dt"], increments=increments, seed=header["seed"])


def _format(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_csv(path: str, rows: Iterable[Dict], columns: Sequence[str]):
    """Write rows with a fixed column order and repr-formatted floats.

    Args:
        path: Output file
        rows: Dictionaries keyed by column
        columns: Column order

    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        count = 0
        for row in rows:
            writer.writerow({column: _format(row.get(column, "")) for column in columns})
            count += 1

    logger.debug("wrote %d rows to %s", count, path)


def read_csv(path: str) -> List[Dict[str, str]]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def content_hash(data: bytes) -> str:
    """Git-style blob hash, SHA-1 of b"blob <length>\\0" followed by the data."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def write_run_meta(
        out_dir: str, subcommand: str, argv: Sequence[str], resolved: Dict, inputs: Optional[bytes] = None
) -> str:
    """Write run-meta.json describing how the outputs of a run were produced.

    Args:
        out_dir: Output directory of the run
        subcommand: CLI subcommand
        argv: Command-line arguments
        resolved: Fully resolved configuration
        inputs: Raw bytes of the configuration file, if any

    Returns:
        Path of the written file

    """
    meta = {
        "subcommand": subcommand,
        "argv": list(argv),
        "config": resolved,
        "input_hash": content_hash(inputs if inputs is not None else b""),
        "version": config.VERSION
    }
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, RUN_META_FILE)
    with open(path, "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    return path
