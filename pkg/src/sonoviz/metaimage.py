"""Single-file MetaImage (.mha) reading and writing.

The format is an ASCII ``Key = Value`` header terminated by the
``ElementDataFile = LOCAL`` line, followed immediately by a raw binary
voxel payload (little-endian unless ``BinaryDataByteOrderMSB = True`` or
``ElementByteOrderMSB = True``). Only 3D, uncompressed, in-file payloads
are supported; multi-file ``.mhd + .raw`` pairs are not.

Parsing is total: any byte input either yields a header or raises one of
the typed errors in :mod:`sonoviz.errors`, never an unstructured crash.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum
from typing import BinaryIO, Iterable, Union

import numpy as np

from .errors import (
    MalformedLineError,
    MissingRequiredKeyError,
    PayloadTooLongError,
    PayloadTooShortError,
    UnsupportedCompressionError,
    UnsupportedValueError,
)
from .volume import ScalarVolume

# Scan limit when hunting for the end-of-header line in arbitrary input.
_MAX_HEADER_BYTES = 1 << 20


class ElementType(Enum):
    """Supported MetaImage element types and their payload encodings."""

    UCHAR = "MET_UCHAR"
    CHAR = "MET_CHAR"
    SHORT = "MET_SHORT"
    USHORT = "MET_USHORT"
    INT = "MET_INT"
    UINT = "MET_UINT"
    FLOAT = "MET_FLOAT"
    DOUBLE = "MET_DOUBLE"

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(_ELEMENT_DTYPES[self])

    @classmethod
    def from_token(cls, token: str) -> "ElementType":
        for member in cls:
            if member.value == token:
                return member
        raise UnsupportedValueError(f"unknown ElementType {token!r}")


_ELEMENT_DTYPES = {
    ElementType.UCHAR: "u1",
    ElementType.CHAR: "i1",
    ElementType.SHORT: "i2",
    ElementType.USHORT: "u2",
    ElementType.INT: "i4",
    ElementType.UINT: "u4",
    ElementType.FLOAT: "f4",
    ElementType.DOUBLE: "f8",
}


@dataclass
class MhaHeader:
    """Parsed MetaImage header metadata.

    ``extra`` holds unrecognized keys verbatim, in file order, so
    round-tripping preserves them (TransformMatrix and friends land here;
    they are kept but never interpreted).
    """

    ndims: int
    dim_size: tuple[int, int, int]
    element_type: ElementType
    element_spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    byte_order_msb: bool = False
    compressed: bool = False
    element_data_file: str = "LOCAL"
    extra: list[tuple[str, str]] = field(default_factory=list)

    @property
    def voxel_count(self) -> int:
        nx, ny, nz = self.dim_size
        return nx * ny * nz

    @property
    def payload_bytes(self) -> int:
        return self.voxel_count * self.element_type.dtype.itemsize


# Keys interpreted by the parser; everything else is preserved in `extra`.
_REQUIRED_KEYS = ("NDims", "DimSize", "ElementType", "ElementDataFile")
_RECOGNIZED_KEYS = frozenset(
    _REQUIRED_KEYS
    + (
        "ObjectType",
        "BinaryData",
        "BinaryDataByteOrderMSB",
        "ElementByteOrderMSB",
        "CompressedData",
        "ElementSpacing",
        "Offset",
    )
)


def _parse_bool(key: str, text: str) -> bool:
    lowered = text.strip().lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    raise UnsupportedValueError(f"{key} must be True or False, got {text!r}")


def _parse_numbers(key: str, text: str, count: int, kind: type) -> tuple:
    parts = text.split()
    if len(parts) != count:
        raise UnsupportedValueError(f"{key} must have {count} components, got {text!r}")
    try:
        return tuple(kind(p) for p in parts)
    except ValueError:
        raise UnsupportedValueError(f"{key} has a non-numeric component: {text!r}") from None


def parse_header(header_text: Union[str, Iterable[str]]) -> MhaHeader:
    """Parse ``Key = Value`` header lines into an :class:`MhaHeader`.

    Keys match case-sensitively; whitespace around keys and values is
    tolerated; lines that are entirely blank are skipped. Processing stops
    at the ``ElementDataFile`` line. Raises :class:`MalformedLineError`,
    :class:`MissingRequiredKeyError`, or :class:`UnsupportedValueError`.
    """
    if isinstance(header_text, str):
        lines: Iterable[str] = header_text.splitlines()
    else:
        lines = header_text

    pairs: list[tuple[str, str]] = []
    saw_data_file = False
    for raw in lines:
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        if "=" not in line:
            raise MalformedLineError(f"header line has no '=': {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise MalformedLineError(f"header line has an empty key: {line!r}")
        pairs.append((key, value))
        if key == "ElementDataFile":
            saw_data_file = True
            break

    fields = {key: value for key, value in pairs}
    for required in _REQUIRED_KEYS:
        if required not in fields or (required == "ElementDataFile" and not saw_data_file):
            raise MissingRequiredKeyError(f"header is missing required key {required}")

    ndims = _parse_numbers("NDims", fields["NDims"], 1, int)[0]
    if ndims != 3:
        raise UnsupportedValueError(f"only NDims = 3 volumes are supported, got {ndims}")

    dim_size = _parse_numbers("DimSize", fields["DimSize"], 3, int)
    if any(d < 1 for d in dim_size):
        raise UnsupportedValueError(f"DimSize components must be >= 1, got {dim_size}")

    element_type = ElementType.from_token(fields["ElementType"])

    spacing = (1.0, 1.0, 1.0)
    if "ElementSpacing" in fields:
        spacing = _parse_numbers("ElementSpacing", fields["ElementSpacing"], 3, float)
        if any(s <= 0 for s in spacing):
            raise UnsupportedValueError(f"ElementSpacing must be positive, got {spacing}")

    offset = (0.0, 0.0, 0.0)
    if "Offset" in fields:
        offset = _parse_numbers("Offset", fields["Offset"], 3, float)

    if "BinaryData" in fields and not _parse_bool("BinaryData", fields["BinaryData"]):
        raise UnsupportedValueError("ASCII payloads (BinaryData = False) are not supported")

    byte_order_msb = False
    for key in ("BinaryDataByteOrderMSB", "ElementByteOrderMSB"):
        if key in fields:
            byte_order_msb = byte_order_msb or _parse_bool(key, fields[key])

    compressed = False
    if "CompressedData" in fields:
        compressed = _parse_bool("CompressedData", fields["CompressedData"])

    data_file = fields["ElementDataFile"]
    if data_file != "LOCAL":
        raise UnsupportedValueError(
            f"only ElementDataFile = LOCAL is supported, got {data_file!r}"
        )

    extra = [(key, value) for key, value in pairs if key not in _RECOGNIZED_KEYS]
    return MhaHeader(
        ndims=ndims,
        dim_size=dim_size,
        element_type=element_type,
        element_spacing=spacing,
        offset=offset,
        byte_order_msb=byte_order_msb,
        compressed=compressed,
        element_data_file=data_file,
        extra=extra,
    )


def _read_header_lines(stream: BinaryIO) -> list[str]:
    """Read raw header lines up to and including the ElementDataFile line.

    Decodes with latin-1 so arbitrary bytes cannot abort the scan; content
    checks happen in :func:`parse_header`.
    """
    lines: list[str] = []
    consumed = 0
    while True:
        raw = stream.readline()
        if not raw:
            raise MissingRequiredKeyError(
                "header ended before an ElementDataFile line was found"
            )
        consumed += len(raw)
        if consumed > _MAX_HEADER_BYTES:
            raise MissingRequiredKeyError(
                f"no ElementDataFile line within the first {_MAX_HEADER_BYTES} bytes"
            )
        line = raw.decode("latin-1")
        lines.append(line)
        key = line.split("=", 1)[0].strip()
        if key == "ElementDataFile":
            return lines


def read_volume(source: Union[bytes, bytearray, BinaryIO]) -> tuple[MhaHeader, ScalarVolume]:
    """Decode a single-file MetaImage byte stream.

    Returns the parsed header together with the payload as a float32
    :class:`~sonoviz.volume.ScalarVolume` (values carried over numerically;
    exact for every integer type up to 24-bit magnitude).
    """
    stream = io.BytesIO(source) if isinstance(source, (bytes, bytearray)) else source
    header = parse_header(_read_header_lines(stream))
    if header.compressed:
        raise UnsupportedCompressionError(
            "CompressedData = True payloads are not supported; store the volume raw"
        )

    expected = header.payload_bytes
    payload = stream.read()
    if len(payload) < expected:
        raise PayloadTooShortError(
            f"expected {expected} payload bytes, got {len(payload)}"
        )
    if len(payload) > expected:
        raise PayloadTooLongError(
            f"expected {expected} payload bytes, got {len(payload)}"
        )

    dtype = header.element_type.dtype.newbyteorder(">" if header.byte_order_msb else "<")
    values = np.frombuffer(payload, dtype=dtype).astype(np.float32)
    if not np.all(np.isfinite(values)):
        raise UnsupportedValueError("payload contains non-finite values")
    nx, ny, nz = header.dim_size
    volume = ScalarVolume(values.reshape(nz, ny, nx), header.element_spacing, header.offset)
    return header, volume


# Integer value range per target type, for round-and-clamp on write.
_INT_RANGES = {
    ElementType.UCHAR: (0, 255),
    ElementType.CHAR: (-128, 127),
    ElementType.SHORT: (-32768, 32767),
    ElementType.USHORT: (0, 65535),
    ElementType.INT: (-2147483648, 2147483647),
    ElementType.UINT: (0, 4294967295),
}


def write_volume(
    header: MhaHeader | None,
    volume: ScalarVolume,
    target_type: ElementType = ElementType.FLOAT,
) -> tuple[bytes, int]:
    """Encode a volume as single-file MetaImage bytes.

    Geometry (dims, spacing, origin) comes from the volume itself; the
    optional ``header`` contributes preserved ``extra`` keys and the byte
    order. Integer targets are rounded to nearest and clamped to the type's
    range; the number of clamped voxels is returned alongside the bytes.
    """
    extra = list(header.extra) if header is not None else []
    msb = bool(header.byte_order_msb) if header is not None else False
    nx, ny, nz = volume.dims

    lines = [
        "ObjectType = Image",
        "NDims = 3",
        f"DimSize = {nx} {ny} {nz}",
        f"ElementType = {target_type.value}",
        "ElementSpacing = " + " ".join(str(s) for s in volume.spacing),
        "Offset = " + " ".join(str(o) for o in volume.origin),
    ]
    if msb:
        lines.append("BinaryDataByteOrderMSB = True")
    # Preserved unknown keys go before the terminator: everything after the
    # ElementDataFile line is payload by definition.
    lines.extend(f"{key} = {value}" for key, value in extra)
    lines.append("ElementDataFile = LOCAL")
    head = ("\n".join(lines) + "\n").encode("ascii")

    values = volume.flat.astype(np.float64)
    clamped = 0
    if target_type in _INT_RANGES:
        lo, hi = _INT_RANGES[target_type]
        rounded = np.rint(values)
        clipped = np.clip(rounded, lo, hi)
        clamped = int(np.count_nonzero(rounded != clipped))
        out = clipped
    else:
        out = values
    dtype = target_type.dtype.newbyteorder(">" if msb else "<")
    payload = out.astype(dtype).tobytes()
    return head + payload, clamped
