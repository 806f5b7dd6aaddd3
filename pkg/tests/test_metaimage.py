import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sonoviz import errors
from sonoviz.metaimage import ElementType, MhaHeader, parse_header, read_volume, write_volume
from sonoviz.volume import ScalarVolume

MINIMAL_HEADER = [
    "ObjectType = Image",
    "NDims = 3",
    "DimSize = 4 4 4",
    "ElementType = MET_UCHAR",
    "ElementDataFile = LOCAL",
]


def header_bytes(lines):
    return ("\n".join(lines) + "\n").encode()


class TestParseHeader:
    def test_minimal_header(self):
        h = parse_header(MINIMAL_HEADER)
        assert h.ndims == 3
        assert h.dim_size == (4, 4, 4)
        assert h.element_type is ElementType.UCHAR
        assert h.element_spacing == (1.0, 1.0, 1.0)
        assert h.offset == (0.0, 0.0, 0.0)
        assert h.byte_order_msb is False
        assert h.compressed is False
        assert h.extra == []

    def test_paper_scale_dim_size(self):
        lines = list(MINIMAL_HEADER)
        lines[2] = "DimSize = 256 256 256"
        h = parse_header(lines)
        assert h.dim_size == (256, 256, 256)
        assert h.voxel_count == 256**3

    def test_ndims_2_rejected(self):
        lines = list(MINIMAL_HEADER)
        lines[1] = "NDims = 2"
        with pytest.raises(errors.UnsupportedValueError):
            parse_header(lines)

    def test_unknown_keys_preserved_in_order(self):
        lines = list(MINIMAL_HEADER)
        lines[4:4] = [
            "TransformMatrix = 1 0 0 0 1 0 0 0 1",
            "AnatomicalOrientation = RAI",
        ]
        h = parse_header(lines)
        assert h.extra == [
            ("TransformMatrix", "1 0 0 0 1 0 0 0 1"),
            ("AnatomicalOrientation", "RAI"),
        ]

    def test_whitespace_tolerant(self):
        h = parse_header(["NDims\t=  3", "DimSize =   2  3\t4 ", "ElementType =MET_SHORT", "ElementDataFile = LOCAL"])
        assert h.dim_size == (2, 3, 4)
        assert h.element_type is ElementType.SHORT

    def test_byte_order_keys(self):
        for key in ("BinaryDataByteOrderMSB", "ElementByteOrderMSB"):
            h = parse_header(MINIMAL_HEADER[:4] + [f"{key} = True"] + MINIMAL_HEADER[4:])
            assert h.byte_order_msb is True

    @pytest.mark.parametrize(
        "mutate, expected",
        [
            (lambda ls: [l for l in ls if not l.startswith("NDims")], errors.MissingRequiredKeyError),
            (lambda ls: [l for l in ls if not l.startswith("DimSize")], errors.MissingRequiredKeyError),
            (lambda ls: [l for l in ls if not l.startswith("ElementType")], errors.MissingRequiredKeyError),
            (lambda ls: ls[:-1], errors.MissingRequiredKeyError),
            (lambda ls: ["garbage line without equals"] + ls, errors.MalformedLineError),
            (lambda ls: ls[:3] + ["ElementType = MET_BOGUS"] + ls[4:], errors.UnsupportedValueError),
            (lambda ls: ls[:-1] + ["ElementDataFile = volume.raw"], errors.UnsupportedValueError),
            (lambda ls: ls[:2] + ["DimSize = 4 4"] + ls[3:], errors.UnsupportedValueError),
            (lambda ls: ls[:2] + ["DimSize = 4 x 4"] + ls[3:], errors.UnsupportedValueError),
            (lambda ls: ls[:4] + ["ElementSpacing = 1 0 1"] + ls[4:], errors.UnsupportedValueError),
        ],
    )
    def test_malformed_headers(self, mutate, expected):
        with pytest.raises(expected):
            parse_header(mutate(list(MINIMAL_HEADER)))

    @given(st.text(max_size=200))
    @settings(max_examples=200, deadline=None)
    def test_totality_on_arbitrary_text(self, text):
        # must either return a header or raise one of the typed errors
        try:
            parse_header(text)
        except errors.MhaError:
            pass


class TestReadVolume:
    def test_constant_uchar_volume(self):
        payload = bytes([7]) * 64
        header, vol = read_volume(header_bytes(MINIMAL_HEADER) + payload)
        assert header.dim_size == (4, 4, 4)
        assert vol.dims == (4, 4, 4)
        assert np.all(vol.data == 7.0)

    def test_short_little_endian_counting_volume(self):
        # 16 payload bytes hand-encoded with struct in an independent script:
        # values 0..7 as little-endian int16
        payload = bytes.fromhex("00000100020003000400050006000700")
        lines = ["NDims = 3", "DimSize = 2 2 2", "ElementType = MET_SHORT", "ElementDataFile = LOCAL"]
        _, vol = read_volume(header_bytes(lines) + payload)
        for k in range(2):
            for j in range(2):
                for i in range(2):
                    assert vol.data[k, j, i] == i + 2 * j + 4 * k

    def test_big_endian_short(self):
        lines = [
            "NDims = 3",
            "DimSize = 2 1 1",
            "ElementType = MET_SHORT",
            "BinaryDataByteOrderMSB = True",
            "ElementDataFile = LOCAL",
        ]
        payload = (258).to_bytes(2, "big") + (513).to_bytes(2, "big")
        _, vol = read_volume(header_bytes(lines) + payload)
        assert list(vol.flat) == [258.0, 513.0]

    def test_payload_too_short(self):
        payload = bytes(63)
        with pytest.raises(errors.PayloadTooShortError) as exc:
            read_volume(header_bytes(MINIMAL_HEADER) + payload)
        assert "64" in str(exc.value) and "63" in str(exc.value)

    def test_payload_too_long(self):
        payload = bytes(65)
        with pytest.raises(errors.PayloadTooLongError) as exc:
            read_volume(header_bytes(MINIMAL_HEADER) + payload)
        assert "64" in str(exc.value) and "65" in str(exc.value)

    def test_compressed_rejected(self):
        lines = MINIMAL_HEADER[:4] + ["CompressedData = True"] + MINIMAL_HEADER[4:]
        with pytest.raises(errors.UnsupportedCompressionError):
            read_volume(header_bytes(lines) + bytes(64))

    def test_ascii_payload_rejected(self):
        lines = MINIMAL_HEADER[:4] + ["BinaryData = False"] + MINIMAL_HEADER[4:]
        with pytest.raises(errors.UnsupportedValueError):
            read_volume(header_bytes(lines) + bytes(64))

    def test_nonfinite_float_payload_rejected(self):
        lines = ["NDims = 3", "DimSize = 1 1 1", "ElementType = MET_FLOAT", "ElementDataFile = LOCAL"]
        payload = np.array([np.nan], dtype="<f4").tobytes()
        with pytest.raises(errors.UnsupportedValueError):
            read_volume(header_bytes(lines) + payload)

    def test_reads_from_stream(self):
        payload = bytes([7]) * 64
        stream = io.BytesIO(header_bytes(MINIMAL_HEADER) + payload)
        _, vol = read_volume(stream)
        assert np.all(vol.data == 7.0)

    def test_missing_terminator_on_binary_garbage(self):
        with pytest.raises(errors.MhaError):
            read_volume(b"\x00\x01\x02 not a header \xff" * 10)


class TestWriteVolume:
    def test_round_trip_short_is_bit_identical(self):
        payload = bytes.fromhex("00000100020003000400050006000700")
        lines = ["NDims = 3", "DimSize = 2 2 2", "ElementType = MET_SHORT", "ElementDataFile = LOCAL"]
        header, vol = read_volume(header_bytes(lines) + payload)
        encoded, clamped = write_volume(header, vol, ElementType.SHORT)
        assert clamped == 0
        assert encoded.endswith(payload)
        header2, vol2 = read_volume(encoded)
        assert np.array_equal(vol.data, vol2.data)
        assert header2.dim_size == header.dim_size

    def test_all_zero_uchar_payload(self):
        vol = ScalarVolume(np.zeros((4, 4, 4), dtype=np.float32))
        encoded, clamped = write_volume(None, vol, ElementType.UCHAR)
        assert clamped == 0
        assert encoded.endswith(bytes(64))

    def test_clamp_count(self):
        data = np.zeros((4, 4, 4), dtype=np.float32)
        data[0, 0, 0] = 300.0
        vol = ScalarVolume(data)
        encoded, clamped = write_volume(None, vol, ElementType.UCHAR)
        assert clamped == 1
        payload = encoded[-64:]
        assert payload[0] == 255

    def test_canonical_key_order(self):
        vol = ScalarVolume(np.zeros((2, 2, 2), dtype=np.float32), spacing=(0.5, 0.5, 2.0), origin=(1, 2, 3))
        header = MhaHeader(
            ndims=3,
            dim_size=(2, 2, 2),
            element_type=ElementType.FLOAT,
            extra=[("AnatomicalOrientation", "RAI")],
        )
        encoded, _ = write_volume(header, vol, ElementType.FLOAT)
        text = encoded[: encoded.index(b"ElementDataFile = LOCAL\n") + 24].decode()
        keys = [line.split(" = ")[0] for line in text.strip().splitlines()]
        assert keys == [
            "ObjectType",
            "NDims",
            "DimSize",
            "ElementType",
            "ElementSpacing",
            "Offset",
            "AnatomicalOrientation",
            "ElementDataFile",
        ]

    def test_round_trip_preserves_extras_and_geometry(self):
        rng = np.random.default_rng(3)
        vol = ScalarVolume(rng.random((3, 4, 5), dtype=np.float32), spacing=(0.25, 1.5, 2.0), origin=(-1.5, 0.25, 8.0))
        header = MhaHeader(
            ndims=3,
            dim_size=vol.dims,
            element_type=ElementType.FLOAT,
            extra=[("TransformMatrix", "1 0 0 0 1 0 0 0 1")],
        )
        encoded, _ = write_volume(header, vol, ElementType.FLOAT)
        header2, vol2 = read_volume(encoded)
        assert np.array_equal(vol.data, vol2.data)
        assert vol2.spacing == vol.spacing
        assert vol2.origin == vol.origin
        assert header2.extra == header.extra

    def test_big_endian_round_trip(self):
        vol = ScalarVolume(np.arange(8, dtype=np.float32).reshape(2, 2, 2))
        header = MhaHeader(ndims=3, dim_size=(2, 2, 2), element_type=ElementType.SHORT, byte_order_msb=True)
        encoded, _ = write_volume(header, vol, ElementType.SHORT)
        assert b"BinaryDataByteOrderMSB = True" in encoded
        header2, vol2 = read_volume(encoded)
        assert header2.byte_order_msb is True
        assert np.array_equal(vol.data, vol2.data)

    @pytest.mark.parametrize("etype", list(ElementType))
    def test_round_trip_all_types(self, etype):
        rng = np.random.default_rng(hash(etype.value) % 2**31)
        if etype in (ElementType.FLOAT, ElementType.DOUBLE):
            data = rng.random((2, 3, 4), dtype=np.float32) * 100 - 50
        else:
            lo, hi = {
                ElementType.UCHAR: (0, 255),
                ElementType.CHAR: (-128, 127),
                ElementType.SHORT: (-32768, 32767),
                ElementType.USHORT: (0, 65535),
                ElementType.INT: (-(2**24), 2**24),
                ElementType.UINT: (0, 2**24),
            }[etype]
            data = rng.integers(lo, hi, size=(2, 3, 4), endpoint=True).astype(np.float32)
        vol = ScalarVolume(data)
        encoded, clamped = write_volume(None, vol, etype)
        assert clamped == 0
        _, vol2 = read_volume(encoded)
        assert np.array_equal(vol.data, vol2.data)
