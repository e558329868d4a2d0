"""PLY point cloud reader/writer.

Supports ASCII and binary-little-endian encodings, ``vertex`` elements with
x/y/z as float32 or float64, optional red/green/blue uint8 color, and an
optional ``votes`` uint32 property.  Unknown scalar vertex properties are
skipped.  Binary output stores coordinates as float64 so a write/read pair
is bit-exact; ASCII output prints 9 significant digits (enough to round-trip
float32-valued coordinates).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import MissingXyzError, ParseError, UnsupportedEncodingError, ValidationError
from ..geometry import PointCloud

_SCALAR_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

_FLOAT_CODES = {"f4", "f8"}


class _Element:
    def __init__(self, name: str, count: int):
        self.name = name
        self.count = count
        self.properties = []  # (name, numpy code) for scalars
        self.list_properties = []  # (name, count code, item code)

    @property
    def has_lists(self) -> bool:
        return bool(self.list_properties)


def _parse_header(data: bytes):
    """Return (format, elements, body offset)."""
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise ParseError("not a PLY file (missing 'ply'/'end_header')", offset=0)
    newline = data.find(b"\n", end)
    if newline < 0:
        raise ParseError("header is not newline-terminated", offset=end)
    body_offset = newline + 1

    fmt = None
    elements = []
    offset = 0
    for raw in data[:end].split(b"\n"):
        line = raw.strip().decode("latin-1")
        tokens = line.split()
        if not tokens or tokens[0] in ("ply", "comment", "obj_info"):
            offset += len(raw) + 1
            continue
        if tokens[0] == "format":
            if len(tokens) < 2:
                raise ParseError("malformed format line", offset=offset)
            fmt = tokens[1]
            if fmt == "binary_big_endian":
                raise UnsupportedEncodingError("binary_big_endian PLY is not supported", offset=offset)
            if fmt not in ("ascii", "binary_little_endian"):
                raise UnsupportedEncodingError(f"unknown PLY format {fmt!r}", offset=offset)
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise ParseError(f"malformed element line: {line!r}", offset=offset)
            try:
                count = int(tokens[2])
            except ValueError:
                raise ParseError(f"bad element count in {line!r}", offset=offset) from None
            if count < 0:
                raise ParseError(f"negative element count in {line!r}", offset=offset)
            elements.append(_Element(tokens[1], count))
        elif tokens[0] == "property":
            if not elements:
                raise ParseError("property before any element", offset=offset)
            if len(tokens) >= 2 and tokens[1] == "list":
                if len(tokens) != 5:
                    raise ParseError(f"malformed list property: {line!r}", offset=offset)
                ccode = _SCALAR_TYPES.get(tokens[2])
                icode = _SCALAR_TYPES.get(tokens[3])
                if ccode is None or icode is None:
                    raise ParseError(f"unknown list property types in {line!r}", offset=offset)
                elements[-1].list_properties.append((tokens[4], ccode, icode))
                elements[-1].properties.append((tokens[4], None))
            else:
                if len(tokens) != 3:
                    raise ParseError(f"malformed property line: {line!r}", offset=offset)
                code = _SCALAR_TYPES.get(tokens[1])
                if code is None:
                    raise ParseError(f"unknown property type {tokens[1]!r}", offset=offset)
                elements[-1].properties.append((tokens[2], code))
        else:
            raise ParseError(f"unexpected header line: {line!r}", offset=offset)
        offset += len(raw) + 1

    if fmt is None:
        raise ParseError("PLY header lacks a format line", offset=0)
    return fmt, elements, body_offset


def _skip_element_binary(data: bytes, offset: int, element: _Element) -> int:
    if not element.has_lists:
        row = sum(np.dtype(code).itemsize for _, code in element.properties)
        end = offset + row * element.count
        if end > len(data):
            raise ParseError(f"element {element.name!r} truncated", offset=offset)
        return end
    lists = {name: (ccode, icode) for name, ccode, icode in element.list_properties}
    for _ in range(element.count):
        for name, code in element.properties:
            if code is not None:
                offset += np.dtype(code).itemsize
                continue
            ccode, icode = lists[name]
            csize = np.dtype(ccode).itemsize
            if offset + csize > len(data):
                raise ParseError(f"element {element.name!r} truncated", offset=offset)
            n = int(np.frombuffer(data, dtype="<" + ccode, count=1, offset=offset)[0])
            offset += csize + n * np.dtype(icode).itemsize
        if offset > len(data):
            raise ParseError(f"element {element.name!r} truncated", offset=offset)
    return offset


def _extract_cloud(names, columns) -> PointCloud:
    cols = dict(zip(names, columns))
    for axis in ("x", "y", "z"):
        if axis not in cols:
            raise MissingXyzError(f"vertex element lacks {axis!r} coordinate")
    positions = np.column_stack([cols["x"], cols["y"], cols["z"]]).astype(np.float64)
    colors = None
    if all(ch in cols for ch in ("red", "green", "blue")):
        colors = np.column_stack([cols["red"], cols["green"], cols["blue"]]).astype(np.uint8)
    votes = cols["votes"].astype(np.int64) if "votes" in cols else None
    return PointCloud(positions, colors=colors, votes=votes)


def read_point_cloud(path) -> PointCloud:
    """Parse a PLY file into a :class:`PointCloud`."""
    data = Path(path).read_bytes()
    fmt, elements, body_offset = _parse_header(data)

    vertex = next((e for e in elements if e.name == "vertex"), None)
    if vertex is None:
        raise MissingXyzError("PLY file has no vertex element")
    scalar_names = [name for name, code in vertex.properties if code is not None]
    float_ok = {name: code for name, code in vertex.properties if code is not None}
    for axis in ("x", "y", "z"):
        if axis in float_ok and float_ok[axis] not in _FLOAT_CODES:
            raise ParseError(f"vertex property {axis!r} must be float32 or float64")
    if vertex.has_lists:
        raise ParseError("list properties on the vertex element are not supported")

    if fmt == "ascii":
        body = data[body_offset:].decode("latin-1")
        lines = [ln for ln in body.split("\n") if ln.strip()]
        cursor = 0
        for element in elements:
            if element is vertex:
                break
            cursor += element.count  # one ASCII row per element entry
        block = lines[cursor : cursor + vertex.count]
        if len(block) < vertex.count:
            raise ParseError(
                f"expected {vertex.count} vertex rows, found {len(block)}", offset=body_offset
            )
        ncols = len(vertex.properties)
        tokens = " ".join(block).split()
        if len(tokens) != vertex.count * ncols:
            raise ParseError(
                f"expected {vertex.count * ncols} vertex values, found {len(tokens)}",
                offset=body_offset,
            )
        try:
            table = np.array(tokens, dtype=np.float64).reshape(vertex.count, ncols)
        except ValueError:
            raise ParseError("non-numeric vertex data", offset=body_offset) from None
        columns = [table[:, i] for i in range(ncols)]
        return _extract_cloud(scalar_names, columns)

    # binary little endian
    offset = body_offset
    for element in elements:
        if element is vertex:
            break
        offset = _skip_element_binary(data, offset, element)
    dtype = np.dtype([(f"f{i}", "<" + code) for i, (_, code) in enumerate(vertex.properties)])
    end = offset + dtype.itemsize * vertex.count
    if end > len(data):
        raise ParseError(
            f"vertex data truncated: need {dtype.itemsize * vertex.count} bytes, "
            f"have {len(data) - offset}",
            offset=offset,
        )
    table = np.frombuffer(data, dtype=dtype, count=vertex.count, offset=offset)
    columns = [table[f"f{i}"] for i in range(len(vertex.properties))]
    return _extract_cloud(scalar_names, columns)


def write_point_cloud(cloud: PointCloud, path, encoding: str = "binary_little_endian") -> None:
    """Write a :class:`PointCloud` as PLY (inverse of :func:`read_point_cloud`).

    Votes, when present, are written as an extra uint32 ``votes`` property.
    """
    if encoding == "binary":
        encoding = "binary_little_endian"
    if encoding not in ("ascii", "binary_little_endian"):
        raise ValidationError(f"unsupported PLY encoding {encoding!r}")

    n = len(cloud)
    header = ["ply", f"format {encoding} 1.0", f"element vertex {n}"]
    header += ["property double x", "property double y", "property double z"]
    if cloud.colors is not None:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    if cloud.votes is not None:
        header += ["property uint votes"]
    header += ["end_header", ""]
    header_bytes = "\n".join(header).encode("ascii")

    if encoding == "ascii":
        rows = []
        for i in range(n):
            parts = [format(v, ".9g") for v in cloud.positions[i]]
            if cloud.colors is not None:
                parts += [str(int(v)) for v in cloud.colors[i]]
            if cloud.votes is not None:
                parts.append(str(int(cloud.votes[i])))
            rows.append(" ".join(parts))
        body = ("\n".join(rows) + "\n").encode("ascii") if rows else b""
        Path(path).write_bytes(header_bytes + body)
        return

    fields = [("x", "<f8"), ("y", "<f8"), ("z", "<f8")]
    if cloud.colors is not None:
        fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
    if cloud.votes is not None:
        fields += [("votes", "<u4")]
    table = np.empty(n, dtype=np.dtype(fields))
    table["x"], table["y"], table["z"] = cloud.positions.T
    if cloud.colors is not None:
        table["red"], table["green"], table["blue"] = cloud.colors.T
    if cloud.votes is not None:
        table["votes"] = cloud.votes
    Path(path).write_bytes(header_bytes + table.tobytes())
