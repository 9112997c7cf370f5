"""File formats: versioned JSON for structured artifacts, CSV for series.

JSON documents carry a ``format_version`` key; CSV files carry the same tag
in a leading ``#`` comment line followed by a header row.  Manifold points
serialize as flat JSON arrays (length-3 vectors on the sphere, row-major
9-vectors for SPD(3), plain vectors in Euclidean space); SPD matrices are
checked for symmetry when loaded.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .applications import AnomalyFlag, DecayReport
from .errors import ValidationError
from .linear_pyramid import LinearPyramid, PeriodicSequence
from .manifolds import SPD, Euclidean, Manifold, Sphere, get_manifold
from .manifold_pyramid import DetailLayer, ManifoldPyramid, ManifoldSequence
from .masks import Mask

__all__ = [
    "FORMAT_VERSION",
    "manifold_tag",
    "write_json",
    "read_json",
    "mask_to_dict",
    "mask_from_dict",
    "sequence_to_dict",
    "sequence_from_dict",
    "linear_pyramid_to_dict",
    "linear_pyramid_from_dict",
    "pyramid_to_dict",
    "pyramid_from_dict",
    "decay_report_to_dict",
    "write_sequence_csv",
    "read_sequence_csv",
    "write_norms_csv",
    "write_flags_csv",
    "write_series_csv",
]

FORMAT_VERSION = 1

#: symmetry tolerance applied to SPD matrices on load
SPD_SYMMETRY_TOL = 1e-10


def manifold_tag(manifold: Manifold) -> str:
    if isinstance(manifold, Sphere):
        return "s2"
    if isinstance(manifold, SPD):
        return "spd3"
    if isinstance(manifold, Euclidean):
        return "euclidean"
    raise ValidationError(f"no serialization tag for {manifold!r}")


def dumps(document: dict) -> str:
    """Serialize with sorted keys so equal documents give equal bytes."""
    return json.dumps(document, indent=2, sort_keys=True)


def write_json(path: str | Path, document: dict) -> None:
    Path(path).write_text(dumps(document) + "\n")


def read_json(path: str | Path) -> dict:
    try:
        document = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(document, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    return document


def _check_version(document: dict, context: str) -> None:
    version = document.get("format_version")
    if version != FORMAT_VERSION:
        raise ValidationError(
            f"{context}: format_version {version!r} is not supported "
            f"(expected {FORMAT_VERSION})"
        )


def mask_to_dict(mask: Mask) -> dict:
    document = mask.to_dict()
    document["format_version"] = FORMAT_VERSION
    return document


def mask_from_dict(document: dict) -> Mask:
    _check_version(document, "mask")
    return Mask.from_dict(document)


def _encode_points(manifold: Manifold, points: np.ndarray) -> list:
    return points.reshape(points.shape[0], -1).tolist()


def _decode_points(manifold: Manifold, rows: list, context: str) -> np.ndarray:
    flat = np.asarray(rows, dtype=float)
    if isinstance(manifold, Sphere):
        shape, size = (3,), 3
    elif isinstance(manifold, SPD):
        shape, size = (manifold.dim, manifold.dim), manifold.dim**2
    else:
        shape, size = (manifold.dim,), manifold.dim
    if flat.ndim != 2 or flat.shape[1] != size:
        raise ValidationError(
            f"{context}: expected rows of {size} numbers, got shape {flat.shape}"
        )
    points = flat.reshape((flat.shape[0],) + shape)
    if isinstance(manifold, SPD):
        skew = np.max(np.abs(points - np.swapaxes(points, -1, -2)))
        if skew > SPD_SYMMETRY_TOL:
            raise ValidationError(
                f"{context}: matrix rows are not symmetric (max skew {skew:.3e})"
            )
        points = 0.5 * (points + np.swapaxes(points, -1, -2))
    return points


def _manifold_fields(manifold: Manifold) -> dict:
    fields = {"manifold": manifold_tag(manifold)}
    if isinstance(manifold, Euclidean):
        fields["dim"] = manifold.dim
    return fields


def _manifold_from_fields(document: dict, context: str) -> Manifold:
    try:
        tag = document["manifold"]
    except KeyError:
        raise ValidationError(f"{context}: missing 'manifold' tag") from None
    return get_manifold(tag, document.get("dim"))


def sequence_to_dict(sequence: ManifoldSequence) -> dict:
    document = {
        "format_version": FORMAT_VERSION,
        "level": sequence.level,
        "points": _encode_points(sequence.manifold, sequence.points),
    }
    document.update(_manifold_fields(sequence.manifold))
    return document


def sequence_from_dict(document: dict) -> ManifoldSequence:
    _check_version(document, "sequence")
    manifold = _manifold_from_fields(document, "sequence")
    points = _decode_points(manifold, document.get("points", []), "sequence")
    return ManifoldSequence(manifold, points, int(document.get("level", 0)))


def linear_pyramid_to_dict(pyramid: LinearPyramid) -> dict:
    document = pyramid.to_dict()
    document["format_version"] = FORMAT_VERSION
    return document


def linear_pyramid_from_dict(document: dict) -> LinearPyramid:
    _check_version(document, "linear pyramid")
    return LinearPyramid.from_dict(document)


def pyramid_to_dict(pyramid: ManifoldPyramid) -> dict:
    manifold = pyramid.manifold
    details = []
    for layer in pyramid.details:
        bases = _encode_points(manifold, layer.bases)
        vectors = _encode_points(manifold, layer.vectors)
        details.append(
            [{"base": b, "vec": v} for b, v in zip(bases, vectors)]
        )
    document = {
        "format_version": FORMAT_VERSION,
        "coarse": _encode_points(manifold, pyramid.coarse.points),
        "details": details,
    }
    document.update(_manifold_fields(manifold))
    return document


def pyramid_from_dict(document: dict) -> ManifoldPyramid:
    _check_version(document, "pyramid")
    manifold = _manifold_from_fields(document, "pyramid")
    coarse_points = _decode_points(manifold, document.get("coarse", []), "pyramid coarse")
    coarse = ManifoldSequence(manifold, coarse_points, 0)
    layers = []
    for level, entries in enumerate(document.get("details", []), start=1):
        try:
            bases = _decode_points(
                manifold, [e["base"] for e in entries], f"details level {level}"
            )
            raw = np.asarray([e["vec"] for e in entries], dtype=float)
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"details level {level}: bad entry ({exc})") from exc
        vectors = raw.reshape(bases.shape)
        if isinstance(manifold, SPD):
            vectors = 0.5 * (vectors + np.swapaxes(vectors, -1, -2))
        layers.append(DetailLayer(bases, vectors, level))
    return ManifoldPyramid(manifold, coarse, tuple(layers))


def decay_report_to_dict(report: DecayReport) -> dict:
    document = report.asdict()
    document["format_version"] = FORMAT_VERSION
    return document


def _write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    buffer = _io.StringIO()
    buffer.write(f"# format_version={FORMAT_VERSION}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buffer.getvalue())


def _format_float(x: float) -> str:
    return repr(float(x))


def write_sequence_csv(path: str | Path, values: np.ndarray) -> None:
    """One sequence entry per row; vector entries become comma-separated."""
    values = np.asarray(values, dtype=float)
    flat = values.reshape(values.shape[0], -1)
    header = [f"c{i}" for i in range(flat.shape[1])] if flat.shape[1] > 1 else ["value"]
    _write_csv(path, header, [[_format_float(x) for x in row] for row in flat])


def read_sequence_csv(path: str | Path) -> np.ndarray:
    rows = []
    with open(path, newline="") as handle:
        for record in csv.reader(handle):
            if not record or record[0].startswith("#"):
                continue
            try:
                rows.append([float(x) for x in record])
            except ValueError:
                continue  # header row
    if not rows:
        raise ValidationError(f"{path}: no numeric rows")
    values = np.asarray(rows, dtype=float)
    return values[:, 0] if values.shape[1] == 1 else values


def write_norms_csv(path: str | Path, pyramid: ManifoldPyramid) -> None:
    """Detail norms as (level, index, norm) rows, coarse level first."""
    rows = []
    for layer in pyramid.details:
        for index, norm in enumerate(layer.norms(pyramid.manifold)):
            rows.append([layer.level, index, _format_float(norm)])
    _write_csv(path, ["level", "index", "norm"], rows)


def write_flags_csv(path: str | Path, flags: list[AnomalyFlag]) -> None:
    rows = [
        [f.level, f.index, _format_float(f.norm), _format_float(f.grid_position)]
        for f in flags
    ]
    _write_csv(path, ["level", "index", "norm", "grid_position"], rows)


def write_series_csv(path: str | Path, header: list[str], columns: list[list]) -> None:
    """Column-oriented helper: writes rows zipped from equal-length columns."""
    lengths = {len(c) for c in columns}
    if len(lengths) > 1:
        raise ValidationError(f"columns have differing lengths {sorted(lengths)}")
    rows = [
        [x if isinstance(x, (int, str)) else _format_float(x) for x in row]
        for row in zip(*columns)
    ]
    _write_csv(path, header, rows)
