"""JSON body files.

Polygons are stored as ``{"type": "polygon", "vertices": [[x, y], ...]}`` with
vertices in any order (the loader takes the convex hull); balls, ellipsoids
and simplices use ``{"type": "ball", "d": 2, "r": 1.0, "c": [0, 0]}``,
``{"type": "ellipsoid", "d": 2, "matrix": [[...]], "c": [...]}`` (matrix maps the unit ball) and
``{"type": "simplex", "vertices": [...]}``.  Other keys (``name``,
``derived_from``) are kept as metadata.
"""

import json
from pathlib import Path

import numpy as np

from ._validation import GeometryError
from .bodies import Ball, Ellipsoid, Polygon, Simplex, make_polygon

__all__ = ["body_from_dict", "body_to_dict", "load_body", "save_body"]


def body_from_dict(doc):
    if not isinstance(doc, dict) or "type" not in doc:
        raise GeometryError("body document must be an object with a 'type' key")
    kind = doc["type"]
    try:
        if kind == "polygon":
            return make_polygon(doc["vertices"])
        if kind == "ball":
            d = int(doc.get("d", len(doc.get("c", [0, 0]))))
            return Ball(d, float(doc.get("r", 1.0)), doc.get("c"))
        if kind == "ellipsoid":
            return Ellipsoid(np.asarray(doc["matrix"], dtype=float), doc.get("c"))
        if kind == "simplex":
            V = np.asarray(doc["vertices"], dtype=float)
            return make_polygon(V) if V.shape[1:] == (2,) else Simplex(V)
    except KeyError as exc:
        raise GeometryError(f"{kind} document is missing {exc}") from None
    raise GeometryError(f"unknown body type {kind!r}")


def body_to_dict(K, **meta):
    if isinstance(K, Polygon):
        doc = {"type": "polygon", "vertices": K.vertices.tolist()}
    elif isinstance(K, Ball):
        doc = {"type": "ball", "d": K.dim, "r": K.radius, "c": K.center.tolist()}
    elif isinstance(K, Ellipsoid):
        doc = {"type": "ellipsoid", "d": K.dim, "matrix": K.transform.tolist(), "c": K.center.tolist()}
    elif isinstance(K, Simplex):
        doc = {"type": "simplex", "vertices": K.vertices.tolist()}
    else:
        raise GeometryError(f"cannot serialise {type(K).__name__}")
    doc.update({k: v for k, v in meta.items() if v is not None})
    return doc


def load_body(path):
    """Read a body file; returns (body, metadata dict)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise GeometryError(f"cannot read body file {path}: {exc}") from None
    return body_from_dict(doc), {k: v for k, v in doc.items() if k not in _GEOMETRY_KEYS}


_GEOMETRY_KEYS = {"type", "vertices", "d", "r", "c", "matrix"}


def save_body(K, path, **meta):
    Path(path).write_text(json.dumps(body_to_dict(K, **meta), indent=1) + "\n")
