"""The bundled corpus of test bodies."""

from importlib import resources
from pathlib import Path

from ._validation import GeometryError
from .bodies import make_polygon, random_polygon, regular_polygon
from .io import load_body, save_body
from .shadow import family_generator

__all__ = ["build_corpus", "corpus_dir", "load_corpus"]


def corpus_dir():
    return Path(str(resources.files("randsimplex") / "data" / "corpus"))


def _members():
    yield "triangle", make_polygon([[0, 0], [1, 0], [0, 1]])
    yield "square", make_polygon([[-1, -1], [1, -1], [1, 1], [-1, 1]])
    for n in (5, 6, 8):
        yield f"regular_{n}", regular_polygon(n)
    yield "disc_512", regular_polygon(512, phase=0.0)
    for n in range(4, 13):
        yield f"random_{n:02d}", random_polygon(n, seed=1000 + n, affine=True)
    for eps in (0.1, 0.3):
        yield f"spindle_{eps:g}", family_generator("spindle", eps)
    for delta in (0.1, 0.3):
        yield f"truncated_{delta:g}", family_generator("truncated_triangle", delta)


def build_corpus(directory):
    """Write the corpus files into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, P in _members():
        save_body(P, directory / f"{name}.json", name=name)


def load_corpus(directory=None):
    """List of (name, body) pairs and a list of (file, error) for unreadable entries."""
    directory = corpus_dir() if directory is None else Path(directory)
    bodies, errors = [], []
    for path in sorted(directory.glob("*.json")):
        try:
            K, meta = load_body(path)
        except GeometryError as exc:
            errors.append((path.name, str(exc)))
            continue
        bodies.append((meta.get("name", path.stem), K))
    return bodies, errors
