"""Persistence of spectral parameters (text) and exported direct models (joblib)."""

from pathlib import Path
from typing import List, Tuple, Union

import joblib
import numpy as np

from sparcs.core.exceptions import InputError, ParseError, SparcsError
from sparcs.core.logging import get_logger
from sparcs.services.export import DirectModel
from sparcs.services.spectral import LayerSizes, SpectralParams

logger = get_logger(__name__)

MAGIC = "SPARCS1"
_FLAGS = ("bias", "frozen_input", "frozen_output")


def _format_row(values: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in values)


def dumps_checkpoint(params: SpectralParams) -> str:
    """Text form: magic, layer sizes, flags, phi blocks row-major, eigenvalue vectors."""
    lines = [
        MAGIC,
        "layers " + " ".join(str(n) for n in params.layers),
        "flags " + " ".join(f"{name}={int(getattr(params, name))}" for name in _FLAGS),
    ]
    for k, p in enumerate(params.phi):
        lines.append(f"phi {k} {p.shape[0]} {p.shape[1]}")
        lines.extend(_format_row(row) for row in p)
    for k, e in enumerate(params.eig):
        lines.append(f"eig {k} {e.shape[0]}")
        lines.append(_format_row(e))
    return "\n".join(lines) + "\n"


class _Lines:
    """Line cursor that remembers 1-based line numbers for error messages."""

    def __init__(self, text: str, source: str):
        self._lines: List[str] = text.splitlines()
        self._pos = 0
        self.source = source

    def next(self) -> Tuple[int, str]:
        if self._pos >= len(self._lines):
            raise ParseError(f"{self.source}: line {self._pos + 1}: unexpected end of file")
        self._pos += 1
        return self._pos, self._lines[self._pos - 1].strip()

    def error(self, lineno: int, message: str) -> ParseError:
        return ParseError(f"{self.source}: line {lineno}: {message}")

    def floats(self, expected: int) -> np.ndarray:
        lineno, line = self.next()
        try:
            values = np.array([float(tok) for tok in line.split()], dtype=np.float64)
        except ValueError:
            raise self.error(lineno, "non-numeric value") from None
        if values.shape[0] != expected:
            raise self.error(lineno, f"expected {expected} values, found {values.shape[0]}")
        return values

    def header(self, keyword: str, index: int, arity: int) -> Tuple[int, Tuple[int, ...]]:
        """Parse a `keyword index n...` line; returns its line number and the integers."""
        lineno, line = self.next()
        parts = line.split()
        if len(parts) != arity + 2 or parts[0] != keyword or parts[1] != str(index):
            raise self.error(lineno, f"expected '{keyword} {index}' header")
        try:
            return lineno, tuple(int(p) for p in parts[2:])
        except ValueError:
            raise self.error(lineno, "non-integer shape") from None


def loads_checkpoint(text: str, source: str = "<checkpoint>") -> SpectralParams:
    cursor = _Lines(text, source)

    lineno, line = cursor.next()
    if line != MAGIC:
        raise cursor.error(lineno, f"missing magic string {MAGIC}")

    lineno, line = cursor.next()
    parts = line.split()
    if not parts or parts[0] != "layers":
        raise cursor.error(lineno, "expected 'layers' line")
    try:
        layers = LayerSizes(tuple(int(p) for p in parts[1:]))
    except (ValueError, SparcsError) as exc:
        raise cursor.error(lineno, f"bad layer sizes: {exc}") from None

    lineno, line = cursor.next()
    parts = line.split()
    flags = {}
    if not parts or parts[0] != "flags":
        raise cursor.error(lineno, "expected 'flags' line")
    for item in parts[1:]:
        name, _, value = item.partition("=")
        if name not in _FLAGS or value not in ("0", "1"):
            raise cursor.error(lineno, f"bad flag {item!r}")
        flags[name] = value == "1"

    phi = []
    for k in range(layers.depth):
        lineno, (rows, cols) = cursor.header("phi", k, 2)
        if (rows, cols) != (layers[k + 1], layers[k]):
            raise cursor.error(lineno, f"phi {k} shape {rows}x{cols} disagrees with layer sizes")
        phi.append(np.vstack([cursor.floats(cols) for _ in range(rows)]))

    eig = []
    for k in range(len(layers)):
        lineno, (n,) = cursor.header("eig", k, 1)
        if n != layers[k]:
            raise cursor.error(lineno, f"eig {k} length {n} disagrees with layer sizes")
        eig.append(cursor.floats(n))

    try:
        return SpectralParams(layers=layers, phi=tuple(phi), eig=tuple(eig), **flags)
    except SparcsError as exc:
        raise ParseError(f"{source}: inconsistent checkpoint: {exc}") from exc


def save_checkpoint(params: SpectralParams, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_checkpoint(params))
    logger.info(f"Checkpoint written to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> SpectralParams:
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read checkpoint {path}: {exc}") from exc
    return loads_checkpoint(text, source=str(path))


def save_direct_model(model: DirectModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    joblib.dump(model, path)
    logger.info(f"Direct model written to {path}")
    return path


def load_direct_model(path: Union[str, Path]) -> DirectModel:
    try:
        model = joblib.load(Path(path))
    except OSError as exc:
        raise InputError(f"cannot read direct model {path}: {exc}") from exc
    if not isinstance(model, DirectModel):
        raise ParseError(f"{path}: not a direct model artifact")
    return model
