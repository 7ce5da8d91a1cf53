"""JSON problem files.

A file is one JSON object.  Vectors are ambient coordinates; complex entries
are ``[re, im]`` pairs.  The parsed document is kept verbatim, so emitting a
parsed file reproduces it byte for byte.

Layout::

    {"format": "ofusion-problem/1", "field": "real", "dim": n,
     "analysis": {"subspaces": [[v, ...], ...], "weights": [...]},
     "synthesis_space": [v, ...],                      # optional
     "synthesis": {"subspaces": ..., "weights": ...},  # optional
     "q_matrix": {"layout": "ambient", "row_dims": [...], "col_dims": [...],
                  "rows": [[...], ...]},               # optional
     "local_frames": {"analysis": [[v, ...], ...], "synthesis": [...]},  # optional
     "signals": [v, ...],                              # optional
     "meta": {...}}

``q_matrix.rows`` holds Q in ambient form: an ``(m n) x (m n)`` matrix whose
block (i, j) is ``B_{V_i} Q_ij B_{W_j}^H``, so it does not depend on the bases
chosen for the subspaces.
"""

from __future__ import annotations

import json
from numbers import Real
from pathlib import Path

import numpy as np

from .errors import OFusionError
from .frames import VectorFrame
from .fusion import FusionFrame
from .linalg import DEFAULT_TOL, Field, Subspace, Tolerance, orthonormalize
from .oblique import QOperator, q_from_ambient, q_to_ambient

__all__ = ["FORMAT", "ProblemError", "ProblemFile", "encode_matrix", "encode_vector"]

FORMAT = "ofusion-problem/1"


class ProblemError(OFusionError, ValueError):
    """A problem file is malformed; ``where`` names the offending field."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


def _encode_scalar(x, field: Field):
    if field is Field.COMPLEX:
        z = complex(x)
        return [float(z.real), float(z.imag)]
    if np.iscomplexobj(x):
        if abs(np.imag(x)) > 0:
            raise ProblemError("field", "complex entry in a real problem")
        x = np.real(x)
    return float(x)


def encode_vector(v, field: Field) -> list:
    return [_encode_scalar(x, field) for x in np.asarray(v).ravel()]


def encode_matrix(m, field: Field) -> list:
    return [encode_vector(row, field) for row in np.atleast_2d(np.asarray(m))]


def _decode_scalar(raw, field: Field, where: str):
    if isinstance(raw, bool):
        raise ProblemError(where, "booleans are not numbers")
    if isinstance(raw, Real):
        val = float(raw)
    elif field is Field.COMPLEX and isinstance(raw, list) and len(raw) == 2 \
            and all(isinstance(p, Real) and not isinstance(p, bool) for p in raw):
        val = complex(float(raw[0]), float(raw[1]))
    else:
        raise ProblemError(where, f"expected a number, got {raw!r}")
    if not np.isfinite(val):
        raise ProblemError(where, "non-finite entry")
    return val


def _decode_vector(raw, n: int, field: Field, where: str) -> np.ndarray:
    if not isinstance(raw, list):
        raise ProblemError(where, "expected a list of numbers")
    if len(raw) != n:
        raise ProblemError(where, f"expected length {n}, got {len(raw)}")
    return np.array([_decode_scalar(x, field, f"{where}[{k}]") for k, x in enumerate(raw)], dtype=field.dtype)


def _decode_vectors(raw, n: int, field: Field, where: str) -> np.ndarray:
    if not isinstance(raw, list):
        raise ProblemError(where, "expected a list of vectors")
    cols = [_decode_vector(v, n, field, f"{where}[{k}]") for k, v in enumerate(raw)]
    return np.column_stack(cols) if cols else np.zeros((n, 0), dtype=field.dtype)


class ProblemFile:
    """A parsed problem document with typed accessors."""

    def __init__(self, raw: dict):
        if not isinstance(raw, dict):
            raise ProblemError("<root>", "expected a JSON object")
        self.raw = raw
        try:
            self.field = Field(raw.get("field", "real"))
        except ValueError:
            raise ProblemError("field", f"unknown field {raw.get('field')!r}") from None
        dim = raw.get("dim")
        if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
            raise ProblemError("dim", "must be a positive integer")
        self.dim = dim
        if "analysis" not in raw:
            raise ProblemError("analysis", "missing")
        self.analysis()

    # -------------------------------------------------------------- building

    @classmethod
    def build(cls, field: Field, dim: int, analysis: FusionFrame, synthesis_space: Subspace | None = None,
              synthesis: FusionFrame | None = None, q: QOperator | None = None,
              local_analysis=None, local_synthesis=None, signals=None, meta: dict | None = None) -> "ProblemFile":
        raw: dict = {"format": FORMAT, "field": field.value, "dim": dim,
                     "analysis": cls._encode_ff(analysis, field)}
        if synthesis_space is not None:
            raw["synthesis_space"] = encode_matrix(synthesis_space.basis.T, field) if synthesis_space.dim else []
        if synthesis is not None:
            raw["synthesis"] = cls._encode_ff(synthesis, field)
        if q is not None:
            if synthesis is None:
                raise ValueError("a Q operator needs a synthesis family")
            raw["q_matrix"] = {
                "layout": "ambient",
                "row_dims": list(q.row_blocks),
                "col_dims": list(q.col_blocks),
                "rows": encode_matrix(q_to_ambient(q, analysis, synthesis), field),
            }
        if local_analysis is not None or local_synthesis is not None:
            lf = {}
            if local_analysis is not None:
                lf["analysis"] = [cls._encode_frame(F, field) for F in local_analysis]
            if local_synthesis is not None:
                lf["synthesis"] = [cls._encode_frame(G, field) for G in local_synthesis]
            raw["local_frames"] = lf
        if signals is not None:
            raw["signals"] = [encode_vector(s, field) for s in signals]
        if meta:
            raw["meta"] = meta
        return cls(json.loads(json.dumps(raw)))

    @staticmethod
    def _encode_ff(ff: FusionFrame, field: Field) -> dict:
        return {"subspaces": [encode_matrix(s.basis.T, field) if s.dim else [] for s in ff.subspaces],
                "weights": [float(w) for w in ff.weights]}

    @staticmethod
    def _encode_frame(F: VectorFrame, field: Field) -> list:
        return encode_matrix(F.matrix.T, field) if len(F) else []

    def replace(self, **sections) -> "ProblemFile":
        """A copy with top-level sections replaced (``None`` removes a section)."""
        raw = json.loads(json.dumps(self.raw))
        for k, v in sections.items():
            if v is None:
                raw.pop(k, None)
            else:
                raw[k] = v
        return ProblemFile(raw)

    # -------------------------------------------------------------- accessors

    def _ff(self, key: str, tol: Tolerance) -> FusionFrame | None:
        sec = self.raw.get(key)
        if sec is None:
            return None
        if not isinstance(sec, dict):
            raise ProblemError(key, "expected an object with subspaces and weights")
        subs_raw, w_raw = sec.get("subspaces"), sec.get("weights")
        if not isinstance(subs_raw, list) or not subs_raw:
            raise ProblemError(f"{key}.subspaces", "expected a non-empty list")
        if not isinstance(w_raw, list) or len(w_raw) != len(subs_raw):
            raise ProblemError(f"{key}.weights", "expected one weight per subspace")
        weights = [_decode_scalar(w, Field.REAL, f"{key}.weights[{k}]") for k, w in enumerate(w_raw)]
        for k, w in enumerate(weights):
            if w <= 0:
                raise ProblemError(f"{key}.weights[{k}]", "weights must be strictly positive")
        subs = [orthonormalize(_decode_vectors(s, self.dim, self.field, f"{key}.subspaces[{k}]"), tol,
                               ambient_dim=self.dim)
                for k, s in enumerate(subs_raw)]
        return FusionFrame(subs, weights)

    def analysis(self, tol: Tolerance = DEFAULT_TOL) -> FusionFrame:
        return self._ff("analysis", tol)

    def synthesis(self, tol: Tolerance = DEFAULT_TOL) -> FusionFrame | None:
        return self._ff("synthesis", tol)

    def synthesis_space(self, tol: Tolerance = DEFAULT_TOL) -> Subspace | None:
        raw = self.raw.get("synthesis_space")
        if raw is None:
            return None
        return orthonormalize(_decode_vectors(raw, self.dim, self.field, "synthesis_space"), tol,
                              ambient_dim=self.dim)

    def q(self, wff: FusionFrame, vff: FusionFrame, tol: Tolerance = DEFAULT_TOL) -> QOperator | None:
        sec = self.raw.get("q_matrix")
        if sec is None:
            return None
        if not isinstance(sec, dict) or sec.get("layout") != "ambient":
            raise ProblemError("q_matrix.layout", "expected 'ambient'")
        if sec.get("row_dims") != list(vff.block_dims):
            raise ProblemError("q_matrix.row_dims", f"expected {list(vff.block_dims)}")
        if sec.get("col_dims") != list(wff.block_dims):
            raise ProblemError("q_matrix.col_dims", f"expected {list(wff.block_dims)}")
        rows = sec.get("rows")
        nr, nc = len(vff) * self.dim, len(wff) * self.dim
        if not isinstance(rows, list) or len(rows) != nr:
            raise ProblemError("q_matrix.rows", f"expected {nr} rows")
        m = np.array([_decode_vector(r, nc, self.field, f"q_matrix.rows[{k}]") for k, r in enumerate(rows)])
        return q_from_ambient(m.reshape(nr, nc), wff, vff, tol)

    def local_frames(self, side: str) -> list | None:
        sec = self.raw.get("local_frames")
        if sec is None or sec.get(side) is None:
            return None
        raw = sec[side]
        if not isinstance(raw, list):
            raise ProblemError(f"local_frames.{side}", "expected a list of vector lists")
        return [VectorFrame(_decode_vectors(F, self.dim, self.field, f"local_frames.{side}[{k}]"),
                            ambient_dim=self.dim)
                for k, F in enumerate(raw)]

    def signals(self) -> list:
        raw = self.raw.get("signals", [])
        if not isinstance(raw, list):
            raise ProblemError("signals", "expected a list of vectors")
        return [_decode_vector(s, self.dim, self.field, f"signals[{k}]") for k, s in enumerate(raw)]

    @property
    def meta(self) -> dict:
        return dict(self.raw.get("meta", {}))

    # -------------------------------------------------------------- text

    def dumps(self) -> str:
        return json.dumps(self.raw, indent=1) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ProblemFile":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ProblemError("<document>", f"invalid JSON ({e.msg} at line {e.lineno})") from None
        return cls(raw)

    @classmethod
    def load(cls, path) -> "ProblemFile":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    def dump(self, path):
        Path(path).write_text(self.dumps(), encoding="utf-8")
