"""CSV result tables with exact float round-trips."""

import csv
from dataclasses import dataclass, field
import io
import math

__all__ = ["ResultTable", "fmt", "write_csv"]

# column name -> parser; unknown columns are kept as text
_TYPES = {
    "threshold_db": float, "p_cov": float, "est_error": float, "wilson_low": float,
    "wilson_high": float, "p_analytic": float, "p_sim": float, "se": float, "z": float,
    "seed": int, "iterations": int,
}


def fmt(v):
    """Text form of a cell; floats use 17 significant digits."""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    if hasattr(v, "dtype"):
        return fmt(v.item())
    return str(v)


def write_csv(path_or_stream, header, rows):
    """Comma-separated, header row, LF line endings."""
    own = isinstance(path_or_stream, (str, bytes)) or hasattr(path_or_stream, "__fspath__")
    fh = open(path_or_stream, "w", newline="", encoding="utf-8") if own else path_or_stream
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    finally:
        if own:
            fh.close()


def _parse(name, text):
    kind = _TYPES.get(name)
    if kind is None:
        return text
    if kind is float and text in ("inf", "-inf", "nan"):
        return float(text)
    return kind(text)


@dataclass
class ResultTable:
    """Rows of named columns plus run metadata repeated on every CSV row."""

    columns: tuple
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row length does not match columns")
        self.rows.append(tuple(values))

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def validate(self):
        """Ascending thresholds within each scheme and probabilities in ``[0, 1]``."""
        if "scheme" in self.columns and "threshold_db" in self.columns:
            last = {}
            for s, t in zip(self.column("scheme"), self.column("threshold_db")):
                if s in last and not t > last[s]:
                    raise ValueError(f"thresholds not ascending for {s}")
                last[s] = t
        for name in ("p_cov", "p_analytic", "p_sim"):
            if name in self.columns:
                for p in self.column(name):
                    if not (0.0 <= p <= 1.0 or math.isnan(p)):
                        raise ValueError(f"{name} outside [0, 1]")

    def to_csv(self, path_or_stream):
        meta = list(self.metadata)
        write_csv(path_or_stream, list(self.columns) + meta,
                  [tuple(r) + tuple(self.metadata[m] for m in meta) for r in self.rows])

    def to_text(self):
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, path_or_stream, meta_keys=("scenario_hash", "seed", "version", "iterations")):
        own = isinstance(path_or_stream, str) or hasattr(path_or_stream, "__fspath__")
        fh = open(path_or_stream, newline="", encoding="utf-8") if own else path_or_stream
        try:
            reader = csv.reader(fh)
            header = next(reader)
            body = list(reader)
        finally:
            if own:
                fh.close()
        data_cols = [h for h in header if h not in meta_keys]
        idx = [header.index(h) for h in data_cols]
        midx = {h: header.index(h) for h in header if h in meta_keys}
        rows = [tuple(_parse(header[i], r[i]) for i in idx) for r in body]
        meta = {}
        if body:
            meta = {h: _parse(h, body[0][i]) for h, i in midx.items()}
        return cls(tuple(data_cols), rows, meta)
