"""Plain-text matrix and vector exchange formats.

CSV matrices are header-free numeric grids, one row per line, ``.`` decimal
point, scientific notation accepted; vectors are single-column CSVs.  The
sparse triplet format starts with a header line ``m n nnz`` followed by one
``row col value`` line per structural nonzero.  Values are written with 17
significant digits so a write/read round trip reproduces every float bit.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "write_matrix_csv",
    "read_matrix_csv",
    "write_vector_csv",
    "read_vector_csv",
    "write_triplet",
    "read_triplet",
]


def write_matrix_csv(path, A) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    np.savetxt(path, A, delimiter=",", fmt="%.17g")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise ValueError(
                    f"{path}:{lineno}: expected {width} columns, found {len(fields)}"
                )
            row = []
            for col, tok in enumerate(fields, start=1):
                try:
                    row.append(float(tok))
                except ValueError:
                    raise ValueError(
                        f"{path}:{lineno}: column {col}: not a number: {tok.strip()!r}"
                    ) from None
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    return np.asarray(rows, dtype=float)


def write_vector_csv(path, v) -> None:
    v = np.asarray(v, dtype=float).reshape(-1, 1)
    np.savetxt(path, v, delimiter=",", fmt="%.17g")


def read_vector_csv(path) -> np.ndarray:
    arr = read_matrix_csv(path)
    if arr.shape[1] == 1:
        return arr[:, 0]
    if arr.shape[0] == 1:
        return arr[0, :]
    raise ValueError(f"{path}: expected a single-column vector, got shape {arr.shape}")


def write_triplet(path, A) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    rows, cols = np.nonzero(A)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{m} {n} {rows.size}\n")
        for i, j in zip(rows, cols):
            handle.write(f"{i} {j} {A[i, j]:.17g}\n")


def read_triplet(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as handle:
        lines = [(no, ln.strip()) for no, ln in enumerate(handle, start=1) if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty triplet file")
    header_no, header = lines[0]
    parts = header.split()
    if len(parts) != 3:
        raise ValueError(f"{path}:{header_no}: header must be 'm n nnz'")
    try:
        m, n, nnz = (int(p) for p in parts)
    except ValueError:
        raise ValueError(f"{path}:{header_no}: header must hold three integers") from None
    if m < 1 or n < 1 or nnz < 0:
        raise ValueError(f"{path}:{header_no}: bad dimensions {m} {n} {nnz}")
    if len(lines) - 1 != nnz:
        raise ValueError(f"{path}: header promises {nnz} entries, file has {len(lines) - 1}")
    A = np.zeros((m, n))
    for lineno, line in lines[1:]:
        fields = line.split()
        if len(fields) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'row col value'")
        try:
            i, j, v = int(fields[0]), int(fields[1]), float(fields[2])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed entry {line!r}") from None
        if not (0 <= i < m and 0 <= j < n):
            raise ValueError(f"{path}:{lineno}: index ({i}, {j}) outside {m}x{n}")
        A[i, j] = v
    return A
