"""Matrix-free symmetric operators and Matrix Market input."""

import re

import numpy as np
import scipy.sparse as sp

__all__ = [
    "LinearOperator",
    "MatrixMarketError",
    "diagonal_operator",
    "dense_operator",
    "sparse_operator",
    "block_diagonal_operator",
    "scale_shift",
    "load_matrix_market",
]


class LinearOperator:
    """Real symmetric operator of dimension ``dim`` accessed through ``apply``.

    ``apply`` must not mutate shared state so that several threads can call it
    on distinct vectors at once. ``exact_spectrum`` is only used by oracles.
    """

    def __init__(self, dim, apply, exact_spectrum=None, name=None):
        if dim < 1:
            raise ValueError("operator dimension must be positive")
        self.dim = int(dim)
        self._apply = apply
        self.exact_spectrum = (
            None if exact_spectrum is None else np.sort(np.asarray(exact_spectrum, dtype=float))
        )
        self.name = name or "operator"

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got shape {x.shape}")
        return self._apply(x)

    __call__ = apply

    def __matmul__(self, x):
        return self.apply(x)

    def to_dense(self):
        """Materialize by applying to the identity (small problems only)."""
        I = np.eye(self.dim)
        return np.column_stack([self._apply(I[:, j]) for j in range(self.dim)])

    def __repr__(self):
        return f"LinearOperator({self.name}, dim={self.dim})"


def diagonal_operator(eigs, name="diagonal"):
    """Diagonal operator; its entries are also its exact spectrum."""
    d = np.array(eigs, dtype=float).reshape(-1)
    if d.size == 0:
        raise ValueError("diagonal operator needs at least one entry")
    d.flags.writeable = False
    op = LinearOperator(d.size, lambda x: d * x, exact_spectrum=d, name=name)
    op.diagonal = d
    return op


def dense_operator(M, exact_spectrum=None, name="dense", check=True):
    """Operator backed by a dense symmetric array."""
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("dense operator must be square")
    if check:
        _check_symmetric(M)
    M.flags.writeable = False
    op = LinearOperator(M.shape[0], lambda x: M @ x, exact_spectrum, name=name)
    op.matrix = M
    return op


def sparse_operator(M, exact_spectrum=None, name="sparse", check=True):
    """Operator backed by compressed row storage of a symmetric matrix."""
    M = sp.csr_matrix(M, dtype=float)
    if M.shape[0] != M.shape[1]:
        raise ValueError("sparse operator must be square")
    M.sum_duplicates()
    M.sort_indices()
    if check:
        _check_symmetric(M)
    op = LinearOperator(M.shape[0], lambda x: M @ x, exact_spectrum, name=name)
    op.matrix = M
    return op


def block_diagonal_operator(blocks, name="block"):
    """Direct sum of operators."""
    sizes = [b.dim for b in blocks]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    n = int(offsets[-1])

    def apply(x):
        y = np.empty(n)
        for b, lo, hi in zip(blocks, offsets[:-1], offsets[1:]):
            y[lo:hi] = b.apply(x[lo:hi])
        return y

    spectra = [b.exact_spectrum for b in blocks]
    exact = None if any(s is None for s in spectra) else np.concatenate(spectra)
    return LinearOperator(n, apply, exact, name=name)


def scale_shift(op, c, d):
    """Operator c*A + d*I."""
    if c == 0:
        raise ValueError("scale factor must be nonzero")
    c, d = float(c), float(d)
    inner = getattr(op, "_affine", None)
    if inner is not None:
        # fold nested affine maps into one
        base, c0, d0 = inner
        return scale_shift(base, c * c0, c * d0 + d)

    def apply(x):
        y = op.apply(x)
        y *= c
        if d != 0.0:
            y += d * x
        return y

    exact = None if op.exact_spectrum is None else c * op.exact_spectrum + d
    out = LinearOperator(op.dim, apply, exact, name=f"{c:g}*{op.name}{d:+g}")
    out._affine = (op, c, d)
    return out


def _check_symmetric(M, rtol=1e-12):
    asym = abs(M - M.T).max()
    scale = abs(M).max()
    if asym > rtol * scale:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e}, scale {scale:.3e})")


class MatrixMarketError(ValueError):
    """Malformed or unsupported Matrix Market input."""

    def __init__(self, path, line, col, msg):
        super().__init__(f"{path}:{line}:{col}: {msg}")
        self.line = line
        self.col = col


_TOKEN = re.compile(r"\S+")


def load_matrix_market(path):
    """Read a real symmetric matrix in Matrix Market coordinate format.

    Symmetric storage is expanded to the full pattern. ``general`` files are
    accepted only when numerically symmetric to 1e-12 relative.
    """
    path = str(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError(path, 1, 1, "empty file")
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket":
        raise MatrixMarketError(path, 1, 1, "missing '%%MatrixMarket' header")
    obj, fmt, field, symm = (h.lower() for h in header[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(path, 1, 1, f"unsupported format '{obj} {fmt}'")
    if field not in ("real", "integer", "double"):
        col = lines[0].lower().find(field) + 1
        raise MatrixMarketError(path, 1, col, f"unsupported field '{field}'")
    if symm not in ("symmetric", "general"):
        col = lines[0].lower().find(symm) + 1
        raise MatrixMarketError(path, 1, col, f"unsupported symmetry '{symm}'")

    def tokens(lineno):
        return [(m.group(), m.start() + 1) for m in _TOKEN.finditer(lines[lineno - 1])]

    def number(tok, lineno, kind):
        text, col = tok
        try:
            return kind(text)
        except ValueError:
            raise MatrixMarketError(path, lineno, col, f"cannot parse '{text}'") from None

    lineno = 2
    while lineno <= len(lines) and (not lines[lineno - 1].strip() or lines[lineno - 1].startswith("%")):
        lineno += 1
    if lineno > len(lines):
        raise MatrixMarketError(path, lineno, 1, "missing size line")
    toks = tokens(lineno)
    if len(toks) != 3:
        raise MatrixMarketError(path, lineno, 1, "size line needs 'rows cols entries'")
    nrows, ncols, nnz = (number(t, lineno, int) for t in toks)
    if nrows != ncols:
        raise MatrixMarketError(path, lineno, toks[1][1], f"matrix is not square ({nrows}x{ncols})")
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    count = 0
    for lineno in range(lineno + 1, len(lines) + 1):
        toks = tokens(lineno)
        if not toks or toks[0][0].startswith("%"):
            continue
        if count >= nnz:
            raise MatrixMarketError(path, lineno, 1, f"more than {nnz} entries")
        if len(toks) != 3:
            col = toks[-1][1] if toks else 1
            raise MatrixMarketError(path, lineno, col, "entry needs 'row col value'")
        i = number(toks[0], lineno, int)
        j = number(toks[1], lineno, int)
        v = number(toks[2], lineno, float)
        for idx, tok in ((i, toks[0]), (j, toks[1])):
            if not 1 <= idx <= nrows:
                raise MatrixMarketError(path, lineno, tok[1], f"index {idx} out of range")
        rows[count], cols[count], vals[count] = i - 1, j - 1, v
        count += 1
    if count != nnz:
        raise MatrixMarketError(path, len(lines), 1, f"expected {nnz} entries, found {count}")
    if symm == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    M = sp.csr_matrix((vals, (rows, cols)), shape=(nrows, ncols))
    return sparse_operator(M, name=path)
