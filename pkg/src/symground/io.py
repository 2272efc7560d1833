"""Plain-text GridFunction files.

Layout::

    # domain=plane2d L=8.0,8.0 n=64,64 dirichlet=true
    index,x,y,re,im
    0,-3.9375,-3.9375,0,0
    ...

Numbers are written with 17 significant digits, so a write/read round trip
reproduces every float exactly.  The ``index`` column is the flat C-order
node index; coordinates are informational and are checked on read.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from .grid import Domain, GridFunction

_AXES = {"line1d": ("x",), "plane2d": ("x", "y"), "cylinder": ("z", "theta")}


def _g(x: float) -> str:
    return "%.17g" % x


def format_grid_function(u: GridFunction) -> str:
    dom = u.domain
    buf = io.StringIO()
    buf.write("# " + dom.describe() + "\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(("index",) + _AXES[dom.kind] + ("re", "im"))
    coords = [c.reshape(-1) for c in dom.coords()]
    vals = u.values.reshape(-1)
    re, im = np.real(vals), np.imag(vals) if np.iscomplexobj(vals) else np.zeros(vals.size)
    for i in range(vals.size):
        wr.writerow([i] + [_g(c[i]) for c in coords] + [_g(re[i]), _g(im[i])])
    return buf.getvalue()


def write_grid_function(path, u: GridFunction) -> None:
    Path(path).write_text(format_grid_function(u), encoding="ascii")


def parse_domain_header(line: str) -> Domain:
    if not line.startswith("#"):
        raise ValueError("missing '# domain=...' header line")
    fields = dict(tok.split("=", 1) for tok in line[1:].split())
    try:
        kind = fields["domain"]
        L = tuple(float(x) for x in fields["L"].split(","))
        n = tuple(int(x) for x in fields["n"].split(","))
        dirichlet = fields.get("dirichlet", "true").lower() == "true"
    except KeyError as exc:
        raise ValueError(f"header lacks field {exc.args[0]!r}") from None
    return Domain(kind, L, n, dirichlet)


def parse_grid_function(text: str) -> GridFunction:
    lines = text.splitlines()
    if len(lines) < 2:
        raise ValueError("grid function file is truncated")
    dom = parse_domain_header(lines[0])
    rows = list(csv.reader(lines[1:]))
    header = tuple(rows[0])
    expected = ("index",) + _AXES[dom.kind] + ("re", "im")
    if header != expected:
        raise ValueError(f"column header {','.join(header)} does not match {','.join(expected)}")
    body = rows[1:]
    if len(body) != dom.size:
        raise ValueError(f"expected {dom.size} rows, found {len(body)}")
    vals = np.zeros(dom.size, dtype=complex)
    seen = np.zeros(dom.size, dtype=bool)
    coords = [c.reshape(-1) for c in dom.coords()]
    nax = dom.ndim
    for row in body:
        i = int(row[0])
        if not 0 <= i < dom.size or seen[i]:
            raise ValueError(f"bad or repeated node index {i}")
        seen[i] = True
        for a in range(nax):
            c = float(row[1 + a])
            if not math.isclose(c, coords[a][i], rel_tol=1e-12, abs_tol=1e-12):
                raise ValueError(f"node {i}: coordinate {c} does not match the grid")
        vals[i] = complex(float(row[1 + nax]), float(row[2 + nax]))
    if not np.any(vals.imag):
        vals = vals.real
    return GridFunction(dom, vals.reshape(dom.shape))


def read_grid_function(path) -> GridFunction:
    return parse_grid_function(Path(path).read_text(encoding="ascii"))
