"""Plain-text instance files.

Layout (one item per line, ``#`` starts a comment)::

    symcone-instance 1
    structure psd:20
    m 21
    family strong
    seed 7
    param n 20
    param tau 20
    digest 3f2a...
    rows
    <m lines of d floats>
    end

Floats are written with 17 significant digits, so reading a written file
reproduces every finite double exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .jordan import ConeStructure, parse_block
from .linear_ops import DenseOperator

FORMAT_VERSION = 1
MAGIC = "symcone-instance"


class InstanceParseError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


@dataclass
class InstanceFile:
    structure: ConeStructure
    matrix: np.ndarray
    family: str = "unknown"
    seed: Optional[int] = None
    params: dict = field(default_factory=dict)
    digest: Optional[str] = None

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    def operator(self) -> DenseOperator:
        return DenseOperator(self.structure, self.matrix)


def planted_digest(planted: Optional[np.ndarray]) -> Optional[str]:
    if planted is None:
        return None
    return hashlib.sha256(np.ascontiguousarray(planted, dtype="<f8").tobytes()).hexdigest()


def from_generated(inst) -> InstanceFile:
    spec = inst.spec
    params = {"n": spec.n}
    if spec.tau is not None:
        params["tau"] = spec.tau
    if spec.alpha is not None:
        params["alpha"] = spec.alpha
    if inst.log10_mu is not None:
        params["log10_mu"] = inst.log10_mu
    return InstanceFile(
        inst.operator.structure,
        np.array(inst.operator.matrix),
        family=spec.family,
        seed=spec.seed,
        params=params,
        digest=planted_digest(inst.planted),
    )


def _fmt(x: float) -> str:
    return "%.17g" % x


def dumps(inst: InstanceFile) -> str:
    lines = [
        f"{MAGIC} {FORMAT_VERSION}",
        f"structure {inst.structure.describe()}",
        f"m {inst.m}",
        f"family {inst.family}",
    ]
    if inst.seed is not None:
        lines.append(f"seed {inst.seed}")
    for key, value in inst.params.items():
        lines.append(f"param {key} {_fmt(value) if isinstance(value, float) else value}")
    if inst.digest:
        lines.append(f"digest {inst.digest}")
    lines.append("rows")
    lines.extend(" ".join(_fmt(v) for v in row) for row in inst.matrix)
    lines.append("end")
    return "\n".join(lines) + "\n"


def write(inst: InstanceFile, path) -> None:
    Path(path).write_text(dumps(inst))


def _param_value(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def loads(text: str, path="<string>") -> InstanceFile:
    lines = text.splitlines()
    it = iter(enumerate(lines, start=1))
    header: dict = {"params": {}}

    def fail(lineno, msg):
        raise InstanceParseError(path, lineno, msg)

    # header
    seen_magic = False
    lineno = 0
    for lineno, raw in it:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        if not seen_magic:
            if key != MAGIC:
                fail(lineno, f"expected '{MAGIC} <version>' header")
            if rest != str(FORMAT_VERSION):
                fail(lineno, f"unsupported format version {rest!r}")
            seen_magic = True
        elif key == "structure":
            try:
                header["structure"] = ConeStructure([parse_block(b) for b in rest.split()])
            except ValueError as exc:
                fail(lineno, str(exc))
        elif key == "m":
            try:
                header["m"] = int(rest)
            except ValueError:
                fail(lineno, f"bad row count {rest!r}")
        elif key == "family":
            header["family"] = rest
        elif key == "seed":
            try:
                header["seed"] = int(rest)
            except ValueError:
                fail(lineno, f"bad seed {rest!r}")
        elif key == "param":
            name, _, value = rest.partition(" ")
            if not name or not value:
                fail(lineno, "param needs a name and a value")
            header["params"][name] = _param_value(value.strip())
        elif key == "digest":
            header["digest"] = rest
        elif key == "rows":
            break
        else:
            fail(lineno, f"unknown header key {key!r}")
    else:
        fail(lineno, "missing 'rows' section")

    for required in ("structure", "m"):
        if required not in header:
            fail(lineno, f"header lacks '{required}'")
    structure, m = header["structure"], header["m"]

    rows = []
    for lineno, raw in it:
        line = raw.strip()
        if line == "end":
            break
        if not line or line.startswith("#"):
            continue
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError as exc:
            fail(lineno, f"bad number ({exc})")
        if len(row) != structure.d:
            fail(lineno, f"row has {len(row)} entries, expected {structure.d}")
        rows.append(row)
    else:
        fail(lineno, "missing 'end'")
    if len(rows) != m:
        fail(lineno, f"found {len(rows)} rows, header says m = {m}")

    return InstanceFile(
        structure,
        np.array(rows, dtype=float).reshape(m, structure.d),
        family=header.get("family", "unknown"),
        seed=header.get("seed"),
        params=header["params"],
        digest=header.get("digest"),
    )


def read(path) -> InstanceFile:
    return loads(Path(path).read_text(), path)
