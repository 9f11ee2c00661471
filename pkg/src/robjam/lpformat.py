"""Plain-text export of a :class:`MilpModel` in the common LP file layout.

Grammar (one item per line, tokens separated by single spaces)::

    \\ <comment>
    Maximize | Minimize
     obj: <term> <term> ...
    Subject To
     <row>: <term> <term> ... <= | >= | = <rhs>
    Bounds
     <lb> <= <var> <= <ub>
    Binaries
     <var>
    End

A term is ``+ <coef> <var>`` or ``- <coef> <var>``; coefficients and bounds
use ``repr`` of the float, so a read-back is exact.  Names have ``[`` and
``]`` replaced by ``(`` and ``)`` to stay within the usual LP character set.
Every variable appears in ``Bounds`` in column order (binaries as
``0.0 <= x <= 1.0``).  Rows without a name are written as ``r<index>``; an
empty objective or row body is written as ``0 <first variable>``.
"""

from __future__ import annotations

from pathlib import Path

from .model import BINARY, CONTINUOUS, MAXIMIZE, MINIMIZE, MilpModel

_SENSE_WORD = {MAXIMIZE: "Maximize", MINIMIZE: "Minimize"}


def lp_name(name: str) -> str:
    return name.replace("[", "(").replace("]", ")").replace(" ", "_")


def _terms(coefs, names) -> str:
    parts = []
    for i, a in coefs:
        sign = "-" if a < 0 else "+"
        parts.append(f"{sign} {abs(a)!r} {names[i]}")
    return " ".join(parts) if parts else f"0 {names[0]}"


def to_lp(model: MilpModel) -> str:
    names = [lp_name(v.name) for v in model.variables]
    if len(set(names)) != len(names):
        raise ValueError("variable names collide after LP sanitising")
    out = [f"\\ {model.name}", _SENSE_WORD[model.sense],
           f" obj: {_terms(sorted(model.objective.items()), names)}", "Subject To"]
    for r, row in enumerate(model.rows):
        label = lp_name(row.name) if row.name else f"r{r}"
        out.append(f" {label}: {_terms(row.coefs, names)} {row.sense} {row.rhs!r}")
    out.append("Bounds")
    for v, name in zip(model.variables, names):
        out.append(f" {v.lb!r} <= {name} <= {v.ub!r}")
    bins = [name for v, name in zip(model.variables, names) if v.kind == BINARY]
    if bins:
        out.append("Binaries")
        out.extend(f" {name}" for name in bins)
    out.append("End")
    return "\n".join(out) + "\n"


def write_lp(model: MilpModel, path: str | Path) -> None:
    Path(path).write_text(to_lp(model))


def _parse_terms(tokens: list[str], index: dict[str, int]) -> dict[int, float]:
    coefs: dict[int, float] = {}
    if tokens[:1] == ["0"]:
        return coefs
    if len(tokens) % 3:
        raise ValueError(f"malformed expression: {' '.join(tokens)}")
    for k in range(0, len(tokens), 3):
        sign, val, var = tokens[k:k + 3]
        if sign not in "+-":
            raise ValueError(f"expected a sign, got {sign!r}")
        if var not in index:
            raise ValueError(f"undeclared variable {var!r}")
        coefs[index[var]] = (-1.0 if sign == "-" else 1.0) * float(val)
    return coefs


def from_lp(text: str) -> MilpModel:
    """Parse the output of :func:`to_lp` back into a model (untagged)."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    name = lines[0][1:].strip() if lines[0].startswith("\\") else "model"
    body = lines[1:] if lines[0].startswith("\\") else lines
    sense = {v: k for k, v in _SENSE_WORD.items()}[body[0]]
    obj_line = body[1]
    sections: dict[str, list[str]] = {"Subject To": [], "Bounds": [], "Binaries": []}
    current = None
    for ln in body[2:]:
        if ln in sections:
            current = ln
        elif ln == "End":
            break
        else:
            sections[current].append(ln)

    model = MilpModel(name, sense)
    binaries = set(sections["Binaries"])
    for ln in sections["Bounds"]:
        lo, _, var, _, hi = ln.split()
        if var in binaries:
            model.add_var(var, BINARY)
        else:
            model.add_var(var, CONTINUOUS, float(lo), float(hi))
    index = {v.name: i for i, v in enumerate(model.variables)}
    model.set_objective(_parse_terms(obj_line.split(":", 1)[1].split(), index))
    for ln in sections["Subject To"]:
        label, expr = ln.split(":", 1)
        tokens = expr.split()
        rhs, op = float(tokens[-1]), tokens[-2]
        model.add_row(_parse_terms(tokens[:-2], index), op, rhs, name=label)
    return model
