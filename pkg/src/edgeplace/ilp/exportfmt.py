"""Writers for standard MILP exchange formats (LP and MPS text).

Output is a pure function of the model, so re-exporting the same model is
byte-identical.  The objective's constant term is written as a trailing
free term in LP files (accepted by Gurobi, HiGHS, lp_solve) and as a
negated RHS entry on the objective row in MPS files (the convention those
same solvers read back).
"""

from __future__ import annotations

from .model import EQ, GE, LE, IlpModel

_LP_SENSE = {LE: "<=", GE: ">=", EQ: "="}
_MPS_SENSE = {LE: "L", GE: "G", EQ: "E"}

FORMATS = ("lp-text", "mps-text")
_ALIASES = {"lp": "lp-text", "mps": "mps-text"}


def export_standard(model: IlpModel, format: str = "lp-text") -> str:
    fmt = _ALIASES.get(format, format)
    if fmt == "lp-text":
        return _export_lp(model)
    if fmt == "mps-text":
        return _export_mps(model)
    raise ValueError(f"unknown export format {format!r}; use one of {FORMATS}")


def _terms(coeffs: dict[int, int], names: list[str]) -> str:
    parts = []
    for idx in sorted(coeffs):
        c = coeffs[idx]
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        term = names[idx] if mag == 1 else f"{mag} {names[idx]}"
        parts.append(f"{sign} {term}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def _wrap(prefix: str, body: str, width: int = 200) -> list[str]:
    """Split a long expression over continuation lines (LP readers accept
    arbitrary line breaks between terms)."""
    words = body.split(" ")
    lines = []
    current = prefix
    for word in words:
        if len(current) + 1 + len(word) > width and current != prefix:
            lines.append(current)
            current = "   " + word
        else:
            current = f"{current} {word}"
    lines.append(current)
    return lines


def _export_lp(model: IlpModel) -> str:
    names = [v.name for v in model.variables]
    out = ["\\ edgeplace placement model", "Maximize"]
    obj = _terms(model.objective, names)
    if model.objective_constant:
        sign = "+" if model.objective_constant > 0 else "-"
        obj = f"{obj} {sign} {abs(model.objective_constant)}"
    out.extend(_wrap(" obj:", obj))
    out.append("Subject To")
    for row in model.rows:
        body = f"{_terms(row.coeffs, names)} {_LP_SENSE[row.sense]} {row.rhs}"
        out.extend(_wrap(f" {row.name}:", body))
    out.append("Binaries")
    for name in names:
        out.append(f" {name}")
    out.append("End")
    return "\n".join(out) + "\n"


def _export_mps(model: IlpModel) -> str:
    names = [v.name for v in model.variables]
    out = ["NAME          EDGEPLACE", "OBJSENSE", "    MAX", "ROWS", " N  obj"]
    for row in model.rows:
        out.append(f" {_MPS_SENSE[row.sense]}  {row.name}")
    out.append("COLUMNS")
    out.append("    MARKER                 'MARKER'                 'INTORG'")
    # Per-column entries in variable order; objective first, then rows.
    by_var: dict[int, list[tuple[str, int]]] = {i: [] for i in range(len(names))}
    for idx, coef in model.objective.items():
        if coef:
            by_var[idx].append(("obj", coef))
    for row in model.rows:
        for idx, coef in sorted(row.coeffs.items()):
            if coef:
                by_var[idx].append((row.name, coef))
    for idx, entries in by_var.items():
        for row_name, coef in entries:
            out.append(f"    {names[idx]:<24}  {row_name:<24}  {coef}")
    out.append("    MARKER                 'MARKER'                 'INTEND'")
    out.append("RHS")
    if model.objective_constant:
        out.append(f"    RHS  {'obj':<24}  {-model.objective_constant}")
    for row in model.rows:
        if row.rhs:
            out.append(f"    RHS  {row.name:<24}  {row.rhs}")
    out.append("BOUNDS")
    for name in names:
        out.append(f" BV BND  {name}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"
