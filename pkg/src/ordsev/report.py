"""Table rendering (csv / json / markdown) and the fit archive format."""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field

import numpy as np

from .contingency import ContingencyResult
from .errors import DataError
from .inference import FitReport
from .margins import MarginalEffectsTable
from .ologit import FitOptions, OrderedLogitFit, OrderedLogitParams
from .schema import Crosstab

FORMATS = ("csv", "json", "md")
ARCHIVE_FORMAT = "ordsev-fit/1"


@dataclass
class Table:
    title: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower().replace("'", "")).strip("_")


def format_p_value(p: float) -> str:
    return "< 0.0001" if p < 1e-4 else f"{p:.4f}"


def _md_cell(value) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6g}"
    if value is None:
        return ""
    return str(value).replace("|", "\\|")


def _plain(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def render(table: Table, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else _plain(v) for v in row])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "title": table.title,
            "columns": table.columns,
            "rows": [dict(zip(table.columns, map(_plain, row))) for row in table.rows],
            "notes": table.notes,
        }
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    if fmt == "md":
        lines = [f"## {table.title}", ""]
        lines.append("| " + " | ".join(table.columns) + " |")
        lines.append("|" + "|".join("---" for _ in table.columns) + "|")
        for row in table.rows:
            lines.append("| " + " | ".join(_md_cell(v) for v in row) + " |")
        if table.notes:
            lines.append("")
            lines.extend(table.notes)
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def read_csv_table(text: str) -> list[dict]:
    """Parse a csv written by :func:`render`; numeric fields come back as numbers."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        parsed = {}
        for key, value in row.items():
            try:
                parsed[key] = int(value)
            except ValueError:
                try:
                    parsed[key] = float(value)
                except ValueError:
                    parsed[key] = value
        out.append(parsed)
    return out


# -- table builders -----------------------------------------------------------

def crosstab_table(ct: Crosstab) -> Table:
    columns = ["Category"]
    for c in ct.classes:
        columns += [c, f"{c} %"]
    columns += ["Total", "Total %"]
    pct = ct.row_percentages
    share = ct.total_percentages
    rows = []
    for i, cat in enumerate(ct.categories):
        row = [cat]
        for j in range(len(ct.classes)):
            row += [int(ct.counts[i, j]), float(pct[i, j])]
        row += [int(ct.row_totals[i]), float(share[i])]
        rows.append(row)
    n = ct.total
    total_row = ["Total"]
    for j in range(len(ct.classes)):
        k = int(ct.class_totals[j])
        total_row += [k, 100.0 * k / n if n else 0.0]
    total_row += [n, 100.0 if n else 0.0]
    rows.append(total_row)
    return Table(f"Descriptive statistics: {ct.variable}", columns, rows)


def contingency_tables(result: ContingencyResult, var_a: str, var_b: str) -> tuple[Table, Table]:
    pct = result.cell_frequency_pct
    cells = Table(
        f"Chi-square cells: {var_a} x {var_b}",
        [var_a, var_b, "Observed", "Expected", "Residual", "Cell %"],
    )
    for i, ra in enumerate(result.row_labels):
        for j, cb in enumerate(result.col_labels):
            cells.rows.append([
                ra, cb, float(result.observed[i, j]), float(result.expected[i, j]),
                float(result.residuals[i, j]), float(pct[i, j]),
            ])
    summary = Table(
        f"Chi-square test: {var_a} x {var_b}",
        ["Statistic", "Value"],
        [["chi_square", result.chi_square], ["df", result.df], ["p_value", result.p_value]],
        notes=[f"chi-square = {result.chi_square:.6g}, df = {result.df}, p {_p_text(result.p_value)}"],
    )
    return cells, summary


def _p_text(p: float) -> str:
    text = format_p_value(p)
    return text if text.startswith("<") else f"= {text}"


def fit_tables(rep: FitReport) -> tuple[Table, Table]:
    coef = Table(
        "Estimation results of the ordered logit model",
        ["Variable", "Parameter", "Estimate", "Significance", "Std. Error", "t statistic"],
    )
    for r in rep.rows:
        coef.rows.append([r.group, r.label, r.estimate, r.stars, r.standard_error, r.t_statistic])
    coef.notes = ["* 90% significance level, ** 95% significance level, *** 99% significance level"]
    summary = Table(
        "Goodness of fit",
        ["Statistic", "Value"],
        [
            ["n_obs", rep.n_obs],
            ["log_likelihood", rep.log_likelihood],
            ["null_log_likelihood", rep.null_log_likelihood],
            ["lr_chi_square", rep.lr_chi_square],
            ["lr_df", rep.lr_df],
            ["lr_p_value", rep.lr_p_value],
            ["mcfadden_rho2", rep.mcfadden_rho2],
            ["iterations", rep.iterations],
            ["converged", rep.converged],
        ],
        notes=[
            f"LR chi-square = {rep.lr_chi_square:.6g}, df = {rep.lr_df}, p {_p_text(rep.lr_p_value)}",
            f"McFadden rho^2 = {rep.mcfadden_rho2:.6g}",
        ],
    )
    return coef, summary


def margins_output(table: MarginalEffectsTable, beta) -> Table:
    out = Table(
        "Marginal effects of estimated coefficients",
        ["Variable", "Category", *table.classes, "Row Sum", "Coefficient"],
    )
    for (variable, category, eff), b, s in zip(table.rows(), beta, table.row_sums):
        out.rows.append([variable, category, *map(float, eff), float(s), float(b)])
    out.notes = ["Average discrete change from the variable's reference group, over the sample."]
    return out


# -- fit archive --------------------------------------------------------------

def dump_fit_archive(fit: OrderedLogitFit, schema_sha256: str, outcome, options: FitOptions) -> str:
    doc = {
        "format": ARCHIVE_FORMAT,
        "schema_sha256": schema_sha256,
        "outcome": list(outcome),
        "labels": [list(lab) for lab in fit.labels],
        "beta": fit.params.beta.tolist(),
        "cutoffs": fit.params.cutoffs.tolist(),
        "covariance": None if fit.covariance is None else fit.covariance.tolist(),
        "log_likelihood": fit.log_likelihood,
        "null_log_likelihood": fit.null_log_likelihood,
        "n_obs": fit.n_obs,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "gradient_norm": fit.gradient_norm,
        "options": {
            "tol_grad": options.tol_grad,
            "tol_ll": options.tol_ll,
            "max_iter": options.max_iter,
            "hessian_fallback": options.hessian_fallback,
        },
        "warnings": list(fit.warnings),
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def load_fit_archive(text: str) -> tuple[OrderedLogitFit, dict]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"fit archive: malformed JSON ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != ARCHIVE_FORMAT:
        raise DataError("fit archive: unrecognised format")
    try:
        cov = doc["covariance"]
        fit = OrderedLogitFit(
            params=OrderedLogitParams(doc["beta"], doc["cutoffs"]),
            covariance=None if cov is None else np.array(cov, dtype=float),
            log_likelihood=float(doc["log_likelihood"]),
            null_log_likelihood=float(doc["null_log_likelihood"]),
            iterations=int(doc["iterations"]),
            converged=bool(doc["converged"]),
            gradient_norm=float(doc["gradient_norm"]),
            n_obs=int(doc["n_obs"]),
            labels=tuple(tuple(lab) for lab in doc["labels"]),
            warnings=tuple(doc.get("warnings", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"fit archive: invalid content ({exc})") from None
    return fit, doc
