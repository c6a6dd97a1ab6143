"""Deterministic table and JSON emission with atomic file writes.

Floats are rendered at 17 significant digits everywhere, which round-trips
binary doubles exactly and makes repeated runs byte-identical.  JSON is
rendered by hand for that reason: the stdlib encoder's float repr is also
deterministic, but routing every float through one formatter keeps CSV and
JSON numerically identical and pins the contract in one place.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile

from .asymptotics import EnvelopeReport
from .dependent import RatioReport, SchemeDiagnostics
from .exact import Pmf
from .profiles import ConditionReport, ProfileSummary, TrendVerdict


def fmt_float(x: float) -> str:
    """17-significant-digit rendering; non-finite values by name."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _scalar_token(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isfinite(x):
            return fmt_float(x)
        return json.dumps(fmt_float(x))  # "inf" etc. as quoted strings
    if isinstance(x, str):
        return json.dumps(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def render_json(obj) -> str:
    """Deterministic pretty JSON: insertion-ordered keys, fixed float format."""
    out: list[str] = []

    def walk(x, indent: int) -> None:
        pad = "  " * indent
        if isinstance(x, dict):
            if not x:
                out.append("{}")
                return
            out.append("{\n")
            for i, (key, val) in enumerate(x.items()):
                out.append(f"{pad}  {json.dumps(str(key))}: ")
                walk(val, indent + 1)
                out.append(",\n" if i < len(x) - 1 else "\n")
            out.append(pad + "}")
        elif isinstance(x, (list, tuple)):
            seq = list(x)
            if not seq:
                out.append("[]")
                return
            if all(not isinstance(v, (dict, list, tuple)) for v in seq):
                out.append("[" + ", ".join(_scalar_token(v) for v in seq) + "]")
                return
            out.append("[\n")
            for i, val in enumerate(seq):
                out.append(pad + "  ")
                walk(val, indent + 1)
                out.append(",\n" if i < len(seq) - 1 else "\n")
            out.append(pad + "]")
        else:
            out.append(_scalar_token(x))

    walk(obj, 0)
    out.append("\n")
    return "".join(out)


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return fmt_float(x)
    return str(x)


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(c) for c in row])
    return buf.getvalue()


def atomic_write(path: str, text: str) -> None:
    """Write via a temp file in the target directory plus rename.

    A failed run can never leave a partial file at the destination: either
    the old content survives or the complete new content replaces it.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".pblab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def summary_obj(s: ProfileSummary) -> dict:
    return {
        "n": s.n,
        "lambda_n": s.lambda_n,
        "m_n": s.m_n,
        "alpha_n": s.alpha_n,
        "beta_n": s.beta_n,
        "sum_sq": s.sum_sq,
        "var_n": s.var_n,
    }


def pmf_csv(pmf: Pmf) -> str:
    rows = [
        (k, math.exp(lp), lp) for k, lp in enumerate(pmf.log_probs)
    ]
    return render_csv(("k", "prob", "log_prob"), rows)


def pmf_obj(pmf: Pmf, summary: ProfileSummary | None = None) -> dict:
    obj: dict = {
        "provenance": pmf.provenance,
        "n": pmf.n,
        "support_max": pmf.support_max,
    }
    if summary is not None:
        obj["summary"] = summary_obj(summary)
    obj["rows"] = [
        {"k": k, "prob": math.exp(lp), "log_prob": lp}
        for k, lp in enumerate(pmf.log_probs)
    ]
    return obj


def approx_csv(ks, log_values) -> str:
    rows = [(k, math.exp(la), la) for k, la in zip(ks, log_values)]
    return render_csv(("k", "approx_prob", "log_approx"), rows)


def approx_obj(kind: str, summary: ProfileSummary, ks, log_values) -> dict:
    return {
        "kind": kind,
        "summary": summary_obj(summary),
        "rows": [
            {"k": k, "approx_prob": math.exp(la), "log_approx": la}
            for k, la in zip(ks, log_values)
        ],
    }


def _envelope_rows(r: EnvelopeReport):
    for i, k in enumerate(r.k_values):
        yield (
            k,
            math.exp(r.log_exact[i]),
            math.exp(r.log_approx[i]),
            r.ratios[i],
            r.lower_env[i],
            r.upper_env[i],
            r.validity_mask[i],
        )


def envelope_csv(r: EnvelopeReport) -> str:
    header = ("k", "exact", "approx", "ratio", "lower_env", "upper_env", "valid")
    return render_csv(header, _envelope_rows(r))


def envelope_obj(r: EnvelopeReport) -> dict:
    return {
        "kind": r.kind,
        "n": r.n,
        "window": r.window,
        "beta_cap": r.beta_cap,
        "margin": r.margin,
        "summary": {
            "max_abs_dev": r.max_abs_dev,
            "violations": r.violations,
            "window": r.window,
            "k_count": len(r.k_values),
        },
        "rows": [
            {
                "k": row[0],
                "exact": row[1],
                "approx": row[2],
                "ratio": row[3],
                "lower_env": row[4],
                "upper_env": row[5],
                "valid": row[6],
            }
            for row in _envelope_rows(r)
        ],
    }


def _verdict_obj(v: TrendVerdict) -> dict:
    return {
        "decreasing": v.decreasing,
        "final": v.final,
        "below_threshold": v.below_threshold,
    }


def conditions_csv(r: ConditionReport) -> str:
    header = ("n", "m_n", "lambda_n", "sum_sq", "phi", "phi_m", "phi_over_lambda")
    rows = [
        (row.n, row.m_n, row.lambda_n, row.sum_sq, row.phi, row.phi_m, row.phi_over_lambda)
        for row in r.rows
    ]
    return render_csv(header, rows)


def conditions_obj(r: ConditionReport, family: str) -> dict:
    return {
        "family": family,
        "window": r.window,
        "threshold": r.threshold,
        "grid": list(r.grid),
        "rows": [
            {
                "n": row.n,
                "m_n": row.m_n,
                "lambda_n": row.lambda_n,
                "sum_sq": row.sum_sq,
                "phi": row.phi,
                "phi_m": row.phi_m,
                "phi_over_lambda": row.phi_over_lambda,
            }
            for row in r.rows
        ],
        "verdicts": {
            "a1_max_entry": _verdict_obj(r.a1),
            "a4_sum_sq": _verdict_obj(r.a4),
            "window_m": _verdict_obj(r.window_m),
            "window_over_lambda": _verdict_obj(r.window_over_lambda),
            "lambda_trend": r.lambda_trend,
            "lambda_last": r.lambda_last,
        },
    }


def distance_obj(
    summary: ProfileSummary, sup_cdf: float, tv: float, predicted: float, ratio: float
) -> dict:
    return {
        "n": summary.n,
        "lambda_n": summary.lambda_n,
        "sum_sq": summary.sum_sq,
        "sup_cdf_distance": sup_cdf,
        "tv_distance": tv,
        "predicted": predicted,
        "ratio": ratio,
    }


def distance_csv(
    summary: ProfileSummary, sup_cdf: float, tv: float, predicted: float, ratio: float
) -> str:
    header = ("n", "lambda_n", "sum_sq", "sup_cdf_distance", "tv_distance", "predicted", "ratio")
    row = (summary.n, summary.lambda_n, summary.sum_sq, sup_cdf, tv, predicted, ratio)
    return render_csv(header, [row])


def dependent_obj(
    report: RatioReport,
    diagnostics: SchemeDiagnostics,
    precision: str,
    model_kind: str,
    n: int,
) -> dict:
    ratio_by_k = dict(report.entries)
    return {
        "model": model_kind,
        "n": n,
        "precision": precision,
        "rows": [
            {
                "k": k,
                "dep_prob": report.dep_probs[k],
                "indep_prob": report.indep_probs[k],
                "ratio": ratio_by_k.get(k),
            }
            for k in report.k_values
        ],
        "omitted_k": list(report.omitted_k),
        "max_abs_dev": report.max_abs_dev,
        "diagnostics": diagnostics_obj(diagnostics),
    }


def diagnostics_obj(d: SchemeDiagnostics) -> dict:
    return {
        "rare": d.rare,
        "seed": d.seed,
        "sample_budget": d.sample_budget,
        "rows": [
            {
                "k": d.k_values[i],
                "b1_max_dev": d.b1_max_dev[i],
                "b2_ratio": d.b2_ratio[i],
                "b3_ratio": d.b3_ratio[i],
                "mode": d.modes[i],
                "checked": d.checked_counts[i],
                "zero_product": d.zero_product[i],
            }
            for i in range(len(d.k_values))
        ],
        "b1_overall": d.b1_overall,
        "b2_max_dev": d.b2_max_dev,
        "b3_max_dev": d.b3_max_dev,
    }


def dependent_csv(report: RatioReport, diagnostics: SchemeDiagnostics) -> str:
    header = (
        "k",
        "dep_prob",
        "indep_prob",
        "ratio",
        "b1_max_dev",
        "b2_ratio",
        "b3_ratio",
        "mode",
        "checked",
    )
    ratio_by_k = dict(report.entries)
    diag_idx = {k: i for i, k in enumerate(diagnostics.k_values)}
    rows = []
    for k in report.k_values:
        i = diag_idx.get(k)
        rows.append(
            (
                k,
                report.dep_probs[k],
                report.indep_probs[k],
                ratio_by_k.get(k),
                diagnostics.b1_max_dev[i] if i is not None else None,
                diagnostics.b2_ratio[i] if i is not None else None,
                diagnostics.b3_ratio[i] if i is not None else None,
                diagnostics.modes[i] if i is not None else None,
                diagnostics.checked_counts[i] if i is not None else None,
            )
        )
    return render_csv(header, rows)


def sweep_obj(meta: dict, rows: list[dict]) -> dict:
    obj = dict(meta)
    obj["rows"] = rows
    return obj


def sweep_csv(rows: list[dict]) -> str:
    if not rows:
        return render_csv(("n",), [])
    header = list(rows[0].keys())
    return render_csv(header, [[row.get(col) for col in header] for row in rows])


def error_obj(exc: BaseException) -> dict:
    return {"error": type(exc).__name__, "message": str(exc)}
