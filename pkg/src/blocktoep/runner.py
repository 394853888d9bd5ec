"""Experiment driver: assemble, precondition, solve, analyse, tabulate."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import analysis as an
from .krylov import KrylovConfig, cg, cgne, gmres
from .presets import ExperimentPreset, get_preset

__all__ = ["COLUMNS", "ResultTable", "run_row", "run_experiment", "emit_table",
           "format_value", "output_dir", "compute_spectrum", "OUT_ENV"]

log = logging.getLogger(__name__)

OUT_ENV = "BLOCKTOEP_OUT"

COLUMNS = ("preset", "eta", "d_n",
           "iter", "res", "conv", "iter_prec", "res_prec", "conv_prec", "lambda",
           "N", "N_ratio", "below", "above", "max_imag", "zero_count", "zero_ratio",
           "min_sigma_A", "max_sigma_A", "mu_A", "min_sigma_M", "max_sigma_M", "mu_M",
           "status", "error")

LABELS = {"preset": "preset", "eta": "η", "d_n": "d_n", "iter": "iter.", "res": "Norm res.",
          "conv": "conv.", "iter_prec": "iter. (prec.)", "res_prec": "Norm res. (prec.)",
          "conv_prec": "conv. (prec.)", "lambda": "λ", "N": "N", "N_ratio": "N/d_n",
          "below": "Outliers Below", "above": "Outliers Above", "max_imag": "max |Im λ|",
          "zero_count": "#σ(A−S)>0.1", "zero_ratio": "ratio σ(A−S)>0.1",
          "min_sigma_A": "min σ(A)", "max_sigma_A": "max σ(A)", "mu_A": "μ(A)",
          "min_sigma_M": "min σ(M)", "max_sigma_M": "max σ(M)", "mu_M": "μ(M)",
          "status": "status", "error": "error"}

_INT = {"eta", "d_n", "iter", "iter_prec", "N", "below", "above", "zero_count"}
_SCI2 = {"res", "res_prec"}
_SCI3 = {"min_sigma_A", "max_sigma_A", "mu_A", "min_sigma_M", "max_sigma_M", "mu_M", "max_imag"}
_RATIO = {"lambda", "N_ratio", "zero_ratio"}

ZERO_THRESHOLD = 0.1


def format_value(col, v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if col in _INT:
        return str(int(v))
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    if col in _SCI2:
        return f"{v:.2e}"
    if col in _SCI3:
        return f"{v:.3e}"
    if col in _RATIO:
        return f"{v:.4f}"
    if isinstance(v, bool):
        return "yes" if v else "no"
    return str(v)


@dataclass
class ResultTable:
    preset: str
    rows: list = field(default_factory=list)
    columns: tuple = COLUMNS

    @property
    def failed(self):
        return any(r.get("status") != "ok" for r in self.rows)

    def row(self, eta):
        for r in self.rows:
            if r["eta"] == eta:
                return r
        raise KeyError(eta)

    def to_json(self):
        return {"preset": self.preset, "columns": list(self.columns),
                "rows": [{c: r.get(c) for c in self.columns} for r in self.rows]}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["preset"], [dict(r) for r in obj["rows"]], tuple(obj["columns"]))


def output_dir(default="results"):
    """Output directory, overridable through ``$BLOCKTOEP_OUT``."""
    return os.environ.get(OUT_ENV) or default


# --------------------------------------------------------------------------
# pipeline pieces

_SOLVERS = {"gmres": gmres, "cg": cg, "cgne": cgne}


def _dense_precond_matrix(prob):
    """``P^{-1} A`` (square) or ``A P^+`` (rectangular)."""
    A = prob.A.to_dense()
    if A.shape[0] != A.shape[1]:
        return an.preconditioned_matrix(A, prob.P, side="right_pinv")
    return an.preconditioned_matrix(A, prob.P)


def compute_spectrum(prob, what, mode):
    """Sorted spectrum of ``A``, of the preconditioned matrix or of ``A - S``.

    ``mode="singular"`` gives singular values; ``"eigen"`` eigenvalues
    (generalised symmetric-definite when possible for the preconditioned
    matrix).
    """
    if what == "diff":
        D = prob.A.to_dense() - prob.P.to_dense()
        return an.singular_values(D)
    if what == "A":
        A = prob.A.to_dense()
        if mode == "singular":
            return an.singular_values(A)
        return an.eigenvalues(A, hermitian=prob.hermitian)
    if what != "precond":
        raise ValueError(f"unknown spectrum kind {what!r}")
    if mode == "singular":
        return an.singular_values(_dense_precond_matrix(prob))
    if prob.hermitian:
        try:
            return an.generalized_eigenvalues(prob.A.to_dense(), prob.P.to_dense(), hermitian=True)
        except np.linalg.LinAlgError:
            log.info("preconditioner not positive definite, using the general eigensolver")
    return an.eigenvalues(_dense_precond_matrix(prob))


def _solve(prob, solver, cfg, row, out, tag):
    fn = _SOLVERS[solver]
    b = prob.A.matvec(np.ones(prob.A.shape[1]))
    errors = []
    for key, M in (("", None), ("_prec", prob.P)):
        try:
            rep = fn(prob.A, b, M, cfg)
        except Exception as exc:       # recorded per row
            errors.append(f"{solver}{key}: {exc}")
            continue
        row["iter" + key] = rep.iterations
        row["res" + key] = rep.final_residual
        row["conv" + key] = rep.converged
        if out:
            _atomic(os.path.join(out, f"{tag}_{rep.method}_history.csv"), _history_csv(rep))
    if row.get("iter_prec") is not None:
        row["lambda"] = row["iter_prec"] / prob.d_n
    return errors


def _history_csv(rep):
    return "iteration,residual\n" + "".join(f"{i},{r:.6e}\n" for i, r in enumerate(rep.residual_history))


def _atomic(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_row(preset: ExperimentPreset, eta, cfg=None, out=None, solvers=True, analyses=None, **overrides):
    """Run one ``(preset, eta)`` row; every stage failure is captured in
    ``row["error"]`` and the remaining stages still run."""
    cfg = cfg or KrylovConfig()
    row = {c: None for c in COLUMNS}
    row.update(preset=preset.name, eta=int(eta))
    errors = []
    tag = f"{preset.name}_{int(eta)}"
    try:
        prob = preset.build(eta, **overrides)
    except Exception as exc:
        row.update(status="error", error=f"build: {exc}")
        return row
    row["d_n"] = prob.d_n
    if solvers and preset.solver:
        errors += _solve(prob, preset.solver, cfg, row, out, tag)
    todo = preset.analyses if analyses is None else analyses
    if todo:
        try:
            errors += _analyse(prob, preset, row, out, tag, todo)
        except Exception as exc:
            errors.append(f"analysis: {exc}")
    row["status"] = "ok" if not errors else "error"
    row["error"] = "; ".join(errors) or None
    return row


def _analyse(prob, preset, row, out, tag, todo):
    errors = []
    mode = preset.cluster_mode
    spec_A = spec_M = None
    if "clusters" in todo or "spectra" in todo:
        spec_M = compute_spectrum(prob, "precond", mode)
        st = an.cluster_stats(spec_M, 1.0, preset.cluster_radius)
        row.update(N=st.outliers, N_ratio=st.outliers / prob.d_n, below=st.count_below, above=st.count_above)
        if np.iscomplexobj(spec_M.values):
            row["max_imag"] = float(np.max(np.abs(spec_M.values.imag)))
        elif mode == "eigen":
            row["max_imag"] = 0.0
        if mode == "singular":
            sd = compute_spectrum(prob, "diff", mode).values
            row["zero_count"] = int(np.sum(sd > ZERO_THRESHOLD))
            row["zero_ratio"] = row["zero_count"] / prob.d_n
    if "conditioning" in todo:
        svA = an.singular_values(prob.A.to_dense()).values
        row.update(min_sigma_A=float(svA[0]), max_sigma_A=float(svA[-1]),
                   mu_A=float("inf") if svA[0] == 0 else float(svA[-1] / svA[0]))
        svM = spec_M.values if (spec_M is not None and mode == "singular") else \
            an.singular_values(_dense_precond_matrix(prob)).values
        row.update(min_sigma_M=float(svM[0]), max_sigma_M=float(svM[-1]),
                   mu_M=float("inf") if svM[0] == 0 else float(svM[-1] / svM[0]))
    if "spectra" in todo and out:
        spec_A = compute_spectrum(prob, "A", mode)
        an.export_spectrum(spec_A, os.path.join(out, f"{tag}_A.csv"))
        an.export_spectrum(spec_M, os.path.join(out, f"{tag}_precond.csv"))
    return errors


def run_experiment(preset, etas=None, out=None, cfg=None, fmt="csv", **kw):
    """Run every ``eta`` of ``preset`` sequentially and write the table.

    Returns the :class:`ResultTable`; per-row failures are recorded in the
    ``status``/``error`` columns instead of aborting the run.
    """
    if isinstance(preset, str):
        preset = get_preset(preset)
    etas = tuple(preset.etas if etas is None else etas)
    if not etas:
        raise ValueError("empty eta list")
    if out:
        os.makedirs(out, exist_ok=True)
    table = ResultTable(preset.name)
    for eta in etas:
        log.info("%s eta=%s", preset.name, eta)
        row = run_row(preset, eta, cfg, out, **kw)
        if row["status"] != "ok":
            log.warning("%s eta=%s failed: %s", preset.name, eta, row["error"])
        table.rows.append(row)
    if out:
        emit_table(table, fmt, os.path.join(out, f"{preset.name}.{_EXT[fmt]}"))
    return table


# --------------------------------------------------------------------------
# emitters

_EXT = {"csv": "csv", "json": "json", "markdown": "md"}


def _visible_columns(table):
    """Drop columns that are empty in every row (keeps preset/eta/status)."""
    keep = {"preset", "eta", "d_n", "status"}
    return [c for c in table.columns if c in keep or any(r.get(c) is not None for r in table.rows)]


def render_table(table, fmt):
    if not table.rows:
        raise ValueError("empty table")
    if fmt == "json":
        return json.dumps(table.to_json(), indent=1) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table.columns)
        for r in table.rows:
            w.writerow([format_value(c, r.get(c)) for c in table.columns])
        return buf.getvalue()
    if fmt == "markdown":
        cols = _visible_columns(table)
        lines = ["| " + " | ".join(LABELS.get(c, c) for c in cols) + " |",
                 "|" + "---|" * len(cols)]
        for r in table.rows:
            lines.append("| " + " | ".join(format_value(c, r.get(c)) for c in cols) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit_table(table: ResultTable, fmt="csv", path=None):
    """Render ``table`` and, if ``path`` is given, write it atomically."""
    text = render_table(table, fmt)
    if path is not None:
        d = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(d) or not os.access(d, os.W_OK):
            raise OSError(f"cannot write to {d}")
        _atomic(path, text)
    return text
