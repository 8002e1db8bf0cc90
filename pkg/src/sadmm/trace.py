"""Trace CSV emission.

The column order is frozen: ``iter,epoch,objective,primal_residual,
wall_ms`` plus, when diagnostics were collected, ``aug_lagrangian,psi,
upsilon,grad_err_sq_prev``. Floats are written with 17 significant
digits so traces round-trip exactly; diagnostic cells are empty on
iterations that were not sampled, and the psi cell is empty when the
stability function is undefined.
"""

BASE_COLUMNS = ("iter", "epoch", "objective", "primal_residual", "wall_ms")
DIAG_COLUMNS = ("aug_lagrangian", "psi", "upsilon", "grad_err_sq_prev")

__all__ = ["BASE_COLUMNS", "DIAG_COLUMNS", "format_float", "write_trace"]


def format_float(value):
    return f"{value:.17g}"


def write_trace(path, records, with_diagnostics=False):
    """Write IterationRecords to ``path`` in the frozen CSV layout."""
    columns = BASE_COLUMNS + (DIAG_COLUMNS if with_diagnostics else ())
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for rec in records:
            cells = [
                str(rec.iter),
                format_float(rec.epoch),
                format_float(rec.objective),
                format_float(rec.primal_residual),
                format_float(rec.wall_ms),
            ]
            if with_diagnostics:
                if rec.diag is None:
                    cells += ["", "", "", ""]
                else:
                    cells += [
                        format_float(rec.diag.aug_lagrangian),
                        "" if rec.diag.psi is None else format_float(rec.diag.psi),
                        format_float(rec.diag.upsilon),
                        format_float(rec.diag.grad_err_sq_prev),
                    ]
            fh.write(",".join(cells) + "\n")
