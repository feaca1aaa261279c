"""CSV output for learning curves.

Per-run files carry the columns ``step,run,rmspbe,rmse``; aggregate files
carry ``step,rmspbe_mean,rmspbe_std,rmse_mean,rmse_std``. Files are UTF-8
with LF line endings. Numbers use shortest round-trip g-style formatting, so
parsing a file back reproduces the in-memory values exactly.
"""

from __future__ import annotations

RUNS_HEADER = "step,run,rmspbe,rmse"
AGGREGATE_HEADER = "step,rmspbe_mean,rmspbe_std,rmse_mean,rmse_std"


def format_number(v) -> str:
    """Shortest round-trip representation (integers stay integral)."""
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def write_runs_csv(path, points) -> None:
    """Write per-run curve points (ordered as given)."""
    lines = [RUNS_HEADER]
    for p in points:
        lines.append(
            f"{p.step},{p.run},{format_number(p.rmspbe)},{format_number(p.rmse)}"
        )
    _write(path, lines)


def write_aggregate_csv(path, rows) -> None:
    """Write aggregate rows (step, rmspbe_mean, rmspbe_std, rmse_mean, rmse_std)."""
    lines = [AGGREGATE_HEADER]
    for step, pm, ps, em, es in rows:
        lines.append(
            f"{step},{format_number(pm)},{format_number(ps)},"
            f"{format_number(em)},{format_number(es)}"
        )
    _write(path, lines)


def _write(path, lines) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
