"""The ``kh`` command.

Exit codes: 0 success, 1 a checked property failed, 2 bad input,
3 the memory cap was hit.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .corpus import Corpus, CorpusEntry, load_corpus
from .f2linalg import BitMatrix, ChainComplexError, iter_bits, rank
from .khcube import DEFAULT_MEMORY_CAP, ResourceLimitError, default_workers
from .khmodule import (
    BasepointError,
    GradedModule,
    action_homology,
    fingerprint,
    is_free_cyclic,
    khovanov_module,
    reduced_module,
)
from .linkdiag import PDCode, PDError, format_pd, parse_pd
from .specseq import FilteredComplex, FiltrationError, collapse_check, khovanov_filtration, page_gradings, pages
from .verify import CHECKS, run_checks

SCHEMA = 1

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3


class InputError(Exception):
    pass


def read_diagram(args) -> PDCode:
    if args.pd is not None:
        text = args.pd
    elif args.file is not None:
        try:
            text = Path(args.file).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {args.file}: {exc.strerror}") from None
    else:
        raise InputError("give a diagram file or --pd")
    return parse_pd(text)


def parse_basepoints(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"--basepoints wants comma separated edge labels, got {text!r}") from None


def _cap(args) -> int | None:
    return DEFAULT_MEMORY_CAP if args.mem_cap is None else int(args.mem_cap * 1024**2)


def _workers(args) -> int:
    return args.threads if args.threads else default_workers()


# grading helpers


def _offset(gradings, absolute: bool) -> tuple[int, int]:
    if absolute or not gradings:
        return 0, 0
    return min(i for i, _ in gradings), min(j for _, j in gradings)


def _shift(ranks: dict, off: tuple[int, int]) -> dict:
    return {(i - off[0], j - off[1]): r for (i, j), r in ranks.items()}


def ranks_json(ranks: dict) -> list[dict]:
    return [{"i": i, "j": j, "rank": r} for (i, j), r in sorted(ranks.items())]


def table(ranks: dict) -> str:
    """j rows (descending) by i columns."""
    if not ranks:
        return "(zero)"
    i_lo, i_hi = min(i for i, _ in ranks), max(i for i, _ in ranks)
    j_lo, j_hi = min(j for _, j in ranks), max(j for _, j in ranks)
    cols = list(range(i_lo, i_hi + 1))
    w = max(3, *(len(str(v)) for v in ranks.values()), *(len(str(c)) for c in cols))
    lines = ["j\\i".rjust(5) + " " + " ".join(str(c).rjust(w) for c in cols)]
    for j in range(j_hi, j_lo - 1, -2 if (j_hi - j_lo) % 2 == 0 else -1):
        cells = [str(ranks[(i, j)]).rjust(w) if ranks.get((i, j)) else ".".rjust(w) for i in cols]
        lines.append(str(j).rjust(5) + " " + " ".join(cells))
    return "\n".join(lines)


# module JSON


def _plain(x):
    if isinstance(x, (tuple, list)):
        return [_plain(y) for y in x]
    return x


def module_json(M: GradedModule, off: tuple[int, int]) -> dict:
    """Actions are stored by column: ``columns[x]`` lists the basis indices
    in the image of basis vector ``x``."""
    return {
        "basis": [[i - off[0], j - off[1]] for i, j in M.gradings],
        "actions": [{"component": c, "columns": [list(iter_bits(col)) for col in A.columns]}
                    for c, A in zip(M.labels, M.actions)],
    }


def module_from_json(data: dict) -> GradedModule:
    gradings = [tuple(g) for g in data["basis"]]
    n = len(gradings)
    actions, labels = [], []
    for a in data["actions"]:
        cols = [sum(1 << r for r in col) for col in a["columns"]]
        if len(cols) != n:
            raise InputError("action has the wrong number of columns")
        actions.append(BitMatrix.from_columns(n, cols))
        labels.append(int(a["component"]))
    return GradedModule(gradings, actions, labels)


def fingerprint_json(M: GradedModule):
    return _plain(fingerprint(M))


# commands


def compute_report(pd: PDCode, basepoints=None, with_reduced: bool = False, absolute: bool = False,
                   memory_cap: int | None = None, workers: int = 1) -> dict:
    M = khovanov_module(pd, basepoints, memory_cap, workers)
    off = _offset(M.gradings, absolute)
    verdict = is_free_cyclic(M)
    out = {
        "schema": SCHEMA,
        "diagram": format_pd(pd),
        "crossings": pd.n_crossings,
        "components": pd.n_components,
        "gradings": "absolute" if absolute else "relative",
        "offset": list(off),
        "total_rank": M.dim,
        "ranks": ranks_json(_shift(M.ranks(), off)),
        "basepoints": [{"edge": p.edge, "component": p.component} for p in M.basepoints],
        "module": module_json(M, off),
        "is_free_cyclic": verdict.is_unlink_module,
        "verdict": verdict.to_json(),
        "action_homology": {str(c): ranks_json(_shift(action_homology(M, c), off)) for c in M.labels},
        "fingerprint": fingerprint_json(M),
    }
    if with_reduced:
        R = reduced_module(pd, basepoints=basepoints, memory_cap=memory_cap, workers=workers)
        out["reduced"] = {
            "p0": {"edge": R.p0.edge, "component": R.p0.component},
            "total_rank": R.dim,
            "ranks": ranks_json(_shift(R.ranks(), off)),
            "module": module_json(R, off),
            "action_homology": {str(c): ranks_json(_shift(action_homology(R, c), off)) for c in R.labels},
        }
    return out


def _unjson(rows: list[dict]) -> dict:
    return {(r["i"], r["j"]): r["rank"] for r in rows}


# larger action matrices are summarised by their rank in table output
SHOW_MATRIX_UP_TO = 16


def _matrix_text(columns: list[list[int]]) -> str:
    n = len(columns)
    if n == 0:
        return "  (empty)"
    if n > SHOW_MATRIX_UP_TO:
        return f"  {n}x{n}, rank {rank(BitMatrix.from_columns(n, [sum(1 << r for r in c) for c in columns]))}"
    return "\n".join("  " + " ".join("1" if y in set(c) else "0" for c in columns) for y in range(n))


def render_compute(rep: dict) -> str:
    lines = [f"diagram: {rep['diagram']}",
             f"crossings {rep['crossings']}, components {rep['components']}, "
             f"{rep['gradings']} gradings (offset i={rep['offset'][0]}, j={rep['offset'][1]})",
             f"total rank {rep['total_rank']}", "", table(_unjson(rep["ranks"])), ""]
    if rep["total_rank"] <= SHOW_MATRIX_UP_TO:
        lines.append("basis (i, j): " + " ".join(f"({i},{j})" for i, j in rep["module"]["basis"]))
    for a in rep["module"]["actions"]:
        lines.append(f"X_{a['component']}:")
        lines.append(_matrix_text(a["columns"]))
    v = rep["verdict"]
    lines.append(f"free cyclic: {v['is_unlink_module']}" + (f" ({v['failure_reason']})" if v["failure_reason"] else ""))
    for c, rows in rep["action_homology"].items():
        lines.append(f"H(Kh, X_{c}) total rank {sum(r['rank'] for r in rows)}")
    if "reduced" in rep:
        red = rep["reduced"]
        lines += ["", f"reduced at edge {red['p0']['edge']}: total rank {red['total_rank']}",
                  table(_unjson(red["ranks"]))]
        for a in red["module"]["actions"]:
            lines.append(f"X_{a['component']} on reduced:")
            lines.append(_matrix_text(a["columns"]))
        for c, rows in red["action_homology"].items():
            lines.append(f"H(Kh_red, X_{c}) total rank {sum(r['rank'] for r in rows)}")
    return "\n".join(lines)


def cmd_compute(args) -> int:
    pd = read_diagram(args)
    rep = compute_report(pd, parse_basepoints(args.basepoints), args.reduced, args.absolute,
                         _cap(args), _workers(args))
    emit(args, rep, render_compute)
    return EXIT_OK


def cmd_detect(args) -> int:
    pd = read_diagram(args)
    M = khovanov_module(pd, parse_basepoints(args.basepoints), _cap(args), _workers(args))
    v = is_free_cyclic(M)
    rep = {"schema": SCHEMA, **v.to_json()}
    emit(args, rep, lambda r: f"unlink module: {r['is_unlink_module']} (n={r['n']})"
         + (f", {r['failure_reason']}" if r["failure_reason"] else f", generator {r['certificate']}"))
    return EXIT_OK


def ss_report(C: FilteredComplex, khovanov: bool, absolute: bool = False) -> dict:
    ps = pages(C)
    cert = collapse_check(ps)
    rows = []
    # offsets relative to the final page so E_2 lines up with ``kh compute``
    off = _offset([C.gradings[x] for x in ps[-1].basis], absolute) if khovanov else (0, 0)
    for P in ps:
        row = {"page": P.r, "rank": P.rank,
               "levels": [{"level": f, "rank": r} for f, r in P.level_ranks().items()],
               "delta_nonzero": not P.delta.is_zero()}
        if khovanov:
            row["ranks"] = ranks_json(_shift(page_gradings(C, P), off))
        rows.append(row)
    return {"schema": SCHEMA, "generators": C.n, "pages": rows,
            "collapse": None if cert is None else {"page": cert.page, "level": cert.level, "rank": cert.rank}}


def render_ss(rep: dict) -> str:
    lines = [f"{rep['generators']} generators"]
    for row in rep["pages"]:
        lv = ", ".join(f"{x['level']}:{x['rank']}" for x in row["levels"])
        lines.append(f"E_{row['page']}: rank {row['rank']} [levels {lv}]"
                     + (" d != 0" if row["delta_nonzero"] else ""))
        if "ranks" in row:
            lines.append(table(_unjson(row["ranks"])))
    c = rep["collapse"]
    lines.append("no collapse certificate" if c is None
                 else f"collapses at E_{c['page']} (level {c['level']}, rank {c['rank']})")
    return "\n".join(lines)


def cmd_ss(args) -> int:
    if args.complex is not None:
        try:
            C = FilteredComplex.from_json(Path(args.complex).read_text())
        except OSError as exc:
            raise InputError(f"cannot read {args.complex}: {exc.strerror}") from None
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"bad filtered complex: {exc}") from None
        rep = ss_report(C, False)
    else:
        pd = read_diagram(args)
        rep = ss_report(khovanov_filtration(pd, _cap(args)), True, args.absolute)
    emit(args, rep, render_ss)
    return EXIT_OK


def _verify_corpus(args) -> Corpus:
    if args.pd is not None:
        return Corpus([CorpusEntry("input", parse_pd(args.pd))], [], [])
    if args.file is None:
        return load_corpus()
    path = Path(args.file)
    if path.is_dir():
        return load_corpus(path)
    if not path.exists():
        raise InputError(f"no such corpus or diagram: {path}")
    return Corpus([CorpusEntry(path.stem, parse_pd(path.read_text()))], [], [])


def cmd_verify(args) -> int:
    only = [s.strip() for s in args.only.split(",")] if args.only else None
    if only:
        bad = [s for s in only if s not in CHECKS]
        if bad:
            raise InputError(f"unknown check(s) {', '.join(bad)}; choose from {', '.join(CHECKS)}")
    corpus = _verify_corpus(args)
    results = run_checks(corpus, only, args.corrupt)
    rep = {"schema": SCHEMA, "passed": all(r.passed for r in results), "checks": [r.to_json() for r in results]}

    def render(rep):
        lines = []
        for r in rep["checks"]:
            lines.append(f"{'PASS' if r['passed'] else 'FAIL'} {r['check']}: {r['count']} checked"
                         + (f", failed: {', '.join(r['failures'][:5])}" if r["failures"] else ""))
        return "\n".join(lines)

    emit(args, rep, render)
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def emit(args, rep: dict, render) -> None:
    if args.format == "json":
        print(json.dumps(rep, indent=1))
    else:
        print(render(rep))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kh", description="Khovanov homology over F2 with basepoint module structure.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt="table"):
        sp.add_argument("file", nargs="?", help="PD text or JSON file")
        sp.add_argument("--pd", help="inline PD code, e.g. 'X(1,4,2,5) X(3,6,4,1) X(5,2,6,3)' or 'U U'")
        sp.add_argument("--format", choices=("json", "table"), default=fmt)
        sp.add_argument("--mem-cap", type=float, metavar="MiB", help="refuse complexes estimated above this size")
        sp.add_argument("--threads", type=int, default=0, help="worker processes for homology (default: cores)")

    c = sub.add_parser("compute", help="bigraded ranks, module actions, reduced homology")
    common(c)
    c.add_argument("--basepoints", metavar="e0,e1,...", help="one edge per component")
    c.add_argument("--reduced", action="store_true", help="also compute reduced homology")
    c.add_argument("--absolute", action="store_true", help="absolute rather than relative gradings")
    c.set_defaults(run=cmd_compute)

    d = sub.add_parser("detect-unlink", help="decide whether Kh is the unlink module")
    common(d, "json")
    d.add_argument("--basepoints", metavar="e0,e1,...")
    d.set_defaults(run=cmd_detect)

    s = sub.add_parser("ss", help="pages of the cube filtration spectral sequence")
    common(s)
    s.add_argument("--complex", metavar="JSON", help="use a filtered complex file instead of a diagram")
    s.add_argument("--absolute", action="store_true")
    s.set_defaults(run=cmd_ss)

    v = sub.add_parser("verify", help="run the property checks over a corpus")
    common(v)
    v.add_argument("--only", metavar="CHECKS", help=f"comma separated subset of: {', '.join(CHECKS)}")
    v.add_argument("--corrupt", action="store_true", help="negative control: damage one differential")
    v.set_defaults(run=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except ResourceLimitError as exc:
        print(f"kh: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InputError, PDError, BasepointError, FiltrationError, FileNotFoundError) as exc:
        print(f"kh: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ChainComplexError as exc:
        print(f"kh: check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
