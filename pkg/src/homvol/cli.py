"""Command-line front end.

Usage::

    homvol volume --kind domain --scale rd --p 1 --method closed
    homvol volume --kind surface --scale or --p 0.5,1 --method quad --format csv
    homvol tables --which thm1|thm2|coro1|wald [--alpha 0.05] [--seed 42]
    homvol check [--fast]

Output is a JSON array of run records, CSV with a fixed header, or a
markdown table laid out like the published tables.  Exit codes: 0 ok,
1 self-check failure, 2 usage error.  ``HOMVOL_SEED`` supplies the default
seed; ``--seed`` wins.  ``--config FILE`` reads ``key=value`` lines that
stand in for the matching ``--key value`` flags (explicit flags win).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, fields
from typing import Optional, Sequence

from . import __version__, checks, geometry
from .inference import DEFAULT_ALPHA, DEFAULT_N_GRID, table_wald
from .integrate import (
    CLOSED,
    DEFAULT_P_GRID,
    DEFAULT_SEED,
    McConfig,
    QuadConfig,
    VolumeEstimate,
    mc_volume,
    quad_domain_volume,
    quad_surface_volume,
    table_thm1,
    table_thm2,
)
from .scales import OR, RD, RR, DomainError, EffectScale, check_bound

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


@dataclass(frozen=True)
class RunRecord:
    """One computed quantity.

    ``normalized`` is ``estimate / p**3`` for domain and surface volumes and
    equals ``estimate`` otherwise.  Acceptance-volume ratio records carry the
    numerator scale in ``scale``; the denominator is always ``rd``.
    """

    quantity: str
    scale: str
    p: Optional[float]
    n: Optional[int]
    method: str
    estimate: float
    normalized: float
    std_error: Optional[float]
    samples_or_nodes: int
    seed: Optional[int]
    alpha: Optional[float]
    tool_version: str = __version__


FIELDS = [f.name for f in fields(RunRecord)]
_INT_FIELDS = {"n", "samples_or_nodes", "seed"}
_STR_FIELDS = {"quantity", "scale", "method", "tool_version"}


class UsageError(Exception):
    pass


def _volume_record(quantity: str, scale: EffectScale, p: float, est: VolumeEstimate) -> RunRecord:
    return RunRecord(
        quantity=quantity,
        scale=scale.value,
        p=p,
        n=None,
        method=est.method,
        estimate=est.value,
        normalized=est.value / p**3,
        std_error=est.std_error,
        samples_or_nodes=est.samples_or_nodes,
        seed=est.seed,
        alpha=None,
    )


def _ratio_record(scale: EffectScale, p: float, value: float, method: str, nodes: int, se=None, seed=None) -> RunRecord:
    return RunRecord("ratio", scale.value, p, None, method, value, value, se, nodes, seed, None)


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------


def to_json(records: Sequence[RunRecord]) -> str:
    return json.dumps([asdict(r) for r in records], indent=2) + "\n"


def to_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=FIELDS, lineterminator="\r\n")
    writer.writeheader()
    for r in records:
        writer.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v)) for k, v in asdict(r).items()})
    return buf.getvalue()


def _coerce(name: str, raw: str):
    if raw == "":
        return None
    if name in _STR_FIELDS:
        return raw
    if name in _INT_FIELDS:
        return int(raw)
    return float(raw)


def parse_csv(text: str) -> list[RunRecord]:
    return [RunRecord(**{k: _coerce(k, v) for k, v in row.items()}) for row in csv.DictReader(io.StringIO(text))]


def parse_json(text: str) -> list[RunRecord]:
    return [RunRecord(**obj) for obj in json.loads(text)]


def _fmt(value: Optional[float], digits: int) -> str:
    return "" if value is None else f"{value:.{digits}f}"


def _markdown_grid(header: str, columns: Sequence, rows: Sequence[tuple[str, Sequence[str]]]) -> str:
    lines = [
        "| " + " | ".join([header] + [str(c) for c in columns]) + " |",
        "|" + "---|" * (len(columns) + 1),
    ]
    for label, cells in rows:
        lines.append("| " + " | ".join([label] + list(cells)) + " |")
    return "\n".join(lines) + "\n"


def records_markdown(records: Sequence[RunRecord]) -> str:
    cols = ["quantity", "scale", "p", "n", "method", "estimate", "normalized", "std_error", "samples_or_nodes", "seed"]
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for r in records:
        d = asdict(r)
        lines.append("| " + " | ".join("" if d[c] is None else str(d[c]) for c in cols) + " |")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _csv_list(text: str, kind=float) -> list:
    try:
        return [kind(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse list {text!r}: {exc}") from None


def _bounds(values: Sequence[float]) -> list[float]:
    try:
        return [check_bound(v) for v in values]
    except DomainError as exc:
        raise UsageError(f"p must be in (0, 1]: {exc}") from None


def _scales(text: str) -> list[EffectScale]:
    try:
        return [EffectScale.parse(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _mc(args) -> McConfig:
    return McConfig(samples=args.samples, seed=args.seed, chunks=min(args.chunks, args.samples), workers=args.workers)


def _quad(args) -> QuadConfig:
    return QuadConfig(nodes_per_axis=args.nodes, refinement=args.refinement, inner_nodes=args.inner_nodes)


def cmd_volume(args) -> list[RunRecord]:
    quantity = f"{args.kind}_volume"
    records = []
    for scale in _scales(args.scale):
        for p in _bounds(_csv_list(args.p)):
            if args.method == "closed":
                fn = geometry.closed_domain_volume if args.kind == "domain" else geometry.closed_surface_volume
                value = fn(scale, p)
                if value is None:
                    raise UsageError(f"no closed form for {args.kind} volume on scale {scale.value} at p={p}; use mc or quad")
                est = VolumeEstimate(value, CLOSED, 1)
            elif args.method == "mc":
                est = mc_volume(args.kind, scale, p, _mc(args))
            else:
                fn = quad_domain_volume if args.kind == "domain" else quad_surface_volume
                est = fn(scale, p, _quad(args))
            records.append(_volume_record(quantity, scale, p, est))
    return records


def _p_grid(args) -> list[float]:
    return _bounds(_csv_list(args.p_grid)) if args.p_grid else list(DEFAULT_P_GRID)


def _table_cfg(args):
    return _mc(args) if args.method == "mc" else _quad(args)


def _thm1(args):
    rows = table_thm1(_p_grid(args), _table_cfg(args))
    records = [_volume_record("domain_volume", OR, r.p, r.domain) for r in rows]
    grid = [("F_o(p)/p^3", [_fmt(r.normalized, 2) for r in rows])]
    if rows[0].domain.std_error is not None:
        grid.append(("std error", [_fmt(r.domain.std_error / r.p**3, 4) for r in rows]))
    return records, _markdown_grid("p", [r.p for r in rows], grid)


def _thm2(args):
    rows = table_thm2(_p_grid(args), _table_cfg(args))
    records = [_volume_record("surface_volume", OR, r.p, r.surface) for r in rows]
    grid = [("V_o(p)/p^3", [_fmt(r.normalized, 2) for r in rows])]
    if rows[0].surface.std_error is not None:
        grid.append(("std error", [_fmt(r.surface.std_error / r.p**3, 4) for r in rows]))
    return records, _markdown_grid("p", [r.p for r in rows], grid)


def _coro1(args):
    rows = table_thm2(_p_grid(args), _table_cfg(args))
    records = []
    for r in rows:
        records.append(_ratio_record(RD, r.p, geometry.ratio_v_over_f(RD, r.p), CLOSED, 1))
        records.append(_ratio_record(RR, r.p, geometry.ratio_v_over_f(RR, r.p), CLOSED, 1))
        records.append(
            _ratio_record(OR, r.p, r.ratio, r.surface.method, r.surface.samples_or_nodes, r.ratio_std_error, r.surface.seed)
        )
    grid = [
        ("V_a(p)/F_a(p)", [_fmt(2.0, 2)] * len(rows)),
        ("V_m(p)/F_m(p)", [_fmt(geometry.RR_RATIO_CONSTANT, 2)] * len(rows)),
        ("V_o(p)/F_o(p)", [_fmt(r.ratio, 2) for r in rows]),
    ]
    if rows[0].ratio_std_error is not None:
        grid.append(("std error", [_fmt(r.ratio_std_error, 4) for r in rows]))
    return records, _markdown_grid("p", [r.p for r in rows], grid)


def _wald(args):
    ns = _csv_list(args.n_grid, int) if args.n_grid else list(DEFAULT_N_GRID)
    if any(n < 1 for n in ns):
        raise UsageError("sample sizes must be positive")
    if not (0.0 < args.alpha < 1.0):
        raise UsageError("alpha must lie in (0, 1)")
    rows = table_wald(ns, args.alpha, _mc(args))
    records = []
    for row in rows:
        for scale, est in row.volumes.items():
            records.append(
                RunRecord("acceptance_volume", scale.value, None, row.n, est.method, est.value, est.value,
                          est.std_error, est.samples_or_nodes, est.seed, row.alpha)
            )
        for scale, ratio in row.ratios.items():
            records.append(
                RunRecord("ratio", scale.value, None, row.n, "monte_carlo", ratio, ratio,
                          row.ratio_std_errors[scale], args.samples, args.seed, row.alpha)
            )
    label = {RD: "Vol(R_a)", RR: "Vol(R_m)", OR: "Vol(R_o)"}
    grid = [(label[s], [_fmt(r.volumes[s].value, 3) for r in rows]) for s in (RD, RR, OR)]
    grid += [
        ("Vol(R_m)/Vol(R_a)", [_fmt(r.ratios[RR], 3) for r in rows]),
        ("Vol(R_o)/Vol(R_a)", [_fmt(r.ratios[OR], 3) for r in rows]),
    ]
    grid += [(f"std error {label[s]}", [_fmt(r.volumes[s].std_error, 5) for r in rows]) for s in (RD, RR, OR)]
    grid += [
        ("std error Vol(R_m)/Vol(R_a)", [_fmt(r.ratio_std_errors[RR], 4) for r in rows]),
        ("std error Vol(R_o)/Vol(R_a)", [_fmt(r.ratio_std_errors[OR], 4) for r in rows]),
    ]
    return records, _markdown_grid("", [f"n={r.n}" for r in rows], grid)


TABLES = {"thm1": _thm1, "thm2": _thm2, "coro1": _coro1, "wald": _wald}


def cmd_tables(args):
    return TABLES[args.which](args)


def cmd_check(args, out) -> int:
    results = checks.run_checks(fast=args.fast)
    failed = [r for r in results if not r.passed]
    for r in results:
        out.write(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}\n")
    out.write(f"{len(results) - len(failed)}/{len(results)} checks passed\n")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    value = int(float(text))
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _default_seed() -> int:
    env = os.environ.get("HOMVOL_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"HOMVOL_SEED must be an integer, got {env!r}") from None


def _add_common(sub, samples_default: int) -> None:
    sub.add_argument("--samples", type=_positive_int, default=samples_default, help="Monte Carlo sample count")
    sub.add_argument("--seed", type=int, default=None, help="random seed (default: $HOMVOL_SEED or %d)" % DEFAULT_SEED)
    sub.add_argument("--chunks", type=_positive_int, default=8, help="independent RNG substreams")
    sub.add_argument("--workers", type=_positive_int, default=1, help="threads; does not change results")
    sub.add_argument("--nodes", type=int, default=QuadConfig.nodes_per_axis, help="Gauss-Legendre nodes per panel")
    sub.add_argument("--refinement", type=int, default=QuadConfig.refinement, help="dyadic grading levels")
    sub.add_argument("--inner-nodes", type=int, default=QuadConfig.inner_nodes, help="nodes per inner panel")
    sub.add_argument("--format", choices=("json", "csv", "markdown"), default="json")
    sub.add_argument("--out", default=None, help="write to this path instead of stdout")
    sub.add_argument("--config", default=None, help="flat key=value file of flag defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homvol", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"homvol {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    vol = subs.add_parser("volume", help="domain or surface volume for given scales and bounds")
    vol.add_argument("--kind", choices=("domain", "surface"), required=True)
    vol.add_argument("--scale", required=True, help="rd, rr, or (comma list allowed)")
    vol.add_argument("--p", default="1", help="probability bound(s) in (0, 1], comma list allowed")
    vol.add_argument("--method", choices=("closed", "mc", "quad"), default="closed")
    _add_common(vol, 10**6)

    tab = subs.add_parser("tables", help="reproduce a published table")
    tab.add_argument("--which", choices=sorted(TABLES), required=True)
    tab.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    tab.add_argument("--method", choices=("quad", "mc"), default="quad", help="for thm1/thm2/coro1")
    tab.add_argument("--p-grid", default=None, help="comma list of p (default 0.1,...,1.0)")
    tab.add_argument("--n-grid", default=None, help="comma list of n (default 100,500,2000,5000,10000)")
    _add_common(tab, 10**7)

    chk = subs.add_parser("check", help="run the oracle self-check suite")
    chk.add_argument("--fast", action="store_true", help="reduced sample sizes")
    return parser


def _expand_config(argv: list[str]) -> list[str]:
    """Insert ``--key value`` pairs from a ``--config`` file right after the subcommand."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config needs a path")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2 :]
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    extra = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {line!r} is not key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "yes") and key == "fast":
            extra.append(flag)
        else:
            extra += [flag, value]
    cmd_at = next((j for j, tok in enumerate(rest) if tok in ("volume", "tables", "check")), None)
    if cmd_at is None:
        raise UsageError("--config must accompany a subcommand")
    return rest[: cmd_at + 1] + extra + rest[cmd_at + 1 :]


def _emit(text: str, path: Optional[str], stdout) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_expand_config(argv))
        if args.command == "check":
            return cmd_check(args, stdout)
        if args.seed is None:
            args.seed = _default_seed()
        if args.command == "volume":
            records = cmd_volume(args)
            table = records_markdown(records)
        else:
            records, table = cmd_tables(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, ValueError) as exc:
        stderr.write(f"homvol: error: {exc}\n")
        return EXIT_USAGE
    text = {"json": to_json, "csv": to_csv}.get(args.format, lambda _: table)(records)
    _emit(text, args.out, stdout)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
