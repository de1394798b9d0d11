"""``difflab`` command line."""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..domain import Grid1D
from ..kernels import AliasingError, bg_envelope, fractional_heat_kernel, required_spacing
from . import scenarios
from .config import ScenarioError, load
from .diagnostics import REPRESENTATIONS, validate_operator
from .runner import FMT, run_scenario

OUT_ENV = "DIFFLAB_OUT"
DEFAULT_OUT = "difflab-out"
OPERATOR_TOL = 1e-3


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _resolve(config: str):
    """A config path, or the name of a built-in scenario."""
    p = Path(config)
    if p.exists():
        return load(p)
    if config in scenarios.BUILTINS:
        return scenarios.get(config)
    raise ScenarioError(f"no config file or built-in scenario named {config!r}")


def _print_summary(summary, stream=sys.stdout) -> None:
    status = "PASS" if summary.ok else "FAIL"
    print(f"{status}  {summary.scenario}  ({summary.wall_time:.1f} s, {summary.n_checks} checks)", file=stream)
    for d in summary.diagnostics:
        mark = {True: "ok  ", False: "FAIL", None: "    "}[d.passed]
        check = f"  [{d.check}]" if d.check else ""
        print(f"    {mark} {d.name} = {d.value:.6g}{check}", file=stream)
    if summary.error:
        print(f"    error: {summary.error}", file=stream)


def _figures(out: Path, name: str) -> None:
    from .. import plotting

    for path in plotting.figures_for(out / name.replace("/", "__")):
        print(f"    figure: {path}")


def cmd_run(args) -> int:
    sc = _resolve(args.config)
    out = _out_dir(args)
    summary = run_scenario(sc, out)
    _print_summary(summary)
    if args.figures:
        _figures(out, sc.name)
    return 0 if summary.ok else 1


def _run_named(name: str, out: str):
    return run_scenario(scenarios.get(name), out)


def cmd_run_all(args) -> int:
    out = _out_dir(args)
    names = list(scenarios.BUILTINS)
    if args.only:
        wanted = set(args.only.split(","))
        names = [n for n in names if n in wanted]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_named, names, [str(out)] * len(names)))
    else:
        results = [_run_named(n, str(out)) for n in names]
    for summary in results:
        _print_summary(summary)
        if args.figures:
            for case in scenarios.get(summary.scenario).expand():
                _figures(out, case.name)
    failed = [s.scenario for s in results if not s.ok]
    print(f"{len(results) - len(failed)}/{len(results)} scenarios passed")
    return 1 if failed else 0


def cmd_list(args) -> int:
    for b in scenarios.BUILTINS.values():
        crit = f"#{b.criterion}" if b.criterion is not None else "ex"
        print(f"{b.name:<24} {crit:>4}  {b.anchor}")
    return 0


def cmd_show(args) -> int:
    try:
        print(scenarios.BUILTINS[args.name].text, end="")
    except KeyError:
        print(f"unknown built-in scenario {args.name!r}", file=sys.stderr)
        return 2
    return 0


def cmd_validate(args) -> int:
    sc = _resolve(args.config)
    cases = sc.expand()
    for case in cases:
        case.validate()
    print(f"OK  {sc.name}: {len(cases)} case(s), {sum(len(c.diagnostics) for c in cases)} diagnostic(s)")
    return 0


def cmd_validate_operator(args) -> int:
    pair = tuple(p.strip() for p in args.pair.split(","))
    if len(pair) != 2:
        print("--pair needs two comma-separated representations", file=sys.stderr)
        return 2
    rep = validate_operator(args.s, pair)
    worst = max(rep.values())
    for name, val in rep.items():
        print(f"{name:<10} {val:.3e}")
    status = "PASS" if worst <= OPERATOR_TOL else "FAIL"
    print(f"{status}  max relative disagreement {worst:.3e} (tolerance {OPERATOR_TOL:g})")
    return 0 if worst <= OPERATOR_TOL else 1


def cmd_kernel_table(args) -> int:
    if not 0 < args.s < 1:
        raise ValueError("kernel-table needs 0 < s < 1")
    dx = required_spacing(args.t, args.s)
    length = args.length if args.length else args.n * dx
    g = Grid1D.centered(length, args.n)
    k = fractional_heat_kernel(g, args.t, args.s, whole_line=not args.periodic)
    env = bg_envelope(g.x, args.t, args.s)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"kernel_s{args.s:g}_t{args.t:g}.csv"
    with path.open("w") as fh:
        fh.write("x,P_t,envelope,ratio\n")
        for row in zip(g.x, k.values, env, k.values / env):
            fh.write(",".join(FMT.format(v) for v in row) + "\n")
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="difflab", description="Nonlinear and fractional diffusion experiments.")
    p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one config file or built-in scenario")
    r.add_argument("config")
    r.add_argument("--figures", action="store_true", help="also render PNG figures (needs matplotlib)")
    r.set_defaults(fn=cmd_run)

    ra = sub.add_parser("run-all", help="run every built-in scenario")
    ra.add_argument("--jobs", type=int, default=1)
    ra.add_argument("--only", help="comma-separated subset of scenario names")
    ra.add_argument("--figures", action="store_true")
    ra.set_defaults(fn=cmd_run_all)

    sub.add_parser("list-scenarios", help="list built-in scenarios").set_defaults(fn=cmd_list)

    sh = sub.add_parser("show", help="print the config of a built-in scenario")
    sh.add_argument("name")
    sh.set_defaults(fn=cmd_show)

    v = sub.add_parser("validate", help="parse and check a config without running it")
    v.add_argument("config")
    v.set_defaults(fn=cmd_validate)

    vo = sub.add_parser("validate-operator", help="compare two representations of (-Delta)^s")
    vo.add_argument("--s", type=float, required=True)
    vo.add_argument("--pair", required=True, help=f"two of {','.join(REPRESENTATIONS)}")
    vo.set_defaults(fn=cmd_validate_operator)

    kt = sub.add_parser("kernel-table", help="write the fractional heat kernel as CSV")
    kt.add_argument("--s", type=float, required=True)
    kt.add_argument("--t", type=float, required=True)
    kt.add_argument("--n", type=int, default=4096)
    kt.add_argument("--length", type=float, default=None)
    kt.add_argument("--periodic", action="store_true", help="keep the periodic images")
    kt.set_defaults(fn=cmd_kernel_table)

    for sp in (r, ra, kt):
        sp.add_argument("--out", help="output directory")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, AliasingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
