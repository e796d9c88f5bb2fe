"""Command-line entry point: ``mmcvqkd <subcommand>``.

Exit codes: 0 success, 2 configuration error, 3 numerical-domain error,
4 key-rate gain undefined at every grid point.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..batchio import write_batch_binary, write_batch_csv
from ..errors import ConfigError, DomainError, GainUndefinedError
from ..multimode import key_rate_multimode
from ..security import ChannelParams, ProtocolParams, transmittance_from_distance
from .config import Scenario, load_builtin, load_scenario
from .render import DEFAULT_CHARTS, render_chart
from .sweeps import (
    SweepResult,
    gain_defined_anywhere,
    run_fig1_sweep,
    run_fig3_sweep,
    run_fig5_sweep,
    run_montecarlo_check,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_GAIN_UNDEFINED = 4

log = logging.getLogger("mmcvqkd")


def _common(p: argparse.ArgumentParser, default_config: str | None) -> None:
    p.add_argument("--config", help=f"scenario file (default: built-in {default_config})")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads for grid evaluation")
    p.add_argument("--chart", action="store_true", help="also write a default SVG chart")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmcvqkd", description="Multi-mode CV-QKD key-rate toolkit")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="cmd", required=True)

    for name, helptext in (("fig1", "electronic noise vs repetition rate / LO power"),
                           ("fig3", "SNR ratio vs mode count"),
                           ("fig5", "key-rate gain vs distance")):
        _common(sub.add_parser(name, help=helptext), name)

    mc = sub.add_parser("mc-check", help="Monte Carlo vs analytic key rate")
    _common(mc, "mc_check")
    mc.add_argument("--seed", type=int, help="override the scenario seed (unsigned 64-bit)")
    mc.add_argument("--format", choices=("csv", "binary"),
                    help="also export every simulated batch in this format")

    kr = sub.add_parser("keyrate", help="one-shot key-rate evaluation")
    kr.add_argument("--va", type=float, default=2.5, help="modulation variance V_A (snu)")
    kr.add_argument("--beta", type=float, default=0.95)
    kr.add_argument("--eta", type=float, default=0.6)
    kr.add_argument("--vele", type=float, default=0.0, help="electronic noise (snu)")
    kr.add_argument("--gamma", type=float, default=1 / 3)
    kr.add_argument("--modes", type=int, default=1)
    g = kr.add_mutually_exclusive_group(required=True)
    g.add_argument("--transmittance", type=float)
    g.add_argument("--distance", type=float, help="fibre length in km")
    kr.add_argument("--loss", type=float, default=0.2, help="fibre loss in dB/km")
    x = kr.add_mutually_exclusive_group()
    x.add_argument("--xi", type=float, default=None, help="excess noise at channel input (snu)")
    x.add_argument("--bob-xi", type=float, default=None, help="excess noise at Bob, eta*T*xi (snu)")
    kr.add_argument("--csv", action="store_true", help="print a CSV header and row instead of key=value")

    rd = sub.add_parser("render", help="render a sweep CSV as an SVG line chart")
    rd.add_argument("input", help="sweep CSV")
    rd.add_argument("--x")
    rd.add_argument("--y")
    rd.add_argument("--series", action="append", help="column(s) distinguishing lines")
    rd.add_argument("--logx", action="store_true")
    rd.add_argument("--logy", action="store_true")
    rd.add_argument("--out", default=None, help="SVG path (default: input with .svg suffix)")
    return parser


def _scenario(args: argparse.Namespace, builtin: str) -> Scenario:
    return load_scenario(args.config) if args.config else load_builtin(builtin)


def _emit(result: SweepResult, args: argparse.Namespace, stem: str) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    result.write_csv(csv_path)
    print(csv_path)
    if args.chart:
        svg_path = out / f"{stem}.svg"
        render_chart(result, svg_path, **DEFAULT_CHARTS[result.kind])
        print(svg_path)


def _run(args: argparse.Namespace) -> int:
    if args.cmd == "fig1":
        _emit(run_fig1_sweep(_scenario(args, "fig1"), args.threads), args, "fig1")
    elif args.cmd == "fig3":
        _emit(run_fig3_sweep(_scenario(args, "fig3"), args.threads), args, "fig3")
    elif args.cmd == "fig5":
        result = run_fig5_sweep(_scenario(args, "fig5"), args.threads)
        _emit(result, args, "fig5")
        if not gain_defined_anywhere(result):
            log.error("single-mode key rate is non-positive at every grid point; gain undefined")
            return EXIT_GAIN_UNDEFINED
    elif args.cmd == "mc-check":
        if args.seed is not None and not (0 <= args.seed < 2**64):
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        out = Path(args.out)
        on_batch = None
        if args.format:
            out.mkdir(parents=True, exist_ok=True)
            writer, suffix = (write_batch_csv, "csv") if args.format == "csv" else (write_batch_binary, "bin")

            def on_batch(m: int, n: int, batch) -> None:
                writer(batch, out / f"batch_m{m}_n{n}.{suffix}")

        result = run_montecarlo_check(_scenario(args, "mc_check"), args.seed, args.threads, on_batch)
        _emit(result, args, "mc_check")
    elif args.cmd == "keyrate":
        p = ProtocolParams(args.va, args.beta, args.eta, args.vele, args.gamma)
        t = args.transmittance if args.transmittance is not None else transmittance_from_distance(args.distance, args.loss)
        if args.bob_xi is not None:
            ch = ChannelParams.from_bob_excess_noise(t, args.bob_xi, args.eta)
        else:
            ch = ChannelParams(t, args.xi or 0.0)
        report = key_rate_multimode(args.modes, p, ch)
        if args.csv:
            print(",".join(report.CSV_COLUMNS))
            print(report.csv_row())
        else:
            print(f"transmittance={ch.transmittance!r}")
            print(f"excess_noise={ch.excess_noise!r}")
            for name, value in zip(report.CSV_COLUMNS, report.as_row()):
                print(f"{name}={value!r}")
    elif args.cmd == "render":
        result = SweepResult.read_csv(args.input)
        defaults = DEFAULT_CHARTS.get(result.kind, {})
        x = args.x or defaults.get("x")
        y = args.y or defaults.get("y")
        if not x or not y:
            raise ConfigError("--x and --y are required for this CSV")
        series = tuple(args.series) if args.series else (defaults.get("series") if not (args.x or args.y) else None)
        logx = args.logx or (defaults.get("logx", False) and not args.x)
        logy = args.logy or (defaults.get("logy", False) and not args.y)
        out = args.out or str(Path(args.input).with_suffix(".svg"))
        render_chart(result, out, x, y, series, logx=logx, logy=logy)
        print(out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except GainUndefinedError as exc:
        log.error("%s", exc)
        return EXIT_GAIN_UNDEFINED
    except DomainError as exc:
        log.error("numerical/domain error: %s", exc)
        return EXIT_NUMERICAL
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
