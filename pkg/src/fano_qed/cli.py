"""Command-line front end.

Exit status: 0 on success, 1 when a validation or oracle comparison fails,
2 on bad input (unknown flag or config key, out-of-range parameter).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import two_photon as tp
from .config import load_config, spec_from_values
from .coupling import MicroscopicParams, SystemSpec, validate_constraints
from .errors import ConfigError, DiagnosticError, DomainError, QuadratureError, ResourceError
from .lattice import LatticeSpec, oracle_single_transmission, oracle_two_photon_g2
from .output import SPECTRUM_HEADER, SWEEP_HEADER, TRACE_HEADER, spectrum_columns, write_csv
from .single_photon import SpectralGrid, transmission_spectrum

FIGURE_T_VALUES = (0.0, 0.3, 0.5, 0.8, 1.0)


class BadInput(Exception):
    pass


def _extended_real(text):
    if text.strip().lower() in ("inf", "infinity", "+inf"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number: {text!r}") from None


def _sign(text):
    table = {"+": 1, "+1": 1, "1": 1, "-": -1, "-1": -1}
    if text not in table:
        raise argparse.ArgumentTypeError(f"expected +1 or -1, got {text!r}")
    return table[text]


def _positive_int(text):
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer: {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return val


def _system_parent():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("system")
    g.add_argument("--config", metavar="PATH", help="key = value file; flags override it")
    g.add_argument("--t", type=float, help="background transmission amplitude in [0, 1]")
    g.add_argument("--sigma", type=float, help="Re(Sigma), the resonance decay")
    g.add_argument("--sigma-im", type=float, help="Im(Sigma), a resonance shift")
    g.add_argument("--omega", type=float, help="resonance frequency (default 1)")
    g.add_argument("--phi", type=float, help="global background phase")
    g.add_argument("--parity", type=_sign, help="mirror parity, +1 or -1")
    g.add_argument("--r-sign", type=_sign, help="branch of r = +-sqrt(1 - t^2)")
    g.add_argument("--chi", type=_extended_real, help="Kerr strength, 'inf' for a two-level atom")
    return p


def _output_parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    return p


def _lattice_parent():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("lattice")
    g.add_argument("--modes", type=_positive_int, help="modes per channel M")
    g.add_argument("--window", type=float, help="half-width W of the k grid")
    g.add_argument("--packet-width", type=float, help="packet spectral width sigma_k")
    g.add_argument("--packet-center", type=float, help="packet centre k0 (default: effective resonance)")
    g.add_argument("--evolve-time", type=float, help="evolution time T")
    g.add_argument("--dt", type=float, help="Lanczos macro step")
    return p


def build_parser() -> argparse.ArgumentParser:
    system, out, lattice = _system_parent(), _output_parent(), _lattice_parent()
    parser = argparse.ArgumentParser(prog="fano-qed", description="Few-photon Fano scattering toolkit")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sub.add_parser("validate", parents=[system], help="check the constraint algebra")

    p = sub.add_parser("spectrum", parents=[system, out], help="single-photon spectrum CSV")
    p.add_argument("--k-min", type=float)
    p.add_argument("--k-max", type=float)
    p.add_argument("--points", type=_positive_int, default=2001)

    p = sub.add_parser("g2", parents=[system, out], help="G2(tau) trace CSV")
    p.add_argument("--E", type=float, help="total incident frequency, k1 = k2 = E/2 (default 2 omega)")
    p.add_argument("--k1", type=float)
    p.add_argument("--k2", type=float)
    p.add_argument("--tau-max", type=float, help="default 40 / Re(Sigma)")
    p.add_argument("--points", type=_positive_int, default=401)
    p.add_argument("--channel", type=int, default=1)
    p.add_argument("--normalize", choices=("raw", "baseline"), default="raw")

    p = sub.add_parser("kernel", parents=[system, out], help="connected two-photon kernel along p1")
    p.add_argument("--k1", type=float)
    p.add_argument("--k2", type=float)
    p.add_argument("--p1-min", type=float)
    p.add_argument("--p1-max", type=float)
    p.add_argument("--points", type=_positive_int, default=201)
    p.add_argument("--channels", default="1111", help="four channel labels, e.g. 1111 or 2211")

    p = sub.add_parser("sweep-fig2", parents=[system], help="|t11(k)|^2 spectra for a set of t")
    p.add_argument("--k-min", type=float)
    p.add_argument("--k-max", type=float)
    p.add_argument("--points", type=_positive_int, default=2001)
    p.add_argument("--out", metavar="PATH", help="directory (or file/stdout for a single --t)")

    p = sub.add_parser("sweep-fig3", parents=[system], help="E/2 profiles of product, fluorescence and G2(0)/2")
    p.add_argument("--E-half-min", type=float)
    p.add_argument("--E-half-max", type=float)
    p.add_argument("--points", type=_positive_int, default=1001)
    p.add_argument("--out", metavar="PATH", help="directory (or file/stdout for a single --t)")

    p = sub.add_parser("oracle-single", parents=[system, lattice], help="lattice check of t11, t21")
    p.add_argument("--out", metavar="DIR", help="directory for CSV and oracle_report.txt")

    p = sub.add_parser("oracle-two", parents=[system, lattice], help="lattice check of G2")
    p.add_argument("--tau-max", type=float, help="default 4 / Re(Sigma)")
    p.add_argument("--points", type=_positive_int, default=81)
    p.add_argument("--out", metavar="DIR", help="directory for CSV and oracle_report.txt")
    return parser


def _spec(args, **forced) -> SystemSpec:
    values = load_config(args.config) if args.config else {}
    flags = {
        "t": args.t,
        "sigma_re": args.sigma,
        "sigma_im": args.sigma_im,
        "omega": args.omega,
        "phi": args.phi,
        "parity": args.parity,
        "r_sign": args.r_sign,
        "chi": args.chi,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    values.update(forced)
    return spec_from_values(values)


def _t_values(args):
    return (args.t,) if args.t is not None else FIGURE_T_VALUES


def _tag(t):
    return f"t{t:g}"


def _sweep_dest(args, t, stem, multiple):
    if not multiple:
        return args.out
    return os.path.join(args.out or ".", f"{stem}_{_tag(t)}.csv")


def cmd_validate(args):
    spec = _spec(args)
    report = validate_constraints(spec.background(), spec.couplings(), spec.sigma)
    print(report.format())
    return 0 if report.passed else 1


def _k_range(args, spec):
    lo = args.k_min if args.k_min is not None else 0.0
    hi = args.k_max if args.k_max is not None else 2.0 * spec.omega
    return SpectralGrid.linspace(lo, hi, args.points)


def cmd_spectrum(args):
    spec = _spec(args)
    table = transmission_spectrum(spec, _k_range(args, spec))
    write_csv(args.out, SPECTRUM_HEADER, spectrum_columns(table))
    if table.complex_sigma:
        print("note: complex-Sigma mode, unitarity_residual reported only", file=sys.stderr)
    return 0


def cmd_g2(args):
    spec = _spec(args)
    if (args.k1 is None) != (args.k2 is None):
        raise BadInput("--k1 and --k2 must be given together")
    if args.k1 is not None:
        if args.E is not None:
            raise BadInput("use either --E or --k1/--k2")
        k1, k2 = args.k1, args.k2
    else:
        energy = args.E if args.E is not None else 2.0 * spec.omega
        k1 = k2 = energy / 2.0
    tau_max = args.tau_max if args.tau_max is not None else 40.0 / spec.sigma.real
    if not tau_max > 0:
        raise BadInput(f"--tau-max must be positive, got {tau_max}")
    trace = tp.g2_trace(spec, k1, k2, np.linspace(0.0, tau_max, args.points), channel=args.channel)
    g2 = trace.g2_values
    baseline = trace.baseline
    if args.normalize == "baseline":
        if baseline <= 1e-12 * np.max(g2, initial=0.0):
            raise BadInput("baseline vanishes at this frequency; use --normalize raw")
        g2, baseline = g2 / baseline, 1.0
    write_csv(args.out, TRACE_HEADER, [trace.tau_values, g2, np.full_like(g2, baseline)])
    return 0


def cmd_kernel(args):
    spec = _spec(args)
    if len(args.channels) != 4 or not args.channels.isdigit():
        raise BadInput(f"--channels needs four digits, got {args.channels!r}")
    channels = tuple(int(c) for c in args.channels)
    k1 = args.k1 if args.k1 is not None else spec.omega
    k2 = args.k2 if args.k2 is not None else spec.omega
    gamma = spec.sigma.real
    centre = 0.5 * (k1 + k2)
    lo = args.p1_min if args.p1_min is not None else centre - 10 * gamma
    hi = args.p1_max if args.p1_max is not None else centre + 10 * gamma
    p1 = np.linspace(lo, hi, args.points)
    if spec.is_atom:
        amp = np.atleast_1d(tp.connected_kernel(spec, channels, p1, k1, k2))
        err = np.zeros_like(p1)
    else:
        samples = [tp.connected_kernel_numeric(spec, channels, p, k1, k2) for p in p1]
        amp = np.array([s.amplitude for s in samples])
        err = np.array([s.error_estimate for s in samples])
    write_csv(args.out, ("p1", "p2", "re_kernel", "im_kernel", "error_estimate"),
              [p1, k1 + k2 - p1, amp.real, amp.imag, err])
    return 0


def cmd_sweep_fig2(args):
    ts = _t_values(args)
    for t in ts:
        spec = _spec(args, t=t)
        table = transmission_spectrum(spec, _k_range(args, spec))
        write_csv(_sweep_dest(args, t, "fig2", len(ts) > 1), SPECTRUM_HEADER, spectrum_columns(table))
    return 0


def cmd_sweep_fig3(args):
    ts = _t_values(args)
    for t in ts:
        spec = _spec(args, t=t)
        lo = args.E_half_min if args.E_half_min is not None else 0.5 * spec.omega
        hi = args.E_half_max if args.E_half_max is not None else 1.5 * spec.omega
        e_half = SpectralGrid.linspace(lo, hi, args.points).k_values
        energy = 2.0 * e_half
        cols = [e_half, tp.product_weight(spec, energy), tp.fluorescence_weight(spec, energy),
                tp.g2_zero_closed(spec, energy)]
        write_csv(_sweep_dest(args, t, "fig3", len(ts) > 1), SWEEP_HEADER, cols)
    return 0


def _lattice_spec(args, two):
    spec = _spec(args)
    if spec.sigma.imag != 0.0:
        raise BadInput("oracle runs derive Sigma from the microscopic model; --sigma-im is not used")
    micro = MicroscopicParams.for_background(spec.t_bg, spec.sigma.real)
    fields = {
        "modes_per_channel": args.modes,
        "window": args.window,
        "packet_width": args.packet_width,
        "packet_center": args.packet_center,
        "evolve_time": args.evolve_time,
        "dt": args.dt,
    }
    overrides = {k: v for k, v in fields.items() if v is not None}
    overrides["omega"] = spec.omega
    if two:
        return LatticeSpec.two_photon(micro, **overrides)
    return LatticeSpec(micro=micro, **overrides)


def _write_report(args, report):
    text = report.to_text()
    sys.stdout.write(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "oracle_report.txt"), "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0 if report.passed else 1


def cmd_oracle_single(args):
    res = oracle_single_transmission(_lattice_spec(args, two=False))
    if args.out:
        flux = np.abs(res.t11) ** 2 + np.abs(res.t21) ** 2
        write_csv(os.path.join(args.out, "oracle_single.csv"), SPECTRUM_HEADER,
                  [res.k, res.t11.real, res.t11.imag, res.t21.real, res.t21.imag,
                   np.abs(res.t11) ** 2, np.abs(res.t21) ** 2, np.abs(flux - 1.0)])
        write_csv(os.path.join(args.out, "analytic_single.csv"), ("k", "re_t11", "im_t11", "re_t21", "im_t21"),
                  [res.k, res.analytic_t11.real, res.analytic_t11.imag, res.analytic_t21.real, res.analytic_t21.imag])
    return _write_report(args, res.report)


def cmd_oracle_two(args):
    spec = _lattice_spec(args, two=True)
    gamma = spec.sigma.real
    tau_max = args.tau_max if args.tau_max is not None else 4.0 / gamma
    res = oracle_two_photon_g2(spec, np.linspace(0.0, tau_max, args.points))
    if args.out:
        write_csv(os.path.join(args.out, "oracle_two.csv"), TRACE_HEADER,
                  [res.tau, res.g2_normalized, np.ones_like(res.tau)])
        write_csv(os.path.join(args.out, "oracle_two_detail.csv"),
                  ("tau", "g2_normalized", "g2_relative", "connected", "analytic_normalized", "analytic_relative"),
                  [res.tau, res.g2_normalized, res.g2_relative, res.connected,
                   res.analytic_normalized, res.analytic_relative])
    return _write_report(args, res.report)


COMMANDS = {
    "validate": cmd_validate,
    "spectrum": cmd_spectrum,
    "g2": cmd_g2,
    "kernel": cmd_kernel,
    "sweep-fig2": cmd_sweep_fig2,
    "sweep-fig3": cmd_sweep_fig3,
    "oracle-single": cmd_oracle_single,
    "oracle-two": cmd_oracle_two,
}


def _thread_limit():
    raw = os.environ.get("FANO_QED_THREADS")
    if raw is None or raw == "":
        return None
    try:
        val = int(raw)
    except ValueError:
        raise BadInput(f"FANO_QED_THREADS must be a positive integer, got {raw!r}") from None
    if val < 1:
        raise BadInput(f"FANO_QED_THREADS must be a positive integer, got {raw!r}")
    return val


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        limit = _thread_limit()
        if limit is not None:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=limit):
                return COMMANDS[args.command](args)
        return COMMANDS[args.command](args)
    except (BadInput, ConfigError, DomainError, ResourceError, OSError) as exc:
        print(f"fano-qed: error: {exc}", file=sys.stderr)
        return 2
    except (DiagnosticError, QuadratureError) as exc:
        print(f"fano-qed: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
