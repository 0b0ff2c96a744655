"""Command-line entry point (``bosonsim``).

Failures print one line ``error: <kind>: <message>`` on stderr. Exit codes:
0 success, 1 runtime/validation failure, 2 usage error or missing input.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__

SHIPPED_SCENES = ("nanobridge", "hbn_on_nb", "strip")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str, n: int | None = None, sep: str = ","):
    try:
        vals = [float(v) for v in text.split(sep)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers separated by {sep!r}: {text!r}")
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} values, got {len(vals)}: {text!r}")
    return vals


def _window(text):
    return tuple(_floats(text, 4))


def _range2(text):
    return tuple(_floats(text, 2, ":"))


def parse_values(text: str) -> np.ndarray:
    """``a:b:n`` (inclusive linspace) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}")
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}")
        if n < 1:
            raise argparse.ArgumentTypeError("n must be >= 1")
        return np.linspace(a, b, n)
    return np.array(_floats(text))


def _require_file(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{p}: no such file")
    return p


def load_scene(ref: str):
    """Scene from a JSON file, or one of the shipped reference scenes by name."""
    from .scene import build_scene

    p = Path(ref)
    if not p.exists() and ref in SHIPPED_SCENES:
        data = json.loads(resources.files("bosonsim").joinpath(
            f"data/scenes/{ref}.json").read_text(encoding="utf-8"))
    else:
        _require_file(p)
        data = json.loads(p.read_text(encoding="utf-8"))
    scene = build_scene(data)
    return scene, scene.fingerprint


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _scan_spec(scene, args, channels):
    from .scan import ScanSpec

    g = scene.grid
    if args.window is None:
        xs, ys = g.x_centers(), g.y_centers()
        window = (xs[0], ys[0], xs[-1], ys[-1])
    else:
        window = args.window
    step = g.dx if args.step is None else args.step
    return ScanSpec(window, step, channels, args.noise_sigma, args.noise_seed)


def _conditions(scene, args):
    T = scene.bath_temperature if args.temp is None else args.temp
    I = scene.bias_current if args.bias is None else args.bias
    B = scene.magnetic_field if args.field is None else args.field
    return T, I, B


def cmd_simulate(args):
    from .scan import scan

    scene, fp = load_scene(args.scene)
    channels = ("nfpc", "ssnom") if args.channel == "both" else (args.channel,)
    spec = _scan_spec(scene, args, channels)
    T, I, B = _conditions(scene, args)
    if I == 0 and "nfpc" in channels:
        _warn("bias current is 0; the NFPC map is identically zero")
    maps = scan(scene, spec, T, I, B, args.power)
    params = {"temperature": T, "bias": I, "field": B, "power": args.power,
              "window": list(spec.window), "step": spec.step}
    out = Path(args.out)
    for ch, m in maps.items():
        path = out if len(maps) == 1 else out.with_name(f"{out.stem}_{ch}{out.suffix or '.bsn'}")
        from .io import write_map
        write_map(path, m, {"channel": ch, "units": "arb.", "fingerprint": fp,
                            "parameters": params})
        print(path)
    if args.dump_thermal is not None:
        from .io import write_map
        from .scan import context

        r = tuple(args.dump_thermal)
        if not scene.grid.contains(*r):
            raise ValueError(f"--dump-thermal position {r} lies outside the scene")
        ctx = context(scene)
        P = ctx.heating(r, args.power)
        meta = {"fingerprint": fp, "parameters": {**params, "tip": list(r)}}
        for name, vals, unit in (("heating", P, "nW/um^2"),
                                 ("thermal", ctx.diffuser.apply(P), "K")):
            path = out.with_name(f"{out.stem}_{name}.bsn")
            write_map(path, vals, {**meta, "channel": name, "units": unit},
                      dx=scene.grid.dx, origin=scene.grid.origin)
            print(path)
    return 0


def cmd_sweep(args):
    from .io import write_stack
    from .scan import sweep

    scene, fp = load_scene(args.scene)
    parameter = {"temp": "temperature", "bias": "bias", "field": "field"}[args.parameter]
    spec = _scan_spec(scene, args, (args.channel,))
    T, I, B = _conditions(scene, args)
    if args.channel == "nfpc" and ((parameter != "bias" and I == 0)
                                   or (parameter == "bias" and np.all(args.values == 0))):
        _warn("bias current is 0; the NFPC stack is identically zero")
    stack = sweep(scene, spec, parameter, args.values, T, I, B, args.power, args.channel)
    stack = type(stack)(stack.parameter, stack.values, stack.maps, fp, stack.channel)
    params = {"temperature": T, "bias": I, "field": B, "power": args.power,
              "window": list(spec.window), "step": spec.step}
    write_stack(args.out, stack, {"units": "arb.", "parameters": params})
    print(args.out)
    return 0


def cmd_analyze(args):
    from . import analysis
    from .io import read_map, read_stack, write_curve, write_map

    if args.what == "te-map":
        _require_file(Path(args.stack) / "manifest.json")
        stack = read_stack(args.stack)
        te = analysis.extract_te_map(stack, args.threshold)
        values = np.where(te.valid, te.temperature, 0.0)
        origin = (te.xs[0] - 0.5 * te.step, te.ys[0] - 0.5 * te.step)
        meta = {"channel": "te", "units": "K", "fingerprint": stack.fingerprint,
                "parameters": {"threshold": args.threshold, "masked_value": 0.0,
                               "source": str(args.stack)}}
        out = Path(args.out)
        write_map(out, values, meta, dx=te.step, origin=origin)
        mask_path = out.with_name(f"{out.stem}_mask{out.suffix or '.bsn'}")
        write_map(mask_path, te.reason.astype(float),
                  {**meta, "channel": "te-mask", "units": "code",
                   "parameters": {**meta["parameters"],
                                  "codes": {"0": "valid", "1": "no-signal", "2": "boundary"}}},
                  dx=te.step, origin=origin)
        print(out)
        print(mask_path)
    elif args.what == "fringes":
        mf = read_map(_require_file(args.map))
        x0, y0, x1, y1 = args.line
        prof = analysis.extract_linecut(mf.as_field(), (x0, y0), (x1, y1), args.width)
        est = analysis.estimate_fringe_wavelength(prof, args.band)
        result = {"wavelength_nm": est.wavelength, "peaks_nm": list(est.peaks),
                  "strengths": list(est.strengths), "method": est.method,
                  "fingerprint": mf.metadata.get("fingerprint", ""), "version": __version__}
        if args.out:
            write_curve(args.out, [("distance", "nm", prof.distance),
                                   ("signal", mf.metadata.get("units", "arb."), prof.values)],
                        {"fingerprint": result["fingerprint"], "line": list(args.line),
                         "width_px": args.width})
        print(json.dumps(result, sort_keys=True))
    elif args.what == "integrate":
        _require_file(Path(args.stack) / "manifest.json")
        stack = read_stack(args.stack)
        curve = analysis.integrate_stack(stack)
        write_curve(args.out, [(curve.parameter, curve.x_unit, curve.x),
                               ("integrated_signal", curve.y_unit, curve.y)],
                    {"fingerprint": stack.fingerprint})
        print(args.out)
    return 0


def cmd_calibrate(args):
    from .analysis import CalibrationModel, apply_calibration, fit_calibration
    from .io import read_anchors

    if args.action == "fit":
        anchors = read_anchors(_require_file(args.anchors))
        m = fit_calibration(anchors)
        print(json.dumps({"alpha": m.alpha, "dT": m.dT, "rms_residual": m.rms_residual,
                          "n_anchors": len(anchors)}, sort_keys=True))
    else:
        m = CalibrationModel(args.alpha, args.dT)
        for t in args.traw:
            print(f"{t:g} {apply_calibration(m, t):.6f}")
    return 0


def cmd_dispersion(args):
    from .dispersion import HBN, Substrate, permittivity, slab_mode

    sub = Substrate.parse(args.substrate)
    mode = slab_mode(HBN, args.freq, args.thickness, sub, args.order)
    et, ez = permittivity(HBN, args.freq)
    print(f"lambda_p_nm={mode.wavelength:.2f} q_rad_per_nm={mode.q:.6g} "
          f"eps_t={et.real:.4f} eps_z={ez.real:.4f} substrate={args.substrate} "
          f"thickness_nm={args.thickness:g} frequency_cm1={args.freq:g}")
    return 0


def cmd_render(args):
    from .io import export_render, read_map

    mf = read_map(_require_file(args.map))
    export_render(mf.values, args.out, args.cmap, args.clip,
                  {"fingerprint": mf.metadata.get("fingerprint", ""),
                   "channel": mf.metadata.get("channel", "")})
    print(args.out)
    return 0


def _add_scan_args(p):
    p.add_argument("--scene", required=True, help="scene JSON file or shipped scene name")
    p.add_argument("--temp", type=float, help="bath temperature (K)")
    p.add_argument("--bias", type=float, help="bias current (uA)")
    p.add_argument("--field", type=float, help="magnetic field (T)")
    p.add_argument("--power", type=float, default=100.0, help="incident power (nW)")
    p.add_argument("--window", type=_window, help="x0,y0,x1,y1 in nm (default: whole grid)")
    p.add_argument("--step", type=float, help="scan step in nm (default: grid dx)")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--noise-seed", type=int, default=0)
    p.add_argument("--out", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bosonsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bosonsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="raster-scan NFPC and/or s-SNOM maps")
    p.add_argument("channel", choices=["nfpc", "ssnom", "both"])
    _add_scan_args(p)
    p.add_argument("--dump-thermal", type=lambda t: _floats(t, 2), metavar="X,Y",
                   help="also write heating and temperature-rise fields for this tip position")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="stack of scans over temperature, bias or field")
    p.add_argument("parameter", choices=["temp", "bias", "field"])
    p.add_argument("--values", type=parse_values, required=True, help="a:b:n or a,b,c")
    p.add_argument("--channel", choices=["nfpc", "ssnom"], default="nfpc")
    _add_scan_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="reduce maps and stacks")
    asub = p.add_subparsers(dest="what", required=True, parser_class=_Parser)
    q = asub.add_parser("te-map")
    q.add_argument("--stack", required=True)
    q.add_argument("--threshold", type=float, default=0.05)
    q.add_argument("--out", required=True)
    q = asub.add_parser("fringes")
    q.add_argument("--map", required=True)
    q.add_argument("--line", type=_window, required=True, help="x0,y0,x1,y1 in nm")
    q.add_argument("--width", type=int, default=1)
    q.add_argument("--band", type=_range2, default=(100.0, 800.0), help="lo:hi in nm")
    q.add_argument("--out", help="optional CSV of the linecut profile")
    q = asub.add_parser("integrate")
    q.add_argument("--stack", required=True)
    q.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("calibrate", help="thermometer calibration")
    csub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = csub.add_parser("fit")
    q.add_argument("--anchors", required=True, help="CSV with header t_raw,t_sample")
    q = csub.add_parser("apply")
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--dT", type=float, required=True)
    q.add_argument("--traw", type=_floats, required=True, help="comma list of raw temperatures")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("dispersion", help="hBN slab polariton wavelength")
    p.add_argument("--thickness", type=float, required=True, help="nm")
    p.add_argument("--freq", type=float, default=1491.9, help="cm^-1")
    p.add_argument("--substrate", default="metal", help="metal | dielectric[:eps]")
    p.add_argument("--order", type=int, default=0)
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("render", help="8-bit PNG from a map file")
    p.add_argument("--map", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cmap", default="gray")
    p.add_argument("--clip", type=_range2, default=(1.0, 99.0), help="lo:hi percentiles")
    p.set_defaults(func=cmd_render)
    return parser


def _oneline(exc) -> str:
    return " ".join(str(exc).split())


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: usage: {_oneline(exc)}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: missing-file: {_oneline(exc)}", file=sys.stderr)
        return 2
    except Exception as exc:
        from .config import ConfigError

        kind = "config" if isinstance(exc, ConfigError) else type(exc).__name__
        print(f"error: {kind}: {_oneline(exc)}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
