"""Command-line surface: one binary, subcommands for each operation family,
machine-readable result records (JSON or CSV) with provenance and error
estimates, and a `verify` subcommand that runs the acceptance suite.

Determinism: identical configuration and input files produce byte-identical
records up to the `meta` block (wall time lives there and nowhere else).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .fuchsian import GroupDescriptor, GroupElement
from .specfun import PrecisionConfig, SpecfunError


EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def _data_dir():
    env = os.environ.get("CUSPDRIFT_DATA")
    if env:
        return env
    return os.path.join(os.path.dirname(__file__), "data")


def _resolve_path(p):
    if os.path.exists(p):
        return p
    candidate = os.path.join(_data_dir(), p)
    if os.path.exists(candidate):
        return candidate
    raise FileNotFoundError(f"no such file: {p} (also tried {candidate})")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _cnum(v):
    v = complex(v)
    return {"re": v.real, "im": v.imag}


def emit_result(record: dict, fmt: str = "json", path=None) -> str:
    """Serialize a result record; complex values as {re, im} / `re;im`."""
    if fmt == "json":
        text = json.dumps(record, indent=2, sort_keys=True, default=_json_default) + "\n"
    elif fmt == "csv":
        rows = record.get("rows")
        if rows is None:
            rows = [
                {k: v for k, v in record.items() if k not in ("meta", "provenance")}]
        header = sorted({k for r in rows for k in r})
        lines = [",".join(header)]
        for r in rows:
            cells = []
            for k in header:
                v = r.get(k, "")
                if isinstance(v, complex):
                    cells.append(f"{v.real!r};{v.imag!r}")
                elif isinstance(v, dict) and set(v) == {"re", "im"}:
                    cells.append(f"{v['re']!r};{v['im']!r}")
                else:
                    cells.append(repr(v) if isinstance(v, float) else str(v))
            lines.append(",".join(cells))
        text = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def _json_default(v):
    if isinstance(v, complex):
        return _cnum(v)
    if isinstance(v, (np.floating, np.integer)):
        return float(v)
    if isinstance(v, np.complexfloating):
        return _cnum(complex(v))
    raise TypeError(f"unserializable {type(v)}")


def _parse_complex(text: str) -> complex:
    return complex(text.replace("i", "j").replace(" ", ""))


def _common_flags(p):
    p.add_argument("--precision", type=int, default=30, help="working decimal digits")
    p.add_argument("--tol", type=float, default=1e-12, help="target absolute tolerance")
    p.add_argument("--c-bound", type=int, default=300)
    p.add_argument("--terms", type=int, default=200)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser():
    ap = argparse.ArgumentParser(prog="cuspdrift",
                                 description="spectral-deformation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("specfun", help="Gamma / zeta / K-Bessel values")
    p.add_argument("--op", choices=("gamma", "zeta", "besselk"), required=True)
    p.add_argument("--s", default=None)
    p.add_argument("--nu", default=None)
    p.add_argument("--y", type=float, default=None)
    _common_flags(p)

    p = sub.add_parser("eisenstein", help="E(z, s) evaluation")
    p.add_argument("--z", required=True)
    p.add_argument("--s", required=True)
    p.add_argument("--method", choices=("coset", "fourier"), default="fourier")
    p.add_argument("--form", default=None, help="coefficient file for the character")
    p.add_argument("--omega", default="1", help="1, 2, or an angle in radians")
    p.add_argument("--eps", type=float, default=0.0)
    _common_flags(p)

    p = sub.add_parser("scattering", help="phi(s) and its identities")
    p.add_argument("--s", required=True)
    p.add_argument("--check-functional", action="store_true")
    _common_flags(p)

    p = sub.add_parser("modsym", help="modular symbol of a group element")
    p.add_argument("--form", required=True)
    p.add_argument("--gamma", required=True, help="a,b,c,d")
    p.add_argument("--omega", default="1")
    _common_flags(p)

    p = sub.add_parser("goldfeld", help="twisted series E^n / D^n")
    p.add_argument("--z", required=True)
    p.add_argument("--s", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", choices=("E", "D"), default="E")
    p.add_argument("--form", required=True)
    p.add_argument("--omega", default="1")
    _common_flags(p)

    p = sub.add_parser("fermi", help="golden-rule shift from inner products")
    p.add_argument("--inner", required=True,
                   help="comma-separated complex inner products")
    p.add_argument("--tj", type=float, required=True)
    _common_flags(p)

    p = sub.add_parser("series", help="Rankin-Selberg / convolution series")
    p.add_argument("--kind", choices=("rankin", "uF2"), required=True)
    p.add_argument("--s", required=True)
    p.add_argument("--maass", required=True)
    p.add_argument("--form", required=True)
    _common_flags(p)

    p = sub.add_parser("track", help="contour tracking on a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--center", default="0.5+3i")
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--eps-schedule", default="default")
    p.add_argument("--contour", choices=("full", "half", "derivatives"),
                   default="derivatives")
    _common_flags(p)

    p = sub.add_parser("weyl", help="M(T) and the Weyl trend ratio")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--eigenvalues", default=None)
    _common_flags(p)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--criteria", default=None,
                   help="comma-separated subset, e.g. 1,3,9")
    _common_flags(p)
    return ap


def _load_form(path, args):
    from .forms import load_coefficients, eta_product_coeffs, HolCuspForm

    if path == "builtin:11a":
        return eta_product_coeffs(11, max(args.terms, 3000)), "builtin:11a"
    real = _resolve_path(path)
    rec = load_coefficients(real)
    if not isinstance(rec, HolCuspForm):
        raise SpecfunError(f"{path} is not a holomorphic coefficient file")
    return rec, real


def _omega_choice(text):
    from .forms import OneFormChoice

    if text == "1":
        return OneFormChoice.omega1()
    if text == "2":
        return OneFormChoice.omega2()
    return OneFormChoice(float(text))


def _record(args, payload, provenance=None, t0=None):
    rec = dict(payload)
    rec["inputs"] = {k: v for k, v in vars(args).items()
                     if k not in ("command", "out", "format") and v is not None}
    if provenance:
        rec["provenance"] = provenance
    rec["meta"] = {"wall_time_s": (time.time() - t0) if t0 else None,
                   "version": __version__}
    return rec


def cmd_specfun(args, t0):
    from . import specfun

    cfg = PrecisionConfig(args.precision, args.tol)
    if args.op == "gamma":
        v = specfun.gamma_complex(_parse_complex(args.s), cfg)
        return {"value": complex(v), "abs_error_estimate": 10.0 ** (5 - args.precision)}
    if args.op == "zeta":
        v = specfun.zeta(_parse_complex(args.s), cfg)
        return {"value": complex(v), "abs_error_estimate": args.tol / 10}
    v = specfun.bessel_k(_parse_complex(args.nu), args.y, cfg)
    return {"value": complex(v), "abs_error_estimate": 10.0 ** (5 - args.precision)}


def cmd_eisenstein(args, t0):
    from . import eisenstein as eis

    z = _parse_complex(args.z)
    s = _parse_complex(args.s)
    cfg = eis.EisensteinConfig(c_bound=args.c_bound)
    if args.method == "fourier":
        if args.level != 1:
            raise SpecfunError("Fourier route is level-1 only")
        v = eis.eisenstein_fourier(z, s, cfg)
        return {"value": complex(v), "tail_estimate": args.tol}
    grp = GroupDescriptor(args.level)
    weights = None
    prov = None
    if args.eps and args.form:
        from .forms import CharacterFamily
        form, real = _load_form(args.form, args)
        fam = CharacterFamily(form, _omega_choice(args.omega))
        table = eis.coset_table(args.level, args.c_bound)
        weights = eis.character_row_weights(table, fam, args.eps)
        prov = {"form": real if real.startswith("builtin") else
                {"path": real, "sha256": _sha256(real)}}
    r = eis.eisenstein_coset_sum(z, s, grp, char_weights=weights, cfg=cfg)
    out = {"value": complex(r.value), "tail_estimate": r.tail_estimate}
    return (out, prov) if prov else out


def cmd_scattering(args, t0):
    from . import eisenstein as eis

    s = _parse_complex(args.s)
    prec = PrecisionConfig(args.precision, args.tol)
    phi = eis.scattering_phi(s, prec)
    out = {"value": complex(phi), "abs_error_estimate": args.tol / 10}
    if args.check_functional:
        resid = abs(complex(phi * eis.scattering_phi(1 - s, prec))) - 1
        out["functional_equation_residual"] = abs(resid)
    return out


def cmd_modsym(args, t0):
    from .forms import modular_symbol

    form, real = _load_form(args.form, args)
    a, b, c, d = (int(v) for v in args.gamma.split(","))
    g = GroupElement(a, b, c, d)
    v = modular_symbol(form, _omega_choice(args.omega), g)
    prov = {"form": real if real.startswith("builtin")
            else {"path": real, "sha256": _sha256(real)}}
    return {"value": v.value, "abs_error_estimate": 1e-11,
            "purely_imaginary": True}, prov


def cmd_goldfeld(args, t0):
    from . import goldfeld as gf

    form, real = _load_form(args.form, args)
    cfg = gf.TwistedSeriesConfig(c_bound=args.c_bound)
    fn = gf.goldfeld_E if args.kind == "E" else gf.goldfeld_D
    r = fn(_parse_complex(args.z), _parse_complex(args.s), args.n, form,
           _omega_choice(args.omega), cfg)
    prov = {"form": real if real.startswith("builtin")
            else {"path": real, "sha256": _sha256(real)}}
    return {"value": complex(r.value), "tail_estimate": r.tail_estimate}, prov


def cmd_fermi(args, t0):
    from .perturb import fermi_shift

    vals = [_parse_complex(v) for v in args.inner.split(",")]
    return {"value": fermi_shift(vals, args.tj), "abs_error_estimate": 0.0,
            "inner_count": len(vals)}


def cmd_series(args, t0):
    from .forms import load_coefficients, MaassForm
    from .perturb import rankin_selberg, L_uF2

    form, realf = _load_form(args.form, args)
    realm = _resolve_path(args.maass)
    u = load_coefficients(realm)
    if not isinstance(u, MaassForm):
        raise SpecfunError(f"{args.maass} is not a Maass coefficient file")
    terms = min(args.terms, form.m_count, len(u.coefficients))
    fn = rankin_selberg if args.kind == "rankin" else L_uF2
    r = fn(u, form, _parse_complex(args.s), terms)
    prov = {"maass": {"path": realm, "sha256": _sha256(realm)},
            "form": realf if realf.startswith("builtin")
            else {"path": realf, "sha256": _sha256(realf)}}
    return {"value": complex(r.value), "tail_estimate": r.tail_estimate,
            "terms_used": r.terms_used, "tail_model": list(r.tail_model)}, prov


def cmd_track(args, t0):
    from . import tracker as tr

    real = _resolve_path(args.model)
    fam = tr.parse_model_file(real)
    s_j = _parse_complex(args.center)
    u = args.radius or fam.default_radius(s_j)
    prov = {"model": {"path": real, "sha256": _sha256(real)}}
    if args.contour == "full":
        r = tr.contour_full_circle(fam, s_j, u, args.eps)
        return {"value": r.value, "quadrature_error": r.quadrature_error,
                "multiplicity": r.multiplicity, "radius": u}, prov
    if args.contour == "half":
        r = tr.contour_half_circle(fam, None, s_j, u, args.eps)
        return {"value": r.value, "quadrature_error": r.quadrature_error,
                "multiplicity": r.multiplicity, "radius": u,
                "branch_sum": r.branch_sum}, prov
    m = fam.multiplicity_at(s_j)

    def route(eps):
        if eps == 0.0:
            return 0.0
        return tr.contour_full_circle(fam, s_j, u, eps).value.real / (2 * m)

    steps = None
    if args.eps_schedule != "default":
        steps = [float(v) for v in args.eps_schedule.split(",")]
    ders = tr.eps_derivatives(route, orders=range(1, 2 * args.order + 1), steps=steps)
    rows = [{"order": k, "value": v, "error_bar": e} for k, (v, e) in sorted(ders.items())]
    return {"rows": rows, "value": ders[2 * args.order][0],
            "error_bar": ders[2 * args.order][1], "radius": u,
            "multiplicity": m}, prov


def cmd_weyl(args, t0):
    from . import tracker as tr

    if args.eigenvalues:
        real = _resolve_path(args.eigenvalues)
        rs = tr.load_eigenvalue_file(real)
        rep = tr.weyl_trend(rs, args.T)
        rep["quadrature_error"] = rep.pop("M_error")
        return rep, {"eigenvalues": {"path": real, "sha256": _sha256(real)}}
    from .eisenstein import weyl_M

    M, err = weyl_M(args.T)
    return {"value": M, "quadrature_error": err}


def cmd_verify(args, t0):
    from .verify import run_criteria

    subset = None
    if args.criteria:
        subset = [int(v) for v in args.criteria.split(",")]
    results = run_criteria(subset)
    ok = all(r.passed for r in results)
    for r in results:
        print(r.report_line())
    total = sum(r.elapsed for r in results)
    print(f"{'PASS' if ok else 'FAIL'}: {sum(r.passed for r in results)}"
          f"/{len(results)} criteria in {total:.1f} s")
    return EXIT_OK if ok else EXIT_FAIL


_HANDLERS = {
    "specfun": cmd_specfun,
    "eisenstein": cmd_eisenstein,
    "scattering": cmd_scattering,
    "modsym": cmd_modsym,
    "goldfeld": cmd_goldfeld,
    "fermi": cmd_fermi,
    "series": cmd_series,
    "track": cmd_track,
    "weyl": cmd_weyl,
}


def command_dispatch(argv) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    t0 = time.time()
    if args.command == "verify":
        return cmd_verify(args, t0)
    try:
        out = _HANDLERS[args.command](args, t0)
    except (FileNotFoundError, ValueError) as e:
        is_numeric = isinstance(e, (SpecfunError,)) or \
            type(e).__module__.startswith("cuspdrift")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC if is_numeric else EXIT_USAGE
    if isinstance(out, tuple):
        payload, prov = out
    else:
        payload, prov = out, None
    rec = _record(args, payload, prov, t0)
    text = emit_result(rec, args.format, args.out)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def main():
    sys.exit(command_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
