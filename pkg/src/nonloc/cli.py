"""``nonloc`` command line front end.

Exit codes: 0 success, 2 input error, 3 cap exceeded, 4 certification FAIL.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from . import dense, jsonio
from .certifier import certify_graph, certify_smolin, chained_bound, chained_sweep, smolin_single_copy_control
from .epr2 import check_dual_certificate, cut_scan, local_fraction, svetlichny_decomposition
from .errors import CapExceeded, InputError, NonlocError
from .fixtures import FIXTURE_DIR, write_fixtures
from .polytopes import LOCAL_CAP
from .scenario import DEFAULT_EPS, FLOAT, RATIONAL, Behavior, behavior_from_json, behavior_to_json, validate

EXIT_OK, EXIT_INPUT, EXIT_CAP, EXIT_FAIL = 0, 2, 3, 4


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _behavior(args):
    b = behavior_from_json(jsonio.load(args.input, jsonio.BEHAVIOR_SCHEMA))
    if args.eps != DEFAULT_EPS:
        b = Behavior(b.scenario, b.table, b.mode, args.eps)
    return b


def _with_seed(doc: dict, args) -> dict:
    if args.seed is not None:
        doc["seed"] = args.seed
    return doc


def cmd_validate(args) -> int:
    rep = validate(_behavior(args))
    _emit(jsonio.dumps(_with_seed(rep.to_json(), args)), args.out)
    return EXIT_OK if rep.ok else EXIT_INPUT


def cmd_born(args) -> int:
    state = dense.state_from_json(jsonio.load(args.state, jsonio.STATE_SCHEMA))
    meas = dense.measurement_from_json(jsonio.load(args.measurement, jsonio.MEASUREMENT_SCHEMA))
    b = dense.born_table(state, meas, args.eps)
    _emit(jsonio.dumps(_with_seed(behavior_to_json(b), args)), args.out)
    return EXIT_OK


def cmd_local_fraction(args) -> int:
    r = local_fraction(_behavior(args), args.mode, args.vertex_cap)
    doc = r.to_json()
    doc["dual_verified"] = check_dual_certificate(r)
    _emit(jsonio.dumps(_with_seed(doc, args)), args.out)
    if args.out:
        Path(args.out).with_suffix(".dual.json").write_text(jsonio.dumps(doc["dual"]))
    return EXIT_OK


def cmd_cut_scan(args) -> int:
    results = cut_scan(_behavior(args), args.mode)
    doc = {"cuts": {label: r.to_json() for label, r in results.items()},
           "values": {label: r.to_json()["values"]["p_L_cut"] for label, r in results.items()}}
    _emit(jsonio.dumps(_with_seed(doc, args)), args.out)
    return EXIT_OK


def cmd_svetlichny(args) -> int:
    r = svetlichny_decomposition(_behavior(args), args.mode, args.vertex_cap)
    doc = r.to_json()
    doc["dual_verified"] = check_dual_certificate(r)
    _emit(jsonio.dumps(_with_seed(doc, args)), args.out)
    return EXIT_OK


def cmd_certify_graph(args) -> int:
    cert = certify_graph(args.m)
    _emit(jsonio.dumps(_with_seed(cert.to_json(), args)), args.out)
    return EXIT_OK if cert.passed else EXIT_FAIL


def cmd_certify_smolin(args) -> int:
    proto = jsonio.load(args.protocol, jsonio.SMOLIN_PROTOCOL_SCHEMA) if args.protocol else None
    cert = certify_smolin(proto)
    control = smolin_single_copy_control()
    doc = cert.to_json()
    doc["negative_control"] = control.to_json()
    _emit(jsonio.dumps(_with_seed(doc, args)), args.out)
    return EXIT_OK if cert.passed and not control.passed else EXIT_FAIL


def cmd_chained_sweep(args) -> int:
    if args.n_max < 2:
        raise InputError("--n-max must be at least 2")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "p_L", "closed_form_bound"])
    for n, v in chained_sweep(range(2, args.n_max + 1)):
        w.writerow([n, f"{v:.12f}", f"{chained_bound(n):.12f}"])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_make_fixtures(args) -> int:
    for p in write_fixtures(args.out or FIXTURE_DIR):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=[RATIONAL, FLOAT], default=None,
                        help="arithmetic (default: that of the input behavior)")
    common.add_argument("--eps", type=float, default=DEFAULT_EPS, help="float-mode tolerance")
    common.add_argument("--vertex-cap", type=int, default=LOCAL_CAP, help="largest local vertex set to build")
    common.add_argument("--out", help="output path (stdout when omitted)")
    common.add_argument("--seed", type=int, default=None, help="recorded in artifacts for reproducibility")

    p = argparse.ArgumentParser(prog="nonloc", description="Local-fraction LPs and full-nonlocality certificates.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(fn=fn)
        return sp

    add("validate", cmd_validate, "check nonnegativity, normalization and no-signaling").add_argument("input")
    sp = add("born", cmd_born, "behavior of a dense state under a measurement family")
    sp.add_argument("state")
    sp.add_argument("measurement")
    add("local-fraction", cmd_local_fraction, "maximal local weight with dual certificate").add_argument("input")
    add("cut-scan", cmd_cut_scan, "local fraction across every bipartition").add_argument("input")
    add("svetlichny", cmd_svetlichny, "tripartite local / hybrid / genuine split").add_argument("input")
    add("certify-graph", cmd_certify_graph, "certify the complete graph state K_m").add_argument(
        "--m", type=int, required=True)
    add("certify-smolin", cmd_certify_smolin, "certify five Smolin copies").add_argument(
        "--protocol", help="protocol file (default: built-in)")
    add("chained-sweep", cmd_chained_sweep, "singlet local fraction for chained settings").add_argument(
        "--n-max", type=int, required=True)
    add("make-fixtures", cmd_make_fixtures, "regenerate the shipped demo inputs")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CapExceeded as exc:
        print(f"nonloc: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except NonlocError as exc:
        print(f"nonloc: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
