"""Command-line front end.

Exit codes: 0 success, 2 invalid input or model, 3 no good-deal-free (or
arbitrage-free) price exists, 4 numerical failure, 64 usage error.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__
from . import io as cio
from .errors import ModelError, NgdViolation, NumericalError, StructuralError
from .gaussian import (GaussianMarket, gaussian_hedges, gaussian_na_interval,
                       gaussian_ngd_interval)
from .geometry import Generator, allocate, contribution, generator_polygon, polygon_csv
from .hedging import ContinuousClaimSpec, Payoff, tail_closed_form, superhedge
from .markets import check_containment, na_interval, ngd_interval, raroc_interval
from .scenario import TailVaR, extreme_measure, spec_from_dict, utility
from .txcost import TreeModel, convergence_sweep, geometric_lambdas, txcost_interval

EXIT_OK, EXIT_MODEL, EXIT_NGD, EXIT_NUMERIC, EXIT_USAGE = 0, 2, 3, 4, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


class _Violation(Exception):
    def __init__(self, payload):
        super().__init__(payload.get("violation", "violation"))
        self.payload = payload


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _risk(args, obj, space):
    raw = args.risk if getattr(args, "risk", None) else obj.get("risk")
    if raw is None:
        raise StructuralError("no risk specification given (use --risk or a 'risk' field)")
    spec = raw if isinstance(raw, dict) else cio.load_json(raw)
    return spec_from_dict(spec, space)


def _pnl_field(obj, space, *names):
    for name in names:
        if name in obj:
            return space.pnl(obj[name])
    raise StructuralError(f"the model needs one of the fields {', '.join(names)}")


def _interval_payload(iv, kind="ngd"):
    if iv.empty:
        cert = iv.certificate
        payload = {"violation": kind}
        if hasattr(cert, "to_dict"):
            payload.update(cert.to_dict())
        elif isinstance(cert, dict):
            payload.update(cert)
        elif hasattr(cert, "y_eq"):
            payload.update({"y_eq": cert.y_eq, "w_ub": cert.w_ub, "value": cert.value})
        elif cert is not None:
            payload["strategy"] = np.asarray(cert)
        raise _Violation(payload)
    return cio.interval_to_dict(iv)


def _csv(result):
    lines = ["key,value"]
    for key in sorted(result):
        val = result[key]
        if isinstance(val, list):
            val = ";".join("|".join(str(t) for t in v) if isinstance(v, list) else str(v) for v in val)
        lines.append(f"{key},{val}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_risk(args):
    obj = cio.load_json(args.model)
    space = cio.space_from_dict(obj)
    spec = _risk(args, obj, space)
    x = _pnl_field(obj, space, "x", "payoff")
    u = utility(spec, x)
    return {"risk": -u, "utility": u}


def cmd_extreme(args):
    obj = cio.load_json(args.model)
    space = cio.space_from_dict(obj)
    spec = _risk(args, obj, space)
    res = extreme_measure(spec, _pnl_field(obj, space, "x", "payoff"))
    return {"utility": res.utility, "density": res.density.z}


def cmd_allocate(args):
    obj = cio.load_json(args.model)
    space = cio.space_from_dict(obj)
    spec = _risk(args, obj, space)
    comps = obj.get("components")
    if not comps:
        raise StructuralError("the model needs a nonempty 'components' field")
    gen = Generator(spec, [space.pnl(c) for c in comps])
    res = allocate(spec, gen)
    if args.polygon_out:
        if gen.d != 2:
            raise StructuralError("--polygon-out needs exactly two components")
        with open(args.polygon_out, "w", encoding="utf-8") as fh:
            fh.write(polygon_csv(generator_polygon(gen)))
    return {"allocation": res.allocation, "total": res.total, "unique": res.unique,
            "witness": res.witness.z,
            "segment": None if res.segment is None else [list(p) for p in res.segment]}


def cmd_contribute(args):
    obj = cio.load_json(args.model)
    space = cio.space_from_dict(obj)
    spec = _risk(args, obj, space)
    uc = contribution(spec, _pnl_field(obj, space, "x"), _pnl_field(obj, space, "y"))
    return {"contribution": uc, "risk_contribution": -uc}


def _market(args):
    obj = cio.load_json(args.model)
    model, payoff = cio.market_from_dict(obj)
    if payoff is None:
        raise StructuralError("the model needs a 'payoff' field")
    return obj, model, payoff


def cmd_price(args):
    obj, model, payoff = _market(args)
    spec = _risk(args, obj, model.space)
    return _interval_payload(ngd_interval(model, spec, payoff))


def cmd_raroc_price(args):
    obj, model, payoff = _market(args)
    if args.R < 0:
        raise ModelError("R must be nonnegative")
    pd = spec_from_dict(cio.load_json(args.pd), model.space) if args.pd else TailVaR(1.0)
    rd_raw = args.rd or args.risk or obj.get("risk")
    if rd_raw is None:
        raise StructuralError("no risk-determining set given (use --rd)")
    rd = spec_from_dict(rd_raw if isinstance(rd_raw, dict) else cio.load_json(rd_raw), model.space)
    if not check_containment(pd, rd, model.space, seed=args.seed):
        raise ModelError("the profit-determining set is not contained in the risk-determining set")
    return _interval_payload(raroc_interval(model, pd, rd, args.R, payoff, check=False))


def cmd_na_price(args):
    _, model, payoff = _market(args)
    return _interval_payload(na_interval(model, payoff), "arbitrage")


def cmd_hedge(args):
    obj, model, payoff = _market(args)
    spec = _risk(args, obj, model.space)
    rep = superhedge(model, spec, payoff, ranges=not args.no_ranges)
    if rep.violated:
        _interval_payload(ngd_interval(model, spec, payoff))
    return rep.to_dict()


def cmd_ex1(args):
    obj = cio.load_json(args.claim)
    try:
        law = obj["lognormal"]
        claim = ContinuousClaimSpec.lognormal(law["meanlog"], law["sdlog"], obj["lambda"],
                                              obj["s0"], Payoff.from_json(obj["payoff"]))
    except KeyError as exc:
        raise StructuralError(f"missing field {exc} in claim") from exc
    return tail_closed_form(claim).to_dict()


def cmd_gaussian(args):
    mkt = GaussianMarket.from_dict(cio.load_json(args.model))
    iv = gaussian_ngd_interval(mkt, args.R)
    out = {"interval": _interval_payload(iv), "na_interval": cio.interval_to_dict(gaussian_na_interval(mkt))}
    out["interval"]["details"] = iv.details
    try:
        sup, sub = gaussian_hedges(mkt, args.R)
        out["hedges"] = {"super_h": sup, "sub_h": sub}
    except ModelError as exc:
        out["hedges"] = None
        out["hedge_note"] = str(exc)
    return out


def _tree(args):
    obj = cio.load_json(args.tree)
    spec = None
    if getattr(args, "risk", None):
        tree = TreeModel.from_dict(obj)
        spec = spec_from_dict(cio.load_json(args.risk), tree.space)
    return TreeModel.from_dict(obj, spec)


def cmd_txcost(args):
    tree = _tree(args)
    iv = txcost_interval(tree, args.lam)
    return _interval_payload(iv, "infeasible")


def _parse_lambdas(text):
    if text.startswith("geometric:"):
        try:
            _, ratio, count = text.split(":")
            return geometric_lambdas(float(ratio), int(count))
        except ValueError as exc:
            raise UsageError(f"bad --lambdas {text!r}; expected geometric:RATIO:COUNT") from exc
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --lambdas {text!r}") from exc


def cmd_sweep(args):
    tree = _tree(args)
    res = convergence_sweep(tree, _parse_lambdas(args.lambdas), workers=args.workers)
    if args.format == "csv":
        return res
    return {"rows": [list(r) for r in res.rows], "frictionless": list(res.frictionless),
            "nested": res.nested}


COMMANDS = {
    "risk": cmd_risk, "extreme": cmd_extreme, "allocate": cmd_allocate,
    "contribute": cmd_contribute, "price": cmd_price, "raroc-price": cmd_raroc_price,
    "na-price": cmd_na_price, "hedge": cmd_hedge, "ex1": cmd_ex1, "gaussian": cmd_gaussian,
    "txcost": cmd_txcost, "sweep": cmd_sweep,
}


def build_parser():
    parser = _Parser(prog="cohdeals", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cohdeals {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_, model=True, risk=True):
        p = sub.add_parser(name, help=help_)
        if model:
            p.add_argument("--model", required=True, help="model JSON file or inline JSON")
        if risk:
            p.add_argument("--risk", help="risk specification JSON (default: model's 'risk')")
        p.add_argument("--out", help="write the result here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--no-header", action="store_true", help="omit the version header line")
        p.add_argument("--seed", type=int, default=0, help="seed for sampled model checks")
        return p

    add("risk", "coherent risk and utility of a P&L")
    add("extreme", "an extreme measure of a P&L")
    add("allocate", "capital allocation between components").add_argument(
        "--polygon-out", help="write the planar generator as CSV vertices")
    add("contribute", "utility contribution of x to y")
    add("price", "good-deal price interval")
    p = add("raroc-price", "RAROC-based price interval")
    p.add_argument("--pd", help="profit-determining set (default: the reference measure)")
    p.add_argument("--rd", help="risk-determining set (default: --risk)")
    p.add_argument("--R", type=float, required=True, help="RAROC limit, R >= 0")
    add("na-price", "no-arbitrage price interval", risk=False)
    add("hedge", "upper/lower prices and hedging strategies").add_argument(
        "--no-ranges", action="store_true", help="skip the one-asset strategy ranges")
    p = add("ex1", "Tail V@R closed form for a convex payoff of a lognormal price",
            model=False, risk=False)
    p.add_argument("--claim", required=True, help="claim JSON file or inline JSON")
    add("gaussian", "closed-form Gaussian pricing and hedging", risk=False).add_argument(
        "--R", type=float, default=None, help="price with the RAROC limit R instead")
    for name, help_ in (("txcost", "price interval under proportional transaction costs"),
                        ("sweep", "convergence of transaction-cost intervals")):
        p = add(name, help_, model=False)
        p.add_argument("--tree", required=True, help="tree JSON file or inline JSON")
        if name == "txcost":
            p.add_argument("--lambda", dest="lam", type=float, default=0.0)
        else:
            p.add_argument("--lambdas", default="geometric:0.5:12",
                           help="geometric:RATIO:COUNT or a comma-separated list")
            p.add_argument("--workers", type=int, default=None)
    return parser


def _emit(args, text):
    header = "" if args.no_header else f"# cohdeals {__version__}\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(header + text)
    else:
        sys.stdout.write(header + text)


def _render(args, result):
    if hasattr(result, "to_csv"):
        return result.to_csv()
    cleaned = cio.clean(result)
    if args.format == "csv":
        return _csv(cleaned)
    return json.dumps(cleaned, sort_keys=True) + "\n"


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        result = COMMANDS[args.command](args)
        _emit(args, _render(args, result))
        return EXIT_OK
    except UsageError:
        return EXIT_USAGE
    except _Violation as exc:
        _emit(args, json.dumps(cio.clean(exc.payload), sort_keys=True) + "\n")
        sys.stderr.write(f"cohdeals: {exc.payload['violation']} condition violated\n")
        return EXIT_NGD
    except NgdViolation as exc:
        payload = {"violation": "ngd"}
        if hasattr(exc.certificate, "to_dict"):
            payload.update(exc.certificate.to_dict())
        _emit(args, json.dumps(cio.clean(payload), sort_keys=True) + "\n")
        return EXIT_NGD
    except (StructuralError, ModelError, OSError) as exc:
        _diagnose(type(exc).__name__, exc)
        return EXIT_MODEL
    except NumericalError as exc:
        _diagnose("NumericalError", exc)
        return EXIT_NUMERIC


def _diagnose(kind, exc):
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc)}) + "\n")


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
