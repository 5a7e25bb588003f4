"""Command-line front end.

Each run resolves its parameters (flags beat the TOML config, which beats
defaults), writes a JSON manifest keyed by a deterministic run id, executes
one mapped operation, writes CSV tables whose rows carry the run id, and
finalizes the manifest with output digests. Exit codes: 0 success, 1 usage
error, 2 validation or invariant failure.
"""

import argparse
import csv
import datetime
import hashlib
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import __version__
from . import exact
from . import experiments
from . import observable
from . import sampler
from .errors import RCMError, ValidationError
from .exact import EventSpec, ModelParams, self_dual_point
from .lattice import (BoundarySpec, Domain, build_box, build_rect,
                      build_slit_box, build_strip_rect,
                      build_universal_cover_box)

USAGE_EXIT = 1
FAILURE_EXIT = 2

COMMANDS = ("exact", "sample", "observable", "contour", "phi-scan",
            "crossing", "strip", "cover-decay", "pc-scan", "verify")

_DEFAULTS = {
    "q": 2.0,
    "p": "sd",
    "n": 1,
    "m": 1,
    "bc": None,
    "seed": 0,
    "budget": 20000,
    "jobs": 1,
    "out": "runs",
    "mode": "exact",
    "method": "heat_bath",
    "side": "wired",
    "domain": None,
    "aspect": 1.0,
    "m_trunc": None,
    "k": None,
    "R": 2,
    "n_list": "4,6,8",
    "sizes": "8,16,32",
    "p_grid": None,
    "max_size": 8,
    "n_random": 200,
    "suite": "core",
    "check_tol": 1e-9,
}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage problems; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("error: %s\n" % message)
        raise SystemExit(USAGE_EXIT)


def _build_parser() -> _Parser:
    top = _Parser(prog="rcmlab", description=__doc__)
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command")

    def add(name, help_text, flags):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--out", help="output directory (default runs)")
        for flag, kw in flags:
            p.add_argument(flag, **kw)
        return p

    num = {"type": float}
    integer = {"type": int}
    common = [("--q", num), ("--p", {}), ("--seed", integer),
              ("--budget", integer), ("--jobs", integer)]
    dom = [("--domain", {}), ("--bc", {}), ("--n", integer),
           ("--m", integer)]
    add("exact", "enumerate a domain: weights and reference events",
        common + dom)
    add("sample", "Monte Carlo estimate of the reference events",
        common + dom + [("--method", {"choices": ["heat_bath", "cluster"]})])
    add("observable", "edge observable field on an interface domain",
        common + dom)
    add("contour", "contour sums of the observable; checks vanishing at sd",
        common + dom + [("--check-tol", {"type": float,
                                         "dest": "check_tol"})])
    add("phi-scan", "minimum boundary connection sum against the constant",
        common + [("--n", integer), ("--max-size", {"type": int,
                                                    "dest": "max_size"}),
                  ("--n-random", {"type": int, "dest": "n_random"})])
    add("crossing", "box crossing probability in the truncated strip",
        common + dom + [("--aspect", num),
                        ("--m-trunc", {"type": int, "dest": "m_trunc"}),
                        ("--mode", {"choices": ["exact", "mc"]})])
    add("strip", "minus-plus crossing, dual interface, boundary sum",
        common + [("--n", integer), ("--m", integer),
                  ("--mode", {"choices": ["exact", "mc"]}),
                  ("--side", {"choices": ["wired", "free"]})])
    add("cover-decay", "origin-to-inner-border decay on cover boxes",
        common + [("--k", integer), ("--R", integer), ("--n-list", {
            "dest": "n_list"})])
    add("pc-scan", "crossing curves over a parameter grid",
        common + [("--sizes", {}), ("--p-grid", {"dest": "p_grid"}),
                  ("--method", {"choices": ["heat_bath", "cluster"]})])
    add("verify", "run the invariant suites",
        [("--suite", {"choices": ["core", "full"]}), ("--q", num),
         ("--seed", integer)])
    return top


def _load_config(path, command):
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as err:
        raise ValidationError("cannot read config %s: %s" % (path, err))
    merged = {k: v for k, v in data.items() if not isinstance(v, dict)}
    merged.update(data.get(command, {}))
    return {k.replace("-", "_"): v for k, v in merged.items()}


def _resolve(args, command):
    """flags > config > defaults, under argparse's flag name spelling."""
    cfg = _load_config(getattr(args, "config", None), command)
    out = {}
    for key, default in _DEFAULTS.items():
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            out[key] = flag_val
        elif key in cfg:
            out[key] = cfg[key]
        else:
            out[key] = default
    return out


def _resolve_p(p, q) -> float:
    if isinstance(p, str):
        if p == "sd":
            return self_dual_point(q)
        p = float(p)
    if not 0 < p < 1:
        raise ValidationError("p must lie in (0, 1) or be 'sd'")
    return float(p)


def _parse_bc(text):
    if text is None or text == "free":
        return BoundarySpec.free()
    if text == "wired":
        return BoundarySpec.wired()
    if text.startswith("dobrushin:"):
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(
                "dobrushin bc spelled dobrushin:x,y:x,y")
        a = tuple(int(t) for t in parts[1].split(","))
        b = tuple(int(t) for t in parts[2].split(","))
        return BoundarySpec.dobrushin(a, b)
    raise ValidationError("bc must be free, wired, or dobrushin:x,y:x,y")


def _build_domain(opts, command):
    """Domain named by --domain (box<n>, slit<n>, strip<n>x<m>, rect<w>x<h>,
    cover<n>k<k>), defaulting to box<n>. Interface commands default to the
    domain's standard marked pair when --bc is absent."""
    name = opts["domain"] or ("box%d" % opts["n"])
    interface = command in ("observable", "contour")
    bc_text = opts["bc"]
    if name.startswith("box"):
        n = int(name[3:])
        graph = build_box(n)
        default_bc = (BoundarySpec.dobrushin((0, n), (0, -n)) if interface
                      else BoundarySpec.free())
    elif name.startswith("slit"):
        n = int(name[4:])
        graph = build_slit_box(n)
        default_bc = (BoundarySpec.dobrushin((0, 0), (0, 0)) if interface
                      else BoundarySpec.free())
    elif name.startswith("strip"):
        n, m = (int(t) for t in name[5:].split("x"))
        graph = build_strip_rect(n, m)
        default_bc = (BoundarySpec.dobrushin((0, n), (0, 0)) if interface
                      else BoundarySpec.wired())
    elif name.startswith("rect"):
        w, h = (int(t) for t in name[4:].split("x"))
        graph = build_rect(0, w, 0, h - 1)
        default_bc = BoundarySpec.free()
    elif name.startswith("cover"):
        n, k = (int(t) for t in name[5:].split("k"))
        graph = build_universal_cover_box(n, k)
        default_bc = BoundarySpec.free()
    else:
        raise ValidationError("unknown domain %r" % name)
    bc = default_bc if bc_text is None else _parse_bc(bc_text)
    return Domain(graph, bc)


def _reference_events(domain):
    """Reference events for the exact/sample commands: first edge open,
    first vertex joined to the last, first vertex joined to the boundary."""
    g = domain.graph
    events = [("edge0_open", EventSpec.edge_open(0)),
              ("ends_joined", EventSpec.connection(0, g.n_vertices - 1))]
    bdry = sorted(g.boundary)
    if bdry:
        events.append(("v0_to_boundary",
                       EventSpec.connection_to_set(0, bdry)))
    return events


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


class RunManifest:
    """JSON sidecar written before the run and finalized after it.

    The run id hashes only what determines the results (command, model
    parameters, seeds, version), so reruns regenerate identical files and
    execution details like --jobs or --out never fork the identity.
    """

    def __init__(self, command, params, seeds, out_dir, execution=None):
        payload = {"command": command, "params": params, "seeds": seeds,
                   "version": __version__}
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        self.run_id = hashlib.sha256(blob.encode()).hexdigest()[:12]
        self.data = dict(payload, run_id=self.run_id, started=_now(),
                         status="running", outputs={},
                         execution=execution or {})
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.path = self.dir / ("manifest-%s.json" % self.run_id)
        self._flush()

    def _flush(self):
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True)
                             + "\n")

    def write_csv(self, stem, header, rows) -> Path:
        path = self.dir / ("%s-%s.csv" % (stem, self.run_id))
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("run_id",) + tuple(header))
            for row in rows:
                writer.writerow((self.run_id,) + tuple(_fmt(v) for v in row))
        self.data["outputs"][path.name] = _digest(path)
        return path

    def finish(self, status="done"):
        self.data["status"] = status
        self.data["finished"] = _now()
        self._flush()


def _cmd_exact(opts):
    domain = _build_domain(opts, "exact")
    params = ModelParams(p=_resolve_p(opts["p"], opts["q"]), q=opts["q"])
    rows = [("partition_function",
             exact.partition_function(domain, params), "")]
    for name, event in _reference_events(domain):
        rows.append((name, exact.event_prob(domain, params, event), ""))
    return [("exact", ("quantity", "value", "stderr"), rows)], 0


def _cmd_sample(opts):
    domain = _build_domain(opts, "sample")
    params = ModelParams(p=_resolve_p(opts["p"], opts["q"]), q=opts["q"])
    named = _reference_events(domain)
    ests = sampler.estimate_events(domain, params, [e for _, e in named],
                                   seed=opts["seed"], budget=opts["budget"],
                                   method=opts["method"])
    rows = [(name, est.mean, est.stderr, est.n_samples, est.n_batches)
            for (name, _), est in zip(named, ests)]
    header = ("quantity", "mean", "stderr", "n_samples", "n_batches")
    return [("sample", header, rows)], 0


def _cmd_observable(opts):
    domain = _build_domain(opts, "observable")
    p = _resolve_p(opts["p"], opts["q"])
    field = observable.observable_field(domain, opts["q"], p)
    rows = [(json.dumps(seg), val.real, val.imag, abs(val))
            for seg, val in sorted(field.items())]
    header = ("medial_edge", "re", "im", "modulus")
    return [("observable", header, rows)], 0


def _cmd_contour(opts):
    domain = _build_domain(opts, "contour")
    p = _resolve_p(opts["p"], opts["q"])
    report = observable.contour_report(domain, opts["q"], p)
    rows = [(json.dumps(r["vertex"]), r["sum_re"], r["sum_im"],
             r["modulus"]) for r in report["contours"]]
    rows.append(("max", "", "", report["max_modulus"]))
    code = 0
    if report["at_self_dual_point"] and \
            report["max_modulus"] > opts["check_tol"]:
        code = FAILURE_EXIT
    return [("contour", ("contour", "re", "im", "modulus"), rows)], code


def _cmd_phi_scan(opts):
    res = experiments.lemma_q3_scan(opts["n"], opts["q"],
                                    max_size=opts["max_size"],
                                    n_random=opts["n_random"],
                                    seed=opts["seed"])
    rows = [(res.q, res.n, res.p, res.c_value, res.min_value,
             json.dumps(sorted(res.argmin)), res.n_sets, res.passed)]
    header = ("q", "n", "p", "c_value", "min_value", "argmin", "n_sets",
              "passed")
    return [("phi-scan", header, rows)], (0 if res.passed else FAILURE_EXIT)


def _cmd_crossing(opts):
    spec = experiments.CrossingSpec(m=opts["m"], n=opts["n"],
                                    C=opts["aspect"],
                                    bc=_parse_bc(opts["bc"] or "wired"))
    params = ModelParams(p=_resolve_p(opts["p"], opts["q"]), q=opts["q"])
    val = experiments.crossing_prob(spec, params, mode=opts["mode"],
                                    seed=opts["seed"],
                                    budget=opts["budget"],
                                    m_trunc=opts["m_trunc"])
    if opts["mode"] == "exact":
        rows = [(opts["m"], opts["n"], opts["aspect"], val, "")]
    else:
        rows = [(opts["m"], opts["n"], opts["aspect"], val.mean,
                 val.stderr)]
    header = ("m", "n", "aspect", "value", "stderr")
    return [("crossing", header, rows)], 0


def _cmd_strip(opts):
    params = ModelParams(p=_resolve_p(opts["p"], opts["q"]), q=opts["q"])
    sc = experiments.strip_dual_crossing(opts["n"], opts["m"], params,
                                         mode=opts["mode"],
                                         seed=opts["seed"],
                                         budget=opts["budget"],
                                         side=opts["side"])
    if opts["mode"] == "exact":
        rows = [("crossing", sc.a_n, ""), ("interface", sc.a_star, "")]
        graph = build_strip_rect(opts["n"], opts["m"])
        if graph.n_edges <= experiments.SWEEP_CAP:
            rows.append(("boundary_sum",
                         experiments.q4_boundary_sum(
                             opts["n"], opts["m"], params,
                             side=opts["side"]), ""))
    else:
        rows = [("crossing", sc.a_n.mean, sc.a_n.stderr),
                ("interface", sc.a_star.mean, sc.a_star.stderr)]
    return [("strip", ("quantity", "value", "stderr"), rows)], 0


def _int_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(t) for t in text)
    return tuple(int(t) for t in str(text).split(","))


def _float_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(t) for t in text)
    return tuple(float(t) for t in str(text).split(","))


def _cmd_cover_decay(opts):
    k = opts["k"]
    if k is None:
        k = experiments.select_k(opts["q"])
    p = None if opts["p"] == "sd" else _resolve_p(opts["p"], opts["q"])
    rows_in = experiments.uk_decay(opts["q"], k, opts["R"],
                                   _int_list(opts["n_list"]),
                                   budget=opts["budget"],
                                   seed=opts["seed"], p=p,
                                   jobs=opts["jobs"])
    rows = [(pt.n, pt.estimate.mean, pt.estimate.stderr,
             pt.estimate.n_samples, pt.estimate.n_batches)
            for pt in rows_in]
    header = ("n", "mean", "stderr", "n_samples", "n_batches")
    return [("cover-decay", header, rows)], 0


def _default_grid(q) -> tuple:
    center = self_dual_point(q)
    return tuple(round(center + step, 6)
                 for step in (-0.03, -0.015, 0.0, 0.015, 0.03))


def _cmd_pc_scan(opts):
    q = opts["q"]
    grid = (_default_grid(q) if opts["p_grid"] is None
            else _float_list(opts["p_grid"]))
    scan = experiments.pc_estimate(q, _int_list(opts["sizes"]), grid,
                                   budget=opts["budget"],
                                   seed=opts["seed"],
                                   method=opts["method"],
                                   jobs=opts["jobs"])
    curve_rows = [(nsz, p, est.mean, est.stderr, est.n_samples)
                  for nsz in scan.sizes for p, est in scan.curves[nsz]]
    cross_rows = [(a, b, "" if x is None else x)
                  for (a, b), x in sorted(scan.intersections.items())]
    cross_rows.append(("spread", "",
                       "" if scan.spread is None else scan.spread))
    return [("pc-curves", ("size", "p", "mean", "stderr", "n_samples"),
             curve_rows),
            ("pc-intersections", ("size_a", "size_b", "p_cross"),
             cross_rows)], 0


def _verify_checks(suite, q, seed):
    """Invariant suite: (name, callable -> bool) pairs, each cheap."""
    p_sd = self_dual_point(q)

    def golden():
        from .lattice import Graph
        g = Graph([(0, 0), (1, 0)], [(0, 1)], [0, 1])
        d = Domain(g, BoundarySpec.free())
        pr = ModelParams(p=0.5, q=2.0)
        z = exact.partition_function(d, pr)
        pe = exact.event_prob(d, pr, EventSpec.edge_open(0))
        return abs(z - 3.0) < 1e-12 and abs(pe - 1 / 3) < 1e-12

    def duality():
        from .dual import dual_graph
        d = Domain(build_box(1), BoundarySpec.free())
        dg = dual_graph(d)
        pr = ModelParams(p=p_sd, q=q)
        dual_pr = pr.with_p(exact.dual_parameter(pr.p, pr.q))
        for mask in range(0, 1 << 12, 7):
            lhs = exact.prob(d, pr, mask)
            rhs = exact.prob(dg.domain, dual_pr,
                             exact.dualize_config(dg, mask))
            if abs(lhs - rhs) > 1e-10:
                return False
        return True

    def contours():
        d = Domain(build_slit_box(1),
                   BoundarySpec.dobrushin((0, 0), (0, 0)))
        rep = observable.contour_report(d, q)
        return rep["max_modulus"] <= 1e-9

    def fkg():
        d = Domain(build_box(1), BoundarySpec.free())
        pr = ModelParams(p=p_sd, q=q)
        a = EventSpec.connection((0, 0), (1, 1))
        b = EventSpec.connection((-1, 0), (0, 1))
        return exact.check_fkg(d, pr, a, b)[2]

    def interface():
        pr = ModelParams(p=p_sd, q=q)
        sc = experiments.strip_dual_crossing(1, 1, pr)
        g = build_strip_rect(1, 1)
        for mask in range(1 << g.n_edges):
            path = experiments.leftmost_dual_path(1, 1, mask)
            minus, plus = experiments._strip_sides(g, 1)
            crossed = bool(experiments._open_reach(g.adj, mask, minus)
                           & plus)
            if crossed == (path is not None):
                return False
        return abs(sc.a_n + sc.a_star - 1.0) < 1e-12

    def crossing_duality():
        pr = ModelParams(p=p_sd, q=q)
        return experiments.crossing_duality_gap(2, pr) < 1e-10

    def sampler_stationary():
        from .lattice import Graph
        g = Graph([(0, 0), (1, 0), (2, 0)], [(0, 1), (1, 2)], [0, 2])
        d = Domain(g, BoundarySpec.wired())
        pr = ModelParams(p=0.4, q=2.5)
        import numpy as np
        t = sampler.exact_sweep_matrix(d, pr)
        w = exact.config_weights(d, pr)
        pi = w / w.sum()
        return float(np.abs(pi @ t - pi).max()) < 1e-10

    checks = [("golden_values", golden), ("config_duality", duality),
              ("contour_vanishing", contours), ("fkg_pairs", fkg),
              ("strip_interface", interface),
              ("crossing_duality", crossing_duality),
              ("sweep_stationarity", sampler_stationary)]
    if suite == "full":
        def scan():
            return experiments.lemma_q3_scan(1, min(q, 3.0)).passed

        def mc_agreement():
            from .lattice import Graph
            g = Graph([(0, 0), (1, 0), (2, 0)], [(0, 1), (1, 2)], [0, 2])
            d = Domain(g, BoundarySpec.free())
            pr = ModelParams(p=0.5, q=2.0)
            ev = EventSpec.connection(0, 2)
            est = sampler.estimate_event(d, pr, ev, seed=seed,
                                         budget=40000)
            return abs(est.mean - 1 / 9) < 4 * max(est.stderr, 1e-6)

        checks += [("phi_scan_small", scan), ("mc_agreement", mc_agreement)]
    return checks


def _cmd_verify(opts):
    rows = []
    ok = True
    for name, fn in _verify_checks(opts["suite"], opts["q"], opts["seed"]):
        passed = bool(fn())
        ok = ok and passed
        rows.append((name, passed))
    return ([("verify", ("check", "passed"), rows)],
            0 if ok else FAILURE_EXIT)


_HANDLERS = {
    "exact": _cmd_exact,
    "sample": _cmd_sample,
    "observable": _cmd_observable,
    "contour": _cmd_contour,
    "phi-scan": _cmd_phi_scan,
    "crossing": _cmd_crossing,
    "strip": _cmd_strip,
    "cover-decay": _cmd_cover_decay,
    "pc-scan": _cmd_pc_scan,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return USAGE_EXIT
    try:
        opts = _resolve(args, args.command)
        skip = ("seed", "jobs", "out")
        manifest = RunManifest(
            args.command,
            {k: v for k, v in sorted(opts.items()) if k not in skip},
            [opts["seed"]], opts["out"],
            execution={"jobs": opts["jobs"], "out": opts["out"]})
        try:
            tables, code = _HANDLERS[args.command](opts)
            for stem, header, rows in tables:
                path = manifest.write_csv(stem, header, rows)
                print(path)
            manifest.finish("done" if code == 0 else "failed")
        except Exception:
            manifest.finish("error")
            raise
        return code
    except RCMError as err:
        sys.stderr.write("error: %s\n" % err)
        return FAILURE_EXIT


if __name__ == "__main__":
    raise SystemExit(main())
