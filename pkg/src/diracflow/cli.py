"""diracflow command line.

Exit codes: 0 all checks pass, 1 invariant or flow failure, 2 usage/input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import svg
from .circle import (
    CircleInstabilityError,
    circle_flow,
    circle_init,
    circle_to_csv,
    interior_asymptote_error,
)
from .cohomology import betti_numbers
from .complex import (
    GraphFormatError,
    SimplicialComplex,
    build_clique_complex,
    clique_polynomial,
    euler_characteristic,
    generate_erdos_renyi,
    load_graph,
)
from .flow import FlowConfig, inflation_profile, run_bidirectional, run_flow, trajectory_to_csv
from .operators import dirac, exterior_derivative, matrix_to_csv, matrix_to_json, parity
from .spectral import eigen_hermitian, pseudo_determinant, zeta_table_csv
from .verification import load_tolerances, verify_trajectory

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    source: dict
    config: dict = field(default_factory=dict)
    output_dir: str = ""
    artifacts: list[str] = field(default_factory=list)

    def write(self, out: Path) -> None:
        self.artifacts = sorted(set(self.artifacts) | {"manifest.json"})
        payload = {
            "command": self.command,
            "source": self.source,
            "config": self.config,
            "output_dir": self.output_dir,
            "artifacts": self.artifacts,
        }
        (out / "manifest.json").write_text(json.dumps(payload, indent=2) + "\n")


class _Out:
    def __init__(self, path: str | None, manifest: RunManifest):
        self.dir = Path(path) if path else None
        self.manifest = manifest
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)
            manifest.output_dir = str(path)

    def write(self, name: str, text: str) -> None:
        if self.dir is None:
            return
        target = self.dir / name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
        self.manifest.artifacts.append(name)

    def close(self) -> None:
        if self.dir is not None:
            self.manifest.write(self.dir)


# -- input --------------------------------------------------------------------


def _parse_generate(tokens: list[str]) -> dict:
    params = {"n": None, "p": None, "seed": 0}
    for tok in tokens:
        if "=" not in tok:
            raise UsageError(f"--generate expects key=value tokens, got {tok!r}")
        k, v = tok.split("=", 1)
        if k not in params:
            raise UsageError(f"unknown --generate key {k!r}")
        params[k] = float(v) if k == "p" else int(v)
    if params["n"] is None or params["p"] is None:
        raise UsageError("--generate needs n=... and p=...")
    return params


def _load_input(args) -> tuple[SimplicialComplex, dict]:
    try:
        if args.generate:
            params = _parse_generate(args.generate)
            g = generate_erdos_renyi(params["n"], params["p"], params["seed"])
            source = {"generator": "erdos_renyi_pcg64", **params}
        elif args.input:
            obj = load_graph(args.input)
            source = {"path": str(args.input)}
            if isinstance(obj, SimplicialComplex):
                return obj, source
            g = obj
        else:
            raise UsageError("give an input file or --generate n=.. p=.. seed=..")
    except (GraphFormatError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    max_dim = getattr(args, "max_dim", None)
    return build_clique_complex(g, max_dim), source


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", nargs="?", help="edge list (u v per line) or JSON graph")
    p.add_argument("--generate", nargs="+", metavar="KEY=VALUE", help="Erdos-Renyi: n=20 p=0.45 seed=7")
    p.add_argument("--max-dim", type=int, default=None, help="truncate the clique complex")
    p.add_argument("--out", default=None, help="output directory")


def _add_flow(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--t-end", type=float, default=20.0)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--drift-tol", type=float, default=1e-6)
    p.add_argument("--method", choices=("rk4-blocks", "rk4-full"), default="rk4-blocks")


def _flow_config(args, snapshot_times=None, snapshot_every=0.05) -> FlowConfig:
    try:
        return FlowConfig(
            beta=args.beta,
            t_end=args.t_end,
            dt=args.dt,
            snapshot_times=snapshot_times,
            snapshot_every=snapshot_every,
            drift_tol=args.drift_tol,
            method=args.method,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _operators(c: SimplicialComplex):
    d = exterior_derivative(c)
    return d, dirac(d), np.diag(parity(c).entries).real


# -- commands -----------------------------------------------------------------


def cmd_complex(args) -> int:
    c, source = _load_input(args)
    manifest = RunManifest("complex", source, {"max_dim": args.max_dim})
    out = _Out(args.out, manifest)
    betti = betti_numbers(exterior_derivative(c)) if c.total_dim else None
    summary = {
        "f_vector": list(c.f_vector),
        "total_dim": c.total_dim,
        "euler_characteristic": euler_characteristic(c),
        "clique_polynomial": clique_polynomial(c),
        "betti": list(betti.betti) if betti else [],
    }
    print(f"f-vector: {tuple(c.f_vector)}")
    print(f"chi: {summary['euler_characteristic']}")
    print("clique polynomial: " + " + ".join(f"{a}t^{k}" if k else str(a) for k, a in enumerate(c.f_vector)))
    print(f"betti: {tuple(summary['betti'])}")
    out.write("complex.json", json.dumps(summary, indent=2) + "\n")
    out.close()
    return EXIT_OK


def _snapshot_times(text: str, t_end: float) -> tuple[float, ...]:
    try:
        if "," in text or "." in text:
            ts = sorted({float(x) for x in text.split(",") if x.strip()} | {0.0})
        else:
            n = int(text)
            if n < 0:
                raise ValueError
            ts = [0.0] + [t_end * (i + 1) / n for i in range(n)] if n else [0.0]
    except ValueError:
        raise UsageError(f"bad --snapshots value {text!r}") from None
    return tuple(t for t in ts if t <= t_end)


def cmd_flow(args) -> int:
    c, source = _load_input(args)
    _, D0, pdiag = _operators(c)
    times = _snapshot_times(args.snapshots, args.t_end)
    heat_times = ()
    if times != (0.0,):
        heat_times = tuple(t for t in _snapshot_times(args.heatmap_times, args.t_end))
        times = tuple(sorted(set(times) | set(heat_times)))
    cfg = _flow_config(args, snapshot_times=times)
    manifest = RunManifest("flow", source, cfg.to_dict())
    out = _Out(args.out, manifest)
    traj = run_flow(D0, cfg, pdiag)

    out.write("trajectory.csv", trajectory_to_csv(traj, include_final=times != (0.0,)))
    s = traj.series
    rows = ["t,tr_M,d_dt_tr_M,tr_b2,str_U_re,str_U_im"]
    for i in range(len(s["t"])):
        rows.append(",".join(format(float(x), ".17g") for x in (
            s["t"][i], s["tr_M"][i], -s["d_dt_tr_b2"][i], s["tr_b2"][i], s["str_U"][i].real, s["str_U"][i].imag)))
    out.write("series.csv", "\n".join(rows) + "\n")
    t, trM, dtrM = inflation_profile(traj, dense=True)
    out.write("tr_M.svg", svg.line_plot(t, {"tr M(t)": trM}, title="tr M(t)"))
    out.write("d_dt_tr_M.svg", svg.line_plot(t, {"d/dt tr M(t)": dtrM}, title="d/dt tr M(t)"))
    for st in traj.snapshots:
        tag = f"t{st.t:.4f}"
        D = st.D.entries
        out.write(f"snapshots/D_{tag}.csv", matrix_to_csv(D))
        out.write(f"snapshots/D_{tag}.json", matrix_to_json(st.D))
        out.write(f"snapshots/U_{tag}.csv", matrix_to_csv(st.U))
        if any(abs(st.t - h) < 1e-9 for h in heat_times) or times == (0.0,):
            out.write(f"heatmaps/ReD_{tag}.svg", svg.heatmap(D.real, f"Re D(t={st.t:.3g})"))
            out.write(f"heatmaps/ImD_{tag}.svg", svg.heatmap(D.imag, f"Im D(t={st.t:.3g})"))
            out.write(f"heatmaps/ReU_{tag}.svg", svg.heatmap(st.U.real, f"Re U(t={st.t:.3g})"))
    out.close()
    fin = traj.final
    print(f"reason: {traj.reason} at t={fin.t:.6g}")
    print(f"tr M = {fin.diagnostics.tr_M:.6e}, tr b^2 = {fin.diagnostics.tr_b2:.10g}")
    print(f"spectral drift = {fin.diagnostics.spectral_drift:.3e}, L drift = {fin.diagnostics.laplacian_drift:.3e}")
    if traj.reason == "drift_abort":
        print("flow aborted: Laplacian drift exceeded drift_tol", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_verify(args) -> int:
    c, source = _load_input(args)
    _, D0, pdiag = _operators(c)
    cfg = _flow_config(args, snapshot_every=args.snapshot_every)
    try:
        tol = load_tolerances(args.tolerances)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"tolerance table: {exc}") from None
    manifest = RunManifest("verify", source, {**cfg.to_dict(), "beta_pair": args.beta_pair})
    out = _Out(args.out, manifest)
    fwd, bwd = run_bidirectional(D0, cfg, pdiag)
    paired = None
    if args.beta_pair:
        other = 1.0 if args.beta == 0 else 0.0
        paired = run_flow(D0, _flow_config(argparse.Namespace(**{**vars(args), "beta": other}),
                                           snapshot_every=args.snapshot_every), pdiag)
    meta = {"source": source}
    report = verify_trajectory(fwd, c, backward=bwd, paired=paired, tolerances=tol, meta=meta)
    out.write("report.json", report.to_json() + "\n")
    out.write("trajectory.csv", trajectory_to_csv(fwd))
    out.close()
    for line in report.summary_lines():
        print(line)
    print(f"overall: {'pass' if report.overall else 'fail'} (reason: {fwd.reason})")
    return EXIT_OK if report.overall else EXIT_FAIL


def cmd_zeta(args) -> int:
    c, source = _load_input(args)
    _, D0, _ = _operators(c)
    try:
        s_values = [complex(x.replace(" ", "")) for x in args.s.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"cannot parse --s {args.s!r}") from None
    spec = eigen_hermitian(D0, vectors=False)
    manifest = RunManifest("zeta", source, {"s": [str(s) for s in s_values]})
    out = _Out(args.out, manifest)
    table = zeta_table_csv(spec, s_values)
    pd = pseudo_determinant(spec)
    print(table, end="")
    print(f"pseudo-determinant (signed product): {pd.signed:.17g}")
    print(f"pseudo-determinant exp(-zeta'(0)): {pd.zeta_based.real:.17g}{pd.zeta_based.imag:+.17g}j")
    out.write("zeta.csv", table)
    out.write("pseudo_determinant.json", json.dumps(
        {"signed": pd.signed, "zeta_based": [pd.zeta_based.real, pd.zeta_based.imag]}, indent=2) + "\n")
    out.close()
    return EXIT_OK


def cmd_circle(args) -> int:
    if args.n_max < 1:
        raise UsageError("--n-max must be at least 1")
    manifest = RunManifest("circle", {"n_max": args.n_max}, {"t_end": args.t_end, "dt": args.dt})
    out = _Out(args.out, manifest)
    try:
        traj = circle_flow(circle_init(args.n_max), args.t_end, args.dt, converge_rtol=1e-6)
    except CircleInstabilityError as exc:
        print(f"instability: {exc}", file=sys.stderr)
        out.close()
        return EXIT_FAIL
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    fin = traj.final
    b_err, bc_err = interior_asymptote_error(fin)
    a_max = float(np.abs(fin.A).max())
    report = {
        "conserved_AC_plus_BA_drift": traj.conserved_drift,
        "block_laplacian_drift": traj.laplacian_drift,
        "interior_B_error": b_err,
        "interior_B_plus_C": bc_err,
        "A_max": a_max,
        "converged": traj.converged,
        "final_t": traj.times[-1],
    }
    checks = {
        "conserved": traj.conserved_drift < 1e-8,
        "laplacian": traj.laplacian_drift < 1e-7,
        "asymptote": (b_err < 1e-3 and bc_err < 1e-3 and a_max < 1e-2) if traj.converged else True,
    }
    report["checks"] = checks
    out.write("circle.csv", circle_to_csv(traj))
    out.write("circle_report.json", json.dumps(report, indent=2) + "\n")
    out.close()
    for k, v in report.items():
        print(f"{k}: {v}")
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diracflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complex", help="f-vector, Euler characteristic, clique polynomial")
    _add_input(p)
    p.set_defaults(func=cmd_complex)

    p = sub.add_parser("flow", help="integrate D' = [B, D] and write trajectory files")
    _add_input(p)
    _add_flow(p)
    p.add_argument("--snapshots", default="20", help="count N (uniform) or comma list of times; 0 = only t=0")
    p.add_argument("--heatmap-times", default="0,0.2,1")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("verify", help="run all invariant checks, write report.json")
    _add_input(p)
    _add_flow(p)
    p.add_argument("--beta-pair", action="store_true", help="also run the other beta and compare b(t)")
    p.add_argument("--snapshot-every", type=float, default=0.05)
    p.add_argument("--tolerances", default=None, help="JSON tolerance overrides")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("zeta", help="Dirac zeta values and pseudo-determinants")
    _add_input(p)
    p.add_argument("--s", default="-2,-1,1,2")
    p.set_defaults(func=cmd_zeta)

    p = sub.add_parser("circle", help="truncated circle block system")
    p.add_argument("--n-max", type=int, default=3)
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_circle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
