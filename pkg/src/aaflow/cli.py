"""Command-line interface: ``aaflow analyze | flow | verify | example``.

Exit codes: 0 success, 1 verify/example failure, 2 input validation error,
3 integration failure.
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import click
import numpy as np

from .algebra import (
    AlmostAbelianStructure,
    BalancedParams,
    StructureError,
    balanced_check,
    canonical_trivial_check,
    kahler_check,
    params_from_matrix,
    structure_from_json,
)
from .flow import (
    OUTSIDE_HYPOTHESES,
    FlowConfig,
    FlowConfigError,
    run_example,
    slope_f,
    integrate_bracket_flow,
    write_csv,
    write_json,
)
from .hull_strominger import classify
from .verify import FAULTS, run_checks

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_INTEGRATION = 0, 1, 2, 3


def _tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


@dataclass
class RunManifest:
    command: str
    config: dict
    input_digest: str | None = None
    outputs: list[str] = field(default_factory=list)
    tool_version: str = field(default_factory=_tool_version)
    started: float = field(default_factory=time.perf_counter)

    def emit(self, path: Path | None) -> None:
        body = {
            "command": self.command,
            "input_digest": self.input_digest,
            "config": self.config,
            "tool_version": self.tool_version,
            "wall_clock_seconds": round(time.perf_counter() - self.started, 6),
            "outputs": self.outputs,
        }
        if path is None:
            click.echo("manifest: " + json.dumps(body, sort_keys=True), err=True)
        else:
            path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def _manifest_path(explicit: Path | None, out: Path | None) -> Path | None:
    if explicit is not None:
        return explicit
    if out is not None:
        return out.with_name(out.name + ".manifest.json")
    return None


def _load_structure(source: str) -> tuple[AlmostAbelianStructure | BalancedParams, str]:
    raw = sys.stdin.buffer.read() if source == "-" else Path(source).read_bytes()
    digest = "sha256:" + hashlib.sha256(raw).hexdigest()
    try:
        data = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise StructureError(f"input is not valid JSON: {exc}") from exc
    return structure_from_json(data), digest


def _as_balanced(s: AlmostAbelianStructure | BalancedParams) -> BalancedParams | None:
    if isinstance(s, BalancedParams):
        return s
    if balanced_check(s) and canonical_trivial_check(s) and s.a == 0:
        return params_from_matrix(s.A)
    return None


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Invariant Hermitian geometry and the reduced Anomaly flow on almost-abelian Lie algebras."""


@main.command()
@click.argument("source")
@click.option("--tau", type=float, default=-1.0, show_default=True, help="Gauduchon parameter.")
@click.option("--alpha-prime", type=float, default=None, help="Slope used for f and residuals.")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Write the JSON report here.")
@click.option("--manifest", type=click.Path(path_type=Path), default=None)
def analyze(source, tau, alpha_prime, out, manifest):
    """Classify the structure in SOURCE (JSON file, or - for stdin)."""
    run = RunManifest("analyze", {"source": source, "tau": tau, "alpha_prime": alpha_prime})
    try:
        s, run.input_digest = _load_structure(source)
    except (OSError, StructureError) as exc:
        _fail(EXIT_INVALID, str(exc))

    structure = s.structure() if isinstance(s, BalancedParams) else s
    flags = {
        "balanced": balanced_check(structure),
        "trivial_canonical": canonical_trivial_check(structure),
    }
    p = _as_balanced(s)
    report: dict = {"flags": flags}
    if p is not None:
        flags["kahler"] = kahler_check(p)
        hs = classify(p, tau, alpha_prime)
        report["hull_strominger"] = hs.to_json()
        cfg = FlowConfig(tau=tau, alpha_prime=alpha_prime or 0.0)
        report["f_value"] = slope_f(p, cfg)

    for key, val in flags.items():
        click.echo(f"{key:18s} {val}", err=True)
    if p is None:
        click.echo("not a balanced structure with trivial canonical bundle; no classification", err=True)
    else:
        hs_json = report["hull_strominger"]
        slope = hs_json["alpha_prime"]
        label = hs_json["classification"]
        if slope is not None and label == "SolvableWithSlope":
            label += f"({slope:.17g})"
        elif hs_json["reason"]:
            label += f"({hs_json['reason']})"
        click.echo(f"{'K':18s} {hs_json['K']:.17g}", err=True)
        click.echo(f"{'f':18s} {report['f_value']:.17g}", err=True)
        click.echo(f"{'classification':18s} {label}", err=True)
        click.echo(f"{'instanton':18s} {hs_json['instanton_status']}", err=True)

    text = json.dumps(report, indent=2) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write_text(text)
        run.outputs.append(str(out))
    run.emit(_manifest_path(manifest, out))


@main.command()
@click.argument("source")
@click.option("--tau", type=float, default=-1.0, show_default=True)
@click.option("--alpha-prime", type=float, default=0.0, show_default=True)
@click.option("--t-end", type=float, default=10.0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Trajectory file (stdout if omitted).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--rel-tol", type=float, default=1e-9, show_default=True)
@click.option("--abs-tol", type=float, default=1e-12, show_default=True)
@click.option("--max-step", type=float, default=float("inf"))
@click.option("--initial-step", type=float, default=None)
@click.option("--convergence-eps", type=float, default=1e-8, show_default=True)
@click.option("--samples", type=int, default=200, show_default=True)
@click.option("--sampling", type=click.Choice(["geometric", "linear"]), default="geometric", show_default=True)
@click.option("--psi-norm-sq-inv", type=float, default=1.0, show_default=True)
@click.option("--manifest", type=click.Path(path_type=Path), default=None)
def flow(source, tau, alpha_prime, t_end, out, fmt, rel_tol, abs_tol, max_step, initial_step,
         convergence_eps, samples, sampling, psi_norm_sq_inv, manifest):
    """Integrate the bracket flow from the balanced structure in SOURCE."""
    try:
        cfg = FlowConfig(
            tau=tau, alpha_prime=alpha_prime, psi_norm_sq_inv=psi_norm_sq_inv, t_end=t_end,
            rel_tol=rel_tol, abs_tol=abs_tol, max_step=max_step, initial_step=initial_step,
            convergence_eps=convergence_eps, n_samples=samples, sampling=sampling,
        )
    except FlowConfigError as exc:
        _fail(EXIT_INVALID, str(exc))
    run = RunManifest("flow", {"source": source, "format": fmt, **cfg.to_json()})
    try:
        s, run.input_digest = _load_structure(source)
    except (OSError, StructureError) as exc:
        _fail(EXIT_INVALID, str(exc))
    p = _as_balanced(s)
    if p is None:
        _fail(EXIT_INVALID, "the flow needs a balanced structure with trivial canonical bundle")

    f0 = slope_f(p, cfg)
    click.echo(f"f(A0) = {f0:.17g} ({'positive' if f0 > 0 else 'non-positive'})", err=True)
    result = integrate_bracket_flow(p, cfg)
    if OUTSIDE_HYPOTHESES in result.tags:
        click.echo(f"warning: {OUTSIDE_HYPOTHESES} (f(A0) <= 0)", err=True)
    click.echo(f"status: {result.status.value} {result.message}".rstrip(), err=True)

    fh = sys.stdout if out is None else open(out, "w", newline="")
    try:
        if fmt == "csv":
            write_csv(result.points, fh)
        else:
            write_json(result, fh)
    finally:
        if out is not None:
            fh.close()
            run.outputs.append(str(out))
    run.emit(_manifest_path(manifest, out))
    sys.exit(EXIT_OK if result.status.ok else EXIT_INTEGRATION)


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--draws", type=int, default=1000, show_default=True)
@click.option("--flow-draws", type=int, default=None, help="Trajectories per flow check [draws // 50].")
@click.option("--inject-fault", "faults", type=click.Choice(FAULTS), multiple=True, hidden=True)
@click.option("--manifest", type=click.Path(path_type=Path), default=None)
def verify(seed, draws, flow_draws, faults, manifest):
    """Run the randomised cross-check suite."""
    if draws < 1:
        _fail(EXIT_INVALID, "--draws must be at least 1")
    run = RunManifest("verify", {"seed": seed, "draws": draws, "flow_draws": flow_draws, "faults": list(faults)})
    results = run_checks(seed, draws, flow_draws, tuple(faults))
    click.echo(f"{'check':24s} {'residual':>12s} {'tolerance':>10s}  result")
    for r in results:
        flag = "PASS" if r.passed else "FAIL"
        click.echo(f"{r.name:24s} {r.residual:12.3e} {r.tolerance:10.0e}  {flag}  {r.detail}".rstrip())
    run.emit(manifest)
    sys.exit(EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED)


@main.command()
@click.option("--t-end", type=float, default=10.0, show_default=True)
@click.option("--points", type=int, default=101, show_default=True)
@click.option("--manifest", type=click.Path(path_type=Path), default=None)
def example(t_end, points, manifest):
    """Metric flow on the nilpotent example against its exact solution."""
    run = RunManifest("example", {"t_end": t_end, "points": points})
    table = run_example(t_end, points)
    a_ref = np.sqrt(2 * table.t + 1)
    click.echo(f"{'t':>6s} {'a':>14s} {'b':>14s} {'c':>14s} {'sqrt(2t+1)':>14s} {'1/sqrt(2t+1)':>14s}")
    for t, (a, b, c), ar in zip(table.t, table.abc, a_ref):
        click.echo(f"{t:6.2f} {a:14.9f} {b:14.9f} {c:14.9f} {ar:14.9f} {1 / ar:14.9f}")
    dev = max(table.ode_deviation, table.psi_deviation)
    click.echo(f"max deviation from exact solution: {dev:.3e}")
    click.echo(f"max |Psi|^2 - 1/(abc): {table.psi_deviation:.3e}")
    click.echo(f"max deviation of a from exp(sqrt(2t+1)-1): {table.displayed_deviation:.3e}")
    run.emit(manifest)
    ok = table.status.ok and dev < 1e-6
    sys.exit(EXIT_OK if ok else EXIT_CHECK_FAILED)


if __name__ == "__main__":
    main()
