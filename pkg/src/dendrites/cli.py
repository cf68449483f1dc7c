"""Command-line surface for the dendrite/skew-product pipeline.

Subcommands mirror the library layers: ``space gen`` writes metric-space
JSON, ``dendrite build``/``dendrite verify`` construct and audit the tree
realization, ``map extend`` lifts an endpoint map to the whole dendrite,
``skew simulate`` streams orbit-pair distances to CSV, and
``chaos classify`` / ``chaos family`` run the distributional-chaos
machinery.  Output files are written atomically (temp file + rename) and
identical arguments produce byte-identical artifacts.

Exit codes: 0 on success, 1 when a computation or validation fails,
2 for usage errors.
"""
from __future__ import annotations

import functools
import json
import os
from pathlib import Path

import click
import numpy as np

from .chaos import (
    PairVerdict,
    classify_pair,
    column_checkpoints,
    default_dc3_interval,
    distribution_profile,
    evidence_from_profile,
    scrambled_family,
    verdict_to_json,
)
from .dendrite import (
    dendrite_for_space,
    dendrite_from_json,
    dendrite_to_json,
    export_skeleton,
    verify_dendrite,
)
from .errors import DendritesError
from .extension import embed_system, extension_to_json
from .odometer import OmegaWord, SkewState, orbit_distance_chunks, parse_fiber, top_time
from .spaces import generate_space, space_from_file, space_to_json


def _friendly(fn):
    """Turn library and file errors into exit-1 messages."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DendritesError as exc:
            raise click.ClickException(str(exc)) from exc
        except OSError as exc:
            name = getattr(exc, "filename", None)
            detail = exc.strerror or str(exc)
            raise click.ClickException(f"{name}: {detail}" if name else detail) from exc

    return wrapper


def _dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _write_text(path: str, text: str) -> None:
    target = Path(path)
    tmp = target.with_name(f".{target.name}.tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, target)


def _parse_floats(text: str, flag: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}", param_hint=flag)


def _parse_ints(text: str, flag: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}", param_hint=flag)


@click.group()
@click.version_option(package_name="dendrites", prog_name="dendrites")
def main():
    """Dendrite realizations of finite metric spaces and skew-product chaos."""


@main.group()
def space():
    """Generate and inspect finite metric spaces."""


@space.command("gen")
@click.option("--kind", type=click.Choice(["harmonic", "cantor", "fiber_c"]), required=True)
@click.option("--k", type=int, default=None, help="Point count for --kind harmonic.")
@click.option("--depth", type=int, default=None, help="Subdivision depth for --kind cantor.")
@click.option("--n-max", type=int, default=None, help="Last comb column for --kind fiber_c.")
@click.option("--out", required=True, type=click.Path(dir_okay=False, writable=True))
@_friendly
def space_gen(kind, k, depth, n_max, out):
    """Write a generated metric space as JSON."""
    params = {}
    if kind == "harmonic":
        params["k"] = 10 if k is None else k
    elif kind == "cantor":
        params["depth"] = 3 if depth is None else depth
    else:
        params["n_max"] = 1 if n_max is None else n_max
    sp = generate_space(kind, **params)
    _write_text(out, _dumps(space_to_json(sp)))
    click.echo(f"wrote {out}: {sp.size} points")


@main.group()
def dendrite():
    """Build and verify dendrite realizations."""


@dendrite.command("build")
@click.argument("space_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False, writable=True))
@click.option("--dot", type=click.Path(dir_okay=False, writable=True), default=None)
@_friendly
def dendrite_build(space_file, out, dot):
    """Build the dendrite of a metric space; write JSON and optional DOT."""
    sp = space_from_file(space_file)
    den = dendrite_for_space(sp)
    _write_text(out, _dumps(dendrite_to_json(den)))
    if dot:
        _write_text(dot, export_skeleton(den, "dot"))
    click.echo(f"wrote {out}: {den.n_vertices} vertices, {den.n_edges} edges")


@dendrite.command("verify")
@click.argument("dendrite_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--space", "space_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--triples", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Overridden by DENDRITE_SEED.")
@_friendly
def dendrite_verify(dendrite_file, space_file, triples, seed):
    """Re-check isometry, metric axioms, and tree shape; exit 1 on failure."""
    seed = int(os.environ.get("DENDRITE_SEED", seed))
    sp = space_from_file(space_file)
    den = dendrite_from_json(json.loads(Path(dendrite_file).read_text(encoding="utf-8")), sp)
    report = verify_dendrite(den, triple_samples=triples, seed=seed)
    click.echo(_dumps(report.to_json()), nl=False)
    if not report.ok:
        raise click.exceptions.Exit(1)


@main.group(name="map")
def map_group():
    """Extend endpoint maps over the dendrite."""


@map_group.command("extend")
@click.argument("space_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--assign", default=None, help="Comma-separated label pairs a=b covering every point.")
@click.option("--constant", default=None, help="Send every point to this label.")
@click.option("--identity", is_flag=True, help="Extend the identity map.")
@click.option("--out", required=True, type=click.Path(dir_okay=False, writable=True))
@_friendly
def map_extend(space_file, assign, constant, identity, out):
    """Extend a point map of SPACE_FILE and write the full system as JSON."""
    chosen = [opt for opt in (assign, constant, identity or None) if opt]
    if len(chosen) != 1:
        raise click.UsageError("choose exactly one of --assign, --constant, --identity")
    sp = space_from_file(space_file)
    if identity:
        f = {i: i for i in range(sp.size)}
    elif constant is not None:
        target = sp.label_index(constant)
        f = {i: target for i in range(sp.size)}
    else:
        f = {}
        for pair in assign.split(","):
            src, sep, dst = pair.partition("=")
            if not sep:
                raise click.BadParameter(f"expected label=label, got {pair!r}", param_hint="--assign")
            f[sp.label_index(src.strip())] = sp.label_index(dst.strip())
    system = embed_system(sp, f)
    payload = {
        "space": space_to_json(sp),
        "dendrite": dendrite_to_json(system.dendrite),
        "extension": extension_to_json(system.map),
    }
    _write_text(out, _dumps(payload))
    click.echo(f"wrote {out}: extension over {system.dendrite.n_vertices} vertices")


def _state_options(fn):
    for opt in reversed(
        [
            click.option("--omega", default="0", show_default=True, help="First word, LSB first."),
            click.option("--eta", default="0", show_default=True, help="First control word."),
            click.option("--fiber", default="P:0", show_default=True, help="First fiber point."),
            click.option("--omega2", default=None, help="Second word [default: --omega]."),
            click.option("--eta2", default=None, help="Second control word [default: --eta]."),
            click.option("--fiber2", default=None, help="Second fiber point [default: --fiber]."),
        ]
    ):
        fn = opt(fn)
    return fn


def _build_pair(omega, eta, fiber, omega2, eta2, fiber2) -> tuple[SkewState, SkewState]:
    a = SkewState(OmegaWord.from_string(omega), OmegaWord.from_string(eta), parse_fiber(fiber))
    b = SkewState(
        OmegaWord.from_string(omega2 if omega2 is not None else omega),
        OmegaWord.from_string(eta2 if eta2 is not None else eta),
        parse_fiber(fiber2 if fiber2 is not None else fiber),
    )
    return a, b


def _resolve_horizon(steps, col_checkpoints, flag="--col-checkpoints"):
    if (steps is None) == (col_checkpoints is None):
        raise click.UsageError(f"provide exactly one of --steps and {flag}")
    if steps is not None:
        if steps < 1:
            raise click.BadParameter("need at least one step", param_hint="--steps")
        return steps, None
    cols = _parse_ints(col_checkpoints, flag)
    if not cols or min(cols) < 1:
        raise click.BadParameter("column indices must be >= 1", param_hint=flag)
    return top_time(max(cols)) + 1, tuple(top_time(n) for n in sorted(cols))


@main.group()
def skew():
    """Simulate the skew product."""


@skew.command("simulate")
@_state_options
@click.option("--steps", type=int, default=None, help="Number of orbit steps to record.")
@click.option(
    "--col-checkpoints",
    default=None,
    help="Comma-separated column indices; runs through the top of the largest.",
)
@click.option("--csv", "csv_path", required=True, type=click.Path(dir_okay=False, writable=True))
@_friendly
def skew_simulate(omega, eta, fiber, omega2, eta2, fiber2, steps, col_checkpoints, csv_path):
    """Stream the distance between two orbits to CSV (columns t,dist)."""
    a, b = _build_pair(omega, eta, fiber, omega2, eta2, fiber2)
    horizon, _ = _resolve_horizon(steps, col_checkpoints)
    target = Path(csv_path)
    tmp = target.with_name(f".{target.name}.tmp")
    t = 0
    with tmp.open("w", encoding="utf-8") as fh:
        fh.write("t,dist\n")
        for block in orbit_distance_chunks(a, b, horizon):
            stamped = np.column_stack([np.arange(t, t + block.size), block])
            np.savetxt(fh, stamped, fmt=["%d", "%.17g"], delimiter=",")
            t += block.size
    os.replace(tmp, target)
    click.echo(f"wrote {csv_path}: {horizon} steps")


@main.group()
def chaos():
    """Classify orbit pairs and build control families."""


@chaos.command("classify")
@_state_options
@click.option("--csv", "csv_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Classify a precomputed t,dist stream instead of simulating.")
@click.option("--steps", type=int, default=None, help="Simulation horizon (state mode).")
@click.option("--col-checkpoints", default=None,
              help="Columns used as both horizon and checkpoints (state mode).")
@click.option("--s", "s_values", default=None, help="Comma-separated thresholds.")
@click.option("--checkpoints", default=None, help="Comma-separated raw step checkpoints.")
@click.option("--gap", type=float, default=0.5, show_default=True)
@click.option("--json", "json_out", default=None, type=click.Path(dir_okay=False, writable=True))
@click.option("--svg", "svg_out", default=None, type=click.Path(dir_okay=False, writable=True))
@_friendly
def chaos_classify(
    omega, eta, fiber, omega2, eta2, fiber2,
    csv_path, steps, col_checkpoints, s_values, checkpoints, gap, json_out, svg_out,
):
    """Report Li-Yorke/DC3 evidence for an orbit pair or a distance CSV.

    Checkpoints default to every column top that fits the data; thresholds
    default to a grid over the detection interval.
    """
    thresholds = _parse_floats(s_values, "--s") if s_values else None
    explicit_cps: tuple[int, ...] | None = None
    if checkpoints and col_checkpoints:
        raise click.UsageError("use either --checkpoints or --col-checkpoints, not both")
    if checkpoints:
        explicit_cps = tuple(sorted(_parse_ints(checkpoints, "--checkpoints")))

    if csv_path is not None:
        if steps is not None or col_checkpoints is not None:
            raise click.UsageError("--csv excludes --steps/--col-checkpoints")
        distances = np.atleast_1d(
            np.loadtxt(csv_path, delimiter=",", skiprows=1, usecols=1, dtype=np.float64)
        )
        cps = explicit_cps
        if cps is None:
            cps = column_checkpoints(distances.size)
            if not cps:
                raise click.ClickException(
                    f"{csv_path} has {distances.size} rows, fewer than the first column top"
                )
        if thresholds is None:
            lo, hi = default_dc3_interval()
            thresholds = tuple(np.linspace(lo, hi, 9).tolist())
        profile = distribution_profile([distances], thresholds, cps)
        verdict = PairVerdict(None, None, evidence_from_profile(profile, gap), profile)
    else:
        a, b = _build_pair(omega, eta, fiber, omega2, eta2, fiber2)
        horizon = None
        if explicit_cps is None and col_checkpoints is not None:
            horizon, explicit_cps = _resolve_horizon(None, col_checkpoints)
        elif steps is not None:
            horizon = steps
        verdict = classify_pair(
            a, b, horizon=horizon, thresholds=thresholds, checkpoints=explicit_cps, gap=gap
        )

    payload = _dumps(verdict_to_json(verdict))
    if json_out:
        _write_text(json_out, payload)
        click.echo(f"wrote {json_out}")
    else:
        click.echo(payload, nl=False)
    if svg_out:
        _write_text(svg_out, _profile_svg(verdict.profile))
        click.echo(f"wrote {svg_out}")


def _parse_coding(spec: str):
    spec = spec.strip().lower()
    if spec == "even":
        return lambda p: p % 2 == 0
    if spec == "odd":
        return lambda p: p % 2 == 1
    if spec.startswith("mod:"):
        parts = spec.split(":")
        try:
            modulus = int(parts[1])
            residue = int(parts[2]) if len(parts) > 2 else 0
        except (ValueError, IndexError):
            raise click.BadParameter(f"expected mod:K or mod:K:R, got {spec!r}", param_hint="--coding")
        if modulus < 1:
            raise click.BadParameter("modulus must be >= 1", param_hint="--coding")
        return lambda p: p % modulus == residue % modulus
    if spec.startswith("pos:"):
        positions = set(_parse_ints(spec[4:], "--coding"))
        return lambda p: p in positions
    raise click.BadParameter(f"unknown coding pattern {spec!r}", param_hint="--coding")


@chaos.command("family")
@click.option("--coding", default="even", show_default=True,
              help="Coding positions: even | odd | mod:K[:R] | pos:p1,p2,...")
@click.option("--count", type=int, required=True)
@click.option("--depth", type=int, default=64, show_default=True)
@click.option("--out", default=None, type=click.Path(dir_okay=False, writable=True))
@_friendly
def chaos_family(coding, count, depth, out):
    """Emit control words that pairwise agree and disagree on coding slots."""
    words = scrambled_family(_parse_coding(coding), count, depth)
    payload = _dumps(
        {
            "coding": coding,
            "count": count,
            "depth": depth,
            "words": [str(w) for w in words],
        }
    )
    if out:
        _write_text(out, payload)
        click.echo(f"wrote {out}")
    else:
        click.echo(payload, nl=False)


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2")


def _profile_svg(profile) -> str:
    """Polyline per checkpoint over the threshold grid; no dependencies."""
    width, height, pad = 640, 400, 60
    thr = profile.thresholds
    lo, hi = thr[0], thr[-1]
    span = hi - lo

    def sx(s: float) -> float:
        if span == 0:
            return width / 2
        return pad + (s - lo) / span * (width - 2 * pad)

    def sy(freq: float) -> float:
        return height - pad - freq * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{pad}" y="{height - pad + 20}" font-size="12" text-anchor="middle">{lo:g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 20}" font-size="12" text-anchor="middle">{hi:g}</text>',
        f'<text x="{pad - 8}" y="{height - pad}" font-size="12" text-anchor="end">0</text>',
        f'<text x="{pad - 8}" y="{pad + 4}" font-size="12" text-anchor="end">1</text>',
        f'<text x="{width / 2}" y="{height - 12}" font-size="12" text-anchor="middle">threshold s</text>',
    ]
    for k, checkpoint in enumerate(profile.checkpoints):
        color = _SVG_COLORS[k % len(_SVG_COLORS)]
        coords = " ".join(
            f"{sx(s):.2f},{sy(float(profile.freqs[k, j])):.2f}" for j, s in enumerate(thr)
        )
        if len(thr) == 1:
            x, y = coords.split(",")
            parts.append(f'<circle cx="{x}" cy="{y}" r="4" fill="{color}"/>')
        else:
            parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{width - pad + 6}" y="{pad + 14 * k}" font-size="11" fill="{color}">N={checkpoint}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


if __name__ == "__main__":
    main()
