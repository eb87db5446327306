"""Command-line front end.

Each subcommand is a thin client of the HTTP service: by default the
request executes against an in-process instance, and ``--server`` points
the same request at a running deployment instead.  Output is a single
artifact (JSON, CSV, or a text table) that embeds the fully resolved
configuration, so a run can be reproduced from its own output.

Exit codes: 0 success, 2 parse/usage errors, 3 numerical failures,
4 I/O failures.
"""

from __future__ import annotations

import asyncio
import csv
import io
import json
import math

import click
import httpx

from .service.app import create_app

EXIT_PARSE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_FORMATS = ("json", "csv", "text-table")


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------


def _load_config(path: str | None) -> dict:
    """Read a key=value defaults file; '#' starts a comment."""
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        click.echo(f"error: cannot read config {path}: {exc}", err=True)
        raise SystemExit(EXIT_IO) from exc
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            click.echo(
                f"error: config {path} line {lineno}: expected key = value", err=True
            )
            raise SystemExit(EXIT_PARSE)
        key, _, value = line.partition("=")
        out[key.strip().lower().replace("-", "_")] = value.strip()
    return out


def _resolve(ctx, config_path: str | None, items: list) -> tuple[dict, set]:
    """Merge flag values with config-file defaults (flags win).

    ``items`` is a list of (payload key, click parameter name, value).
    Returns the resolved mapping and the set of keys set explicitly
    (by flag, environment, or config file).
    """
    overrides = _load_config(config_path)
    values = {}
    explicit = set()
    for key, pname, value in items:
        source = ctx.get_parameter_source(pname)
        defaulted = source == click.core.ParameterSource.DEFAULT
        cfg_key = key.lower().replace("-", "_")
        if defaulted and cfg_key in overrides:
            param = next(p for p in ctx.command.params if p.name == pname)
            try:
                value = param.type.convert(overrides[cfg_key], param, ctx)
            except click.UsageError as exc:
                click.echo(f"error: config value for {key}: {exc}", err=True)
                raise SystemExit(EXIT_PARSE) from exc
            explicit.add(key)
        elif not defaulted:
            explicit.add(key)
        values[key] = value
    return values, explicit


def _post(server: str | None, path: str, payload: dict) -> dict:
    async def go():
        if server:
            async with httpx.AsyncClient(base_url=server, timeout=600.0) as client:
                return await client.post(path, json=payload)
        transport = httpx.ASGITransport(app=create_app(), raise_app_exceptions=False)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://lskl.internal", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    try:
        resp = asyncio.run(go())
    except httpx.HTTPError as exc:
        click.echo(f"error: cannot reach service: {exc}", err=True)
        raise SystemExit(EXIT_IO) from exc
    try:
        body = resp.json()
    except ValueError:
        body = {"detail": resp.text}
    if resp.status_code >= 500:
        click.echo(f"error: {body.get('detail', body)}", err=True)
        raise SystemExit(EXIT_NUMERIC)
    if resp.status_code >= 400:
        detail = body.get("detail", body)
        click.echo(f"error: {detail}", err=True)
        raise SystemExit(EXIT_PARSE)
    return body


def _round(v):
    """12 significant digits on every float, recursively."""
    if isinstance(v, float):
        if math.isinf(v) or math.isnan(v):
            return str(v).replace("-inf", "-inf")
        return float(f"{v:.12g}")
    if isinstance(v, dict):
        return {k: _round(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_round(x) for x in v]
    return v


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _flatten(value, prefix: str = "") -> list:
    rows = []
    if isinstance(value, dict):
        for k, v in value.items():
            rows.extend(_flatten(v, f"{prefix}.{k}" if prefix else str(k)))
    elif isinstance(value, list):
        for i, v in enumerate(value):
            rows.extend(_flatten(v, f"{prefix}[{i}]"))
    else:
        rows.append((prefix, value))
    return rows


def _tabular(subcommand: str, result: dict):
    """(header, rows) for subcommands with naturally tabular output."""
    if subcommand == "simulate":
        header = ["n", "rep", "posterior_prob"]
        rows = [[r["n"], r["rep"], r["posterior_prob"]] for r in result["rows"]]
        return header, rows
    if subcommand == "independence":
        names = list(result["grid"][0]) if result["grid"] else []
        header = names + ["value"]
        rows = [
            [g[name] for name in names] + [v]
            for g, v in zip(result["grid"], result["values"])
        ]
        return header, rows
    return None


def _emit(subcommand: str, config: dict, result: dict, fmt: str, output: str | None):
    envelope = {
        "subcommand": subcommand,
        "config": _round(config),
        "result": _round(result),
    }
    if fmt == "json":
        text = json.dumps(envelope, indent=2) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        table = _tabular(subcommand, result)
        if table:
            header, rows = table
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
        else:
            writer.writerow(["key", "value"])
            for key, value in _flatten(result):
                writer.writerow([key, _cell(value)])
        text = buf.getvalue()
    else:  # text-table
        table = _tabular(subcommand, result)
        if table:
            header, rows = table
            cells = [header] + [[_cell(v) for v in row] for row in rows]
        else:
            cells = [["field", "value"]] + [
                [key, _cell(value)] for key, value in _flatten(result)
            ]
        widths = [max(len(r[i]) for r in cells) for i in range(len(cells[0]))]
        lines = []
        for i, row in enumerate(cells):
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        text = "\n".join(lines) + "\n"
    if output:
        try:
            with open(output, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            click.echo(f"error: cannot write {output}: {exc}", err=True)
            raise SystemExit(EXIT_IO) from exc
    else:
        click.echo(text, nl=False)


def _common(fn):
    fn = click.option(
        "--config",
        "config_path",
        type=click.Path(),
        default=None,
        help="Key=value defaults file; explicit flags win.",
    )(fn)
    fn = click.option(
        "--server",
        default=None,
        help="Base URL of a running service; default computes in process.",
    )(fn)
    fn = click.option(
        "--output", default=None, help="Write the artifact here instead of stdout."
    )(fn)
    fn = click.option(
        "--format",
        "fmt",
        type=click.Choice(_FORMATS),
        default="json",
        show_default=True,
        help="Artifact format.",
    )(fn)
    return fn


_SEED = dict(type=int, default=0, envvar="LSKL_SEED", show_envvar=True)


@click.group(help=__doc__)
@click.version_option(package_name="lskl")
def main():
    pass


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


@main.command(help="Divergence between two models, e.g. "
              "--from 'halfnormal(sigma=1)' --to 'exponential(beta=1)'.")
@click.option("--from", "from_model", required=True, help="Source model text.")
@click.option("--to", "to_model", required=True, help="Target model text.")
@click.option(
    "--method",
    type=click.Choice(["auto", "closed_form", "quadrature", "monte_carlo"]),
    default="auto",
    show_default=True,
)
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--n", type=int, default=1_000_000, show_default=True,
              help="Draw count for monte_carlo.")
@click.option("--seed", **_SEED)
@_common
@click.pass_context
def kl(ctx, from_model, to_model, method, tol, n, seed, fmt, output, server, config_path):
    cfg, _ = _resolve(
        ctx,
        config_path,
        [
            ("from", "from_model", from_model),
            ("to", "to_model", to_model),
            ("method", "method", method),
            ("tol", "tol", tol),
            ("n", "n", n),
            ("seed", "seed", seed),
        ],
    )
    result = _post(server, "/kl", cfg)
    _emit("kl", {**cfg, "format": fmt}, result, fmt, output)


@main.command(help="Minimum divergence from a model into a target family.")
@click.option("--from", "from_model", required=True, help="Source model text.")
@click.option("--target", required=True, help="Target family name.")
@click.option(
    "--method",
    type=click.Choice(["auto", "analytic", "numeric", "mle"]),
    default="auto",
    show_default=True,
)
@click.option("--tol", type=float, default=1e-9, show_default=True,
              help="Quadrature tolerance at the reported point.")
@click.option("--n", type=int, default=1_000_000, show_default=True,
              help="Draw count for the mle route.")
@click.option("--seed", **_SEED)
@_common
@click.pass_context
def minkl(ctx, from_model, target, method, tol, n, seed, fmt, output, server, config_path):
    cfg, _ = _resolve(
        ctx,
        config_path,
        [
            ("from", "from_model", from_model),
            ("target", "target", target),
            ("method", "method", method),
            ("tol", "tol", tol),
            ("n", "n", n),
            ("seed", "seed", seed),
        ],
    )
    result = _post(server, "/minkl", cfg)
    _emit("minkl", {**cfg, "format": fmt}, result, fmt, output)


@main.command(help="Check that the minimum divergence ignores the source "
              "parameters, e.g. --grid 'sigma=[0.1,1,5,20]'.")
@click.option("--source", required=True, help="Source family name.")
@click.option("--target", required=True, help="Target family name.")
@click.option("--grid", required=True, help="Source settings, name=[v1,v2,...]; ...")
@click.option("--tol", type=float, default=1e-5, show_default=True)
@_common
@click.pass_context
def independence(ctx, source, target, grid, tol, fmt, output, server, config_path):
    cfg, _ = _resolve(
        ctx,
        config_path,
        [
            ("source", "source", source),
            ("target", "target", target),
            ("grid", "grid", grid),
            ("tol", "tol", tol),
        ],
    )
    result = _post(server, "/independence", cfg)
    _emit("independence", {**cfg, "format": fmt}, result, fmt, output)


@main.command(help="Loss-based model prior for two candidate families.")
@click.option("--source1", required=True, help="First family name.")
@click.option("--prior1", default=None, help="Parameter prior text; default point mass.")
@click.option("--source2", required=True, help="Second family name.")
@click.option("--prior2", default=None, help="Parameter prior text; default point mass.")
@click.option(
    "--loss-source",
    type=click.Choice(["numeric", "paper"]),
    default="numeric",
    show_default=True,
    help="numeric recomputes the losses; paper uses the published values.",
)
@_common
@click.pass_context
def priors(ctx, source1, prior1, source2, prior2, loss_source, fmt, output, server, config_path):
    cfg, explicit = _resolve(
        ctx,
        config_path,
        [
            ("source1", "source1", source1),
            ("prior1", "prior1", prior1),
            ("source2", "source2", source2),
            ("prior2", "prior2", prior2),
            ("loss_source", "loss_source", loss_source),
        ],
    )
    if cfg["loss_source"] == "numeric" and "loss_source" not in explicit:
        click.echo(
            "note: losses computed numerically; --loss-source paper uses the "
            "published values instead",
            err=True,
        )
    result = _post(server, "/priors", cfg)
    _emit("priors", {**cfg, "format": fmt}, result, fmt, output)


@main.command(help="Posterior odds of two candidate families for a dataset.")
@click.option("--m1", required=True, help="First family name.")
@click.option("--prior1", default=None, help="Prior text; default data-driven grid.")
@click.option("--m2", required=True, help="Second family name.")
@click.option("--prior2", default=None, help="Prior text; default data-driven grid.")
@click.option("--data", "data_path", type=click.Path(), default=None,
              help="File of observations, one number per line.")
@click.option("--truth", default=None, help="Model text to simulate data from.")
@click.option("--n", type=int, default=100, show_default=True,
              help="Sample size when simulating from --truth.")
@click.option("--seed", **_SEED)
@click.option(
    "--loss-source",
    type=click.Choice(["numeric", "paper"]),
    default="numeric",
    show_default=True,
)
@_common
@click.pass_context
def select(ctx, m1, prior1, m2, prior2, data_path, truth, n, seed, loss_source,
           fmt, output, server, config_path):
    cfg, _ = _resolve(
        ctx,
        config_path,
        [
            ("m1", "m1", m1),
            ("prior1", "prior1", prior1),
            ("m2", "m2", m2),
            ("prior2", "prior2", prior2),
            ("data", "data_path", data_path),
            ("truth", "truth", truth),
            ("n", "n", n),
            ("seed", "seed", seed),
            ("loss_source", "loss_source", loss_source),
        ],
    )
    payload = dict(cfg)
    data_path = payload.pop("data")
    if data_path:
        try:
            with open(data_path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            click.echo(f"error: cannot read data {data_path}: {exc}", err=True)
            raise SystemExit(EXIT_IO) from exc
        try:
            values = [
                float(tok)
                for line in text.splitlines()
                for tok in line.split("#", 1)[0].split()
            ]
        except ValueError as exc:
            click.echo(f"error: bad number in data file: {exc}", err=True)
            raise SystemExit(EXIT_PARSE) from exc
        payload["data"] = values
    result = _post(server, "/select", payload)
    _emit("select", {**cfg, "format": fmt}, result, fmt, output)


@main.command(help="Posterior-concentration simulation across sample sizes.")
@click.option("--truth", required=True, help="Data-generating model text.")
@click.option("--m1", required=True, help="First candidate family.")
@click.option("--prior1", default=None, help="Prior text; default data-driven grid.")
@click.option("--m2", required=True, help="Second candidate family.")
@click.option("--prior2", default=None, help="Prior text; default data-driven grid.")
@click.option("--n-grid", default="20,100,500", show_default=True,
              help="Comma-separated sample sizes.")
@click.option("--reps", type=int, default=100, show_default=True)
@click.option("--seed", **_SEED)
@click.option(
    "--loss-source",
    type=click.Choice(["numeric", "paper"]),
    default="numeric",
    show_default=True,
)
@_common
@click.pass_context
def simulate(ctx, truth, m1, prior1, m2, prior2, n_grid, reps, seed, loss_source,
             fmt, output, server, config_path):
    cfg, _ = _resolve(
        ctx,
        config_path,
        [
            ("truth", "truth", truth),
            ("m1", "m1", m1),
            ("prior1", "prior1", prior1),
            ("m2", "m2", m2),
            ("prior2", "prior2", prior2),
            ("n_grid", "n_grid", n_grid),
            ("reps", "reps", reps),
            ("seed", "seed", seed),
            ("loss_source", "loss_source", loss_source),
        ],
    )
    try:
        sizes = [int(tok) for tok in str(cfg["n_grid"]).split(",") if tok.strip()]
    except ValueError as exc:
        click.echo(f"error: bad --n-grid: {exc}", err=True)
        raise SystemExit(EXIT_PARSE) from exc
    payload = dict(cfg)
    payload["n_grid"] = sizes
    result = _post(server, "/simulate", payload)
    _emit("simulate", {**cfg, "format": fmt}, result, fmt, output)


if __name__ == "__main__":
    main()
