"""Thin CLI client for the percolab service.

Commands map one-to-one onto service endpoints; by default requests run
against an in-process app instance (no server needed), or point
--base-url at a running `percolab serve`.  Each run writes one CSV per
returned table plus a manifest JSON (config hash, versions, wall time,
output paths).  A flat JSON config file can seed any command's
parameters; explicit flags win.

Exit codes: 0 ok, 2 config error, 3 insufficient data, 4 internal numeric
inconsistency.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import sys
import time
from pathlib import Path

import click

from . import __version__

EXIT_CONFIG = 2
EXIT_NO_DATA = 3
EXIT_NUMERIC = 4


class SciInt(click.ParamType):
    """Integer that also accepts scientific notation like 1e6."""

    name = "int"

    def convert(self, value, param, ctx):
        try:
            return int(value)
        except (TypeError, ValueError):
            try:
                f = float(value)
            except (TypeError, ValueError):
                self.fail(f"{value!r} is not an integer", param, ctx)
            if f != int(f):
                self.fail(f"{value!r} is not an integer", param, ctx)
            return int(f)


SCI_INT = SciInt()


def _client(base_url):
    if base_url:
        import httpx
        return httpx.Client(base_url=base_url, timeout=None)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient
    from .service import create_app
    return TestClient(create_app())


def _payload(config_path, overrides):
    payload = {}
    if config_path:
        try:
            payload.update(json.loads(Path(config_path).read_text()))
        except (OSError, json.JSONDecodeError) as e:
            raise click.ClickException(f"cannot read config: {e}")
    payload.update({k: v for k, v in overrides.items() if v is not None})
    return payload


def _write_outputs(resp: dict, out: Path) -> list:
    out.mkdir(parents=True, exist_ok=True)
    cmd = resp["command"]
    paths = []
    for name, table in resp["tables"].items():
        path = out / f"{cmd}_{name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(table["header"])
            w.writerows(table["rows"])
        paths.append(str(path))
    report_path = out / f"{cmd}_report.json"
    report_path.write_text(json.dumps(resp["report"], indent=2,
                                      sort_keys=True) + "\n")
    paths.append(str(report_path))
    cfg_canon = json.dumps(resp["config"], sort_keys=True,
                           separators=(",", ":"))
    manifest = {
        "schema_version": resp["schema_version"],
        "command": cmd,
        "config": resp["config"],
        "config_hash": hashlib.sha256(cfg_canon.encode()).hexdigest(),
        "percolab_version": __version__,
        "python_version": platform.python_version(),
        "wall_time_s": resp["wall_time_s"],
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "outputs": paths,
    }
    mpath = out / f"{cmd}_manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2) + "\n")
    return paths + [str(mpath)]


def _run(endpoint, payload, out, base_url):
    with _client(base_url) as client:
        r = client.post(f"/v1/{endpoint}", json=payload)
        if r.status_code == 422:
            detail = r.json()
            msg = detail.get("error") or json.dumps(detail.get("detail"))
            click.echo(f"config error: {msg}", err=True)
            sys.exit(EXIT_CONFIG)
        body = r.json()
        if r.status_code != 200:
            code = body.get("code", "internal")
            click.echo(f"error [{code}]: {body.get('error')}", err=True)
            sys.exit(EXIT_NO_DATA if code == "insufficient-data"
                     else EXIT_NUMERIC if code == "numeric-inconsistency"
                     else 1)
    paths = _write_outputs(body, Path(out))
    click.echo(json.dumps(body["report"], sort_keys=True, default=str))
    for p in paths:
        click.echo(f"wrote {p}")


def _common(f):
    f = click.option("--config", type=click.Path(), default=None,
                     help="flat JSON config file; flags override")(f)
    f = click.option("--out", default="out", show_default=True,
                     help="output directory")(f)
    f = click.option("--base-url", default=None,
                     help="remote service URL (default: in-process)")(f)
    f = click.option("--seed", type=SCI_INT, default=None)(f)
    return f


@click.group()
@click.version_option(__version__)
def main():
    """Critical percolation / ISE laboratory."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8123, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn
    from .service import create_app
    uvicorn.run(create_app(), host=host, port=port)


@main.command()
@_common
@click.option("--d", type=int)
@click.option("--p", default=None, help="bond density or 'auto'")
@click.option("--samples", type=SCI_INT)
@click.option("--cap", type=SCI_INT)
@click.option("--fit-min", type=SCI_INT)
@click.option("--fit-max", type=SCI_INT)
def sizes(config, out, base_url, **kw):
    """Cluster-size pmf histogram and power-law fit."""
    _run("sizes", _payload(config, _numify(kw)), out, base_url)


def _numify(kw):
    out = {}
    for k, v in kw.items():
        if v is None:
            continue
        if k == "p" and v != "auto":
            v = float(v)
        out[k] = v
    return out


def _windowed_opts(f):
    f = click.option("--d", type=int)(f)
    f = click.option("--p", default=None, help="bond density or 'auto'")(f)
    f = click.option("--n", type=SCI_INT)(f)
    f = click.option("--window", type=float)(f)
    f = click.option("--samples", type=SCI_INT)(f)
    f = click.option("--target-accepted", type=SCI_INT)(f)
    return f


@main.command()
@_common
@_windowed_opts
@click.option("--k2-max", type=float)
@click.option("--k-points", type=int)
def qn(config, out, base_url, **kw):
    """Size-conditioned two-point Fourier profile."""
    _run("qn", _payload(config, _numify(kw)), out, base_url)


@main.command("compare-qn")
@_common
@_windowed_opts
@click.option("--k2-max", type=float)
@click.option("--k-points", type=int)
@click.option("--nboot", type=SCI_INT)
def compare_qn(config, out, base_url, **kw):
    """Two-point profile vs its ISE limit (fits the single scale D)."""
    _run("compare-qn", _payload(config, _numify(kw)), out, base_url)


@main.command()
@_common
@_windowed_opts
@click.option("--k-values", default=None, help="comma separated k list")
@click.option("--scale-d", type=float)
def q3(config, out, base_url, k_values, **kw):
    """Size-conditioned three-point transform grid."""
    kw = _numify(kw)
    if k_values:
        kw["k_values"] = [float(x) for x in k_values.split(",")]
    _run("q3", _payload(config, kw), out, base_url)


@main.command("compare-q3")
@_common
@_windowed_opts
@click.option("--k-values", default=None, help="comma separated k list")
@click.option("--scale-d", type=float)
@click.option("--nboot", type=SCI_INT)
def compare_q3(config, out, base_url, k_values, **kw):
    """Three-point grid vs its ISE limit (D from the two-point fit)."""
    kw = _numify(kw)
    if k_values:
        kw["k_values"] = [float(x) for x in k_values.split(",")]
    _run("compare-q3", _payload(config, kw), out, base_url)


@main.command("ise")
@_common
@click.option("--a2", "a2_flag", is_flag=True, default=False,
              help="emit the two-point transform table")
@click.option("--k2-grid", default=None, help="lo:step:hi grid for k^2")
@click.option("--a3-k-values", default=None, help="comma separated k list")
@click.option("--abs-tol", type=float)
def ise_cmd(config, out, base_url, a2_flag, k2_grid, a3_k_values, **kw):
    """ISE transform tables on user grids."""
    kw = _numify(kw)
    if k2_grid:
        kw["a2_k2_grid"] = k2_grid
    elif not a2_flag and a3_k_values:
        kw["a2_k2_grid"] = None
    if a3_k_values:
        kw["a3_k_values"] = [float(x) for x in a3_k_values.split(",")]
    _run("ise", _payload(config, kw), out, base_url)


@main.command()
@_common
@click.option("--c-const", "C", type=float)
@click.option("--d-const", "D", type=float)
@click.option("--k2", type=float)
@click.option("--n-list", default=None, help="comma separated n list")
@click.option("--series-file", type=click.Path(), default=None,
              help="plain text file, one coefficient per line")
@click.option("--radius", type=float)
def coeff(config, out, base_url, n_list, series_file, **kw):
    """Branch main-term coefficients (contour vs recurrence routes)."""
    kw = _numify(kw)
    if n_list:
        kw["n_list"] = [int(float(x)) for x in n_list.split(",")]
    if series_file:
        text = Path(series_file).read_text().split()
        kw["series_coeffs"] = [float(x) for x in text]
    _run("coeff", _payload(config, kw), out, base_url)


@main.command()
@_common
@click.option("--instances", type=SCI_INT)
def lemmas(config, out, base_url, **kw):
    """Inequality harness suite (randomized instances)."""
    _run("lemmas", _payload(config, _numify(kw)), out, base_url)


@main.command()
@_common
@click.option("--action", type=click.Choice(["triangle", "irbound",
                                             "square", "msquare"]),
              required=False)
@click.option("--d", type=int)
@click.option("--p", default=None)
@click.option("--p-fraction", type=float)
@click.option("--c", "c", type=float)
@click.option("--samples", type=SCI_INT)
@click.option("--z-exponents", default=None, help="comma separated j list "
              "for z = 1 - 2^-j")
def diagrams(config, out, base_url, z_exponents, **kw):
    """Triangle / infrared-bound / square-diagram Monte Carlo."""
    kw = _numify(kw)
    if z_exponents:
        kw["z_exponents"] = [int(x) for x in z_exponents.split(",")]
    _run("diagrams", _payload(config, kw), out, base_url)


@main.command()
@_common
@click.option("--d", type=int)
@click.option("--radius", type=SCI_INT)
@click.option("--samples-per-probe", type=SCI_INT)
@click.option("--tol", type=float)
def pc(config, out, base_url, **kw):
    """Critical density estimate with probe log."""
    _run("pc", _payload(config, _numify(kw)), out, base_url)


@main.command()
@_common
@click.option("--law", type=click.Choice(["binomial", "poisson"]))
@click.option("--m", type=int)
@click.option("--q-num", type=int)
@click.option("--q-den", type=int)
@click.option("--lam", type=float)
@click.option("--n-min", type=SCI_INT)
@click.option("--n-max", type=SCI_INT)
def tree(config, out, base_url, **kw):
    """Exact Galton-Watson total-progeny pmf tables."""
    _run("tree", _payload(config, _numify(kw)), out, base_url)


if __name__ == "__main__":
    main()
