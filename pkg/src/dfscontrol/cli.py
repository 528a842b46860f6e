"""Command-line front end: model conversion, structure reports, and tests.

Exit codes: 0 success, 2 input error, 3 no protective inputs exist for the
requested projection (rank test fails), 4 numerical failure.  Reports echo the
seed and any tolerance overrides so identical configurations produce
byte-identical JSON.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import __version__
from .codes import CodeError, derive_code, max_code_order, search_codes
from .commutant import (
    CommutantError,
    DegenerateClusteringError,
    commutant_structure,
    interaction_algebra,
)
from .cvs import BasisError, gmodel_to_document, liouvillian_to_g, make_basis
from .liealg import ClosureCapError, test_esc, test_loc, test_lesc, test_oc
from .linalg import haar_unitary
from .model import ModelError, parse_model
from .pstatic import (
    NotInvariantError,
    PStaticScheme,
    SchemeContext,
    compute_difs,
    sector_projection,
)
from .sim import ControlField, SimulationError, propagate

EXIT_INPUT = 2
EXIT_NOT_INVARIANT = 3
EXIT_NUMERICAL = 4


def _dump(obj, out: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _fail(code: int, msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _load_model(path: str):
    try:
        with open(path) as fh:
            return parse_model(fh.read())
    except OSError as exc:
        _fail(EXIT_INPUT, f"cannot read model: {exc}")
    except ModelError as exc:
        _fail(EXIT_INPUT, str(exc))


def _pipeline(path: str, seed: int):
    model = _load_model(path)
    try:
        basis = make_basis(
            model.hilbert_dim,
            "bloch_ball" if model.n_qubits is not None else "gell_mann",
        )
        gmodel = liouvillian_to_g(model, basis)
    except BasisError as exc:
        _fail(EXIT_INPUT, str(exc))
    structure = None
    if model.n_noise:
        try:
            structure = commutant_structure(interaction_algebra(model), basis, seed=seed)
        except DegenerateClusteringError as exc:
            _fail(EXIT_NUMERICAL, str(exc))
        except CommutantError as exc:
            _fail(EXIT_NUMERICAL, str(exc))
    return model, gmodel, structure


def _parse_tols(pairs: tuple[str, ...]) -> dict:
    out = {}
    for p in pairs:
        if "=" not in p:
            _fail(EXIT_INPUT, f"--tol expects NAME=VALUE, got {p!r}")
        name, val = p.split("=", 1)
        try:
            out[name] = float(val)
        except ValueError:
            _fail(EXIT_INPUT, f"--tol {name}: {val!r} is not a number")
    return out


def _load_u_star(spec: str, kord: int, seed: int) -> np.ndarray:
    if spec == "random":
        return haar_unitary(kord, np.random.default_rng(seed))
    if spec == "identity":
        return np.eye(kord, dtype=complex)
    try:
        with open(spec) as fh:
            rows = json.load(fh)
        return np.array([[complex(x[0], x[1]) for x in row] for row in rows])
    except (OSError, ValueError, TypeError, IndexError) as exc:
        _fail(EXIT_INPUT, f"--u-star: cannot load unitary from {spec!r}: {exc}")


@click.group()
@click.version_option(__version__)
def main():
    """Analyze controllability of decoherence-free subsystem codes."""


_common = [
    click.option("--model", "model_path", required=True, type=click.Path(), help="model JSON"),
    click.option("--seed", default=0, show_default=True, type=int),
    click.option("--tol", "tols", multiple=True, help="NAME=VALUE tolerance override"),
    click.option("--out", default=None, type=click.Path(), help="write report here"),
]


def common_options(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@main.command()
@common_options
def convert(model_path, seed, tols, out):
    """Export the coherence-space drift and control matrices."""
    tol_map = _parse_tols(tols)
    model, gmodel, _ = _pipeline(model_path, seed)
    doc = gmodel_to_document(gmodel)
    doc.update({"seed": seed, "tolerances": tol_map})
    _dump(doc, out)


@main.command()
@common_options
def commutant(model_path, seed, tols, out):
    """Report the noise commutant's sector structure."""
    tol_map = _parse_tols(tols)
    model, gmodel, structure = _pipeline(model_path, seed)
    if structure is None:
        doc = {
            "sectors": [{"order": model.hilbert_dim, "multiplicity": 1}],
            "nc_dim": model.hilbert_dim**2,
            "noiseless": True,
            "seed": seed,
        }
    else:
        doc = structure.report()
        doc["max_code_order"] = max_code_order(structure)
    doc["tolerances"] = tol_map
    _dump(doc, out)


@main.command()
@common_options
@click.option("--sector", required=True, type=int, help="host k-sector (1-based)")
@click.option("--code-order", required=True, type=int)
@click.option("--u-star", default="random", show_default=True,
              help="'random', 'identity', or a JSON [[re,im],...] file")
@click.option("--slot", default=1, show_default=True, type=int)
@click.option("--budget", default=0, show_default=True, type=int,
              help="search this many candidates instead of deriving one code")
def codes(model_path, seed, tols, out, sector, code_order, u_star, slot, budget):
    """Derive a subsystem code, or search for L-OC codes with --budget."""
    tol_map = _parse_tols(tols)
    model, gmodel, structure = _pipeline(model_path, seed)
    if structure is None:
        _fail(EXIT_INPUT, "codes need a noisy model; use the full space directly otherwise")
    try:
        if budget > 0:
            ctx = SchemeContext.for_sector(gmodel, structure, sector)
            found = search_codes(
                structure, sector, (code_order, code_order), ctx, budget=budget, seed=seed
            )
            doc = {"found": [c.report() for c in found], "seed": seed, "budget": budget}
        else:
            kord = structure.sectors[sector - 1].order
            code = derive_code(structure, sector, code_order, _load_u_star(u_star, kord, seed), slot)
            doc = code.report()
            doc["seed"] = seed
    except (CodeError, IndexError) as exc:
        _fail(EXIT_INPUT, str(exc))
    except NotInvariantError as exc:
        _fail(EXIT_NOT_INVARIANT, str(exc))
    except (ClosureCapError, CommutantError) as exc:
        _fail(EXIT_NUMERICAL, str(exc))
    doc["tolerances"] = tol_map
    _dump(doc, out)


@main.command()
@common_options
@click.option("--sector", required=True, type=int)
def difs(model_path, seed, tols, out, sector):
    """Compute the decoupling input constraints for a sector projection."""
    tol_map = _parse_tols(tols)
    model, gmodel, structure = _pipeline(model_path, seed)
    if structure is None:
        _fail(EXIT_INPUT, "the model has no noise; every input is admissible")
    try:
        p_proj = sector_projection(structure, sector)
        result = compute_difs(gmodel, p_proj, rtol=tol_map.get("difs_rtol", 1e-9))
    except NotInvariantError as exc:
        _fail(EXIT_NOT_INVARIANT, str(exc))
    except IndexError:
        _fail(EXIT_INPUT, f"sector {sector} out of range")
    doc = result.report()
    doc.update({"seed": seed, "tolerances": tol_map, "sector": sector})
    _dump(doc, out)


@main.command()
@common_options
@click.option("--standard", type=click.Choice(["oc", "esc", "loc", "lesc"]), required=True)
@click.option("--sector", type=int, default=None)
@click.option("--code-order", type=int, default=None)
@click.option("--u-star", default=None, help="'random', 'identity', or a JSON file")
@click.option("--slot", default=1, show_default=True, type=int)
@click.option("--budget", default=0, type=int, help="search budget when no --u-star is given")
def test(model_path, seed, tols, out, standard, sector, code_order, u_star, slot, budget):
    """Run a controllability test; logical standards run the full pipeline."""
    tol_map = _parse_tols(tols)
    model, gmodel, structure = _pipeline(model_path, seed)
    try:
        if standard in ("oc", "esc"):
            rep = test_oc(model) if standard == "oc" else test_esc(model)
        else:
            if structure is None:
                _fail(EXIT_INPUT, "logical standards need a noisy model")
            if sector is None:
                _fail(EXIT_INPUT, "--sector is required for logical standards")
            kord = structure.sectors[sector - 1].order
            n_cs = code_order if code_order is not None else kord
            if u_star is None and budget > 0:
                ctx = SchemeContext.for_sector(gmodel, structure, sector)
                found = search_codes(structure, sector, (n_cs, n_cs), ctx, budget=budget, seed=seed)
                if not found:
                    doc = {"standard": standard, "verdict": False, "searched": budget,
                           "details": "no candidate code passed", "seed": seed,
                           "tolerances": tol_map}
                    _dump(doc, out)
                    return
                code = found[0]
            else:
                spec = u_star if u_star is not None else "identity"
                code = derive_code(structure, sector, n_cs, _load_u_star(spec, kord, seed), slot)
            scheme = PStaticScheme(code=code, p_proj=sector_projection(structure, sector))
            rep = test_loc(scheme, gmodel) if standard == "loc" else test_lesc(scheme, gmodel)
        doc = rep.report()
    except ValueError as exc:
        _fail(EXIT_INPUT, str(exc))
    except NotInvariantError as exc:
        _fail(EXIT_NOT_INVARIANT, str(exc))
    except (ClosureCapError, CommutantError) as exc:
        _fail(EXIT_NUMERICAL, str(exc))
    doc.update({"seed": seed, "tolerances": tol_map})
    _dump(doc, out)


@main.command()
@common_options
@click.option("--sector", required=True, type=int)
@click.option("--t-final", default=1.0, show_default=True, type=float)
@click.option("--steps", default=8, show_default=True, type=int)
@click.option("--amplitude", default=1.0, show_default=True, type=float)
@click.option("--non-difs", is_flag=True, help="drive raw channel 1 instead (negative control)")
@click.option("--csv", "csv_path", default=None, type=click.Path(), help="trajectory CSV")
def simulate(model_path, seed, tols, out, sector, t_final, steps, amplitude, non_difs, csv_path):
    """Propagate a sector code state under a random admissible field."""
    tol_map = _parse_tols(tols)
    model, gmodel, structure = _pipeline(model_path, seed)
    if structure is None:
        _fail(EXIT_INPUT, "simulation of protected dynamics needs a noisy model")
    try:
        p_proj = sector_projection(structure, sector)
        result = compute_difs(gmodel, p_proj)
    except NotInvariantError as exc:
        _fail(EXIT_NOT_INVARIANT, str(exc))
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, t_final, steps + 1)
    if non_difs:
        # drive the single most-constrained raw channel
        col_norms = np.linalg.norm(result.Z, axis=0) if result.Z.size else np.zeros(0)
        k = int(np.argmax(col_norms)) if col_norms.size else 0
        u = np.zeros((steps, gmodel.n_controls))
        u[:, k] = amplitude
        field = ControlField("piecewise", u, grid)
    else:
        u_eff = amplitude * rng.normal(size=(steps, result.n_eff))
        field = ControlField.effective(result, u_eff, grid)
    # initial state: the sector's maximally mixed code state
    from .cvs import op_to_v

    sec = structure.sectors[sector - 1]
    V = sec.hilbert_columns
    rho0 = V @ V.conj().T / (sec.order * sec.multiplicity)
    v0 = op_to_v(rho0, structure.basis)
    try:
        traj = propagate(gmodel, field, v0, t_final, p_proj=p_proj, nc_proj=structure.pi_nc)
    except SimulationError as exc:
        _fail(EXIT_NUMERICAL, str(exc))
    if csv_path:
        with open(csv_path, "w") as fh:
            fh.write("time,norm,p_leakage,nc_leakage\n")
            for i, t in enumerate(traj.times):
                fh.write(
                    f"{t:.12g},{traj.diagnostics['norm'][i]:.12g},"
                    f"{traj.diagnostics['p_leakage'][i]:.12g},"
                    f"{traj.diagnostics['nc_leakage'][i]:.12g}\n"
                )
    doc = {
        "sector": sector,
        "t_final": t_final,
        "steps": steps,
        "max_p_leakage": float(np.max(traj.diagnostics["p_leakage"])),
        "max_nc_leakage": float(np.max(traj.diagnostics["nc_leakage"])),
        "final_norm": float(traj.diagnostics["norm"][-1]),
        "non_difs": bool(non_difs),
        "seed": seed,
        "tolerances": tol_map,
    }
    _dump(doc, out)


if __name__ == "__main__":
    main()
