"""Command line front end.

Subcommands
-----------
``adapt``
    Run the adaptive loop and write ``convergence.csv`` plus one
    ``mesh_iterK.vtk`` / ``solution_iterK.vtk`` pair per iteration.
``solve``
    Solve once on the initial mesh and write ``solution.vtk``.
``verify``
    Run a verification suite (``bessel``, ``harmonics``, ``dtn``, ``dual`` or
    ``all``) and print a JSON report.
``mesh``
    Build or import the configured mesh and write it as MSH 4.1 and VTK.

Every subcommand that takes ``--out`` writes ``run.json`` holding the
resolved configuration and the package version.

Configuration
-------------
A JSON object; every key is optional and defaults to the point-source
benchmark (``omega = pi``, ``mu = 1``, ``lambda = 2``, obstacle ball of
radius 0.5, ``R = 1``)::

    {
      "geometry": {"R": 1.0, "R_inner": 0.5},
      "material": {"lambda": 2.0, "mu": 1.0, "omega": 3.141592653589793},
      "incident": {"type": "point_source", "source": [0, 0, 0],
                   "component": 2, "amplitude": 10.0},
      "exact": "negated_incident",
      "epsilon": 1e-3, "eps_N": 1e-8, "solver_tol": 1e-10,
      "theta": 0.5, "max_dof": 80000, "max_iter": 25,
      "mesh": {"generate": "shell", "levels": 1},
      "N": null,
      "out": "out"
    }

``incident.type`` may also be ``"plane_wave"`` with ``direction`` and
``amplitude``; complex amplitudes are written as ``[re, im]``.  The mesh
source is either ``{"generate": "shell" | "bracket", ...}`` or
``{"msh": "path/to/file.msh"}``, never both.  ``exact`` is null or
``"negated_incident"``; the latter is valid when the source point lies
inside the obstacle, in which case the scattered field is ``-u_inc``.
Command line flags override values from the file.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dtn import ElasticParams, SphereGeometry

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAIL = 1
EXIT_CAP = 2

CSV_COLUMNS = ["iter", "dof", "n_trunc", "eps_h", "eps_N", "e_h", "eta_max", "marked",
               "wall_ms", "slope"]
SLOPE_WINDOW = 3

DEFAULTS = {
    "geometry": {"R": 1.0, "R_inner": 0.5},
    "material": {"lambda": 2.0, "mu": 1.0, "omega": math.pi},
    "incident": {"type": "point_source", "source": [0.0, 0.0, 0.0], "component": 2,
                 "amplitude": 10.0},
    "exact": "negated_incident",
    "epsilon": 1e-3,
    "eps_N": 1e-8,
    "solver_tol": 1e-10,
    "theta": 0.5,
    "max_dof": 80000,
    "max_iter": 25,
    "mesh": {"generate": "shell", "levels": 1},
    "N": None,
    "out": "out",
}


class ConfigError(ValueError):
    """Invalid or unreadable run configuration."""


# ---------------------------------------------------------------------------
# configuration


def _merge(base, extra, path=""):
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if key not in base:
            raise ConfigError(f"unknown configuration key {path + key!r}")
        if isinstance(base[key], dict) and key != "mesh" and key != "incident":
            if not isinstance(val, dict):
                raise ConfigError(f"{path + key!r} must be an object")
            out[key] = _merge(base[key], val, path + key + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


def _complex(val, name):
    if isinstance(val, (list, tuple)):
        if len(val) != 2:
            raise ConfigError(f"{name} must be a number or [re, im]")
        return complex(float(val[0]), float(val[1]))
    try:
        return complex(float(val))
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number or [re, im]") from None


@dataclass
class RunConfig:
    """Validated run configuration.

    ``raw`` keeps the merged JSON object; it is echoed into ``run.json``.
    """

    raw: dict
    params: ElasticParams
    geometry: SphereGeometry
    epsilon: float
    eps_N: float
    solver_tol: float
    theta: float
    max_dof: int
    max_iter: int
    N: int | None
    out: Path

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        try:
            return cls._validate(_merge(DEFAULTS, data))
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from None

    @classmethod
    def _validate(cls, raw: dict) -> "RunConfig":
        mat, geo = raw["material"], raw["geometry"]
        params = ElasticParams(float(mat["lambda"]), float(mat["mu"]), float(mat["omega"]))
        geometry = SphereGeometry(float(geo["R_inner"]), float(geo["R"]))
        for key in ("epsilon", "eps_N", "solver_tol"):
            if not float(raw[key]) > 0:
                raise ConfigError(f"{key} must be positive, got {raw[key]}")
        if not 0 < float(raw["theta"]) < 1:
            raise ConfigError(f"theta must lie in (0, 1), got {raw['theta']}")
        for key in ("max_dof", "max_iter"):
            if int(raw[key]) < 1:
                raise ConfigError(f"{key} must be a positive integer")
        if raw["N"] is not None and int(raw["N"]) < 1:
            raise ConfigError("N must be a positive integer or null")
        mesh = raw["mesh"]
        if not isinstance(mesh, dict) or ("generate" in mesh) == ("msh" in mesh):
            raise ConfigError("mesh needs exactly one of 'generate' and 'msh'")
        if "generate" in mesh and mesh["generate"] not in ("shell", "bracket"):
            raise ConfigError(f"unknown mesh generator {mesh['generate']!r}")
        if raw["exact"] not in (None, "negated_incident"):
            raise ConfigError("exact must be null or 'negated_incident'")
        if raw["exact"] and raw["incident"].get("type") != "point_source":
            raise ConfigError("'negated_incident' needs a point source inside the obstacle")
        if raw["exact"]:
            src = np.asarray(raw["incident"].get("source", (0.0, 0.0, 0.0)), float)
            if src.shape != (3,) or not np.linalg.norm(src) < geometry.r_inner:
                raise ConfigError("'negated_incident' needs the source strictly inside R_inner")
        cfg =cls(raw, params, geometry, float(raw["epsilon"]), float(raw["eps_N"]),
                  float(raw["solver_tol"]), float(raw["theta"]), int(raw["max_dof"]),
                  int(raw["max_iter"]), None if raw["N"] is None else int(raw["N"]),
                  Path(raw["out"]))
        cfg.incident()
        return cfg

    def incident(self):
        """Incident field callable described by ``raw['incident']``."""
        from .scattering import PlaneWave, PointSource

        spec = dict(self.raw["incident"])
        kind = spec.pop("type", None)
        try:
            if kind == "point_source":
                src = [float(v) for v in spec.get("source", (0.0, 0.0, 0.0))]
                comp = int(spec.get("component", 2))
                if len(src) != 3 or comp not in (0, 1, 2):
                    raise ConfigError("point source needs a 3-vector and component 0, 1 or 2")
                return PointSource(self.params, tuple(src), comp,
                                   _complex(spec.get("amplitude", 10.0), "incident.amplitude"))
            if kind == "plane_wave":
                d = np.asarray(spec.get("direction", (0.0, 0.0, 1.0)), float)
                if d.shape != (3,) or not np.linalg.norm(d) > 0:
                    raise ConfigError("plane wave direction must be a non-zero 3-vector")
                return PlaneWave(self.params, tuple(d),
                                 _complex(spec.get("amplitude", 1.0), "incident.amplitude"))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid incident field: {exc}") from None
        raise ConfigError(f"unknown incident type {kind!r}")

    def exact(self):
        if self.raw["exact"] is None:
            return None
        from .scattering import Negated
        return Negated(self.incident())

    def build_mesh(self):
        """Generate or import the initial mesh."""
        from .mesh import OBSTACLE, OUTER, MeshError, check_mesh, gen_bracket_mesh, gen_shell_mesh, import_msh

        spec = dict(self.raw["mesh"])
        R, Rp = self.geometry.r_outer, self.geometry.r_inner
        try:
            if "msh" in spec:
                mesh = import_msh(spec["msh"])
            elif spec["generate"] == "shell":
                mesh = gen_shell_mesh(float(spec.get("obstacle_radius", Rp)), R,
                                      int(spec.get("levels", 1)))
            else:
                mesh = gen_bracket_mesh(int(spec.get("cells", 16)), R,
                                        float(spec.get("arm", 0.25)), float(spec.get("core", 0.5)))
            check_mesh(mesh)
        except OSError as exc:
            raise ConfigError(f"cannot read mesh: {exc}") from None
        except (MeshError, ValueError, TypeError) as exc:
            raise ConfigError(f"mesh error: {exc}") from None
        outer = mesh.tagged_vertices(OUTER)
        if outer.size == 0:
            raise ConfigError("mesh has no faces tagged as the artificial sphere")
        radii = np.linalg.norm(mesh.vertices[outer], axis=1)
        if np.max(np.abs(radii - R)) > 1e-6 * R:
            raise ConfigError(f"outer boundary vertices are not on the sphere of radius {R}")
        if np.max(np.linalg.norm(mesh.vertices, axis=1)) > R * (1 + 1e-6):
            raise ConfigError("mesh extends beyond the artificial sphere")
        inner = np.linalg.norm(mesh.vertices[mesh.tagged_vertices(OBSTACLE)], axis=1)
        if inner.size == 0 or inner.max() > Rp * (1 + 1e-6):
            raise ConfigError(f"obstacle must lie inside the ball of radius R_inner={Rp}")
        mesh.projection.setdefault(OUTER, R)
        return mesh

    def echo(self) -> dict:
        return {"version": __version__, "config": self.raw}


def resolve_config(args) -> RunConfig:
    """Load ``--config`` (or defaults) and apply command line overrides."""
    data = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        if "mesh" in data and isinstance(data["mesh"], dict) and "msh" in data["mesh"]:
            msh = Path(data["mesh"]["msh"])
            if not msh.is_absolute():
                data["mesh"] = dict(data["mesh"], msh=str(Path(args.config).parent / msh))
    overrides = {"theta": "theta", "epsilon": "epsilon", "epsN": "eps_N",
                 "max_dof": "max_dof", "max_iter": "max_iter", "out": "out"}
    for attr, key in overrides.items():
        val = getattr(args, attr, None)
        if val is not None:
            data[key] = val
    return RunConfig.from_dict(data)


# ---------------------------------------------------------------------------
# output helpers


def _prepare_out(cfg: RunConfig) -> Path:
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {cfg.out}: {exc.strerror}") from None
    (cfg.out / "run.json").write_text(json.dumps(cfg.echo(), indent=2) + "\n")
    return cfg.out


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def fitted_slope(dofs, values, window: int = SLOPE_WINDOW):
    """Least squares slope of ``log(values)`` against ``log(dofs)`` over the last ``window`` rows.

    Returns None with fewer than two rows.
    """
    d = np.log(np.asarray(dofs[-window:], float))
    v = np.log(np.asarray(values[-window:], float))
    if d.size < 2 or np.ptp(d) == 0:
        return None
    return float(np.polyfit(d, v, 1)[0])


class ConvergenceWriter:
    """Streams iteration records to ``convergence.csv`` and VTK files."""

    def __init__(self, out: Path, vtk: bool = True):
        self.out = out
        self.vtk = vtk
        self.dofs, self.eps = [], []
        self.rows = []
        self._fh = open(out / "convergence.csv", "w", newline="", encoding="utf-8")
        self._csv = csv.writer(self._fh, lineterminator="\n")
        self._csv.writerow(CSV_COLUMNS)

    def __call__(self, item):
        from .mesh import write_vtk

        ind = item.indicators
        self.dofs.append(item.mesh.num_dofs)
        self.eps.append(ind.eps_h)
        row = [str(item.iteration), str(item.mesh.num_dofs), str(item.N), _fmt(ind.eps_h),
               _fmt(ind.eps_N), _fmt(item.e_h), _fmt(ind.eta_max), str(item.marked),
               f"{item.wall_ms:.3f}", _fmt(fitted_slope(self.dofs, self.eps))]
        self.rows.append(row)
        self._csv.writerow(row)
        self._fh.flush()
        if self.vtk:
            k = item.iteration
            write_vtk(self.out / f"mesh_iter{k}.vtk", item.mesh)
            write_vtk(self.out / f"solution_iter{k}.vtk", item.mesh,
                      point_data={"displacement": item.u.reshape(-1, 3)},
                      cell_data={"eta": ind.eta})

    def close(self):
        self._fh.close()


# ---------------------------------------------------------------------------
# subcommands


def cmd_adapt(cfg: RunConfig, vtk: bool = True) -> int:
    """Run the adaptive loop; 0 when ``eps_h <= epsilon``, 2 on a cap."""
    from .estimator import AdaptConfig, adapt_loop

    mesh = cfg.build_mesh()
    out = _prepare_out(cfg)
    writer = ConvergenceWriter(out, vtk=vtk)
    try:
        rec = adapt_loop(AdaptConfig(cfg.params, cfg.geometry, mesh, cfg.incident(),
                                     epsilon=cfg.epsilon, theta=cfg.theta,
                                     eps_N_target=cfg.eps_N, max_dof=cfg.max_dof,
                                     max_iter=cfg.max_iter, exact=cfg.exact(), N=cfg.N,
                                     on_iteration=writer))
    finally:
        writer.close()
    last = rec.iterations[-1] if rec.iterations else None
    summary = {"status": rec.status, "N": rec.N, "iterations": len(rec.iterations),
               "dof": last.mesh.num_dofs if last else mesh.num_dofs,
               "eps_h": last.indicators.eps_h if last else None,
               "slope": fitted_slope(writer.dofs, writer.eps) if writer.dofs else None}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return EXIT_OK if rec.status == "converged" else EXIT_CAP


def cmd_solve(cfg: RunConfig) -> int:
    """Single solve on the initial mesh with indicators and, if known, the true error."""
    from .dtn import select_truncation, truncation_error
    from .estimator import dirichlet_data_error, element_indicator, field_h1_norm
    from .fem import ModeCoeffs, h1_error, solve_discrete
    from .mesh import write_vtk
    from .scattering import Negated

    mesh = cfg.build_mesh()
    out = _prepare_out(cfg)
    inc = cfg.incident()
    g = Negated(inc)
    t0 = time.perf_counter()
    norm = field_h1_norm(mesh, inc)
    N = cfg.N if cfg.N is not None else select_truncation(cfg.geometry, norm, cfg.eps_N)
    sol = solve_discrete(mesh, cfg.params, cfg.geometry, g, N)
    coeffs = ModeCoeffs(N, np.einsum("ajk,j->ka", sol.Phi, sol.u[sol.boundary.dofs]))
    ind = element_indicator(mesh, cfg.params, sol.u, coeffs, N, boundary=sol.boundary,
                            real_basis=True)
    data_err = dirichlet_data_error(mesh, g, sol.u)
    exact = cfg.exact()
    summary = {"dof": mesh.num_dofs, "N": N,
               "eps_N": truncation_error(cfg.geometry, N, norm),
               "eps_h": float(np.sqrt(np.sum(ind.eta**2))) + data_err,
               "e_h": h1_error(mesh, sol.u, exact) if exact is not None else None,
               "wall_ms": (time.perf_counter() - t0) * 1e3}
    write_vtk(out / "solution.vtk", mesh, point_data={"displacement": sol.u.reshape(-1, 3)},
              cell_data={"eta": ind.eta})
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return EXIT_OK


def cmd_mesh(cfg: RunConfig) -> int:
    """Write the configured initial mesh as ``mesh.msh`` and ``mesh.vtk``."""
    from .mesh import write_msh, write_vtk

    mesh = cfg.build_mesh()
    out = _prepare_out(cfg)
    write_msh(out / "mesh.msh", mesh)
    write_vtk(out / "mesh.vtk", mesh)
    print(json.dumps({"vertices": mesh.num_vertices, "tets": mesh.num_tets,
                      "dof": mesh.num_dofs}))
    return EXIT_OK


def cmd_verify(suite: str, out: Path | None = None) -> int:
    """Run a verification suite and print a JSON report; 0 iff every check passes."""
    from .verification import SUITES, run_suites

    if suite != "all" and suite not in SUITES:
        print(f"error: unknown suite {suite!r}; choose from {', '.join(sorted(SUITES))} or all",
              file=sys.stderr)
        return EXIT_CONFIG
    names = sorted(SUITES) if suite == "all" else [suite]
    report = run_suites(names)
    text = json.dumps(report, indent=2)
    print(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify.json").write_text(text + "\n")
        (out / "run.json").write_text(json.dumps({"version": __version__, "suite": suite},
                                                 indent=2) + "\n")
    return EXIT_OK if report["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elastodtn",
                                     description="Adaptive FEM with a truncated DtN boundary "
                                                 "condition for elastic scattering.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_args(p):
        p.add_argument("--config", metavar="PATH", help="JSON run configuration")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--theta", type=float, metavar="F", help="marking fraction in (0, 1)")
        p.add_argument("--epsilon", type=float, metavar="F", help="target for eps_h")
        p.add_argument("--epsN", type=float, metavar="F", help="target for the truncation error")
        p.add_argument("--max-dof", type=int, metavar="N", dest="max_dof",
                       help="stop before a mesh with more DoF is solved")
        p.add_argument("--max-iter", type=int, metavar="N", dest="max_iter",
                       help="maximal number of solves")

    p = sub.add_parser("adapt", help="run the adaptive loop")
    run_args(p)
    p.add_argument("--no-vtk", action="store_true", help="skip per-iteration VTK output")
    p = sub.add_parser("solve", help="solve once on the initial mesh")
    run_args(p)
    p = sub.add_parser("mesh", help="write the initial mesh as MSH and VTK")
    run_args(p)
    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", metavar="NAME", default="all",
                   help="bessel, harmonics, dtn, dual or all")
    p.add_argument("--out", metavar="DIR", help="also write verify.json here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        return cmd_verify(args.suite, Path(args.out) if args.out else None)
    try:
        cfg = resolve_config(args)
        if args.command == "adapt":
            return cmd_adapt(cfg, vtk=not args.no_vtk)
        if args.command == "solve":
            return cmd_solve(cfg)
        return cmd_mesh(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
