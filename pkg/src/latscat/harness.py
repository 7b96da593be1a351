"""Experiment orchestration: identity suites, route-agreement sweeps,
entropy scans over truncation level, transfer diagnostics, and emission.

Reports are deterministic functions of (config, seed): cells are generated
in a fixed order, executed by an order-preserving map (optionally on a
thread pool), and serialized with repr-stable floats.  A failed cell is
recorded with its error and never aborts a scan.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND
from . import cxmat, detformula, scattering, transfer
from .lattice import Potential, build_cyclic
from .spectral import band_partition

KINDS = ("IDENTITY_SUITE", "ROUTE_AGREEMENT", "ENTROPY_SCAN", "TRANSFER_DIAG", "DENSITY")

_DEFAULT_TOLERANCES = {
    "shift_identity_abs": 1e-12,
    "variant_rel": 1e-10,
    "route_rel": 1e-8,
    "final_decrement": 1e-2,
    "recursion_residual": 1e-9,
}


@dataclass
class ExperimentConfig:
    kind: str
    family: object = "zero"
    q: int = 1
    seed: int = 0
    delta: float = 0.1
    n_ladder: list = field(default_factory=lambda: [2**j for j in range(5, 13)])
    z_grid: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    jobs: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if list(self.n_ladder) != sorted(set(int(n) for n in self.n_ladder)):
            raise ValueError("n_ladder must be strictly increasing")
        tol = dict(_DEFAULT_TOLERANCES)
        tol.update(self.tolerances)
        self.tolerances = tol

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        return ExperimentConfig(**json.loads(text))


@dataclass
class ScanReport:
    kind: str
    config: dict
    cells: list
    summary: dict
    passed: bool
    stamp: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @staticmethod
    def from_json(text: str) -> "ScanReport":
        return ScanReport(**json.loads(text))


def _stamp() -> dict:
    return {"package": "latscat", "version": __version__, "kernels": BACKEND, "schema": 1}


def gen_family(descriptor, n_max: int) -> Potential:
    """Instantiate a potential family on [1, n_max].

    Descriptors: "zero"; {"kind": "qper_log", "c": [...], } for
    c[(n-1) mod q] / log(n+2); {"kind": "random_l2q", "q", "amplitude",
    "seed"} for a modulated profile plus l2 noise (q-step differences stay
    square-summable); {"kind": "slow_decay", "c", "beta"} for c/(n+1)^beta;
    {"kind": "random_compact", "support", "amplitude", "seed"};
    {"kind": "literal", "support_lo", "values"}.
    """
    if descriptor == "zero" or descriptor is None:
        return Potential(1, np.zeros(0), family="zero")
    if not isinstance(descriptor, dict):
        raise ValueError(f"unknown family descriptor {descriptor!r}")
    kind = descriptor.get("kind")
    n = np.arange(1, n_max + 1, dtype=np.float64)
    if kind == "zero":
        return Potential(1, np.zeros(0), family="zero")
    if kind == "qper_log":
        c = np.asarray(descriptor["c"], dtype=np.float64)
        vals = c[(np.arange(1, n_max + 1) - 1) % len(c)] / np.log(n + 2.0)
        return Potential(1, vals, family="qper_log")
    if kind == "random_l2q":
        q = int(descriptor["q"])
        amp = float(descriptor.get("amplitude", 0.1))
        rng = np.random.default_rng(int(descriptor.get("seed", 0)))
        c = rng.uniform(-amp, amp, size=q)
        noise = rng.uniform(-1.0, 1.0, size=n_max) * amp / (n + 1.0)
        vals = c[(np.arange(1, n_max + 1) - 1) % q] / np.log(n + 2.0) + noise
        return Potential(1, vals, family="random_l2q")
    if kind == "slow_decay":
        c = float(descriptor.get("c", 0.1))
        beta = float(descriptor["beta"])
        if beta <= 0:
            raise ValueError("slow_decay needs beta > 0")
        return Potential(1, c / (n + 1.0) ** beta, family="slow_decay")
    if kind == "random_compact":
        support = min(int(descriptor.get("support", 12)), n_max)
        amp = float(descriptor.get("amplitude", 0.3))
        rng = np.random.default_rng(int(descriptor.get("seed", 0)))
        return Potential(1, rng.uniform(-amp, amp, size=support), family="random_compact")
    if kind == "literal":
        return Potential(int(descriptor["support_lo"]),
                         np.asarray(descriptor["values"], dtype=np.float64),
                         family="literal")
    raise ValueError(f"unknown family descriptor kind {kind!r}")


def _map_cells(work, items, jobs: int):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(work, items))
    return [work(it) for it in items]


def _identity_suite(config: ExperimentConfig) -> ScanReport:
    rng = np.random.default_rng(config.seed)
    count = int(config.params.get("count", 500))
    n_max = int(config.params.get("n_max", 10))
    trials = []
    for t in range(count):
        n = int(rng.integers(2, n_max + 1))
        width = int(rng.integers(1, min(5, 2 * n - 1) + 1))
        lo = int(rng.integers(-n + 1, n - width + 1))
        vals = rng.uniform(-0.5, 0.5, size=width)
        z = complex(rng.uniform(-3.0, 3.0), rng.uniform(0.1, 2.0))
        trials.append((t, n, lo, vals, z))

    tol = config.tolerances

    def work(item):
        t, n, lo, vals, z = item
        try:
            sys = build_cyclic(Potential(lo, vals), z, n)
            lm, rm = sys.L - sys.Lam, sys.R - sys.Lam
            shift_identity = max(
                np.abs(lm @ rm - (-sys.Lam @ sys.K - sys.Om @ sys.L)).max(),
                np.abs(lm @ rm - (-sys.K @ sys.Lam - sys.R @ sys.Om)).max(),
                np.abs(rm @ lm - (-sys.K @ sys.Lam + sys.Om @ sys.L)).max(),
            )
            det_k = cxmat.lu_det(sys.K)
            j_rel = max(
                abs(detformula.cyclic_det_variant(sys, v) - det_k) / abs(det_k)
                for v in ("J1", "J2", "J3")
            )
            mid = detformula.cyclic_det_variant(sys, "J1", middle_rewrite=True)
            mid_rel = abs(mid - detformula.cyclic_det_variant(sys, "J1")) / abs(det_k)
            ok = (shift_identity <= tol["shift_identity_abs"] and j_rel <= tol["variant_rel"]
                  and mid_rel <= tol["variant_rel"])
            return {"trial": t, "n": n, "z_re": z.real, "z_im": z.imag,
                    "shift_identity_abs": float(shift_identity), "variant_rel": float(j_rel),
                    "middle_rel": float(mid_rel), "passed": bool(ok)}
        except Exception as exc:  # a failed cell never aborts the scan
            return {"trial": t, "n": n, "z_re": z.real, "z_im": z.imag,
                    "error": repr(exc), "passed": False}

    cells = _map_cells(work, trials, config.jobs)
    clean = [c for c in cells if "error" not in c]
    summary = {
        "count": count,
        "failures": sum(1 for c in cells if not c["passed"]),
        "max_shift_identity_abs": max((c["shift_identity_abs"] for c in clean), default=float("nan")),
        "max_variant_rel": max((c["variant_rel"] for c in clean), default=float("nan")),
    }
    passed = all(c["passed"] for c in cells)
    return ScanReport("IDENTITY_SUITE", asdict(config), cells, summary, passed, _stamp())


def _default_rectangle(config: ExperimentConfig) -> list:
    g = dict(config.z_grid) if config.z_grid else {}
    re_lo, re_hi, re_n = g.get("re", [-1.9, 1.9, 20])
    im_lo, im_hi, im_n = g.get("im", [0.05, 1.0, 10])
    return [complex(x, y)
            for x in np.linspace(re_lo, re_hi, int(re_n))
            for y in np.linspace(im_lo, im_hi, int(im_n))]


def _route_agreement(config: ExperimentConfig) -> ScanReport:
    n_pot = int(config.params.get("potentials", 20))
    support = int(config.params.get("support", 12))
    amp = float(config.params.get("amplitude", 0.3))
    g = dict(config.z_grid) if config.z_grid else {}
    re_lo, re_hi, re_n = g.get("re", [-1.9, 1.9, 20])
    im_lo, im_hi, im_n = g.get("im", [0.05, 1.0, 10])
    xs = [float(x) for x in np.linspace(re_lo, re_hi, int(re_n))]
    ys = [float(y) for y in np.linspace(im_lo, im_hi, int(im_n))]
    pots = [gen_family({"kind": "random_compact", "support": support,
                        "amplitude": amp, "seed": config.seed + i}, support)
            for i in range(n_pot)]
    items = [(i, x) for i in range(n_pot) for x in xs]
    tol = config.tolerances["route_rel"]

    def work(item):
        # one branch-tracking descent covers the whole grid column
        i, x = item
        try:
            facs = detformula.am_factor_column(pots[i], x, ys)
        except Exception as exc:
            return [{"pot": i, "z_re": x, "z_im": y, "error": repr(exc),
                     "passed": False} for y in ys]
        out = []
        for y, fac in zip(ys, facs):
            z = complex(x, y)
            try:
                rec = scattering.a_jost(pots[i], z)
                a_det = detformula.transmission_det(pots[i], z)
                a_formula = fac.product
                scale = max(abs(rec.a), abs(a_det), abs(a_formula))
                disc = max(abs(rec.a - a_det), abs(rec.a - a_formula),
                           abs(a_det - a_formula)) / scale
                out.append({"pot": i, "z_re": z.real, "z_im": z.imag,
                            "a_re": rec.a.real, "a_im": rec.a.imag,
                            "b_re": rec.b.real, "b_im": rec.b.imag,
                            "a_det_re": a_det.real, "a_det_im": a_det.imag,
                            "a_formula_re": a_formula.real,
                            "a_formula_im": a_formula.imag,
                            "route_rel": float(disc), "passed": bool(disc <= tol)})
            except Exception as exc:
                out.append({"pot": i, "z_re": z.real, "z_im": z.imag,
                            "error": repr(exc), "passed": False})
        return out

    cells = [cell for column in _map_cells(work, items, config.jobs)
             for cell in column]
    clean = [c for c in cells if "error" not in c]
    summary = {
        "potentials": n_pot,
        "grid_points": len(xs) * len(ys),
        "failures": sum(1 for c in cells if not c["passed"]),
        "max_route_rel": max((c["route_rel"] for c in clean), default=float("nan")),
    }
    return ScanReport("ROUTE_AGREEMENT", asdict(config), cells,
                      summary, all(c["passed"] for c in cells), _stamp())


def _entropy_scan(config: ExperimentConfig) -> ScanReport:
    q = int(config.q)
    nodes = int(config.params.get("nodes", 257))
    part = band_partition(q, config.delta)
    intervals = part.intervals()
    items = [(int(n), j) for n in config.n_ladder for j in range(q)]

    def work(item):
        n, j = item
        try:
            v = gen_family(config.family, n)
            grid = scattering.simpson_grid(intervals[j], nodes)
            samples = scattering.spectral_density(v, grid, n)
            ent = scattering.entropy_integral(samples, intervals[j])
            return {"N": n, "interval": j, "a": intervals[j][0], "b": intervals[j][1],
                    "entropy": float(ent), "passed": True}
        except Exception as exc:
            return {"N": n, "interval": j, "error": repr(exc), "passed": False}

    cells = _map_cells(work, items, config.jobs)
    tol = config.tolerances["final_decrement"]
    per_interval = {}
    passed = all(c["passed"] for c in cells)
    for j in range(q):
        vals = [c["entropy"] for c in cells if c.get("interval") == j and "entropy" in c]
        if len(vals) != len(config.n_ladder):
            per_interval[str(j)] = {"complete": False}
            passed = False
            continue
        decrements = [max(0.0, vals[i - 1] - vals[i]) for i in range(1, len(vals))]
        final_dec = decrements[-1] if decrements else 0.0
        ok = final_dec < tol
        per_interval[str(j)] = {
            "complete": True,
            "entropies": vals,
            "min_over_N": min(vals),
            "final_decrement": final_dec,
            "passed": ok,
        }
        passed = passed and ok
    summary = {"q": q, "delta": config.delta, "n_ladder": list(config.n_ladder),
               "intervals": per_interval,
               "min_entropy": min((c["entropy"] for c in cells if "entropy" in c),
                                  default=float("nan"))}
    return ScanReport("ENTROPY_SCAN", asdict(config), cells, summary, passed, _stamp())


def _transfer_diag(config: ExperimentConfig) -> ScanReport:
    q = int(config.q)
    m_max = int(config.params.get("m_max", 200))
    band_points = int(config.params.get("band_points", 3))
    g = dict(config.z_grid) if config.z_grid else {}
    im_lo, im_hi, im_n = g.get("im", [0.05, 0.5, 2])
    margin = config.delta
    part = band_partition(q, margin)
    v = gen_family(config.family, q * (m_max + 1))
    zs = []
    for a, b in part.intervals():
        for x in np.linspace(a, b, band_points + 2)[1:-1]:
            for y in np.linspace(im_lo, im_hi, int(im_n)):
                zs.append(complex(float(x), float(y)))
    tol = config.tolerances

    def work(z):
        try:
            states = transfer.run_s_recursion(
                v, q, z, m_max, recon_tol=tol["recursion_residual"])
            det_err = 0.0
            unit_err = 0.0
            alpha_err = 0.0
            trace = []
            for st in states:
                blk = st.eigen.block
                det_err = max(det_err, abs(cxmat.lu_det(blk.T) - 1.0))
                unit_err = max(unit_err, abs(st.kappa * st.lambda2 - 1.0))
                if st.W is not None:
                    nxt = states[st.m + 1]
                    ts = transfer.alpha_decompose(st.eigen, nxt.eigen)
                    alpha_err = max(alpha_err, abs(sum(ts) - st.alpha))
                growth = np.exp(min(700.0, st.p_log.real))  # clamped |p|
                trace.append({
                    "m": st.m,
                    "S_abs": float(np.max(np.abs(st.s_scaled)) * growth),
                    "p_abs": float(growth),
                    "phi_abs": float(abs(st.phi)) if st.phi is not None else float("nan"),
                    "nu_abs": float(abs(st.nu)) if st.nu is not None else float("nan"),
                    "W_norm": float(np.linalg.norm(st.W, 2)) if st.W is not None else 0.0,
                })
            ok = (det_err <= 1e-12 * m_max and unit_err <= 1e-12 and alpha_err <= 1e-10)
            return {"z_re": z.real, "z_im": z.imag, "det_err": float(det_err),
                    "unit_err": float(unit_err), "alpha_sum_err": float(alpha_err),
                    "trace": trace, "passed": bool(ok)}
        except Exception as exc:
            return {"z_re": z.real, "z_im": z.imag, "error": repr(exc), "passed": False}

    cells = _map_cells(work, zs, config.jobs)
    clean = [c for c in cells if "error" not in c]
    summary = {
        "q": q, "m_max": m_max,
        "failures": sum(1 for c in cells if not c["passed"]),
        "max_det_err": max((c["det_err"] for c in clean), default=float("nan")),
        "max_alpha_sum_err": max((c["alpha_sum_err"] for c in clean), default=float("nan")),
    }
    return ScanReport("TRANSFER_DIAG", asdict(config), cells, summary,
                      all(c["passed"] for c in cells), _stamp())


def _density(config: ExperimentConfig) -> ScanReport:
    q = int(config.q)
    nodes = int(config.params.get("nodes", 257))
    n = int(config.params.get("N", config.n_ladder[-1]))
    part = band_partition(q, config.delta)
    v = gen_family(config.family, n)
    cells = []
    passed = True
    for j, interval in enumerate(part.intervals()):
        try:
            grid = scattering.simpson_grid(interval, nodes)
            samples = scattering.spectral_density(v, grid, n)
            for zz, rr in zip(samples.grid, samples.rho_prime):
                cells.append({"z": float(zz), "rho_prime": float(rr), "N": n,
                              "interval": j, "passed": True})
        except Exception as exc:
            cells.append({"interval": j, "error": repr(exc), "passed": False})
            passed = False
    summary = {"q": q, "N": n, "points": len(cells)}
    return ScanReport("DENSITY", asdict(config), cells, summary, passed, _stamp())


_RUNNERS = {
    "IDENTITY_SUITE": _identity_suite,
    "ROUTE_AGREEMENT": _route_agreement,
    "ENTROPY_SCAN": _entropy_scan,
    "TRANSFER_DIAG": _transfer_diag,
    "DENSITY": _density,
}


def run_experiment(config: ExperimentConfig) -> ScanReport:
    return _RUNNERS[config.kind](config)


def _write_csv(path: Path, fieldnames: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore",
                                restval="")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v)
                             for k, v in row.items() if k in fieldnames})


def emit(report: ScanReport, fmt: str, out_dir) -> list:
    """Write the report; returns the created paths.  Output is byte-stable
    for a fixed (config, seed, version)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = report.kind.lower()
    written = []
    if fmt == "json":
        path = out / f"{name}.json"
        path.write_text(report.to_json() + "\n")
        written.append(path)
    elif fmt == "csv":
        path = out / f"{name}.csv"
        if report.kind == "ROUTE_AGREEMENT":
            rows = []
            for c in report.cells:
                if "error" in c:
                    continue
                rows.append({"z_re": c["z_re"], "z_im": c["z_im"], "a_re": c["a_re"],
                             "a_im": c["a_im"], "b_re": c["b_re"], "b_im": c["b_im"],
                             "route": "JOST"})
                rows.append({"z_re": c["z_re"], "z_im": c["z_im"], "a_re": c["a_det_re"],
                             "a_im": c["a_det_im"], "b_re": "", "b_im": "",
                             "route": "DET"})
                rows.append({"z_re": c["z_re"], "z_im": c["z_im"],
                             "a_re": c["a_formula_re"], "a_im": c["a_formula_im"],
                             "b_re": "", "b_im": "", "route": "FORMULA"})
            _write_csv(path, ["z_re", "z_im", "a_re", "a_im", "b_re", "b_im", "route"], rows)
        elif report.kind == "DENSITY":
            _write_csv(path, ["z", "rho_prime", "N"],
                       [c for c in report.cells if "error" not in c])
        elif report.kind == "ENTROPY_SCAN":
            _write_csv(path, ["N", "interval", "a", "b", "entropy"],
                       [c for c in report.cells if "error" not in c])
        elif report.kind == "TRANSFER_DIAG":
            _write_csv(path, ["z_re", "z_im", "det_err", "unit_err", "alpha_sum_err"],
                       [c for c in report.cells if "error" not in c])
            for i, c in enumerate(report.cells):
                if "trace" not in c:
                    continue
                tpath = out / f"{name}_trace_{i}.csv"
                _write_csv(tpath, ["m", "S_abs", "p_abs", "phi_abs", "nu_abs", "W_norm"],
                           c["trace"])
                written.append(tpath)
        else:
            keys = sorted({k for c in report.cells for k in c if k != "trace"})
            _write_csv(path, keys, report.cells)
        written.insert(0, path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return written
