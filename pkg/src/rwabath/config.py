"""Scenario files.

A scenario is a YAML mapping with the sections ``system``, ``bath``,
``occupation``, ``initial``, ``solver``, ``bvh``, ``oracle`` and
``outputs``. Complex numbers are written as ``[re, im]`` pairs (a bare
number is read as real). Matrices are nested row lists or flat row-major
lists. See the README for the full schema.
"""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, InvalidModel, NumericError
from .model import (
    FlatWindow,
    GaussianOccupation,
    GeneralGridOccupation,
    InitialState,
    Lorentzian,
    SystemHamiltonian,
    Tabulated,
    TabulatedOccupation,
    WindowOccupation,
)

__all__ = [
    "Scenario",
    "SolverSettings",
    "BvhSettings",
    "OracleSettings",
    "load_scenario",
    "parse_scenario",
]


@dataclass(frozen=True)
class SolverSettings:
    step: float = 0.01
    horizon: float = 10.0
    stride: int = 1
    method: str = "eigen"
    coupling: float = 1.0
    memory_cutoff: object = None


@dataclass(frozen=True)
class BvhSettings:
    lambdas: tuple = ()
    tau_max: float = 5.0
    tau_min: float = 0.5
    n_tau: int = 46
    step: float = 0.01


@dataclass(frozen=True)
class OracleSettings:
    enabled: bool = False
    modes: int = 400
    window: tuple = (-8.0, 8.0)
    min_coverage: float = 0.999
    tolerance: float = 5e-3


@dataclass(frozen=True, eq=False)
class Scenario:
    hamiltonian: SystemHamiltonian
    family: object
    occupation: object
    initial: InitialState
    solver: SolverSettings
    bvh: BvhSettings
    oracle: OracleSettings
    output_dir: Path
    source: dict = field(default_factory=dict, repr=False)

    @property
    def n_levels(self):
        return self.hamiltonian.n_levels


# ---------------------------------------------------------------------------
# field readers


def _section(tree, name, required=True):
    if name not in tree or tree[name] is None:
        if required:
            raise ConfigError(name, "missing section")
        return {}
    sec = tree[name]
    if not isinstance(sec, dict):
        raise ConfigError(name, "must be a mapping")
    return sec


def _float(sec, key, path, default=None, positive=False, nonneg=False):
    if key not in sec or sec[key] is None:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing value")
        return float(default)
    val = sec[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {val!r}")
    val = float(val)
    if not np.isfinite(val):
        raise ConfigError(f"{path}.{key}", "must be finite")
    if positive and not val > 0:
        raise ConfigError(f"{path}.{key}", "must be positive")
    if nonneg and val < 0:
        raise ConfigError(f"{path}.{key}", "must be non-negative")
    return val


def _int(sec, key, path, default, minimum=1):
    val = sec.get(key, default)
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {val!r}")
    if val < minimum:
        raise ConfigError(f"{path}.{key}", f"must be >= {minimum}")
    return val


def _complex(x, path):
    if isinstance(x, bool):
        raise ConfigError(path, "expected a number or [re, im] pair")
    if isinstance(x, (int, float)):
        return complex(float(x), 0.0)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(float(x[0]), float(x[1]))
    raise ConfigError(path, f"expected a number or [re, im] pair, got {x!r}")


def _matrix(x, path, n=None):
    if not isinstance(x, (list, tuple)) or not x:
        raise ConfigError(path, "expected a matrix")
    # nested form: a square list of rows; anything else is read row-major flat
    nested = all(isinstance(row, (list, tuple)) and len(row) == len(x) for row in x)
    if nested:
        rows = [[_complex(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)] for i, row in enumerate(x)]
        if any(len(r) != len(rows) for r in rows):
            raise ConfigError(path, "matrix must be square")
        m = np.array(rows, dtype=complex)
    else:
        flat = [_complex(v, f"{path}[{i}]") for i, v in enumerate(x)]
        k = int(round(np.sqrt(len(flat))))
        if k * k != len(flat):
            raise ConfigError(path, f"flat matrix needs a square number of entries, got {len(flat)}")
        m = np.array(flat, dtype=complex).reshape(k, k)
    if n is not None and m.shape[0] != n:
        raise ConfigError(path, f"expected a {n}x{n} matrix, got {m.shape[0]}x{m.shape[0]}")
    return m


def _real_list(x, path):
    if not isinstance(x, (list, tuple)) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        raise ConfigError(path, "expected a list of numbers")
    return np.array(x, dtype=float)


# ---------------------------------------------------------------------------
# sections


def _system(sec):
    try:
        if "energies" in sec:
            return SystemHamiltonian.diagonal(_real_list(sec["energies"], "system.energies"))
        if "hamiltonian" not in sec:
            raise ConfigError("system.hamiltonian", "missing value")
        n = sec.get("n_levels")
        m = _matrix(sec["hamiltonian"], "system.hamiltonian", n)
        return SystemHamiltonian(m)
    except InvalidModel as exc:
        raise ConfigError("system.hamiltonian", str(exc)) from exc


def _bath(sec):
    kind = str(sec.get("family", "")).lower()
    try:
        if kind == "lorentzian":
            return Lorentzian(_float(sec, "strength", "bath", nonneg=True),
                              _float(sec, "center", "bath", 0.0),
                              _float(sec, "width", "bath", positive=True))
        if kind in ("flat", "flat_window", "window"):
            return FlatWindow(_float(sec, "height", "bath", nonneg=True),
                              _float(sec, "lo", "bath"), _float(sec, "hi", "bath"))
        if kind == "tabulated":
            return Tabulated(_real_list(sec.get("grid"), "bath.grid"),
                             _real_list(sec.get("values"), "bath.values"))
    except InvalidModel as exc:
        raise ConfigError("bath", str(exc)) from exc
    raise ConfigError("bath.family", f"unknown family {sec.get('family')!r}")


def _occupation(sec, n_levels):
    kind = str(sec.get("kind", "none")).lower()
    path = "occupation"
    try:
        if kind in ("none", "vacuum"):
            return None
        if kind == "gaussian":
            center = _float(sec, "center", path, 0.0)
            width = _float(sec, "width", path, 1.0, positive=True)
            if sec.get("normalized", False):
                return GaussianOccupation.normalized(center, width, n_levels)
            return GaussianOccupation(_float(sec, "amplitude", path, nonneg=True), center, width)
        if kind == "window":
            return WindowOccupation(_float(sec, "value", path, nonneg=True),
                                    _float(sec, "lo", path), _float(sec, "hi", path))
        if kind == "tabulated":
            return TabulatedOccupation(_real_list(sec.get("grid"), f"{path}.grid"),
                                       _real_list(sec.get("values"), f"{path}.values"))
        if kind == "grid":
            grid = _real_list(sec.get("grid"), f"{path}.grid")
            dk = _float(sec, "dk", path, positive=True)
            packets = sec.get("packets")
            if not isinstance(packets, list) or not packets:
                raise ConfigError(f"{path}.packets", "expected a non-empty list of wavepackets")
            amps, probs = [], []
            for i, pk in enumerate(packets):
                p = f"{path}.packets[{i}]"
                if not isinstance(pk, dict):
                    raise ConfigError(p, "expected a mapping")
                probs.append(_float(pk, "probability", p, nonneg=True))
                a = pk.get("amplitudes")
                if not isinstance(a, list) or len(a) != grid.size:
                    raise ConfigError(f"{p}.amplitudes", "need one row per grid point")
                rows = []
                for k, row in enumerate(a):
                    if n_levels == 1 and not (isinstance(row, list) and len(row) == 1):
                        row = [row]
                    if not isinstance(row, list) or len(row) != n_levels:
                        raise ConfigError(f"{p}.amplitudes[{k}]", f"need {n_levels} entries")
                    rows.append([_complex(v, f"{p}.amplitudes[{k}]") for v in row])
                amps.append(rows)
            return GeneralGridOccupation.from_wavepackets(grid, np.array(amps), np.array(probs), dk)
    except InvalidModel as exc:
        raise ConfigError(path, str(exc)) from exc
    raise ConfigError("occupation.kind", f"unknown occupation {sec.get('kind')!r}")


def parse_scenario(tree, base_dir="."):
    """Validate a parsed YAML tree and build the model objects.

    Raises
    ------
    ConfigError
        Naming the offending field.
    """
    if not isinstance(tree, dict):
        raise ConfigError("<root>", "scenario must be a mapping")
    ham = _system(_section(tree, "system"))
    n = ham.n_levels
    family = _bath(_section(tree, "bath"))
    occ = _occupation(_section(tree, "occupation", required=False), n)

    ini = _section(tree, "initial")
    p = _float(ini, "p", "initial", 1.0)
    if not 0.0 <= p <= 1.0:
        raise ConfigError("initial.p", "must lie in [0, 1]")
    if "sigma" in ini:
        sigma = _matrix(ini["sigma"], "initial.sigma", n + 1)
    else:
        sigma = np.zeros((n + 1, n + 1), dtype=complex)
        sigma[1, 1] = 1.0
    try:
        initial = InitialState(p, sigma, occ)
    except InvalidModel as exc:
        field_name = "occupation" if "reservoir" in str(exc) else "initial.sigma"
        raise ConfigError(field_name, str(exc)) from exc

    s = _section(tree, "solver", required=False)
    step = _float(s, "step", "solver", 0.01, positive=True)
    horizon = _float(s, "horizon", "solver", 10.0, nonneg=True)
    ratio = horizon / step
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        raise ConfigError("solver.horizon", "must be an integer multiple of solver.step")
    method = str(s.get("method", "eigen"))
    if method not in ("eigen", "dense"):
        raise ConfigError("solver.method", "must be 'eigen' or 'dense'")
    cutoff = s.get("memory_cutoff")
    if cutoff is not None and cutoff is not False:
        cutoff = _float(s, "memory_cutoff", "solver", positive=True)
    solver = SolverSettings(step, horizon, _int(s, "stride", "solver", 1), method,
                            _float(s, "coupling", "solver", 1.0, nonneg=True), cutoff)

    b = _section(tree, "bvh", required=False)
    lams = b.get("lambdas", [])
    lams = tuple(_real_list(lams, "bvh.lambdas")) if lams else ()
    if any(x <= 0 for x in lams):
        raise ConfigError("bvh.lambdas", "entries must be positive")
    if list(lams) != sorted(lams, reverse=True):
        raise ConfigError("bvh.lambdas", "must be in descending order")
    bvh = BvhSettings(lams, _float(b, "tau_max", "bvh", 5.0, positive=True),
                      _float(b, "tau_min", "bvh", 0.5, nonneg=True),
                      _int(b, "n_tau", "bvh", 46, minimum=2),
                      _float(b, "step", "bvh", 0.01, positive=True))
    if bvh.tau_min >= bvh.tau_max:
        raise ConfigError("bvh.tau_min", "must be below bvh.tau_max")

    o = _section(tree, "oracle", required=False)
    window = o.get("window", [-8.0, 8.0])
    window = _real_list(window, "oracle.window")
    if window.size != 2 or not window[1] > window[0]:
        raise ConfigError("oracle.window", "expected [lo, hi] with lo < hi")
    enabled = o.get("enabled", False)
    if not isinstance(enabled, bool):
        raise ConfigError("oracle.enabled", "expected true or false")
    oracle = OracleSettings(enabled, _int(o, "modes", "oracle", 400),
                            (float(window[0]), float(window[1])),
                            _float(o, "min_coverage", "oracle", 0.999, positive=True),
                            _float(o, "tolerance", "oracle", 5e-3, positive=True))

    out = _section(tree, "outputs", required=False)
    directory = out.get("directory", "out")
    if not isinstance(directory, str) or not directory:
        raise ConfigError("outputs.directory", "expected a path")
    out_dir = Path(directory)
    if not out_dir.is_absolute():
        out_dir = Path(base_dir) / out_dir
    return Scenario(ham, family, occ, initial, solver, bvh, oracle, out_dir, tree)


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from exc
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"not valid YAML: {exc}") from exc
    try:
        return parse_scenario(tree, base_dir=path.parent)
    except NumericError as exc:
        raise ConfigError("<scenario>", str(exc)) from exc
