"""INI-style run configuration: schema, parsing with full error collection, emission."""
import configparser
import math
from dataclasses import dataclass, field

from .errors import ValidationError
from .expr import as_expression
from .mesh import gamma_classifier
from .model import FACTOR_KINDS, TRANSFER_KINDS, ModelParams, ReactionFactorFn, TransferFn, validate_coefficients
from .solver import SCHEMES

PRESETS = ("physical", "zero", "mms", "custom")
GAMMA_PRESETS = ("top_edge", "left_edge", "full_boundary_minus_bottom")
EXACT_CHOICES = ("coupled", "heat", "custom")

# data of the fixed presets; mms takes its data from the [verify] exact solution
PRESET_DATA = {
    "physical": {"U_ext": "1", "U_I": "0.5", "u_I": "0.3*(1 + sin(pi*x1)*cos(pi*y2))", "v_I": "1 + 0.5*cos(pi*y1)"},
    "zero": {"U_ext": "0", "U_I": "0", "u_I": "0", "v_I": "0"},
}


def _float(text):
    return float(text)


def _positive_int(text):
    n = int(text)
    if n < 1:
        raise ValueError("must be >= 1")
    return n


def _nonneg_int(text):
    n = int(text)
    if n < 0:
        raise ValueError("must be >= 0")
    return n


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _rect(text):
    vals = tuple(float(s) for s in text.replace(",", " ").split())
    if len(vals) != 4:
        raise ValueError("expected four numbers: x0 y0 x1 y1")
    if not (vals[2] > vals[0] and vals[3] > vals[1]):
        raise ValueError("upper corner must exceed lower corner")
    return vals


def _floats(text):
    vals = tuple(float(s) for s in text.replace(",", " ").split())
    if not vals:
        raise ValueError("expected at least one number")
    return vals


def _dt(text):
    if text.strip() == "auto":
        return "auto"
    v = float(text)
    if not v > 0:
        raise ValueError("dt must be > 0 or 'auto'")
    return v


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"choose from {', '.join(options)}")
        return text
    parse.options = options
    return parse


def _expr(text):
    as_expression(text)
    return text.strip()


def _text(text):
    return text.strip()


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    if isinstance(value, tuple):
        return " ".join(_fmt(v) for v in value)
    return str(value)


# section -> key -> (default, parser, help)
SCHEMA = {
    "mesh": {
        "omega": ("0 0 1 1", _rect, "macro rectangle x0 y0 x1 y1"),
        "cell": ("0 0 1 1", _rect, "micro cell rectangle x0 y0 x1 y1"),
        "nx": ("8", _positive_int, "macro cells in x"),
        "ny": ("8", _positive_int, "macro cells in y"),
        "cell_nx": ("8", _positive_int, "micro cells in y1"),
        "cell_ny": ("8", _positive_int, "micro cells in y2"),
        "gamma_r": ("top_edge", _choice(GAMMA_PRESETS), "reactive part of the cell boundary"),
    },
    "model": {
        "preset": ("physical", _choice(PRESETS), "data preset; custom reads U_ext, U_I, u_I, v_I below"),
        "theta": ("0.5", _float, "porosity, > 0"),
        "D": ("1.0", _float, "macro diffusivity, > 0"),
        "d1": ("1.0", _float, "micro diffusivity of u, > 0"),
        "d2": ("1.0", _float, "micro diffusivity of v, > 0"),
        "k": ("1.0", _float, "reaction constant, >= 0"),
        "alpha": ("1.0", _float, "molecular-weight ratio, > 0"),
        "b_kind": ("linear_positive_part", _choice(TRANSFER_KINDS), "transfer function"),
        "c_hat": ("1.0", _float, "Lipschitz constant of b, >= 0 (0 switches transfer off)"),
        "z_sat": ("inf", _float, "saturation level of b (saturating kind)"),
        "R_kind": ("positive_part", _choice(FACTOR_KINDS), "reaction factor R"),
        "R_cap": ("inf", _float, "cap of R (clipped kind)"),
        "Q_kind": ("positive_part", _choice(FACTOR_KINDS), "reaction factor Q"),
        "Q_cap": ("inf", _float, "cap of Q (clipped kind)"),
        "U_ext": ("0", _expr, "boundary data U_ext(t, x1, x2), custom preset"),
        "U_I": ("0", _expr, "initial U(x1, x2), custom preset"),
        "u_I": ("0", _expr, "initial u(x1, x2, y1, y2), custom preset"),
        "v_I": ("0", _expr, "initial v(x1, x2, y1, y2), custom preset"),
    },
    "solver": {
        "dt": ("auto", _dt, "time step, or auto for the bound-preserving limit"),
        "steps": ("200", _positive_int, "number of steps when dt = auto"),
        "T": ("1.0", _float, "final time when dt is given"),
        "scheme": ("semi_implicit", _choice(SCHEMES), "time discretization"),
        "picard_tol": ("1e-12", _float, "Picard increment tolerance"),
        "picard_max": ("50", _positive_int, "Picard iteration cap"),
        "cg_tol": ("1e-12", _float, "relative CG residual tolerance"),
        "lumped_mass": ("false", _bool, "lump the time-derivative mass matrices"),
        "bound_tol": ("1e-10", _float, "tolerance of the bounds monitor"),
        "threads": ("1", _positive_int, "worker threads for the micro solves"),
    },
    "verify": {
        "levels": ("4", _positive_int, "refinement levels of eoc and interp-test"),
        "dt_const": ("0.1", _float, "c in dt = c h^2"),
        "T": ("0.1", _float, "final time of the eoc study"),
        "exact": ("coupled", _choice(EXACT_CHOICES), "manufactured solution; custom reads exact_* keys"),
        "exact_U": ("0", _expr, "custom exact U(t, x)"),
        "exact_u": ("0", _expr, "custom exact u(t, x, y), separable"),
        "exact_v": ("0", _expr, "custom exact v(t, x, y), separable"),
        "exact_U_ext": ("0", _expr, "custom boundary data matching exact_U"),
        "safety": ("10", _float, "factor on K h^2 in the error-bound check"),
        "eps": ("1 0.1 0.01", _floats, "epsilon grid of trace-check"),
        "samples": ("50", _positive_int, "random fields in trace-check"),
        "seed": ("0", _nonneg_int, "RNG seed of trace-check"),
    },
    "output": {
        "directory": ("out", _text, "output directory"),
        "stride": ("0", _nonneg_int, "snapshot every n steps (0: none)"),
    },
}

CUSTOM_DATA_KEYS = ("U_ext", "U_I", "u_I", "v_I")


@dataclass(frozen=True)
class RunConfig:
    """Typed values per section. Keys absent from the file hold their defaults."""

    values: dict = field(default_factory=dict)  # section -> {key: value}
    explicit: frozenset = frozenset()  # (section, key) pairs set in the text

    def __getitem__(self, section):
        return self.values[section]

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.values == other.values

    def data(self):
        m = self.values["model"]
        if m["preset"] in PRESET_DATA:
            return dict(PRESET_DATA[m["preset"]])
        if m["preset"] == "custom":
            return {k: m[k] for k in CUSTOM_DATA_KEYS}
        return {}

    def params(self):
        m = self.values["model"]
        p = ModelParams(
            theta=m["theta"], D=m["D"], d1=m["d1"], d2=m["d2"], k=m["k"], alpha=m["alpha"],
            b=TransferFn(m["b_kind"], m["c_hat"], m["z_sat"]),
            R=ReactionFactorFn(m["R_kind"], m["R_cap"]), Q=ReactionFactorFn(m["Q_kind"], m["Q_cap"]),
            **self.data(),
        )
        return self.exact().params(p) if m["preset"] == "mms" else p

    def exact(self):
        from .verify.exact import ExactSolution, coupled_mms, heat_mms

        v = self.values["verify"]
        which = v["exact"]
        if which == "coupled":
            return coupled_mms()
        if which == "heat":
            return heat_mms()
        return ExactSolution(U=v["exact_U"], u=v["exact_u"], v=v["exact_v"], U_ext=v["exact_U_ext"])

    def geometry(self):
        m = self.values["mesh"]
        o, c = m["omega"], m["cell"]
        return (o[:2], o[2:]), (c[:2], c[2:])

    def emit(self):
        out = []
        for section, keys in SCHEMA.items():
            out.append(f"[{section}]")
            for key in keys:
                if section == "model" and key in CUSTOM_DATA_KEYS and self.values["model"]["preset"] != "custom":
                    continue
                out.append(f"{key} = {_fmt(self.values[section][key])}")
            out.append("")
        return "\n".join(out)


def _cross_checks(values, explicit):
    problems = []
    m = values["model"]
    problems += validate_coefficients(m["theta"], m["D"], m["d1"], m["d2"], m["k"], m["alpha"])
    for build, args in ((TransferFn, (m["b_kind"], m["c_hat"], m["z_sat"])),
                        (ReactionFactorFn, (m["R_kind"], m["R_cap"])),
                        (ReactionFactorFn, (m["Q_kind"], m["Q_cap"]))):
        try:
            build(*args)
        except ValidationError as exc:
            problems += exc.problems
    if m["preset"] != "custom":
        given = [k for k in CUSTOM_DATA_KEYS if ("model", k) in explicit]
        if given:
            problems.append(f"[model] {', '.join(given)} require preset = custom (preset is {m['preset']})")
    for sec, key in (("solver", "T"), ("verify", "T"), ("verify", "dt_const"), ("solver", "cg_tol"),
                     ("solver", "picard_tol"), ("verify", "safety")):
        if not values[sec][key] > 0:
            problems.append(f"[{sec}] {key} must be > 0")
    if values["solver"]["bound_tol"] < 0:
        problems.append("[solver] bound_tol must be >= 0")
    if any(e <= 0 for e in values["verify"]["eps"]):
        problems.append("[verify] eps values must be > 0")
    c = values["mesh"]["cell"]
    gamma_classifier(values["mesh"]["gamma_r"], c[:2], c[2:])
    return problems


def parse_config(text):
    """Parse and validate; raises ValidationError listing every problem."""
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                   interpolation=None, strict=True, empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValidationError(f"syntax error: {exc}") from None
    problems = []
    values = {s: {} for s in SCHEMA}
    explicit = set()
    for section in cp.sections():
        if section not in SCHEMA:
            problems.append(f"unknown section [{section}]")
            continue
        for key in cp[section]:
            if key not in SCHEMA[section]:
                problems.append(f"unknown key {key!r} in [{section}]")
            else:
                explicit.add((section, key))
    parsed = True
    for section, keys in SCHEMA.items():
        for key, (default, parse, _) in keys.items():
            raw = cp.get(section, key, fallback=None) if cp.has_section(section) else None
            raw = default if raw is None else raw
            try:
                values[section][key] = parse(raw)
            except (ValueError, ValidationError) as exc:
                problems.append(f"[{section}] {key} = {raw!r}: {exc}")
                parsed = False
    if parsed:
        problems += _cross_checks(values, explicit)
    if problems:
        raise ValidationError(problems)
    return RunConfig(values, frozenset(explicit))


def default_config():
    return parse_config("")


def help_epilog():
    lines = ["configuration keys (section / key = default : meaning):"]
    for section, keys in SCHEMA.items():
        lines.append(f"  [{section}]")
        for key, (default, parse, text) in keys.items():
            extra = f" {{{', '.join(parse.options)}}}" if hasattr(parse, "options") else ""
            lines.append(f"    {key} = {default} : {text}{extra}")
    return "\n".join(lines)
