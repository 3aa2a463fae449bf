"""Monitor of the L-infinity bounds (m1, m2, m3) along a trajectory."""
from dataclasses import dataclass, field

FIELDS = ("U", "u", "v")


@dataclass
class BoundsMonitor:
    """Observer recording per-step extrema and excursions outside [-tol, m + tol]."""

    m1: float
    m2: float
    m3: float
    tol: float = 1e-10
    rows: list = field(default_factory=list)
    violations: list = field(default_factory=list)  # (step, field, value, lower, upper)

    def __call__(self, n, state):
        row = [n, state.t]
        for name, arr, m in zip(FIELDS, state.fields, (self.m1, self.m2, self.m3)):
            lo, hi = float(arr.min()), float(arr.max())
            row += [lo, hi]
            if lo < -self.tol:
                self.violations.append((n, name, lo, -self.tol, m + self.tol))
            if hi > m + self.tol:
                self.violations.append((n, name, hi, -self.tol, m + self.tol))
        self.rows.append(row)

    @property
    def count(self):
        return len(self.violations)

    def write_csv(self, fh):
        fh.write("step,t,min_U,max_U,min_u,max_u,min_v,max_v\n")
        for r in self.rows:
            fh.write(f"{r[0]}," + ",".join(repr(float(x)) for x in r[1:]) + "\n")

    def write_violations(self, fh):
        fh.write("step,field,value,lower,upper\n")
        for n, name, val, lo, hi in self.violations:
            fh.write(f"{n},{name},{val:.17g},{lo:.17g},{hi:.17g}\n")


def bounds_monitor(states, m1, m2, m3, tol=1e-10):
    """Check a sequence of states; returns the filled monitor."""
    mon = BoundsMonitor(m1, m2, m3, tol)
    for n, s in enumerate(states):
        mon(n, s)
    return mon
