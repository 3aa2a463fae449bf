"""Evaluation of the constant K in the ``err^2 <= K h^2`` estimate."""
from dataclasses import dataclass

from ..model import reaction_max_factors
from .exact import require_profiles


@dataclass(frozen=True)
class KEstimate:
    transport: float  # gamma3/2 (|u|_X^2 + |v|_X^2)
    macro: float  # gamma1 theta/2 |U0|^2
    reaction: float  # 3 k gamma3 (1 + alpha)(Q_m c_R + R_m c_Q)(|u|_X^2 + |v|_X^2)

    @property
    def value(self):
        return self.transport + self.macro + self.reaction


def estimate_K(profiles, params, gamma1, gamma3, m2, m3):
    """``profiles`` holds the squared norms ``U0``, ``u``, ``v`` (see ExactSolution.h2_profiles)."""
    require_profiles(profiles)
    R_m, Q_m = reaction_max_factors(params.R, params.Q, m2, m3)
    uv = profiles["u"] + profiles["v"]
    lip = Q_m * params.R.lipschitz + R_m * params.Q.lipschitz
    return KEstimate(
        transport=0.5 * gamma3 * uv,
        macro=0.5 * gamma1 * params.theta * profiles["U0"],
        reaction=3.0 * params.k * gamma3 * (1.0 + params.alpha) * lip * uv,
    )


def write_csv(fh, rows):
    """rows: dicts with h, err2, K, ratio (err2 / (K h^2))."""
    fh.write("h,err2,K,bound,ratio\n")
    for r in rows:
        fh.write(f"{r['h']:.17g},{r['err2']:.17g},{r['K']:.17g},{r['K'] * r['h'] ** 2:.17g},{r['ratio']:.17g}\n")


def bound_rows(table, K):
    """Per-level ``err^2 = e_U^2 + e_u^2 + e_v^2`` against ``K h^2``."""
    rows = []
    for r in table.rows:
        err2 = r["e_U_H1"] ** 2 + r["e_u_L2H1y"] ** 2 + r["e_v_L2H1y"] ** 2
        ratio = err2 / (K * r["h"] ** 2) if K > 0 else float("inf")
        rows.append({"h": r["h"], "err2": err2, "K": K, "ratio": ratio})
    return rows
