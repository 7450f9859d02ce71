"""ASM1 stoichiometry (Petersen matrix), process rates and source terms.

Thirteen transported components, eight processes. The matrix carries a 14th
bookkeeping column for the dinitrogen released by anoxic growth: it is not
transported, but including it closes the per-process COD and nitrogen
balances exactly, which is what the continuity check verifies.

The electron-balance constants are kept as exact fractions of 14 g/mol
nitrogen: nitrate-N is worth 64/14 g COD (8 electrons), dinitrogen-N 24/14
(3 electrons), so denitrification recovers 40/14 g COD per g N — the
rounded 2.86 / 4.57 of older tables would leave residuals of order 1e-3.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .params import Asm1Params

COMPONENTS = ("S_I", "S_S", "X_I", "X_S", "X_BH", "X_BA", "X_P",
              "S_O", "S_NO", "S_NH", "S_ND", "X_ND", "S_ALK")
N_COMPONENTS = len(COMPONENTS)
IDX = {name: i for i, name in enumerate(COMPONENTS)}
ALK_INDEX = IDX["S_ALK"]

PROCESS_LABELS = (
    "aerobic growth of heterotrophs",
    "anoxic growth of heterotrophs",
    "aerobic growth of autotrophs",
    "decay of heterotrophs",
    "decay of autotrophs",
    "ammonification of soluble organic nitrogen",
    "hydrolysis of entrapped organics",
    "hydrolysis of entrapped organic nitrogen",
)

COD_PER_NO3_N = 64.0 / 14.0   # ThOD of nitrate-N (NH4+ reference)
COD_PER_N2_N = 24.0 / 14.0    # ThOD of dinitrogen-N
COD_PER_DENIT_N = COD_PER_NO3_N - COD_PER_N2_N   # the exact "2.86"

SECONDS_PER_DAY = 86400.0


@lru_cache(maxsize=8)
def petersen_matrix(p: Asm1Params) -> np.ndarray:
    """8 x 14 stoichiometric matrix; columns = COMPONENTS + implicit N2."""
    m = np.zeros((8, N_COMPONENTS + 1))
    n2 = N_COMPONENTS  # bookkeeping column
    yh, ya, fp, ixb, ixp = p.Y_H, p.Y_A, p.f_P, p.i_XB, p.i_XP
    # 1: aerobic heterotrophic growth
    m[0, IDX["S_S"]] = -1.0 / yh
    m[0, IDX["X_BH"]] = 1.0
    m[0, IDX["S_O"]] = -(1.0 - yh) / yh
    m[0, IDX["S_NH"]] = -ixb
    m[0, IDX["S_ALK"]] = -ixb / 14.0
    # 2: anoxic heterotrophic growth
    m[1, IDX["S_S"]] = -1.0 / yh
    m[1, IDX["X_BH"]] = 1.0
    m[1, IDX["S_NO"]] = -(1.0 - yh) / (COD_PER_DENIT_N * yh)
    m[1, IDX["S_NH"]] = -ixb
    m[1, IDX["S_ALK"]] = (1.0 - yh) / (14.0 * COD_PER_DENIT_N * yh) - ixb / 14.0
    m[1, n2] = (1.0 - yh) / (COD_PER_DENIT_N * yh)
    # 3: aerobic autotrophic growth
    m[2, IDX["X_BA"]] = 1.0
    m[2, IDX["S_O"]] = -(COD_PER_NO3_N - ya) / ya
    m[2, IDX["S_NO"]] = 1.0 / ya
    m[2, IDX["S_NH"]] = -ixb - 1.0 / ya
    m[2, IDX["S_ALK"]] = -ixb / 14.0 - 1.0 / (7.0 * ya)
    # 4, 5: decay of heterotrophs / autotrophs
    for row, biomass in ((3, "X_BH"), (4, "X_BA")):
        m[row, IDX["X_S"]] = 1.0 - fp
        m[row, IDX[biomass]] = -1.0
        m[row, IDX["X_P"]] = fp
        m[row, IDX["X_ND"]] = ixb - fp * ixp
    # 6: ammonification
    m[5, IDX["S_NH"]] = 1.0
    m[5, IDX["S_ND"]] = -1.0
    m[5, IDX["S_ALK"]] = 1.0 / 14.0
    # 7: hydrolysis of entrapped organics
    m[6, IDX["S_S"]] = 1.0
    m[6, IDX["X_S"]] = -1.0
    # 8: hydrolysis of entrapped organic nitrogen
    m[7, IDX["S_ND"]] = 1.0
    m[7, IDX["X_ND"]] = -1.0
    m.flags.writeable = False
    return m


def composition_vectors(p: Asm1Params):
    """(i_COD, i_N) weights per column, N2 bookkeeping column included."""
    i_cod = np.zeros(N_COMPONENTS + 1)
    i_n = np.zeros(N_COMPONENTS + 1)
    for name in ("S_I", "S_S", "X_I", "X_S", "X_BH", "X_BA", "X_P"):
        i_cod[IDX[name]] = 1.0
    i_cod[IDX["S_O"]] = -1.0
    i_cod[IDX["S_NO"]] = -COD_PER_NO3_N
    i_cod[N_COMPONENTS] = -COD_PER_N2_N
    for name in ("S_NO", "S_NH", "S_ND", "X_ND"):
        i_n[IDX[name]] = 1.0
    i_n[IDX["X_BH"]] = p.i_XB
    i_n[IDX["X_BA"]] = p.i_XB
    i_n[IDX["X_P"]] = p.i_XP
    i_n[N_COMPONENTS] = 1.0
    return i_cod, i_n


def process_rates(x, p: Asm1Params) -> np.ndarray:
    """The eight ASM1 process rates, g/(m3 s), for a non-negative state.

    Monod saturation terms are written in singularity-free form (numerator
    and denominator of the hydrolysis switch multiplied by X_BH), so zero
    biomass or substrate gives a zero rate rather than 0/0.
    """
    x = np.asarray(x, dtype=np.float64)
    s_s, x_s = x[IDX["S_S"]], x[IDX["X_S"]]
    x_bh, x_ba = x[IDX["X_BH"]], x[IDX["X_BA"]]
    s_o, s_no = x[IDX["S_O"]], x[IDX["S_NO"]]
    s_nh, s_nd, x_nd = x[IDX["S_NH"]], x[IDX["S_ND"]], x[IDX["X_ND"]]
    monod_s = s_s / (p.K_S + s_s)
    aer_h = s_o / (p.K_OH + s_o)
    anox_h = p.K_OH / (p.K_OH + s_o)
    monod_no = s_no / (p.K_NO + s_no)
    rho = np.empty(8)
    rho[0] = p.mu_H * monod_s * aer_h * x_bh
    rho[1] = p.mu_H * monod_s * anox_h * monod_no * p.eta_g * x_bh
    rho[2] = p.mu_A * (s_nh / (p.K_NH + s_nh)) * (s_o / (p.K_OA + s_o)) * x_ba
    rho[3] = p.b_H * x_bh
    rho[4] = p.b_A * x_ba
    rho[5] = p.k_a * s_nd * x_bh
    hyd_den = p.K_X * x_bh + x_s
    if hyd_den > 0.0:
        switch = aer_h + p.eta_h * anox_h * monod_no
        rho[6] = p.k_h * (x_s * x_bh / hyd_den) * switch
        rho[7] = p.k_h * (x_nd * x_bh / hyd_den) * switch
    else:
        rho[6] = 0.0
        rho[7] = 0.0
    return rho / SECONDS_PER_DAY


def source_terms(x, p: Asm1Params) -> np.ndarray:
    """Biokinetic source term per transported component, g/(m3 s)."""
    return petersen_matrix(p)[:, :N_COMPONENTS].T @ process_rates(x, p)


def dinitrogen_source(x, p: Asm1Params) -> float:
    """Dinitrogen-N release rate, g/(m3 s) — the N2 closure column."""
    return float(petersen_matrix(p)[:, N_COMPONENTS] @ process_rates(x, p))


@dataclass(frozen=True)
class ContinuityReport:
    cod_residuals: tuple
    n_residuals: tuple
    labels: tuple
    passed: bool
    tolerance: float


def continuity_check(p: Asm1Params, tolerance: float = 1e-10) -> ContinuityReport:
    """Per-process COD- and N-weighted coefficient sums.

    Both must vanish (within ``tolerance``) for every process row; a failure
    means the matrix was mistranscribed.
    """
    m = petersen_matrix(p)
    i_cod, i_n = composition_vectors(p)
    cod = m @ i_cod
    n = m @ i_n
    ok = bool(np.all(np.abs(cod) < tolerance) and np.all(np.abs(n) < tolerance))
    return ContinuityReport(tuple(cod), tuple(n), PROCESS_LABELS, ok, tolerance)
