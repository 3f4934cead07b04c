# bb_osd.py
"""Order-0 ordered statistics decoding (OSD-0) and the BP+OSD pipeline"""

import logging
from dataclasses import dataclass

import numpy as np

from bb_bp import decode_bp
from bb_gf2 import BitVec, DimensionError, eliminate_and_solve, matvec
from bb_report_utils import PATH_BP_ONLY, PATH_BP_OSD, DecodeRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OSDResult:
    estimate: BitVec
    valid: bool
    pivot_columns: tuple


def osd_pivot_order(reliabilities):
    """column order for pivot search: least reliable (smallest |LLR|) first, ties by index

    Read backwards this is the descending-reliability order, so the most
    reliable bits are the last to be picked as pivots and keep their hard
    decisions.
    """
    return np.argsort(np.abs(np.asarray(reliabilities, dtype=float)), kind='stable')


def decode_osd0(code, syndrome, reliabilities):
    """solves H·e = s by elimination over reliability-ordered columns

    Non-pivot bits take the sign-based hard decision of their reliability;
    pivot bits are solved. When s is outside image(H) the estimate satisfies
    the rows the reduction kept and valid is False.
    """
    check_matrix = code.check_matrix(syndrome.basis)
    rel = np.asarray(reliabilities, dtype=float)
    if rel.shape != (check_matrix.cols,):
        raise DimensionError(f"{rel.size} reliabilities for {check_matrix.cols} bits")
    if syndrome.bits.length != check_matrix.rows:
        raise DimensionError(f"syndrome length {syndrome.bits.length} != {check_matrix.rows} checks")

    hard = BitVec.from_bits((rel < 0).astype(np.uint8))
    estimate, consistent, pivots = eliminate_and_solve(
        check_matrix, syndrome.bits, osd_pivot_order(rel), free=hard)
    valid = consistent and matvec(check_matrix, estimate) == syndrome.bits
    if not valid:
        logger.debug("OSD-0: syndrome with %d defects is outside image(H)", syndrome.defect_count)
    return OSDResult(estimate, valid, tuple(pivots))


def decode_bp_osd(code, syndrome, cfg, shot=0, decoder='bp_osd'):
    """BP first; OSD-0 on the final LLRs only when BP does not converge"""
    bp = decode_bp(code, syndrome, cfg)
    if bp.converged:
        path = PATH_BP_ONLY
        valid = True
    else:
        path = PATH_BP_OSD
        valid = decode_osd0(code, syndrome, bp.final_llrs).valid
    return DecodeRecord(
        shot=shot,
        code=code.name,
        decoder=decoder,
        schedule=cfg.schedule,
        defect_count=syndrome.defect_count,
        mod_w_class=syndrome.mod_w_class,
        mod_w_zero=syndrome.mod_w_class == 0,
        path=path,
        converged=bp.converged,
        iterations=bp.iterations_used,
        valid=valid,
        p=cfg.channel_p or 0.0,
        basis=syndrome.basis,
    )
