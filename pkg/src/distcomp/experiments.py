"""Experiments behind the command-line tool.

Each function returns plain JSON-ready data (a dict or a list of rows)
and is pure given its seed, so reruns produce identical artifacts.
"""

from __future__ import annotations

import math

import numpy as np

from .codes.binning import binning_bound_report, build_random_binning_sw, random_bin_encoder
from .codes.code import (
    DistributedCode,
    error_probability_exact,
    error_probability_mc,
    identity_code,
    map_decoder_code,
)
from .codes.km import km_modsum_code
from .codes.lemma import (
    TypicalSetConfig,
    is_sensitive_given_Y,
    lemma1_check,
    pairing_audit,
)
from .codes.moddev import moderate_deviation_run
from .funclass import (
    SingleLetterFunction,
    VectorFunction,
    counterexample_quadruple,
    identity_function,
    is_hk,
    is_totally_sensitive,
    lift_symbolwise,
    symbolwise_totally_sensitive,
)
from .regions import (
    epsilon_for_noise,
    outer_bound_r_sensitive,
    spectral_entropies,
    sw_rate_full_side,
    sw_region_fl,
    sw_region_vl,
    theorem9_regions,
)
from .sources import SourceModel, certified_q, smoothness_check
from .errors import PreconditionError

DEFAULT_TRIALS = 10_000


# --------------------------------------------------------------------------
# classification


def classify(f, n):
    """Sensitivity report for a single-letter table (lifted) or a block function."""
    fn = lift_symbolwise(f, n) if isinstance(f, SingleLetterFunction) else f
    doc = {"n": fn.n}
    doc.update(is_totally_sensitive(fn).to_dict())
    if isinstance(f, SingleLetterFunction):
        hk, cond, _ = is_hk(f)
        ts, props = symbolwise_totally_sensitive(f)
        doc["hk"] = hk
        doc["hk_failed_condition"] = cond
        doc["symbolwise_criterion"] = {"totally_sensitive": ts, "injective_properties": list(props)}
        if hk and not props:
            x, xh, y, yh = counterexample_quadruple(f)
            doc["counterexample"] = {
                "x": list(x), "x_hat": list(xh), "y": list(y), "y_hat": list(yh),
                "value": [_plain(f(a, b)) for a, b in zip(x, y)],
            }
    else:
        doc["hk"] = None
    return doc


def _plain(z):
    return [_plain(v) for v in z] if isinstance(z, tuple) else z


def check_source(source: SourceModel, n):
    return smoothness_check(source, n).to_dict()


# --------------------------------------------------------------------------
# regions


def region(source: SourceModel, r=None):
    """Slepian-Wolf regions, the full-side rate, and optionally the r-sensitive outer bound.

    Returns ``(document, corner rows)``.
    """
    regions = {"sw_fixed_length": sw_region_fl(source)}
    vl = sw_region_vl(source)
    if vl is not None:
        regions["sw_variable_length"] = vl
    if r is not None:
        regions["outer_r_sensitive"] = outer_bound_r_sensitive(spectral_entropies(source), r)
    e = spectral_entropies(source)
    doc = {name: reg.to_dict() for name, reg in regions.items()}
    doc["full_side_rate"] = sw_rate_full_side(source)
    doc["entropies"] = {
        "h_joint": e.h_joint, "h_x_given_y": e.h_x_given_y, "h_y_given_x": e.h_y_given_x,
        "method": e.method, "tolerance": e.tolerance,
    }
    rows = []
    for name, reg in regions.items():
        for k, (r1, r2) in enumerate(reg.corners()):
            rows.append({"region": name, "vertex": k, "r1": r1, "r2": r2})
    return doc, rows


# --------------------------------------------------------------------------
# codes


def random_map_code(source, fn, n, rate, seed):
    """Both encoders send ``ceil(n rate)``-bit seeded bins; the decoder is MAP."""
    bits = math.ceil(round(n * rate, 9))
    enc1 = random_bin_encoder(source.x_size, n, bits, seed, 1)
    enc2 = random_bin_encoder(source.y_size, n, bits, seed, 2)
    return map_decoder_code(source, fn, enc1, enc2, "random MAP")


def code_row(code: DistributedCode, source, fn, trials, seed):
    table = source.block_table(code.n)
    mc = error_probability_mc(code, source, fn, trials, seed)
    k1, k2 = code.kraft_sums()
    return {
        "code": code.name,
        "n": code.n,
        "kind": code.kind,
        "L1": code.L1,
        "L2": code.L2,
        "expected_length1": float(np.dot(table.sum(axis=1), code.lengths1)) / code.n,
        "expected_length2": float(np.dot(table.sum(axis=0), code.lengths2)) / code.n,
        "kraft1": k1,
        "kraft2": k2,
        "prefix_free": code.is_prefix_free(),
        "exact_error": error_probability_exact(code, source, fn),
        "mc_errors": mc.errors,
        "trials": mc.trials,
        "mc_estimate": mc.estimate,
        "ci_low": mc.low,
        "ci_high": mc.high,
    }


def simulate(source, fn: VectorFunction, rate, delta, trials, seed, code=None):
    """Error and length rows for a supplied code, or for a random MAP code and its binned SW code."""
    if code is not None:
        return [code_row(code, source, fn, trials, seed)]
    phi = random_map_code(source, fn, fn.n, rate, seed)
    sw, _ = build_random_binning_sw(phi, source, delta, seed)
    ident = identity_function(fn.n, fn.x_size, fn.y_size)
    return [
        code_row(phi, source, fn, trials, seed),
        code_row(sw, source, ident, trials, seed),
        code_row(identity_code(fn.n, fn.x_size, fn.y_size), source, ident, trials, seed),
    ]


def verify_lemma(source, fn: VectorFunction, delta, beta, rate, seed, r=None, code=None):
    """Bound rows (``bound, n, lhs, rhs, slack, term:*``) for one code."""
    cfg = TypicalSetConfig(delta, beta)
    phi = code if code is not None else random_map_code(source, fn, fn.n, rate, seed)
    n = phi.n
    reports = lemma1_check(phi, source, fn, cfg, r=r)
    rows = [rep.to_row(n) for _, rep in sorted(reports.items())]
    if is_sensitive_given_Y(fn)[0] and certified_q(source, n, "Y") > 0:
        audit = pairing_audit(phi, source, fn, beta)
        row = audit.aggregated.to_row(n)
        row["term:max_overlap"] = audit.max_overlap
        row["term:overlap_limit"] = audit.overlap_limit
        row["term:all_cells_ok"] = all(t.ok for t in audit.transcripts)
        rows.append(row)
    sw, _ = build_random_binning_sw(phi, source, delta, seed)
    rows.append(binning_bound_report(phi, sw, source).to_row(n))
    return rows


# --------------------------------------------------------------------------
# modulo-sum gap and scaling


def theorem9_demo(x_size, y_size, r, delta, epsilon, n, rate, trials, seed):
    """Inner and outer regions for the mixed modulo-sum pair plus a linear-code simulation.

    ``epsilon=None`` picks the largest noise level the region formula admits.
    Returns ``(document, rows)``.
    """
    r_bar = min(math.log2(x_size), math.log2(y_size))
    rho = min(r / r_bar, 1.0) if r_bar > 0 else 0.0
    if epsilon is None:
        epsilon = epsilon_for_noise(x_size, y_size, delta / rho) if rho > 0 else 0.0
    regs = theorem9_regions(x_size, y_size, r, delta, epsilon)
    source = SourceModel.theorem9(x_size, y_size, regs.rho, epsilon)
    km = km_modsum_code(x_size, y_size, regs.rho, n, rate, seed, source)
    est = km.simulate(source, trials, seed)
    r1, r2 = km.rates
    e = spectral_entropies(source)
    doc = {
        "epsilon": epsilon,
        "regions": regs.to_dict(),
        "gap": regs.gap,
        "joint_entropy": e.h_joint,
        "km": {
            "n": n, "rate_per_encoder": rate, "rows": km.k, "sum_symbols": km.m,
            "band_width": km.w, "rates": [r1, r2], "sum_rate": r1 + r2,
            "error_lower_bound": km.error_lower_bound(), **est.to_dict(),
        },
    }
    rows = [{
        "epsilon": epsilon,
        "inner_min_sum": regs.inner.min_sum_rate,
        "outer_min_sum": regs.outer.min_sum_rate,
        "joint_entropy": e.h_joint,
        "n": n,
        "rate_per_encoder": rate,
        "sum_rate": r1 + r2,
        "errors": est.errors,
        "trials": est.trials,
        "estimate": est.estimate,
        "ci_low": est.low,
        "ci_high": est.high,
        "error_lower_bound": km.error_lower_bound(),
    }]
    return doc, rows


def moddev(source, f, t, gamma, n_list, seed):
    """Scaling rows; ``f`` is a single-letter table (lifted per n) or a block-length-free kind."""
    if isinstance(f, SingleLetterFunction):
        fn_for = lambda n: lift_symbolwise(f, n)  # noqa: E731
    elif callable(f):
        fn_for = f
    else:
        raise PreconditionError("function family", "need a single-letter table or a per-n builder")
    return [row.to_row() for row in moderate_deviation_run(source, fn_for, t, gamma, n_list, seed)]
