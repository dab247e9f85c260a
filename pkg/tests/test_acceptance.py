"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The per-criterion lines are also collected into a summary section at the
end of the pytest run.
"""

import time
from pathlib import Path

import numpy as np

from conftest import ACCEPTANCE
from dyrecmul.calibration import PUBLISHED, TOLERANCES, published_violations, render_markdown, within
from dyrecmul.cli import main
from dyrecmul.datapath import DyRecMul, decode, encode, multiply, multiply_closed_form
from dyrecmul.errorlab import consistency_violations, exact_reference, sweep
from dyrecmul.lut import INT8_SPEC, cfglut_count, full_config_image, gen_config_chain, lut_eval, serial_reconfigure, serialize, zero_chain
from dyrecmul.nn import DyRecMulBackend, ExactBackend, run_model
from dyrecmul.nn.toy import build_toy_model, synthetic_dataset
from oracles import forward_ref, lut_product_ref, metrics_ref
from test_cli import CASES
from test_errorlab import TOY_PAIRS, toy4

ROOT = Path(__file__).resolve().parents[1]
CALIBRATION_DOC = ROOT / "docs" / "calibration.md"


def record(n, ok, detail):
    ACCEPTANCE[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _gate(mode, report):
    return {m: within(mode, m, getattr(report, m)) for m in TOLERANCES[mode]}


def test_criterion_01_signed_calibration():
    t = time.perf_counter()
    r = sweep("signed", DyRecMul("signed"))
    elapsed = time.perf_counter() - t
    gates = _gate("signed", r)
    detail = (
        f"MRE {r.mre:.4f} (pub {PUBLISHED['signed']['mre']}), EP {r.ep:.4f} (pub {PUBLISHED['signed']['ep']}), "
        f"MAE {r.mae:.2f} (pub {PUBLISHED['signed']['mae']:.0f}), sweep {elapsed:.2f}s"
    )
    ok = elapsed < 5.0
    if all(gates.values()):
        detail += "; all gated metrics in tolerance"
    else:
        # out-of-tolerance metrics require the committed calibration table, current and complete
        doc = CALIBRATION_DOC.read_text() if CALIBRATION_DOC.exists() else ""
        fresh = render_markdown()
        table_ok = doc == fresh and "Closest k = 5 configuration per gated metric" in doc
        ok = ok and table_ok
        missed = ", ".join(m.upper() for m, g in gates.items() if not g)
        detail += f"; {missed} outside tolerance, calibration table {'present and current' if table_ok else 'MISSING/STALE'}"
    record(1, ok, detail)


def test_criterion_02_unsigned_calibration():
    r = sweep("unsigned", DyRecMul("unsigned"))
    gates = _gate("unsigned", r)
    p = PUBLISHED["unsigned"]
    detail = f"MRE {r.mre:.4f} (pub {p['mre']}, {'ok' if gates['mre'] else 'out'}), MAE {r.mae:.2f} (pub {p['mae']:.0f}, {'ok' if gates['mae'] else 'out'})"
    record(2, all(gates.values()), detail)


def test_criterion_03_lut_path_oracle():
    mismatches = cases = 0
    for w in range(129):
        chain = gen_config_chain(w, INT8_SPEC)
        for a in range(32):
            cases += 1
            mismatches += lut_eval(chain, a) != lut_product_ref(a, w, 7, 5)
    record(3, cases == 4128 and mismatches == 0, f"{cases} cases, {mismatches} mismatches")


def test_criterion_04_pipeline_equivalence():
    bad = sum(
        multiply(x, w) != multiply_closed_form(x, w) for x in range(-128, 128) for w in range(-128, 128)
    )
    record(4, bad == 0, f"65536 signed pairs, {bad} mismatches")


def test_criterion_05_config_bits():
    count = cfglut_count(8, 16)
    chain_bits = INT8_SPEC.config_bits
    image = full_config_image()
    data = [ln for ln in image.splitlines() if not ln.startswith("#")]
    image_bits = sum(4 * len(ln) for ln in data)
    ok = count == 128 and chain_bits == 160 and len(gen_config_chain(5).luts) * 32 == 160 and image_bits <= 20480
    record(5, ok, f"cfglut_count(8,16)={count}, chain={chain_bits} bits, --all image {len(data)} lines = {image_bits} bits (limit 20480)")


def _invariant_failures():
    fails = {}
    # encoder bound: |x - mnt*2^exp| <= 2^(exp-1), mantissa normalised above 16
    fails["encoder bound"] = sum(
        2 * abs(abs(x) - f.mnt * 2 ** f.exp) > (2 ** f.exp if f.exp else 0) or (abs(x) >= 16 and f.mnt < 16)
        for x in range(-128, 128)
        for f in [encode(x)]
    )
    mul = DyRecMul()
    fails["sign antisymmetry"] = sum(
        mul(-x, w) != -mul(x, w) for x in range(-127, 128) for w in range(-128, 128)
    )
    xor = 0
    for x in range(-128, 128):
        for w in range(-128, 128):
            p = multiply(x, w)
            xor += p.int8_out != 0 and (p.int8_out < 0) != ((x < 0) != (w < 0))
    fails["XOR sign rule"] = xor
    dec = 0
    for e in range(4):
        vals = [decode(e, m) for m in range(32)]
        dec += vals != sorted(vals) or max(vals) > 127
    dec += decode(3, 31) != 127
    fails["decoder saturation/monotonicity"] = dec
    pows = [s * 2 ** i for i in range(7) for s in (1, -1)]
    fails["power-of-two exactness"] = sum(multiply(x, w).wide_out != x * w for x in pows for w in pows)
    rt = 0
    for w in range(129):
        chain = gen_config_chain(w)
        rt += serial_reconfigure(zero_chain(INT8_SPEC), serialize(chain)).as_int() != chain.as_int()
    fails["serialization round-trip"] = rt
    return fails


def test_criterion_07_structural_invariants():
    fails = _invariant_failures()
    bad = {k: v for k, v in fails.items() if v}
    detail = "all hold" if not bad else "; ".join(f"{k}: {v} failures" for k, v in bad.items())
    record(7, not bad, detail)


def test_criterion_06_metric_engine_oracle():
    ref = metrics_ref(TOY_PAIRS, toy4)
    r = sweep("signed", toy4, bits=4)
    ok = r.pair_count == 256 and all(getattr(r, m) == float(ref[m]) for m in ("ep", "mae", "mre", "mse", "ned"))
    record(6, ok, f"4-bit toy: EP {r.ep} MAE {r.mae} MRE {r.mre:.6f} MSE {r.mse} NED {r.ned:.6f}")


def test_criterion_08_metric_consistency():
    reports = [
        sweep("signed", DyRecMul("signed")),
        sweep("unsigned", DyRecMul("unsigned")),
        sweep("signed", exact_reference),
        sweep("signed", toy4, bits=4),
    ]
    own = sum(len(r.violations()) for r in reports)
    flagged = published_violations("signed")
    explicit = consistency_violations(**{m: PUBLISHED["signed"][m] for m in ("ep", "mae", "mse", "ned")})
    ok = own == 0 and len(flagged) == 2 and flagged == explicit
    record(8, ok, f"{len(reports)} computed reports consistent; published signed row flags: {'; '.join(flagged)}")


def test_criterion_09_nn_property():
    model = build_toy_model()
    images, labels = synthetic_dataset(600, 0)
    exact, ledger = run_model(model, images, labels, ExactBackend())
    oracle = [forward_ref(model, img.tolist()) for img in images]
    bit_exact = exact.predictions.tolist() == oracle
    approx, _ = run_model(model, images, labels, DyRecMulBackend())
    delta = 100 * abs(exact.accuracy - approx.accuracy)
    events = {run_model(model, images[:b], labels[:b], ExactBackend())[1].reconfig_events for b in (1, 13, 600)}
    ok = bit_exact and delta <= 1.0 and events == {model.weight_sites} and len(labels) >= 500
    record(
        9,
        ok,
        f"{len(labels)} samples, oracle bit-exact={bit_exact}, exact {exact.accuracy:.4f} vs dyrecmul {approx.accuracy:.4f} "
        f"(delta {delta:.2f} pp), reconfig events {sorted(events)} for {model.weight_sites} weight sites",
    )


def test_criterion_10_determinism(capsys):
    outs = []
    for workers in ("1", "4"):
        for mode in ("signed", "unsigned"):
            main(["analyze", "--mode", mode, "--format", "json", "--workers", workers])
            outs.append(capsys.readouterr().out)
    same = outs[:2] == outs[2:]
    golden_dir = Path(__file__).parent / "golden"
    stale = []
    for name, argv in CASES.items():
        code = main(argv)
        if code != 0 or capsys.readouterr().out != (golden_dir / name).read_text():
            stale.append(name)
    record(10, same and not stale, f"1 vs 4 workers identical={same}; {len(CASES) - len(stale)}/{len(CASES)} CLI goldens match")
