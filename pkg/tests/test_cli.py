import json
import os
import subprocess
import sys

import pytest

from dyrecmul.cli import main
from dyrecmul.lut import INT8_SPEC, MultiplierSpec, gen_config_chain, hex_to_bits, parse_config_image, serialize
from conftest import GOLDEN

TOY_IDX = str(GOLDEN / "toy.idx")

# golden file name -> argv; regenerate with DYRECMUL_REGEN=1 after an intended change
CASES = {
    "mul_64_64_trace.txt": ["mul", "64", "64", "--trace"],
    "mul_-96_77.json": ["mul", "-96", "77", "--format", "json"],
    "analyze_signed.json": ["analyze", "--mode", "signed", "--format", "json"],
    "analyze_signed.csv": ["analyze", "--mode", "signed", "--format", "csv"],
    "analyze_unsigned.txt": ["analyze", "--mode", "unsigned"],
    "analyze_exact.txt": ["analyze", "--mode", "signed", "--oracle", "exact"],
    "configgen_0.txt": ["configgen", "0"],
    "configgen_23_k3.txt": ["configgen", "23", "--b1", "5", "--b2", "5", "--k", "3"],
    "configgen_all.txt": ["configgen", "--all"],
    "cost_b1_8_k16.txt": ["cost", "--b1", "8", "--k", "16"],
    "infer_toy_exact.txt": ["infer", "toy", TOY_IDX, "--backend", "exact"],
    "infer_toy_compare.json": ["infer", "toy", TOY_IDX, "--backend", "dyrecmul", "--compare", "--format", "json"],
}


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(name, capsys):
    code, out, err = run(CASES[name], capsys)
    assert code == 0 and err == ""
    path = GOLDEN / name
    if os.environ.get("DYRECMUL_REGEN"):
        path.write_text(out)
    assert out == path.read_text()


@pytest.mark.parametrize("name", ["analyze_signed.json", "infer_toy_compare.json", "configgen_all.txt"])
def test_repeat_runs_byte_identical(name, capsys):
    first = run(CASES[name], capsys)[1]
    second = run(CASES[name], capsys)[1]
    assert first == second


def test_mul_trace_fields(capsys):
    rows = dict(ln.split("=", 1) for ln in run(CASES["mul_64_64_trace.txt"], capsys)[1].splitlines())
    assert (rows["exp"], rows["mnt"], rows["zmnt"]) == ("2", "16", "8")
    assert (rows["wide"], rows["exact"], rows["ed"]) == ("4096", "4096", "0")


def test_mul_zero(capsys):
    out = run(["mul", "0", "17"], capsys)[1]
    assert "wide=0\n" in out


def test_analyze_json_fields(capsys):
    d = json.loads(run(CASES["analyze_signed.json"], capsys)[1])
    assert d["pairs"] == 65536
    assert set(d) >= {"ep", "mae", "mre", "mse", "ned"}


def test_analyze_exact_is_zero(capsys):
    out = run(CASES["analyze_exact.txt"], capsys)[1]
    for m in ("EP", "MAE", "MRE", "MSE", "NED"):
        assert f"  {m:<4} 0.0000" in out


def test_analyze_workers_identical(capsys):
    one = run(["analyze", "--format", "json", "--workers", "1"], capsys)[1]
    many = run(["analyze", "--format", "json", "--workers", "3"], capsys)[1]
    assert one == many


def test_configgen_zero(capsys):
    assert run(["configgen", "0"], capsys)[1].splitlines()[1] == "0" * 40


def test_configgen_small_spec_round_trip(capsys):
    out = run(CASES["configgen_23_k3.txt"], capsys)[1]
    spec = MultiplierSpec(5, 5, 3)
    assert out.splitlines()[1] == "".join(
        "%x" % int("".join(map(str, serialize(gen_config_chain(23, spec))[i:i + 4])), 2) for i in range(0, 96, 4)
    )
    parsed, chains = parse_config_image(out)
    assert parsed == spec
    assert chains[0].as_int() == gen_config_chain(23, spec).as_int()


def test_configgen_all_layout(capsys):
    lines = run(CASES["configgen_all.txt"], capsys)[1].splitlines()
    assert lines[0] == "# dyrecmul-cfg v1 b1=5 b2=7 k=5"
    data = lines[1:]
    assert len(data) == 129
    for w, line in enumerate(data):
        assert hex_to_bits(line, 160) == serialize(gen_config_chain(w, INT8_SPEC))


def test_cost_example(capsys):
    rows = dict(ln.split("=") for ln in run(CASES["cost_b1_8_k16.txt"], capsys)[1].splitlines())
    assert rows["cfglut"] == "128" and rows["config_bits"] == "4096"


def test_infer_compare_fields(capsys):
    d = json.loads(run(CASES["infer_toy_compare.json"], capsys)[1])
    assert set(d["backends"]) == {"exact", "dyrecmul"}
    assert d["backends"]["dyrecmul"]["reconfig_events"] == 162
    assert abs(d["delta_pp"]) <= 1.0


def test_infer_explicit_labels_and_synthetic(capsys):
    a = run(["infer", "toy", TOY_IDX, "--labels", str(GOLDEN / "toy.labels.idx")], capsys)[1]
    b = run(["infer", "toy", "synthetic", "--samples", "600", "--seed", "0"], capsys)[1]
    assert a == b == (GOLDEN / "infer_toy_exact.txt").read_text()


def test_out_flag(tmp_path, capsys):
    target = tmp_path / "r.csv"
    code, out, _ = run(["analyze", "--format", "csv", "--out", str(target)], capsys)
    assert code == 0 and out == ""
    assert target.read_text() == (GOLDEN / "analyze_signed.csv").read_text()


@pytest.mark.parametrize(
    "argv,code",
    [
        (["mul", "999", "1"], 2),
        (["mul", "1", "-129"], 2),
        (["mul", "-1", "3", "--mode", "unsigned"], 2),
        (["mul", "x", "1"], 2),
        ([], 2),
        (["frobnicate"], 2),
        (["configgen"], 2),
        (["configgen", "3", "--all"], 2),
        (["configgen", "200"], 2),
        (["cost", "--b2", "3", "--k", "12"], 4),
        (["infer", "toy", "/nonexistent/file.idx"], 3),
        (["infer", str(GOLDEN / "tiny.model"), "synthetic"], 4),
        (["infer", "toy", str(GOLDEN / "tiny.model")], 4),
        (["analyze", "--out", "/nonexistent/dir/x.txt"], 3),
    ],
)
def test_error_exit_codes(argv, code, capsys):
    got, out, err = run(argv, capsys)
    assert got == code
    assert out == ""
    assert err.count("\n") == 1 and err.startswith("dyrecmul: ")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dyrecmul", "cost"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "cfglut=5\n" in proc.stdout
