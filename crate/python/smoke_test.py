"""Smoke test for the pyaharmonic extension.

Build first:
    cargo build -p aharmonic-py --release --features extension-module
then run:
    python3 python/smoke_test.py [path/to/libpyaharmonic.so]
"""

import importlib.util
import json
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load(lib):
    tmp = Path(tempfile.mkdtemp())
    target = tmp / "pyaharmonic.so"
    shutil.copy(lib, target)
    spec = importlib.util.spec_from_file_location("pyaharmonic", target)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def main():
    lib = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "target/release/libpyaharmonic.so"
    if not lib.exists():
        sys.exit(f"extension not found at {lib}; build it first")
    pa = load(lib)
    print("pyaharmonic", pa.__version__)

    report = json.loads(pa.check_model(json.dumps({"name": "p_harmonic", "params": {"p": 3.0}})))
    assert report["alpha"] == 2.0 and report["beta"] == 2.0, report

    config = (ROOT / "configs/flat_p2.json").read_text()
    result = json.loads(pa.run_scenario(config, grid=64))
    verdicts = {v["name"]: v["status"] for v in result["verdicts"]}
    assert verdicts["log_convexity"] == "pass", verdicts
    assert len(result["profile"]["t"]) == 17

    try:
        pa.run_scenario('{"schema_version": 9}')
    except ValueError as e:
        print("bad config rejected:", str(e).splitlines()[0])
    else:
        raise AssertionError("bad config accepted")

    cordes = json.loads(pa.cordes_suite(n=10_000, seed=1))
    assert all(r["claim"]["violations"] == 0 for r in cordes)

    for name, status in verdicts.items():
        print(f"{name:<16} {status}")
    print("smoke test ok")


if __name__ == "__main__":
    main()
