"""Smoke test for the fracwave Python module.

Build with `maturin develop -m crates/py/Cargo.toml`, or point FRACWAVE_LIB at
a compiled `libfracwave_py.so` from `cargo build -p fracwave-py`.
"""

import importlib.machinery
import importlib.util
import math
import os
import sys


def load():
    path = os.environ.get("FRACWAVE_LIB")
    if not path:
        import fracwave_py

        return fracwave_py
    loader = importlib.machinery.ExtensionFileLoader("fracwave_py", path)
    spec = importlib.util.spec_from_file_location("fracwave_py", path, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    fw = load()

    # Φ(−1/2, 1/2; −z) is a Gaussian
    for z in (0.0, 0.7, 2.0):
        close(fw.wright_phi(0.5, 0.5, -z), math.exp(-z * z / 4) / math.sqrt(math.pi), 1e-12)

    close(fw.const_kernel("Z1", 1.5, 1, 1.0, 0.0), 0.5 / math.gamma(0.25), 1e-13)

    nodes = [i / 200 for i in range(201)]
    close(fw.rl_integral(nodes, [1.0] * len(nodes), 1.0, 1.0), 1.0, 1e-10)
    t2 = [s * s for s in nodes]
    close(fw.caputo(nodes, t2, 1.5, 1.0, [2 * s for s in nodes]), 2.0 / math.gamma(1.5), 1e-6)

    lap = fw.Operator.laplacian(1)
    solver = fw.CauchySolver(lap, 1.5, 1.0, -1.0, 1.0, u1=lambda x: 1.0)
    close(solver.u(0.6, [0.2]), 0.6, 1e-8)
    close(solver.u_t(0.6, [0.2]), 1.0, 1e-6)
    field = solver.solve([0.5, 1.0], [[0.0], [0.5]], with_dt=True)
    assert len(field["values"]) == 2 and len(field["values"][0]) == 2

    sine = fw.Operator.sine(0.2)
    assert sine.a([0.0]) == [[1.0]]
    try:
        fw.CauchySolver(lap, 2.5, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("alpha outside (1, 2) accepted")

    csv, summary, code = fw.run("kernel", "[kernel]\nkind = Z1\n[grid]\nt = 1\nx = 0\n")
    assert code == 0, summary
    assert csv.splitlines()[0] == "t,x,kernel_id,value"
    print("smoke test passed")


if __name__ == "__main__":
    sys.exit(main())
