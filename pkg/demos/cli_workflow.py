"""
The command-line workflow end to end
====================================

Writes a dispersion file and a config with Greek keys, then drives the
``combsim`` entry point through analyze, solve, steady and export. Outputs
land in a scratch directory that is printed at the end.
"""

import json
import math
import tempfile
from pathlib import Path

from combsim.cli import main
from combsim.dispersion import polynomial_table, write_dispersion_file

two_pi = 2 * math.pi
work = Path(tempfile.mkdtemp(prefix="combsim-"))

write_dispersion_file(
    polynomial_table(m0=175, f0=191e12, fsr=1e12, mu_span=(-71, 180), d2=two_pi * 20e6, d3=-two_pi * 0.15e6),
    work / "TestDispersion.txt",
)
config = {
    "res": {"R": 23e-6, "Qi": 1e6, "Qc": 1e6, "γ": 1.55, "dispfile": "TestDispersion.txt"},
    "sim": {"Pin": 150e-3, "Tscan": 2000, "f_pmp": 191e12,
            "δω_init": 2e9 * two_pi, "δω_end": -8e9 * two_pi,
            "μ_sim": [-74, 170], "μ_fit": [-71, 180]},
}
(work / "config.json").write_text(json.dumps(config, ensure_ascii=False, indent=2), encoding="utf-8")


def run(*args):
    code = main([str(a) for a in args])
    print(f"exit {code}: combsim {' '.join(str(a) for a in args)}")


run("analyze", work / "config.json", "-o", work / "dint.csv")
run("solve", work / "config.json", "-o", work / "run.zip", "--seed", 1)
run("export", work / "run.zip", "--what", "combpower", "-o", work / "combpower.csv")
run("export", work / "run.zip", "--what", "spectra", "--ind", 570, "-o", work / "spectrum_570.csv")
run("export", work / "run.zip", "--what", "time", "--ind", 570, "-o", work / "time_570.csv")
run("steady", work / "config.json", "-o", work / "steady.zip", "--detuning", "-5e9hz")
run("export", work / "steady.zip", "--what", "spectra", "-o", work / "steady_spectrum.csv")
# an out-of-range snapshot index is reported with its own exit code
run("export", work / "run.zip", "--what", "spectra", "--ind", 5000, "-o", work / "bad.csv")
print(f"\noutputs in {work}")
