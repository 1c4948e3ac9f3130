#!/usr/bin/env python3
"""
Verification: Two-Solution Run on the Unit Square
=================================================

Runs data/square.conf (λ = 50, 32x32, ε: 0.1 -> 1e-3) and
data/below_threshold.conf end to end through the runner.

Verifies:
- exit code 0 and every verdict true
- stage bounds at every ε: 0 < J_ε(u1) ≤ ½‖u0‖²_K + |Ω| and
  J_ε(u0) ≤ c1 + 2λεa1|Ω|, re-read from stages.csv
- max element |∇u0| at the last stage ≤ 2x its first-stage value
- `verify` reproduces the stored verdicts from the artifacts alone
- λ = 0.1 exits with code 2 and a trivial minimizer (J ≥ −1e-10)
"""

import sys
import tempfile
import time
from pathlib import Path

# Add repository root to path for imports
sys.path.insert(0, str(Path(__file__).resolve().parents[2]))

from vortexpatch.artifacts import read_stages  # noqa: E402
from vortexpatch.runner import EXIT_BELOW_THRESHOLD, EXIT_OK, RunOrchestrator  # noqa: E402

DATA_DIR = Path(__file__).resolve().parents[1] / "data"
OUT_DIR = Path(tempfile.mkdtemp(prefix="vortexpatch-verify-"))


def verify_square_run():
    """Verify the λ = 50 square run and its stage bounds."""
    try:
        start = time.perf_counter()
        out = OUT_DIR / "square"
        outcome = RunOrchestrator(threads=1).run((DATA_DIR / "square.conf").read_text(), out)
        assert outcome.exit_code == EXIT_OK, f"exit code {outcome.exit_code}: {outcome.error}"

        report = outcome.report
        failed = [name for name, value in report.verdicts.items() if not value]
        assert not failed, f"verdicts false: {', '.join(failed)}"
        print(f"✓ All {len(list(report.verdicts.items()))} verdicts true "
              f"(J(u0)={report.numbers.j_u0:.5g}, J(u1)={report.numbers.j_u1:.5g}, "
              f"{time.perf_counter() - start:.0f}s)")

        stages = read_stages(out / "stages.csv")
        for s in stages:
            assert 0.0 < s.j_eps_u1 <= s.mp_upper, f"mountain-pass bounds fail at eps={s.eps:.3g}"
            assert s.j_eps_u0 <= s.minimizer_bound, f"minimizer bound fails at eps={s.eps:.3g}"
        print(f"✓ Stage bounds hold at all {len(stages)} ε stages")

        ratio = stages[-1].max_grad_u0 / stages[0].max_grad_u0
        assert ratio <= 2.0, f"max|∇u0| grew by {ratio:.2f}"
        print(f"✓ max|∇u0| ratio last/first stage = {ratio:.3f}")
        return True
    except Exception as e:
        print(f"❌ Square run error: {e}")
        return False


def verify_reproduction():
    """Verify the stored verdicts are re-derived from the artifacts."""
    try:
        outcome = RunOrchestrator(threads=1).verify(OUT_DIR / "square")
        assert outcome.error is None, outcome.error
        assert not outcome.mismatches, ", ".join(c.name for c in outcome.mismatches)
        print(f"✓ verify reproduced {len(outcome.checks)} stored values")
        return True
    except Exception as e:
        print(f"❌ Reproduction error: {e}")
        return False


def verify_below_threshold():
    """Verify λ = 0.1 is reported as below threshold."""
    try:
        out = OUT_DIR / "below"
        outcome = RunOrchestrator(threads=1).run((DATA_DIR / "below_threshold.conf").read_text(), out)
        assert outcome.exit_code == EXIT_BELOW_THRESHOLD, f"exit code {outcome.exit_code}"
        assert not (out / "u1.csv").exists(), "u1.csv written below threshold"
        assert outcome.report.c1_estimate >= -1e-10, f"minimizer energy {outcome.report.c1_estimate:.3g}"
        print(f"✓ λ = 0.1 exits with code 2, J(u0) = {outcome.report.c1_estimate:.3g}")
        return True
    except Exception as e:
        print(f"❌ Below-threshold error: {e}")
        return False


def main():
    print("=" * 50)
    print("Verification: Two-Solution Run")
    print("=" * 50)
    print(f"Artifacts in {OUT_DIR}")

    results = [
        verify_square_run(),
        verify_reproduction(),
        verify_below_threshold(),
    ]

    print("=" * 50)
    if all(results):
        print("✓ Two-solution run PASSED")
        return 0
    else:
        print("❌ Two-solution run FAILED")
        return 1


if __name__ == "__main__":
    sys.exit(main())
