#!/usr/bin/env python3
"""
Leakage-suppressing entangler design - command-line entry point

Optimizes composite two-qutrit entangling sequences that interleave local
rotations with slices of a noisy conditional-phase interaction, so that the
ensemble-averaged gate error is minimized while the logical block stays a
perfect entangler.

Subcommands:
- optimize / sweep: solve sequence lengths with divisor-chain warm starts
- sigma-grid: sensitivity of a stored solution to logical and leakage noise
- baseline: gate error without interleaved rotations
- local-fidelity: average fidelity of noisy local rotations
- verify / evaluate: re-evaluate archived solutions

Run `python main.py <command> --help` for the flags of each command.
"""

import sys

from leakseq.cli import main

if __name__ == "__main__":
    sys.exit(main())
