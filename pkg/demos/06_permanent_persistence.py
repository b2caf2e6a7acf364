"""Permanent stuck-at faults tracked across a moving-object sequence.

Each injection pins one exponent bit to 1 for all 60 frames; per-frame
false-occupancy blobs are fed to the pixel-wise 10-of-15 tracker (50 px
vicinity, coasting for FPs only) and judged at increasing severity levels.
Persistent masks of the worst offender are written as PGM images.
"""

import os
import tempfile

from odfault.campaign import CampaignConfig, run_permanent


def main():
    cfg = CampaignConfig.from_json({
        "mode": "permanent",
        "seed": 34,
        "target": "neuron",
        "n_injections": 100,
        "sequence": {"n_frames": 60},
        "emit_masks": 1,
    })
    with tempfile.TemporaryDirectory() as out:
        report = run_permanent(cfg, out)
        masks = sorted(name for name in os.listdir(out) if name.endswith(".pgm"))
        print(f"{len(masks)} persistent-mask PGMs written (first fault with a "
              f"persistent blob), e.g. {masks[:2]}")

    print("\npersistent-FP rate by severity level (fraction of faults):")
    for level, rate in report["fp_rates_at_level"].items():
        rescaled = report["fp_rates_at_level_rescaled"][level]
        print(f"  L >= {float(level):4.0%}: raw {rate:.3f}  "
              f"(rescaled to all-32-bit odds: {rescaled:.4f})")

    print("\npersistent-FN rate by severity level:")
    for level, rate in report["fn_rates_at_level"].items():
        print(f"  L >= {float(level):4.0%}: raw {rate:.3f}")

    print("\nmean persistent occupancy by injected bit position:")
    for bit, stats in report["bit_mean_occupancy"].items():
        print(f"  bit {bit}: {stats['count']:3d} faults, "
              f"mean FP occupancy {stats['mean_fp_occ']:.4%}")
    print(f"\nfaults raising NaN/Inf in some frame: {report['due_fault_fraction']:.2%}")


if __name__ == "__main__":
    main()
