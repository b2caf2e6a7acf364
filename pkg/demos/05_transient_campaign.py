"""A desk-scale transient campaign, end to end.

Runs 1000 random single-bit flips against neuron state, prints the
image-wise rates next to the AP deltas (the whole point: AP barely moves
while individual frames corrupt), and the bit-position profile.
"""

import tempfile

from odfault.campaign import CampaignConfig, run_transient


def main():
    cfg = CampaignConfig.from_json({
        "mode": "transient",
        "seed": 202,
        "target": "neuron",
        "n_injections": 1000,
        "scene": {"pool": 100},
    })
    with tempfile.TemporaryDirectory() as out:
        report = run_transient(cfg, out)

    rates = report["rates"]
    print(f"injections: {report['config']['n_injections']} "
          f"({report['config']['target']}, {report['config']['bit_policy']})")
    print(f"rates: sdc={rates['sdc']:.4f} due={rates['due']:.4f} "
          f"benign={rates['benign']:.4f}")

    ap = report["ap"]
    print(f"AP50 fault-free {ap['orig']['ap50']:.4f} -> corrupted {ap['corr']['ap50']:.4f}")
    print(f"mAP  fault-free {ap['orig']['map']:.4f} -> corrupted {ap['corr']['map']:.4f}")

    sev = report["severity_over_sdc"]
    if sev["n_sdc_events"]:
        print(f"\nover the {sev['n_sdc_events']} SDC events:")
        print(f"  mean delta_fp          = {sev['mean_delta_fp']:.2f}")
        print(f"  mean normalized fn     = {sev['mean_delta_fn_n']}")
        print(f"  falsely occupied area  = {sev['mean_a_fp_occ']:.2%}")
        print(f"  vacated footprint      = {sev['mean_a_fn_vac']:.2%}")
        print(f"  fp causes              = {report['fp_types_over_sdc']}")

    print("\nbit-position profile of SDC events (bit: events, mean delta_fp):")
    for bit, stats in sorted(report["bit_averages"].items(), key=lambda kv: int(kv[0])):
        print(f"  bit {bit}: {stats['count']} events, mean dFP {stats['mean_delta_fp']:.2f}")
    print("(everything concentrates on the exponent MSB; mantissa bits are silent)")


if __name__ == "__main__":
    main()
