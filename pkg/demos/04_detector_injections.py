"""Hand-picked injections on the toy detector.

Shows the three regimes the bit-level study predicts: mantissa flips are
decode-invisible, an exponent-MSB flip on a background activation plants a
ghost object, and a single stuck-at-1 on the MSB of a stored zero weight
turns into a near-full-image ghost detection on every inference.
"""

from odfault.bits import FaultDescriptor, FaultMode, FaultTarget
from odfault.detector import SceneSpec, generate_scene, infer, reference_model
from odfault.matching import assign


def show(label, trace, scene):
    outcome = assign(list(trace.detections), scene.ground_truth())
    print(f"{label}: {len(trace.detections)} detections "
          f"(tp={outcome.tp} fp={outcome.fp} fn={outcome.fn}, "
          f"nan={trace.nan_seen} inf={trace.inf_seen})")
    for d in trace.detections:
        print(f"    cat={d.category} conf={d.confidence:.3f} box={d.box.as_tuple()}")


def main():
    model = reference_model()
    scene = generate_scene(SceneSpec(), seed=0)
    print(f"scene 0: {len(scene.objects)} objects, categories "
          f"{[obj[1] for obj in scene.objects]}\n")

    show("fault-free", infer(model, scene), scene)

    mantissa = FaultDescriptor(FaultTarget.WEIGHT, 1, (0, 0, 0, 0), 22,
                               FaultMode.TRANSIENT_FLIP)
    show("\nstair-gain weight, top mantissa bit flipped (outvoted copy)",
         infer(model, scene, fault=mantissa), scene)

    ghost = FaultDescriptor(FaultTarget.NEURON, 3, (0, 50, 8), 30,
                            FaultMode.TRANSIENT_FLIP)
    show("\nbackground tent activation, exponent MSB flipped",
         infer(model, scene, fault=ghost), scene)

    giant = FaultDescriptor(FaultTarget.WEIGHT, 4, (1, 4, 1, 1), 30,
                            FaultMode.STUCK_AT_1)
    show("\nzero scoring weight on the prior channel, stuck-at-1 on the MSB",
         infer(model, scene, fault=giant), scene)
    print("\nthe stuck-at ghost above covers most of the image and, being a")
    print("parameter fault, reappears identically on every following frame.")


if __name__ == "__main__":
    main()
