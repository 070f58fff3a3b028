//! Fixtures shared by the criterion benches.

use jprlc_core::mixture::{init_mixture, MixtureModel};
use jprlc_core::solver::initial_transforms;
use jprlc_core::synth::{build_trial_data, synthetic_surface, TrialSpec};
use jprlc_core::{PointCloudSet, RigidTransform};

/// A degraded four-cloud trial at the default sizes, with the starting
/// poses and mixture the solver would begin from.
pub struct Fixture {
    pub set: PointCloudSet,
    pub transforms: Vec<RigidTransform>,
    pub model: MixtureModel,
}

pub fn fixture(components: usize) -> Fixture {
    let spec = TrialSpec {
        seed: 1,
        noise_sigma: 3.0,
        outlier_ratio: 0.1,
        ..TrialSpec::default()
    };
    let set = build_trial_data(&spec, &synthetic_surface(1000))
        .expect("default trial spec is valid")
        .inputs;
    let model = init_mixture(&set, components, 0.1, 1000.0).expect("trial clouds are non-degenerate");
    Fixture {
        transforms: initial_transforms(&set),
        set,
        model,
    }
}
