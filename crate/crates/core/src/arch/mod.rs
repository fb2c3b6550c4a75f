//! Real and complex counterparts: approximate sublevel radii, Euclidean
//! ball coverings and the near-solution matcher.

mod balls;
mod covering;
mod matching;
mod roots;

pub use balls::{classical_vitali, strong_sep_select, triangle_dilate, EuclBall, StrongSep};
pub use covering::{
    check_mutual_covering, random_family_pair, verify_vitali_output, vitali_variant, CoverCheck,
    VitaliOutcome, VitaliParams, VitaliVerification,
};
pub use matching::{
    arch_match, constructive_instance, power_sum_hypothesis, sigma_bound, ArchMatch, ArchMatchStatus,
    ConstructiveInstance, InstanceKind,
};
pub use roots::{
    approx_self_ref, arch_pss_radius, random_arch_roots, sandwich_check, scaling_holds, ArchRoots, Field,
    SampleGrid, SandwichReport,
};
