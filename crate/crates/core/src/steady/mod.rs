//! Radial steady states of `-μΔu = f(u)`: profiles, admissible paths,
//! barriers and the critical diffusivity μ*.

mod barrier;
mod bounds;
mod path;
mod radial;

pub use barrier::{
    find_barriers, min_zero_radius, mu_star_numeric, shooting_scan, Barrier, ShotSample,
    SCAN_STEP, SHOOT_STEP,
};
pub use bounds::{
    gamma_half_plus_one, lambda1, mu_star_lower_bound, mu_star_upper_bound, Domain, LowerBound,
    BESSEL_J0_FIRST_ZERO,
};
pub use path::{
    build_path, oscillation_amplitudes, path_to_minimal_barrier, profile_step, SteadyPath,
    MAX_PROFILES,
};
pub use radial::{
    first_zero_radius, integrate_radial, integrate_radial_until_exit, shooting_cutoff,
    RadialProfile,
};
#[allow(unused_imports)]
pub(crate) use radial::RadialOde;
