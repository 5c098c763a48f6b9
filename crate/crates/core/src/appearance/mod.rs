//! Photometric kernels: illumination jitter, exemplar-based inpainting and
//! gradient-domain (Poisson) compositing.

mod illumination;
mod inpaint;
mod poisson;

pub use self::illumination::{hsv_to_rgb, perturb_illumination, rgb_to_hsv, IlluminationParams};
pub use self::inpaint::{inpaint, InpaintOptions};
pub use self::poisson::{
    poisson_blend, poisson_system, solve_poisson, PoissonOptions, PoissonSolution, PoissonSystem,
};
