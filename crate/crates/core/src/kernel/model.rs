use crate::rng::RngStream;
use crate::Result;

/// A joint density on (state, latent) given through its two conditional
/// samplers.
pub trait AugmentedModel {
    type State: Clone;
    type Latent: Clone;

    /// Draw `y ~ f(y | x)`.
    fn draw_latent(&self, x: &Self::State, rng: &mut RngStream) -> Result<Self::Latent>;

    /// Draw `x ~ f(x | y)`.
    fn draw_state(&self, y: &Self::Latent, rng: &mut RngStream) -> Result<Self::State>;

    /// Unnormalized log joint density, when the model can evaluate it.
    fn log_joint(&self, _x: &Self::State, _y: &Self::Latent) -> Option<f64> {
        None
    }

    fn state_dim(&self) -> usize;
    fn latent_dim(&self) -> usize;
}

/// A joint density on `(u, v, y)` where `x = (u, v)` and each of `u`, `v`
/// has a tractable conditional given the other and `y`.
pub trait TwoBlockModel {
    type U: Clone;
    type V: Clone;
    type Latent: Clone;

    fn draw_latent(&self, u: &Self::U, v: &Self::V, rng: &mut RngStream) -> Result<Self::Latent>;
    fn draw_u(&self, v: &Self::V, y: &Self::Latent, rng: &mut RngStream) -> Result<Self::U>;
    fn draw_v(&self, u: &Self::U, y: &Self::Latent, rng: &mut RngStream) -> Result<Self::V>;
}

/// A Markov kernel on the latent space that should leave `f_Y` invariant.
pub trait MiddleKernel<Y> {
    fn draw(&self, y: &Y, rng: &mut RngStream) -> Result<Y>;
}

impl<Y, F> MiddleKernel<Y> for F
where
    F: Fn(&Y, &mut RngStream) -> Result<Y>,
{
    fn draw(&self, y: &Y, rng: &mut RngStream) -> Result<Y> {
        self(y, rng)
    }
}

/// `r(y' | y) = 1{y' = y}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityMiddle;

impl<Y: Clone> MiddleKernel<Y> for IdentityMiddle {
    fn draw(&self, y: &Y, _rng: &mut RngStream) -> Result<Y> {
        Ok(y.clone())
    }
}
