use super::group::GroupAction;
use super::model::{AugmentedModel, MiddleKernel, TwoBlockModel};
use crate::rng::RngStream;
use crate::Result;

/// One data-augmentation transition: `y ~ f(y|x)`, then `x' ~ f(x|y)`.
pub fn da_step<M: AugmentedModel>(model: &M, x: &M::State, rng: &mut RngStream) -> Result<M::State> {
    let y = model.draw_latent(x, rng)?;
    model.draw_state(&y, rng)
}

/// DA with a middle move `y' ~ r(y'|y)` between the two conditional draws.
pub fn sandwich_step<M, R>(model: &M, middle: &R, x: &M::State, rng: &mut RngStream) -> Result<M::State>
where
    M: AugmentedModel,
    R: MiddleKernel<M::Latent> + ?Sized,
{
    let y = model.draw_latent(x, rng)?;
    let y = middle.draw(&y, rng)?;
    model.draw_state(&y, rng)
}

/// Haar PX-DA. `draw_element` must sample `g` from the density proportional
/// to `f_Y(t_g y) chi(g) nu_l(g)`; the middle move is then `y' = t_g(y)`.
pub fn haar_pxda_step<M, G, S>(
    model: &M,
    group: &G,
    draw_element: S,
    x: &M::State,
    rng: &mut RngStream,
) -> Result<M::State>
where
    M: AugmentedModel,
    G: GroupAction<M::Latent>,
    S: Fn(&G, &M::Latent, &mut RngStream) -> Result<G::Element>,
{
    let y = model.draw_latent(x, rng)?;
    let g = draw_element(group, &y, rng)?;
    let y = group.act(&g, &y);
    model.draw_state(&y, rng)
}

/// Two-block DA: `y ~ f(y|u,v)`, `u' ~ f(u|v,y)`, `v' ~ f(v|u',y)`.
pub fn two_block_da_step<M: TwoBlockModel>(
    model: &M,
    x: &(M::U, M::V),
    rng: &mut RngStream,
) -> Result<(M::U, M::V)> {
    let (u, v) = x;
    let y = model.draw_latent(u, v, rng)?;
    let u_new = model.draw_u(v, &y, rng)?;
    let v_new = model.draw_v(&u_new, &y, rng)?;
    Ok((u_new, v_new))
}

/// Two-block Haar PX-DA. `draw_element` receives the current `(u, v)` and
/// `y` and must sample from one of the two valid group densities (see the
/// model's documentation for which one it implements).
pub fn two_block_pxda_step<M, G, S>(
    model: &M,
    group: &G,
    draw_element: S,
    x: &(M::U, M::V),
    rng: &mut RngStream,
) -> Result<(M::U, M::V)>
where
    M: TwoBlockModel,
    G: GroupAction<M::Latent>,
    S: Fn(&G, &M::U, &M::V, &M::Latent, &mut RngStream) -> Result<G::Element>,
{
    let (u, v) = x;
    let y = model.draw_latent(u, v, rng)?;
    let g = draw_element(group, u, v, &y, rng)?;
    let y = group.act(&g, &y);
    let u_new = model.draw_u(v, &y, rng)?;
    let v_new = model.draw_v(&u_new, &y, rng)?;
    Ok((u_new, v_new))
}
