use std::collections::HashMap;
use std::fmt::Debug;

use nalgebra::DVector;
use rand::Rng;

use crate::rng::RngStream;
use crate::{Error, Result};

/// A group acting on the latent space, with the multiplier `chi` of the
/// action and the density of its left-Haar measure in the group's
/// coordinate.
pub trait GroupAction<Y> {
    type Element: Clone + Debug;

    fn identity(&self) -> Self::Element;
    /// The product `a b`, acting as `t_a(t_b(y))`.
    fn compose(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn invert(&self, a: &Self::Element) -> Self::Element;
    fn act(&self, g: &Self::Element, y: &Y) -> Y;
    fn multiplier(&self, g: &Self::Element) -> f64;
    fn log_haar_density(&self, g: &Self::Element) -> f64;
}

/// The one-element group. Its element draw consumes no randomness, so a
/// Haar PX-DA step over it reproduces the plain DA step draw for draw.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrivialGroup;

impl TrivialGroup {
    pub fn draw_element<Y>(&self, _y: &Y, _rng: &mut RngStream) -> Result<()> {
        Ok(())
    }
}

impl<Y: Clone> GroupAction<Y> for TrivialGroup {
    type Element = ();

    fn identity(&self) {}
    fn compose(&self, _: &(), _: &()) {}
    fn invert(&self, _: &()) {}
    fn act(&self, _: &(), y: &Y) -> Y {
        y.clone()
    }
    fn multiplier(&self, _: &()) -> f64 {
        1.0
    }
    fn log_haar_density(&self, _: &()) -> f64 {
        0.0
    }
}

/// Positive reals acting by scalar multiplication on a `dim`-dimensional
/// space: `chi(g) = g^dim`, left-Haar measure `dg / g`.
#[derive(Clone, Copy, Debug)]
pub struct ScaleGroup {
    dim: usize,
}

impl ScaleGroup {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

macro_rules! scale_action {
    ($y:ty, $act:expr) => {
        impl GroupAction<$y> for ScaleGroup {
            type Element = f64;

            fn identity(&self) -> f64 {
                1.0
            }
            fn compose(&self, a: &f64, b: &f64) -> f64 {
                a * b
            }
            fn invert(&self, a: &f64) -> f64 {
                1.0 / a
            }
            fn act(&self, g: &f64, y: &$y) -> $y {
                $act(*g, y)
            }
            fn multiplier(&self, g: &f64) -> f64 {
                g.powi(self.dim as i32)
            }
            fn log_haar_density(&self, g: &f64) -> f64 {
                -g.ln()
            }
        }
    };
}

scale_action!(DVector<f64>, |g: f64, y: &DVector<f64>| y * g);
scale_action!(f64, |g: f64, y: &f64| g * y);

/// A finite group of permutations of `{0, .., n-1}` acting on grid indices,
/// with counting measure as Haar measure and unit multiplier.
#[derive(Clone, Debug)]
pub struct PermutationGroup {
    perms: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    identity: usize,
}

impl PermutationGroup {
    /// Validates that every element is a permutation and the set is closed
    /// under composition (closure of a finite set implies inverses).
    pub fn new(perms: Vec<Vec<usize>>) -> Result<Self> {
        let n = perms
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::param("permutation group needs at least one element"))?;
        for p in &perms {
            if p.len() != n {
                return Err(Error::param("permutations act on grids of different sizes"));
            }
            let mut seen = vec![false; n];
            for &i in p {
                if i >= n || seen[i] {
                    return Err(Error::param(format!("{p:?} is not a permutation of the grid")));
                }
                seen[i] = true;
            }
        }
        let mut index = HashMap::new();
        for (k, p) in perms.iter().enumerate() {
            if index.insert(p.clone(), k).is_some() {
                return Err(Error::param(format!("duplicate group element {p:?}")));
            }
        }
        let id: Vec<usize> = (0..n).collect();
        let identity = *index
            .get(&id)
            .ok_or_else(|| Error::param("permutation set does not contain the identity"))?;
        for a in &perms {
            for b in &perms {
                let ab: Vec<usize> = b.iter().map(|&i| a[i]).collect();
                if !index.contains_key(&ab) {
                    return Err(Error::param("permutation set is not closed under composition"));
                }
            }
        }
        Ok(Self { perms, index, identity })
    }

    /// Cyclic group generated by one permutation.
    pub fn cyclic(generator: Vec<usize>) -> Result<Self> {
        let n = generator.len();
        let mut perms = vec![(0..n).collect::<Vec<usize>>()];
        loop {
            let last = perms.last().expect("non-empty");
            let next: Vec<usize> = last.iter().map(|&i| generator[i]).collect();
            if next == perms[0] {
                break;
            }
            if perms.len() > 100_000 {
                return Err(Error::param("generator order too large"));
            }
            perms.push(next);
        }
        Self::new(perms)
    }

    /// `{identity}` on a grid of size `n`.
    pub fn trivial(n: usize) -> Self {
        Self::new(vec![(0..n).collect()]).expect("identity is a group")
    }

    pub fn order(&self) -> usize {
        self.perms.len()
    }

    pub fn grid_size(&self) -> usize {
        self.perms[0].len()
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.perms.len()
    }

    pub fn permutation(&self, g: usize) -> &[usize] {
        &self.perms[g]
    }

    /// Orbit of `y` as a sorted, deduplicated list.
    pub fn orbit(&self, y: usize) -> Vec<usize> {
        let mut o: Vec<usize> = self.perms.iter().map(|p| p[y]).collect();
        o.sort_unstable();
        o.dedup();
        o
    }
}

impl GroupAction<usize> for PermutationGroup {
    type Element = usize;

    fn identity(&self) -> usize {
        self.identity
    }
    fn compose(&self, a: &usize, b: &usize) -> usize {
        let (pa, pb) = (&self.perms[*a], &self.perms[*b]);
        let ab: Vec<usize> = pb.iter().map(|&i| pa[i]).collect();
        self.index[&ab]
    }
    fn invert(&self, a: &usize) -> usize {
        let p = &self.perms[*a];
        let mut inv = vec![0; p.len()];
        for (i, &j) in p.iter().enumerate() {
            inv[j] = i;
        }
        self.index[&inv]
    }
    fn act(&self, g: &usize, y: &usize) -> usize {
        self.perms[*g][*y]
    }
    fn multiplier(&self, _: &usize) -> f64 {
        1.0
    }
    fn log_haar_density(&self, _: &usize) -> f64 {
        0.0
    }
}

/// Exact categorical draw of a group element from a finite group, with
/// weights `exp(log_target(t_g y)) chi(g) nu_l(g)`.
pub struct FiniteGroupSampler<F> {
    log_target: F,
}

impl<F> FiniteGroupSampler<F> {
    pub fn new(log_target: F) -> Self {
        Self { log_target }
    }

    pub fn draw(&self, group: &PermutationGroup, y: &usize, rng: &mut RngStream) -> Result<usize>
    where
        F: Fn(usize) -> f64,
    {
        if group.order() == 1 {
            return Ok(group.identity);
        }
        let logw: Vec<f64> = group
            .elements()
            .map(|g| {
                (self.log_target)(group.act(&g, y)) + group.multiplier(&g).ln() + group.log_haar_density(&g)
            })
            .collect();
        let hi = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !hi.is_finite() {
            return Err(Error::param(format!(
                "group-element density has no finite mass at latent {y}"
            )));
        }
        let w: Vec<f64> = logw.iter().map(|l| (l - hi).exp()).collect();
        let total: f64 = w.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (g, wg) in w.iter().enumerate() {
            if u < *wg {
                return Ok(g);
            }
            u -= wg;
        }
        Ok(w.len() - 1)
    }
}
