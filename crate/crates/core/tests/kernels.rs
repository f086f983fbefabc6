use damcmc::diagnostics::batch_means_se;
use damcmc::kernel::*;
use damcmc::oracle::*;
use damcmc::{Result, RngStream};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const STEPS: usize = 1_000_000;

fn toy() -> DiscreteJoint {
    DiscreteJoint::new(DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.1, 0.4])).unwrap()
}

fn draw_row(m: &DMatrix<f64>, i: usize, rng: &mut RngStream) -> usize {
    let mut u = rng.random::<f64>();
    for j in 0..m.ncols() {
        u -= m[(i, j)];
        if u < 0.0 {
            return j;
        }
    }
    m.ncols() - 1
}

#[test]
fn da_step_matches_toy_kernel() {
    let j = toy();
    let k = build_da_kernel(&j);
    let mut rng = RngStream::new(1, 0);
    let rep = transition_frequencies(&k, STEPS / 2, |x, r| da_step(&j, &x, r), &mut rng).unwrap();
    assert!(rep.within(3.0), "{rep:?}");
}

#[test]
fn da_step_matches_random_kernel() {
    let mut rng = RngStream::new(2, 0);
    let j = DiscreteJoint::random(4, 5, true, &mut rng);
    let k = build_da_kernel(&j);
    let rep = transition_frequencies(&k, STEPS / 4, |x, r| da_step(&j, &x, r), &mut rng).unwrap();
    assert!(rep.within(3.0), "{rep:?}");
}

#[test]
fn independence_joint_forgets_the_state() {
    let fx = DVector::from_vec(vec![0.2, 0.5, 0.3]);
    let fy = DVector::from_vec(vec![0.6, 0.4]);
    let j = DiscreteJoint::independent(&fx, &fy).unwrap();
    let k = build_da_kernel(&j);
    for r in k.matrix().row_iter() {
        assert!((r.transpose() - &fx).amax() < 1e-15);
    }
    let mut rng = RngStream::new(3, 0);
    let rep = transition_frequencies(&k, 200_000, |x, r| da_step(&j, &x, r), &mut rng).unwrap();
    assert!(rep.within(3.0), "{rep:?}");
}

#[test]
fn sandwich_step_matches_exact_kernel() {
    let mut rng = RngStream::new(4, 0);
    let j = DiscreteJoint::random(3, 6, true, &mut rng);
    let g = PermutationGroup::cyclic(vec![1, 2, 0, 4, 5, 3]).unwrap();
    let r = haar_middle_kernel(j.y_marginal(), &g).unwrap();
    let k = build_sandwich_kernel(&j, &r).unwrap();
    let middle = |y: &usize, rng: &mut RngStream| -> Result<usize> { Ok(draw_row(&r, *y, rng)) };
    let rep = transition_frequencies(&k, STEPS / 3, |x, rr| sandwich_step(&j, &middle, &x, rr), &mut rng).unwrap();
    assert!(rep.within(3.0), "{rep:?}");
}

#[test]
fn identity_middle_is_plain_da() {
    let mut rng = RngStream::new(5, 0);
    let j = DiscreteJoint::random(4, 3, true, &mut rng);
    let id = DMatrix::identity(3, 3);
    assert!(build_sandwich_kernel(&j, &id).unwrap().max_abs_diff(&build_da_kernel(&j)) < 1e-15);
    let (mut a, mut b) = (RngStream::new(9, 1), RngStream::new(9, 1));
    for x in 0..4 {
        for _ in 0..100 {
            assert_eq!(da_step(&j, &x, &mut a).unwrap(), sandwich_step(&j, &IdentityMiddle, &x, &mut b).unwrap());
        }
    }
}

#[test]
fn sandwich_chain_visits_states_by_the_x_marginal() {
    let j = toy();
    let r = DMatrix::from_row_slice(2, 2, &[0.3, 0.7, 0.7, 0.3]);
    let middle = |y: &usize, rng: &mut RngStream| -> Result<usize> { Ok(draw_row(&r, *y, rng)) };
    let mut rng = RngStream::new(6, 0);
    let t = run_chain(ChainMeta::new("sandwich", "toy"), |x: &usize, rr: &mut RngStream| sandwich_step(&j, &middle, x, rr), 0usize, STEPS, 100, &mut rng).unwrap();
    let bm = batch_means_se(&t.column(0), None).unwrap();
    assert!((bm.mean - 0.5).abs() < 3.0 * bm.se, "{bm:?}");
}

#[test]
fn haar_pxda_over_permutations_matches_sandwich_matrix() {
    let mut rng = RngStream::new(7, 0);
    let j = DiscreteJoint::random(3, 4, true, &mut rng);
    let g = PermutationGroup::new(vec![vec![0, 1, 2, 3], vec![1, 0, 3, 2]]).unwrap();
    let k = build_sandwich_kernel(&j, &haar_middle_kernel(j.y_marginal(), &g).unwrap()).unwrap();
    let fy = j.y_marginal().clone();
    let sampler = FiniteGroupSampler::new(move |y: usize| fy[y].ln());
    let draw = |grp: &PermutationGroup, y: &usize, r: &mut RngStream| sampler.draw(grp, y, r);
    let rep = transition_frequencies(&k, STEPS / 3, |x, r| haar_pxda_step(&j, &g, draw, &x, r), &mut rng).unwrap();
    assert!(rep.within(3.0), "{rep:?}");
    let pi = stationary_distribution(&k).unwrap();
    assert!((pi - j.x_marginal()).amax() < 1e-12);
}

#[test]
fn trivial_groups_reduce_to_da() {
    let mut rng = RngStream::new(8, 0);
    let j = DiscreteJoint::random(3, 4, true, &mut rng);
    let (mut a, mut b, mut c) = (RngStream::new(1, 2), RngStream::new(1, 2), RngStream::new(1, 2));
    let g = PermutationGroup::trivial(4);
    let fy = j.y_marginal().clone();
    let sampler = FiniteGroupSampler::new(move |y: usize| fy[y].ln());
    for x in 0..3 {
        for _ in 0..200 {
            let d = da_step(&j, &x, &mut a).unwrap();
            let t = haar_pxda_step(&j, &TrivialGroup, |grp: &TrivialGroup, y, r| grp.draw_element(y, r), &x, &mut b).unwrap();
            let p = haar_pxda_step(&j, &g, |grp: &PermutationGroup, y, r| sampler.draw(grp, y, r), &x, &mut c).unwrap();
            assert_eq!((d, d), (t, p));
        }
    }
}

fn two_block_toy(seed: u64) -> DiscreteTwoBlock {
    DiscreteTwoBlock::random(2, 3, 4, &mut RngStream::new(seed, 0))
}

#[test]
fn two_block_step_matches_exact_kernel() {
    let m = two_block_toy(10);
    let k = m.two_block_kernel();
    let mut rng = RngStream::new(11, 0);
    let step = |s: usize, r: &mut RngStream| {
        let (u, v) = two_block_da_step(&m, &(s / 3, s % 3), r)?;
        Ok(m.state_index(u, v))
    };
    let rep = transition_frequencies(&k, STEPS / 6, step, &mut rng).unwrap();
    assert!(rep.within(3.0), "{rep:?}");
    assert!(check_detailed_balance(k.matrix(), &m.x_marginal()) > 1e-6);
}

#[test]
fn two_block_independent_joint_gives_exact_draws() {
    // p(u, v, y) = f(u) f(v) f(y): every row of the kernel is f(u) f(v).
    let (fu, fv, fy) = ([0.3, 0.7], [0.2, 0.5, 0.3], [0.1, 0.4, 0.5]);
    let mut w = Vec::new();
    for a in fu {
        for b in fv {
            for c in fy {
                w.push(a * b * c);
            }
        }
    }
    let m = DiscreteTwoBlock::from_weights(2, 3, 3, w).unwrap();
    let k = m.two_block_kernel();
    for r in k.matrix().row_iter() {
        for u in 0..2 {
            for v in 0..3 {
                assert!((r[m.state_index(u, v)] - fu[u] * fv[v]).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn two_block_pxda_matches_exact_kernel_for_both_variants() {
    let m = two_block_toy(12);
    let g = PermutationGroup::cyclic(vec![1, 2, 3, 0]).unwrap();
    for j in [1u8, 2] {
        let variant = TwoBlockVariant::from_index(j).unwrap();
        let k = m.two_block_pxda_kernel(&g, variant).unwrap();
        let mut rng = RngStream::new(13, j as u64);
        let draw = |grp: &PermutationGroup, u: &usize, v: &usize, y: &usize, r: &mut RngStream| m.draw_element(grp, variant, *u, *v, *y, r);
        let step = |s: usize, r: &mut RngStream| {
            let (u, v) = two_block_pxda_step(&m, &g, draw, &(s / 3, s % 3), r)?;
            Ok(m.state_index(u, v))
        };
        let rep = transition_frequencies(&k, STEPS / 6, step, &mut rng).unwrap();
        assert!(rep.within(3.0), "variant {j}: {rep:?}");
    }
}

#[test]
fn two_block_pxda_over_trivial_group_is_two_block_da() {
    let m = two_block_toy(14);
    let g = PermutationGroup::trivial(4);
    let exact = m.two_block_pxda_kernel(&g, TwoBlockVariant::Full).unwrap();
    assert!(exact.max_abs_diff(&m.two_block_kernel()) < 1e-15);
    let (mut a, mut b) = (RngStream::new(3, 3), RngStream::new(3, 3));
    let draw = |grp: &PermutationGroup, u: &usize, v: &usize, y: &usize, r: &mut RngStream| m.draw_element(grp, TwoBlockVariant::Full, *u, *v, *y, r);
    let mut x = (0, 0);
    for _ in 0..500 {
        let d = two_block_da_step(&m, &x, &mut a).unwrap();
        let p = two_block_pxda_step(&m, &g, draw, &x, &mut b).unwrap();
        assert_eq!(d, p);
        x = d;
    }
}

#[test]
fn run_chain_mean_matches_x_marginal() {
    let mut rng = RngStream::new(15, 0);
    let j = DiscreteJoint::random(2, 3, true, &mut rng);
    let t = run_chain(ChainMeta::new("da", "joint"), |x: &usize, r: &mut RngStream| da_step(&j, x, r), 0usize, 400_000, 100, &mut rng).unwrap();
    assert_eq!(t.len(), 400_000);
    let bm = batch_means_se(&t.column(0), None).unwrap();
    let exact = j.x_marginal()[1];
    assert!((bm.mean - exact).abs() < 3.0 * bm.se, "{bm:?} vs {exact}");
}

#[test]
fn fixed_seed_reproduces_the_trace() {
    let j = toy();
    let go = || {
        let mut rng = RngStream::new(77, 5);
        run_chain(ChainMeta::new("da", "toy"), |x: &usize, r: &mut RngStream| da_step(&j, x, r), 1usize, 1000, 10, &mut rng).unwrap()
    };
    let (a, b) = (go(), go());
    assert_eq!(a.column(0), b.column(0));
    assert_eq!(a.meta, b.meta);
    assert_eq!(a.meta.seed, 77);
    assert_eq!(a.meta.stream_id, 5);
}
