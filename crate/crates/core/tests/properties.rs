//! Invariants of the linear-algebra kernel, states, and measurement decompositions.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tripartite::linalg::{hermitian_eig, svd, xlog2x_spectrum};
use tripartite::measurement::{average_entropy, decompose, ensemble_residual, MeasurementBasis};
use tripartite::states::{Dims, Part, TripartiteState};
use tripartite::{CMatrix, C64};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)))
}

fn dims_strategy() -> impl Strategy<Value = Dims> {
    (1usize..=3, 1usize..=3, 1usize..=4).prop_map(|(a, b, c)| Dims::new(a, b, c))
}

/// Applies `U_A ⊗ U_B ⊗ U_C` to the state vector.
fn local_unitary(s: &TripartiteState, ua: &CMatrix, ub: &CMatrix, uc: &CMatrix) -> TripartiteState {
    let full = ua.kron(ub).kron(uc);
    TripartiteState::new(s.dims(), full.apply(s.amplitudes())).unwrap()
}

fn sorted_nonzero(mut v: Vec<f64>) -> Vec<f64> {
    v.retain(|&x| x > 1e-9);
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigenvalues_sum_to_trace(n in 1usize..=8, seed in any::<u64>()) {
        let m = gaussian_matrix(&mut rng(seed), n, n);
        let h = (&m + &m.adjoint()).scale_real(0.5);
        let eig = hermitian_eig(&h).unwrap();
        let sum: f64 = eig.eigenvalues.iter().sum();
        prop_assert!((sum - h.trace().re).abs() <= 1e-10 * h.max_abs().max(1.0));
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn singular_values_are_unitarily_invariant(rows in 1usize..=6, cols in 1usize..=6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = gaussian_matrix(&mut r, rows, cols);
        let u = MeasurementBasis::haar_random(rows, &mut r);
        let v = MeasurementBasis::haar_random(cols, &mut r);
        let rotated = &(u.matrix() * &m) * v.matrix();
        let a = svd(&m).unwrap().singular_values;
        let b = svd(&rotated).unwrap().singular_values;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn entropy_of_permuted_spectrum_is_identical(
        raw in prop::collection::vec(0.0f64..1.0, 1..8),
        shuffle_seed in any::<u64>(),
    ) {
        let total: f64 = raw.iter().sum::<f64>().max(1e-9);
        let spectrum: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let mut permuted = spectrum.clone();
        let mut r = rng(shuffle_seed);
        for i in (1..permuted.len()).rev() {
            permuted.swap(i, r.gen_range(0..=i));
        }
        prop_assert_eq!(xlog2x_spectrum(&spectrum).unwrap(), xlog2x_spectrum(&permuted).unwrap());
    }

    #[test]
    fn reduced_states_have_unit_trace_and_schmidt_symmetry(dims in dims_strategy(), seed in any::<u64>()) {
        let s = TripartiteState::haar_random(dims, seed).unwrap();
        let rho_c = s.reduced_density(Part::C);
        let rho_s = s.reduced_density(Part::AB);
        prop_assert!((rho_c.matrix().trace().re - 1.0).abs() <= 1e-10);
        prop_assert!((rho_s.matrix().trace().re - 1.0).abs() <= 1e-10);
        let a = sorted_nonzero(rho_c.eigenvalues().unwrap());
        let b = sorted_nonzero(rho_s.eigenvalues().unwrap());
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        let g = s.coefficient_matrix_cs();
        prop_assert!(rho_c.matrix().max_abs_diff(&(&g * &g.adjoint())) <= 1e-12);
    }

    #[test]
    fn local_unitaries_preserve_reduced_spectra(dims in dims_strategy(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = TripartiteState::haar_random_with(dims, &mut r).unwrap();
        let ua = MeasurementBasis::haar_random(dims.a, &mut r);
        let ub = MeasurementBasis::haar_random(dims.b, &mut r);
        let uc = MeasurementBasis::haar_random(dims.c, &mut r);
        let t = local_unitary(&s, ua.matrix(), ub.matrix(), uc.matrix());
        for part in [Part::A, Part::B, Part::C, Part::AB] {
            let x = s.reduced_density(part).eigenvalues().unwrap();
            let y = t.reduced_density(part).eigenvalues().unwrap();
            for (p, q) in x.iter().zip(&y) {
                prop_assert!((p - q).abs() <= 1e-9, "{part:?}");
            }
        }
    }

    #[test]
    fn branches_reconstruct_the_ab_state(dims in dims_strategy(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = TripartiteState::haar_random_with(dims, &mut r).unwrap();
        let u = MeasurementBasis::haar_random(dims.c, &mut r);
        let dec = decompose(&s, &u).unwrap();
        prop_assert!(ensemble_residual(&s, &dec) <= 1e-9);
        let total: f64 = dec.branches.iter().map(|b| b.probability).sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn average_entropy_ignores_column_phases_and_order(dims in dims_strategy(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = TripartiteState::haar_random_with(dims, &mut r).unwrap();
        let u = MeasurementBasis::haar_random(dims.c, &mut r);
        let n = dims.c;
        let phases: Vec<C64> = (0..n).map(|_| C64::from_polar(1.0, r.gen_range(0.0..std::f64::consts::TAU))).collect();
        let perm: Vec<usize> = (0..n).rev().collect();
        let v = CMatrix::from_fn(n, n, |row, col| u.matrix()[(row, perm[col])] * phases[col]);
        let v = MeasurementBasis::new(v).unwrap();
        let a = average_entropy(&s, &u).unwrap();
        let b = average_entropy(&s, &v).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn average_entropy_ignores_local_unitaries_on_a_and_b(dims in dims_strategy(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = TripartiteState::haar_random_with(dims, &mut r).unwrap();
        let u = MeasurementBasis::haar_random(dims.c, &mut r);
        let ua = MeasurementBasis::haar_random(dims.a, &mut r);
        let ub = MeasurementBasis::haar_random(dims.b, &mut r);
        let t = local_unitary(&s, ua.matrix(), ub.matrix(), &CMatrix::identity(dims.c));
        let a = average_entropy(&s, &u).unwrap();
        let b = average_entropy(&t, &u).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn state_json_round_trips(dims in dims_strategy(), seed in any::<u64>()) {
        let s = TripartiteState::haar_random(dims, seed).unwrap();
        let text = s.to_json().to_string();
        let back = TripartiteState::from_json_str(&text).unwrap();
        for (x, y) in s.amplitudes().iter().zip(back.amplitudes()) {
            prop_assert!((x - y).norm() <= 1e-15);
        }
    }
}
