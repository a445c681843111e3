//! Randomized invariant checks for the spectral and path-counting layer.
//!
//! Every loop runs on a fixed seed so failures replay exactly.

use num_bigint::BigUint;
use rand_chacha::ChaCha8Rng;
use rand::{Rng, SeedableRng};
use symdyn::graph::{count_paths, TransitionGraph};
use symdyn::matrix::{is_irreducible, norm_growth, spectral_radius, TransitionMatrix};

/// Samples a valid transition matrix: Bernoulli entries, then one forced
/// entry per empty row and per empty column so the validity invariants hold.
fn random_matrix(rng: &mut ChaCha8Rng, p: usize, density: f64) -> TransitionMatrix {
    let mut rows = vec![vec![0u8; p]; p];
    for row in rows.iter_mut() {
        for e in row.iter_mut() {
            *e = u8::from(rng.gen_bool(density));
        }
    }
    for row in rows.iter_mut() {
        if row.iter().all(|&e| e == 0) {
            row[rng.gen_range(0..p)] = 1;
        }
    }
    for c in 0..p {
        if (0..p).all(|r| rows[r][c] == 0) {
            rows[rng.gen_range(0..p)][c] = 1;
        }
    }
    TransitionMatrix::new(&rows).expect("patched sample satisfies the invariants")
}

/// Samples an irreducible matrix: a full cycle through every vertex plus
/// random extra edges keeps the graph strongly connected by construction.
fn random_irreducible(rng: &mut ChaCha8Rng, p: usize, extra_density: f64) -> TransitionMatrix {
    let mut rows = vec![vec![0u8; p]; p];
    let mut order: Vec<usize> = (0..p).collect();
    for i in (1..p).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    for w in 0..p {
        rows[order[w]][order[(w + 1) % p]] = 1;
    }
    for row in rows.iter_mut() {
        for e in row.iter_mut() {
            if rng.gen_bool(extra_density) {
                *e = 1;
            }
        }
    }
    TransitionMatrix::new(&rows).expect("cycle plus extras is valid")
}

#[test]
fn path_counts_compose_over_concatenation() {
    // Splitting a path of length m+n at step m partitions the paths by their
    // midpoint, so the counts must satisfy the product-sum identity.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for _ in 0..100 {
        let p = rng.gen_range(2..=6);
        let a = random_matrix(&mut rng, p, 0.5);
        let m = rng.gen_range(0..=5u32);
        let n = rng.gen_range(0..=5u32);
        for i in 1..=p {
            for j in 1..=p {
                let direct = count_paths(&a, i, j, m + n);
                let mut split = BigUint::from(0u32);
                for k in 1..=p {
                    split += count_paths(&a, i, k, m) * count_paths(&a, k, j, n);
                }
                assert_eq!(direct, split, "p={p} m={m} n={n} i={i} j={j}");
            }
        }
    }
}

#[test]
fn spectral_radius_is_at_least_one() {
    // No zero rows means every vertex has an out-edge, so some cycle exists
    // and the radius cannot drop below 1.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..200 {
        let p = rng.gen_range(2..=8);
        let a = random_matrix(&mut rng, p, 0.35);
        let r = spectral_radius(&a, 1e-9).unwrap();
        assert!(r.lambda >= 1.0 - 1e-9, "lambda = {}", r.lambda);
        assert!(r.lambda <= a.max_row_sum() as f64 + 1e-9);
    }
}

#[test]
fn spectral_radius_is_monotone_under_domination() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for _ in 0..150 {
        let p = rng.gen_range(2..=7);
        let a = random_matrix(&mut rng, p, 0.4);
        // enlarge: flip some zeros to ones
        let mut rows: Vec<Vec<u8>> = (1..=p)
            .map(|i| (1..=p).map(|j| a.entry(i, j)).collect())
            .collect();
        for row in rows.iter_mut() {
            for e in row.iter_mut() {
                if *e == 0 && rng.gen_bool(0.3) {
                    *e = 1;
                }
            }
        }
        let b = TransitionMatrix::new(&rows).unwrap();
        assert!(a.dominated_by(&b));
        let la = spectral_radius(&a, 1e-9).unwrap().lambda;
        let lb = spectral_radius(&b, 1e-9).unwrap().lambda;
        assert!(la <= lb + 2e-9, "la = {la}, lb = {lb}");
    }
}

#[test]
fn full_cycle_agrees_with_irreducibility() {
    // Two independent implementations: Tarjan components on one side,
    // bit-set transitive closure on the other. They must always agree.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    for i in 0..500 {
        let p = rng.gen_range(2..=8);
        let a = if i % 3 == 0 {
            random_irreducible(&mut rng, p, 0.2)
        } else {
            random_matrix(&mut rng, p, 0.3)
        };
        let via_graph = TransitionGraph::new(&a).has_full_cycle();
        let via_closure = is_irreducible(&a);
        assert_eq!(via_graph, via_closure, "sample {i} (p = {p})");
    }
}

#[test]
fn norm_growth_brackets_the_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    for _ in 0..60 {
        let p = rng.gen_range(2..=8);
        let a = random_matrix(&mut rng, p, 0.4);
        let lambda = spectral_radius(&a, 1e-10).unwrap().lambda;
        // the total-sum norm dominates the radius at every power
        let g = norm_growth(&a, 500);
        assert!(g >= lambda.ln() - 1e-9, "g = {g}, ln lambda = {}", lambda.ln());
    }
    for _ in 0..40 {
        let p = rng.gen_range(2..=8);
        let a = random_irreducible(&mut rng, p, 0.25);
        let lambda = spectral_radius(&a, 1e-10).unwrap().lambda;
        let g = norm_growth(&a, 2000);
        assert!(
            (g - lambda.ln()).abs() <= 0.03,
            "p = {p}: g = {g}, ln lambda = {}",
            lambda.ln()
        );
    }
}

#[test]
fn irreducible_samples_carry_positive_eigenvectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    for _ in 0..100 {
        let p = rng.gen_range(2..=8);
        let a = random_irreducible(&mut rng, p, 0.2);
        let r = spectral_radius(&a, 1e-9).unwrap();
        let v = r.eigvec.expect("irreducible input must yield an eigenvector");
        assert_eq!(v.len(), p);
        assert!(v.iter().all(|&x| x > 0.0), "eigvec = {v:?}");
        let norm = v.iter().fold(0.0f64, |m, &x| m.max(x));
        assert!((norm - 1.0).abs() <= 1e-12);
    }
}
