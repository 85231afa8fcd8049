#![allow(dead_code)] // each test target uses a different slice of this module

//! Shared instance generation for the integration suites: seeded random
//! canonical forms over the three stock families, sampled at interior points
//! with a held-out validation split.

use herglotz_core::colligation::{evaluate_canonical, CanonicalForm, Representation};
use herglotz_core::matrix::ComplexMatrix;
use herglotz_core::rng::SplitMix64;
use herglotz_core::synthesis::SampleSet;
use herglotz_core::testfn::{quotient_map, Point, TestFamily};

pub struct RoundtripInstance {
    pub label: String,
    pub samples: SampleSet,
    pub held_points: Vec<Point>,
    pub held_values: Vec<ComplexMatrix>,
    pub canonical: CanonicalForm,
    pub representation: Representation,
}

pub fn interior_point(rng: &mut SplitMix64, family: &TestFamily, radius: f64) -> Point {
    match family {
        TestFamily::Disc => Point::disc(rng.next_in_disc(radius)),
        TestFamily::Polydisc { d } => {
            Point::new((0..*d).map(|_| rng.next_in_disc(radius)).collect())
        }
        _ => quotient_map(1, 1, rng.next_in_disc(radius), rng.next_in_disc(radius)).unwrap(),
    }
}

pub fn distinct_points(
    rng: &mut SplitMix64,
    family: &TestFamily,
    count: usize,
    radius: f64,
    include_base: bool,
) -> Vec<Point> {
    let mut pts: Vec<Point> = if include_base {
        vec![family.base_point()]
    } else {
        Vec::new()
    };
    while pts.len() < count {
        let p = interior_point(rng, family, radius);
        let closest = pts
            .iter()
            .map(|q| {
                q.coords()
                    .iter()
                    .zip(p.coords())
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        if closest > 1e-3 {
            pts.push(p);
        }
    }
    pts
}

/// One seeded roundtrip instance. `which` selects the family:
/// 0 = disc, 1 = polydisc(2), 2 = symmetrized bidisc (n_alpha = 32).
///
/// Every instance stays within dim K <= 8, m <= 3, at most 12 points
/// including the base, with 4 of them held out of the synthesis.
pub fn roundtrip_instance(seed: u64, which: usize) -> RoundtripInstance {
    let mut rng = SplitMix64::new(0x9000 + seed);
    let held = 4usize;
    let (family, label, m, rep, n_synth): (TestFamily, String, usize, Representation, usize) =
        match which {
            0 => {
                let m = 1 + rng.next_usize(3);
                let k = 2 + rng.next_usize(4);
                (
                    TestFamily::Disc,
                    format!("disc[s={seed} m={m} k={k}]"),
                    m,
                    Representation::block_diag(vec![k]),
                    8,
                )
            }
            1 => {
                let m = 1 + rng.next_usize(3);
                let k1 = 1 + rng.next_usize(2);
                // scalar-valued samples carry the least data per point, so
                // they get the most points and the smallest internal
                // dimensions; off-sample rigidity needs both
                let k2 = if m == 1 && k1 == 2 { 1 } else { 1 + rng.next_usize(2) };
                let n_synth = if m == 1 { 12 } else { 8 };
                (
                    TestFamily::Polydisc { d: 2 },
                    format!("polydisc[s={seed} m={m} k={k1}+{k2}]"),
                    m,
                    Representation::block_diag(vec![k1, k2]),
                    n_synth,
                )
            }
            _ => {
                let m = 1 + rng.next_usize(3);
                let mut mult = vec![0usize; 32];
                let atom = rng.next_usize(32);
                let k = 2 + rng.next_usize(3);
                mult[atom] = k;
                (
                    TestFamily::SymmetrizedBidisc { n_alpha: 32 },
                    format!("sym_bidisc[s={seed} m={m} k={k}@{atom}]"),
                    m,
                    Representation::block_diag(mult),
                    6,
                )
            }
        };

    let k = rep.dim();
    let canonical = CanonicalForm::new(
        rng.skew_hermitian(m, 0.3),
        rng.unitary(k),
        rng.matrix(k, m, 1.0 / (k as f64).sqrt()),
    )
    .unwrap();

    let pts = distinct_points(&mut rng, &family, n_synth + held, 0.55, true);
    let values: Vec<ComplexMatrix> = pts
        .iter()
        .map(|p| evaluate_canonical(&canonical, &rep, &family, p).unwrap())
        .collect();

    RoundtripInstance {
        label,
        samples: SampleSet::new(family, pts[..n_synth].to_vec(), values[..n_synth].to_vec())
            .unwrap(),
        held_points: pts[n_synth..].to_vec(),
        held_values: values[n_synth..].to_vec(),
        canonical,
        representation: rep,
    }
}

/// The batch of criterion-level roundtrip instances: 17 disc, 17 polydisc,
/// 16 symmetrized bidisc.
pub fn roundtrip_batch() -> Vec<RoundtripInstance> {
    let mut batch = Vec::with_capacity(50);
    for seed in 0..17u64 {
        batch.push(roundtrip_instance(seed, 0));
    }
    for seed in 0..17u64 {
        batch.push(roundtrip_instance(100 + seed, 1));
    }
    for seed in 0..16u64 {
        batch.push(roundtrip_instance(200 + seed, 2));
    }
    batch
}
