use std::f64::consts::FRAC_PI_2;

use super::{PolarField, VphParams};
use crate::world::Scan;

/// Converts raw ranges into the distance the vehicle centre can travel along
/// each beam.
///
/// For beam `i` and every other beam `j` less than 90° away, with separation
/// `γ = |i - j|·res`, the scan point `O_j` sits at lateral offset
/// `s = d_j sin γ` from beam `i` and projects to `d_j cos γ` along it. When
/// `s <= R` and that projection falls short of `d_i`, the beam is cut at the
/// projection. `D_i` is the smallest such cut, less `R_prime`, floored at 0.
pub fn modify_scan(scan: &Scan, params: &VphParams) -> PolarField {
    let d = &scan.ranges;
    let n = d.len();
    let res = scan.angular_resolution;
    // largest separation with a positive projection
    let mut reach = (FRAC_PI_2 / res).ceil() as usize;
    while reach > 0 && reach as f64 * res >= FRAC_PI_2 {
        reach -= 1;
    }
    let trig: Vec<(f64, f64)> = (0..=reach).map(|k| (k as f64 * res).sin_cos()).collect();

    let distances = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(reach);
            let hi = (i + reach).min(n - 1);
            let mut reach_i = d[i];
            for (j, &dj) in d.iter().enumerate().take(hi + 1).skip(lo) {
                if j == i {
                    continue;
                }
                let (sin_g, cos_g) = trig[i.abs_diff(j)];
                if dj * sin_g > params.robot_radius {
                    continue;
                }
                let along = dj * cos_g;
                if along <= d[i] {
                    reach_i = reach_i.min(along);
                }
            }
            (reach_i - params.clearance_deduction).max(0.0)
        })
        .collect();
    PolarField::new(distances, res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(r: f64) -> VphParams {
        VphParams {
            robot_radius: r,
            clearance_deduction: r,
            ..VphParams::default()
        }
    }

    /// Literal three-case evaluation over every (i, j) pair, angles in degrees.
    fn brute_force(d: &[f64], r: f64, r_prime: f64) -> Vec<f64> {
        (0..d.len())
            .map(|i| {
                let mut candidates = vec![d[i]];
                for j in 0..d.len() {
                    let sep = (i as f64 - j as f64).abs();
                    if j == i || sep >= 90.0 {
                        continue;
                    }
                    let s = d[j] * sep.to_radians().sin();
                    let proj = d[j] * sep.to_radians().cos();
                    let modified = if s > r {
                        d[i]
                    } else if proj > d[i] {
                        d[i]
                    } else {
                        proj
                    };
                    candidates.push(modified);
                }
                (candidates.into_iter().fold(f64::INFINITY, f64::min) - r_prime).max(0.0)
            })
            .collect()
    }

    #[test]
    fn free_scan_loses_only_r_prime() {
        let f = modify_scan(&Scan::uniform(80.0), &params(0.5));
        assert!(f.distances.iter().all(|&x| x == 79.5));
    }

    #[test]
    fn single_close_return_shadows_neighbours() {
        let mut ranges = vec![80.0; 181];
        ranges[90] = 5.0;
        let scan = Scan::new(ranges.clone(), 1f64.to_radians(), 80.0);
        let f = modify_scan(&scan, &params(0.5));
        let oracle = brute_force(&ranges, 0.5, 0.5);
        // 5·cos(1°) − 0.5
        assert_relative_eq!(oracle[89], 4.499_238_475_781_956, epsilon = 1e-12);
        assert_relative_eq!(f.distances[89], oracle[89], epsilon = 1e-12);
        assert_relative_eq!(f.distances[90], 4.5, epsilon = 1e-12);
        for (a, b) in f.distances.iter().zip(&oracle) {
            assert_relative_eq!(*a, *b, epsilon = 1e-12);
        }
        // 5·sin(6°) > 0.5, so beam 84 stays open while 85 is cut
        assert_eq!(f.distances[84], 79.5);
        assert!(f.distances[85] < 5.0);
    }

    #[test]
    fn close_points_clamp_to_zero() {
        let scan = Scan::uniform(0.3);
        let f = modify_scan(&scan, &params(0.5));
        assert!(f.distances.iter().all(|&x| x == 0.0));
    }

    proptest! {
        #[test]
        fn matches_brute_force(ranges in proptest::collection::vec(0.2..80.0f64, 181), r in 0.1..1.0f64) {
            let scan = Scan::new(ranges.clone(), 1f64.to_radians(), 80.0);
            let f = modify_scan(&scan, &params(r));
            let oracle = brute_force(&ranges, r, r);
            for (a, b) in f.distances.iter().zip(&oracle) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn never_increases_distance(ranges in proptest::collection::vec(1.0..80.0f64, 181)) {
            let scan = Scan::new(ranges.clone(), 1f64.to_radians(), 80.0);
            let p = params(0.5);
            let f = modify_scan(&scan, &p);
            for (big_d, d) in f.distances.iter().zip(&ranges) {
                prop_assert!(big_d + p.clearance_deduction <= d + 1e-12);
                prop_assert!(*big_d >= 0.0 && *big_d <= 80.0 - p.clearance_deduction);
            }
        }

        #[test]
        fn symmetric_scan_gives_symmetric_field(half in proptest::collection::vec(0.5..80.0f64, 91)) {
            let mut ranges = vec![0.0; 181];
            for k in 0..=90 {
                ranges[90 - k] = half[k];
                ranges[90 + k] = half[k];
            }
            let f = modify_scan(&Scan::new(ranges, 1f64.to_radians(), 80.0), &params(0.5));
            for k in 0..=90 {
                prop_assert_eq!(f.distances[90 - k], f.distances[90 + k]);
            }
        }
    }
}
