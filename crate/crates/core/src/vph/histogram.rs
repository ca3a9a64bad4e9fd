use super::{Block, ConcavityRule, PolarField, VphError, VphParams};

/// Per-beam masks and scores of one planning cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `B_i`: 0 on beams of concave blocks.
    pub symbol: Vec<u8>,
    /// `H_i`: 1 where the reachable distance exceeds the safe distance.
    pub threshold: Vec<u8>,
    /// `S_i`: weighted goal and heading deviation.
    pub denominators: Vec<f64>,
    /// `C_i = B_i H_i D_i / S_i`.
    pub costs: Vec<f64>,
    /// Winning beam, `None` when every cost is zero.
    pub selected: Option<usize>,
    pub goal_bearing: f64,
    pub safe_distance: f64,
}

fn is_concave(rule: ConcavityRule, d: &[f64], prev: &Block, cur: &Block, next: &Block) -> bool {
    let (left, left_nb) = (d[cur.start], d[prev.end]);
    let (right, right_nb) = (d[cur.end], d[next.start]);
    match rule {
        ConcavityRule::Literal => left < left_nb && right < right_nb,
        ConcavityRule::Recessed => left > left_nb && right > right_nb,
    }
}

/// `B_i`: zero on every beam of a concave block, one elsewhere. Only blocks
/// with a neighbour on both sides can be concave.
pub fn symbol_function(blocks: &[Block], field: &PolarField, params: &VphParams) -> Vec<u8> {
    let mut symbol = vec![1u8; field.len()];
    for w in blocks.windows(3) {
        if is_concave(params.concavity_rule, &field.distances, &w[0], &w[1], &w[2]) {
            symbol[w[1].start..=w[1].end].iter_mut().for_each(|b| *b = 0);
        }
    }
    symbol
}

/// `H_i = 1` iff `D_i > D_safe(speed)`.
pub fn threshold_function(field: &PolarField, speed: f64, params: &VphParams) -> Vec<u8> {
    let safe = params.safe_distance(speed);
    field
        .distances
        .iter()
        .map(|&d| u8::from(d > safe))
        .collect()
}

/// `S_i = k1·hg + k2·ho + k3` with `hg = |i - goal_bearing|` and
/// `ho = |i - 90|`, all in degrees.
pub fn score_denominators(field: &PolarField, goal_bearing: f64, params: &VphParams) -> Vec<f64> {
    let ahead = 90.0;
    (0..field.len())
        .map(|i| {
            let beam = field.beam_deg(i);
            params.k1 * (beam - goal_bearing).abs() + params.k2 * (beam - ahead).abs() + params.k3
        })
        .collect()
}

/// `C_i = B_i H_i D_i / S_i`. The goal bearing is clamped into [0°, 180°].
pub fn cost_function(
    field: &PolarField,
    symbol: &[u8],
    threshold: &[u8],
    goal_bearing: f64,
    params: &VphParams,
) -> Vec<f64> {
    let bearing = goal_bearing.clamp(0.0, 180.0);
    score_denominators(field, bearing, params)
        .into_iter()
        .enumerate()
        .map(|(i, s)| f64::from(symbol[i] * threshold[i]) * field.distances[i] / s)
        .collect()
}

/// Index of the largest cost. Ties go to the beam nearest the goal bearing,
/// then to the lower index.
pub fn select_direction(
    costs: &[f64],
    goal_bearing: f64,
    resolution_deg: f64,
) -> Result<usize, VphError> {
    let max = costs.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(VphError::NoFeasibleDirection);
    }
    let hg = |i: usize| (i as f64 * resolution_deg - goal_bearing).abs();
    let mut best: Option<usize> = None;
    for (i, &c) in costs.iter().enumerate() {
        if c != max {
            continue;
        }
        match best {
            Some(b) if hg(b) <= hg(i) => {}
            _ => best = Some(i),
        }
    }
    best.ok_or(VphError::NoFeasibleDirection)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vph::{cluster_blocks, merge_blocks};
    use proptest::prelude::*;

    fn ones() -> Vec<u8> {
        vec![1; 181]
    }

    #[test]
    fn no_blocks_no_mask() {
        let f = PolarField::from_degrees(vec![10.0; 181]);
        assert_eq!(symbol_function(&[], &f, &VphParams::default()), ones());
    }

    #[test]
    fn isolated_block_is_never_concave() {
        let mut d = vec![80.0; 181];
        d[80..=100].iter_mut().for_each(|x| *x = 2.0);
        let f = PolarField::from_degrees(d);
        let blocks = vec![Block::new(80, 100)];
        assert_eq!(symbol_function(&blocks, &f, &VphParams::default()), ones());
        let two = vec![Block::new(10, 20), Block::new(80, 100)];
        assert_eq!(symbol_function(&two, &f, &VphParams::default()), ones());
    }

    #[test]
    fn recessed_rule_masks_the_pocket_floor() {
        let mut d = vec![80.0; 181];
        d[40..=60].iter_mut().for_each(|x| *x = 3.0);
        d[80..=100].iter_mut().for_each(|x| *x = 6.0);
        d[120..=140].iter_mut().for_each(|x| *x = 3.0);
        let f = PolarField::from_degrees(d);
        let blocks = vec![Block::new(40, 60), Block::new(80, 100), Block::new(120, 140)];
        let p = VphParams {
            concavity_rule: ConcavityRule::Recessed,
            ..VphParams::default()
        };
        let b = symbol_function(&blocks, &f, &p);
        assert!(b[80..=100].iter().all(|&x| x == 0));
        assert_eq!(b.iter().filter(|&&x| x == 0).count(), 21);
        let literal = symbol_function(&blocks, &f, &VphParams::default());
        assert_eq!(literal, ones());
    }

    /// Six blocks in beam order labelled E, F, A, B, C, D: the labels run
    /// round the figure starting from the third block, and only F and B have
    /// both ends nearer than their neighbours' facing ends.
    #[test]
    fn six_block_layout_marks_b_and_f() {
        let spans = [(5, 15), (35, 45), (65, 75), (95, 105), (125, 135), (155, 165)];
        let labels = ['E', 'F', 'A', 'B', 'C', 'D'];
        let ranges = [5.0, 2.0, 6.0, 3.0, 5.0, 6.5];
        let mut d = vec![80.0; 181];
        for (&(s, e), &r) in spans.iter().zip(&ranges) {
            d[s..=e].iter_mut().for_each(|x| *x = r);
        }
        let f = PolarField::from_degrees(d);
        let p = VphParams::default();
        let blocks = merge_blocks(&cluster_blocks(&f, &p), &f, &p);
        assert_eq!(blocks.len(), 6);
        let b = symbol_function(&blocks, &f, &p);
        let concave: Vec<char> = blocks
            .iter()
            .zip(labels)
            .filter(|(blk, _)| b[blk.start] == 0)
            .map(|(_, l)| l)
            .collect();
        assert_eq!(concave, vec!['F', 'B']);
    }

    #[test]
    fn safe_distance_boundary_is_exclusive() {
        let p = VphParams {
            robot_radius: 0.5,
            puff: 0.1,
            safety_margin: 0.0,
            ..VphParams::default()
        };
        assert!((p.safe_distance(0.0) - 0.6).abs() < 1e-15);
        let f = PolarField::from_degrees(vec![79.5, p.safe_distance(0.0), 0.59]);
        assert_eq!(threshold_function(&f, 0.0, &p), vec![1, 0, 0]);
        // v²/(2a) with v = 2, a = 2 adds exactly 1 m
        let q = VphParams {
            deceleration: 2.0,
            ..p.clone()
        };
        assert!((q.safe_distance(2.0) - q.safe_distance(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_field_goal_ahead_picks_90() {
        let f = PolarField::from_degrees(vec![20.0; 181]);
        let c = cost_function(&f, &ones(), &ones(), 90.0, &VphParams::default());
        assert_eq!(select_direction(&c, 90.0, 1.0), Ok(90));
    }

    #[test]
    fn goal_at_120_exhaustive() {
        let p = VphParams {
            k1: 2.0,
            k2: 1.0,
            k3: 0.5,
            ..VphParams::default()
        };
        let f = PolarField::from_degrees(vec![20.0; 181]);
        let c = cost_function(&f, &ones(), &ones(), 120.0, &p);
        // exhaustive minimum of S(i) = 2|i-120| + |i-90| + 0.5
        let argmin = (0..=180)
            .min_by(|&a, &b| {
                let s = |i: i32| 2.0 * f64::from((i - 120).abs()) + f64::from((i - 90).abs()) + 0.5;
                s(a).partial_cmp(&s(b)).unwrap()
            })
            .unwrap();
        assert_eq!(argmin, 120);
        assert_eq!(select_direction(&c, 120.0, 1.0), Ok(120));
    }

    #[test]
    fn masked_beams_cost_nothing() {
        let f = PolarField::from_degrees(vec![20.0; 181]);
        let mut b = ones();
        b[90] = 0;
        let c = cost_function(&f, &b, &ones(), 90.0, &VphParams::default());
        assert_eq!(c[90], 0.0);
        assert!(c[89] > 0.0);
    }

    #[test]
    fn selection_rules() {
        let mut c = vec![0.0; 181];
        c[75] = 3.0;
        c[20] = 1.0;
        assert_eq!(select_direction(&c, 90.0, 1.0), Ok(75));
        assert_eq!(
            select_direction(&[0.0; 181], 90.0, 1.0),
            Err(VphError::NoFeasibleDirection)
        );
        let mut tie = vec![0.0; 181];
        tie[80] = 2.0;
        tie[100] = 2.0;
        assert_eq!(select_direction(&tie, 100.0, 1.0), Ok(100));
        assert_eq!(select_direction(&tie, 90.0, 1.0), Ok(80));
    }

    proptest! {
        #[test]
        fn positive_cost_implies_open_beam(
            d in proptest::collection::vec(0.0..80.0f64, 181),
            bearing in 0.0..180.0f64,
            speed in 0.0..3.0f64,
        ) {
            let p = VphParams::default();
            let f = PolarField::from_degrees(d);
            let blocks = merge_blocks(&cluster_blocks(&f, &p), &f, &p);
            let b = symbol_function(&blocks, &f, &p);
            let h = threshold_function(&f, speed, &p);
            let c = cost_function(&f, &b, &h, bearing, &p);
            for i in 0..181 {
                prop_assert!(c[i] >= 0.0);
                if c[i] > 0.0 {
                    prop_assert!(b[i] == 1 && h[i] == 1 && f.distances[i] > 0.0);
                }
            }
        }

        #[test]
        fn scaling_distances_keeps_argmax(
            d in proptest::collection::vec(0.1..70.0f64, 181),
            mask in proptest::collection::vec(0u8..=1, 181),
            bearing in 0.0..180.0f64,
            scale in 0.1..10.0f64,
        ) {
            let p = VphParams::default();
            let f = PolarField::from_degrees(d.clone());
            let g = PolarField::from_degrees(d.iter().map(|x| x * scale).collect());
            let ones = vec![1u8; 181];
            let a = select_direction(&cost_function(&f, &mask, &ones, bearing, &p), bearing, 1.0);
            let b = select_direction(&cost_function(&g, &mask, &ones, bearing, &p), bearing, 1.0);
            prop_assert_eq!(a, b);
        }
    }
}
