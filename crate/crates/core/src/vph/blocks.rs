use super::{PolarField, VphParams};

/// Inclusive beam-index interval covered by one obstacle block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub start: usize,
    pub end: usize,
}

impl Block {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn contains(&self, i: usize) -> bool {
        (self.start..=self.end).contains(&i)
    }

    pub fn beams(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

/// Ascending, disjoint blocks.
pub type BlockSet = Vec<Block>;

/// Law-of-cosines distance between the points of adjacent beams.
fn adjacent_gap(field: &PolarField, i: usize) -> f64 {
    let a = field.distances[i];
    let b = field.distances[i + 1];
    (a * a + b * b - 2.0 * a * b * field.angular_resolution.cos())
        .max(0.0)
        .sqrt()
}

/// Groups beams inside the rolling window into blocks. Neighbouring beams
/// share a block when their points are at most `R + 2Δd` apart; any beam
/// outside the window ends the current block.
pub fn cluster_blocks(field: &PolarField, params: &VphParams) -> BlockSet {
    let threshold = params.block_threshold();
    let mut blocks = BlockSet::new();
    let mut current: Option<Block> = None;
    for i in 0..field.len() {
        if field.distances[i] >= params.window_radius {
            blocks.extend(current.take());
            continue;
        }
        current = match current {
            Some(b) if b.end + 1 == i && adjacent_gap(field, b.end) <= threshold => {
                Some(Block::new(b.start, i))
            }
            Some(b) => {
                blocks.push(b);
                Some(Block::new(i, i))
            }
            None => Some(Block::new(i, i)),
        };
    }
    blocks.extend(current);
    blocks
}

fn end_gap(field: &PolarField, left: &Block, right: &Block) -> f64 {
    (field.point(right.start) - field.point(left.end)).norm()
}

/// Fuses blocks the vehicle cannot pass between.
///
/// Each round looks at every block triple `(k, k+1, k+2)`: the outer pair is
/// fused (swallowing the middle block) when the gap between block `k`'s end
/// and block `k+2`'s start is below `R + 2Δd`, and each adjacent pair is
/// fused when its own end-to-end gap is. All fusions of a round are applied
/// together; rounds repeat until nothing changes, so the result is a
/// fixpoint.
pub fn merge_blocks(blocks: &[Block], field: &PolarField, params: &VphParams) -> BlockSet {
    let threshold = params.block_threshold();
    let mut current: BlockSet = blocks.to_vec();
    loop {
        let k = current.len();
        if k < 2 {
            return current;
        }
        // fused[x]: blocks x and x+1 end up in the same block
        let mut fused = vec![false; k - 1];
        for a in 0..k {
            for b in (a + 1)..=(a + 2).min(k - 1) {
                if end_gap(field, &current[a], &current[b]) < threshold {
                    fused[a..b].iter_mut().for_each(|f| *f = true);
                }
            }
        }
        if !fused.iter().any(|&f| f) {
            return current;
        }
        let mut next = BlockSet::with_capacity(k);
        let mut open = current[0];
        for x in 0..k - 1 {
            if fused[x] {
                open.end = current[x + 1].end;
            } else {
                next.push(open);
                open = current[x + 1];
            }
        }
        next.push(open);
        current = next;
    }
}
