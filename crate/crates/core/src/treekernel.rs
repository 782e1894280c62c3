//! Recursive label-matching tree kernel.
//!
//! `comp_sim(a, b)` walks every ordered pair of children `(x, y)` of `a` and
//! `b`. Pairs with equal labels contribute 1 when both are leaves and
//! `comp_sim(x, y)` when both are internal nodes; mixed leaf/internal pairs
//! contribute nothing. The sum is divided by the product of the two child
//! counts (a zero count divides by 1). Root labels are never compared.

use std::cmp::Ordering;

use crate::treebank::DepTree;

/// A non-negative, finite similarity value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct KernelScore(f64);

impl KernelScore {
    pub fn value(self) -> f64 {
        self.0
    }

    /// Descending score, then ascending id.
    pub fn rank_cmp(a: (usize, KernelScore), b: (usize, KernelScore)) -> Ordering {
        b.1 .0.total_cmp(&a.1 .0).then(a.0.cmp(&b.0))
    }
}

/// Kernel between node `a` of `ta` and node `b` of `tb`.
pub fn comp_sim(ta: &DepTree, a: usize, tb: &DepTree, b: usize) -> KernelScore {
    KernelScore(comp_sim_raw(ta, a, tb, b))
}

fn comp_sim_raw(ta: &DepTree, a: usize, tb: &DepTree, b: usize) -> f64 {
    let ca = &ta.node(a).children;
    let cb = &tb.node(b).children;
    let mut k = 0.0;
    for &x in ca {
        let nx = ta.node(x);
        for &y in cb {
            let ny = tb.node(y);
            if nx.label != ny.label {
                continue;
            }
            match (nx.is_leaf(), ny.is_leaf()) {
                (true, true) => k += 1.0,
                (false, false) => k += comp_sim_raw(ta, x, tb, y),
                _ => {}
            }
        }
    }
    let size_a = ca.len().max(1) as f64;
    let size_b = cb.len().max(1) as f64;
    k / (size_a * size_b)
}

/// Kernel between the roots of two trees.
pub fn tree_kernel_similarity(t1: &DepTree, t2: &DepTree) -> KernelScore {
    comp_sim(t1, t1.root(), t2, t2.root())
}
