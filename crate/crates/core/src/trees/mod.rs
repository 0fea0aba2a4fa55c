//! Multi-target predictive clustering trees, their randomized forests, and
//! conversion of tree leaves into conjunctive rules.

mod forest;
mod rules;
mod tree;

pub use forest::{
    ros_bag_size, subspace_size, target_batches, train_extra_pct, train_forest, train_generating,
    train_pct, train_supplementing, ForestKind, ForestSpec, BAG_FRACTION, DEFAULT_ROS_FRACTION,
};
pub use rules::extract_rules;
pub use tree::{
    best_split, grow, score_split, Problem, ScoredSplit, Splitter, TargetMatrix, Test, Tree,
    TreeNode, TreeParams,
};
