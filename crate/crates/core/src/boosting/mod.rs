//! Depth-limited decision trees boosted with multiplicative reweighting.

mod adaboost;
mod tree;

pub use adaboost::{
    predict_adaboost, train_adaboost, train_adaboost_traced, AdaBoostModel, AdaBoostParams, RoundStats,
    VoteMode, MAX_LOG_BETA,
};
pub use tree::{train_tree, train_tree_presorted, DecisionTreeModel, Node, SortedColumns};
