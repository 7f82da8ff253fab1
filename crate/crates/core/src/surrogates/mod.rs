//! Global interpretable surrogates fitted to black-box outputs.

pub mod linear;
pub mod tree;

pub use linear::{fit_ols, fit_weighted_ridge, LinModel};
pub use tree::{
    evaluate_rules, extract_rules, feature_importance, fit_tree, importance_csv, Comparison,
    Condition, Node, Rule, TreeModel, TreeParams,
};
