//! Grounding accuracy, meta-classifier metrics and text metrics.

mod eval;
mod iou;
mod text;

pub use eval::{
    apply_restrictions, apply_restrictions_with, evaluate_method, evaluate_subsets, EvalReport, Restrictions,
    ALL_SCENES,
};
pub use iou::{iou, is_correct};
pub use text::{bleu4, rouge_l, rouge_l_beta, tokenize};
