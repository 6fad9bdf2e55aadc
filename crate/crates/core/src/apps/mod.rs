//! Consumers of a released histogram.

pub mod blocking;
pub mod id3;

pub use blocking::{assign_blocks, reduction_ratio, BlockAssignment};
pub use id3::{train_id3, train_id3_from_histogram, DecisionTree, LabeledSchema, Node};
