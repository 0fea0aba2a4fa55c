//! Queries, rules and redescriptions.

mod ast;
mod redescription;
mod text;

pub use ast::{Literal, Node, Predicate, Query};
pub use redescription::{AttrId, Origin, Redescription, Rule};
pub use text::{format_query, parse_query};
