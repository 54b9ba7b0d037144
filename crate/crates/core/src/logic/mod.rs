//! Formula language, feature sets, samples and interface substitution.

mod features;
mod formula;
pub mod normal;
mod query;
mod sample;

pub use features::{
    all_vectors, build_feature_set, classify, cube, eval_body, positive_count, quantified_vars,
    unitary_classifier, FeatureSet, FeatureVector, FunctionSig, MethodPredicate,
};
pub use formula::{fresh_name, Atom, Formula, Prop, Sort, Term, Var};
pub use query::{
    instantiate, interface_order_by_vectors, order_of, substitute, Interface, Order, PathStep,
    PlaceholderApp, VerificationQuery,
};
pub use sample::{extract_feature_vectors, Domain, Label, Sample, ValueId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LogicError {
    #[error("variable `{0}` is not assigned")]
    Unassigned(String),
    #[error("ill-sorted: {0}")]
    IllSorted(String),
    #[error("predicate `{0}`: {1}")]
    BadPredicate(String, String),
    #[error("duplicate variable `{0}`")]
    DuplicateVar(String),
    #[error("quantified variable `{0}` must be element-sorted")]
    BadQuantifier(String),
    #[error("wrong number of arguments for `{0}`")]
    Arity(String),
    #[error("no specification or signature for `{0}`")]
    MissingSpec(String),
    #[error("interfaces have different domains")]
    DomainMismatch,
}
