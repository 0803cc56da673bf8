//! Operations, polymorphisms and fractional polymorphisms of valued constraint languages.

mod conditions;
mod language;
mod operation;
mod polymorphism;
mod support;

pub use conditions::{find_core, test_bwc, test_bwc_pipeline, test_sym, Bwc, Core, SymReport};
pub use language::Language;
pub use operation::{compose, FractionalOperation, Operation};
pub use polymorphism::{
    apply_to_block, enumerate_polymorphisms, enumerate_with_shape, is_polymorphism, polymorphism_counterexample,
    Counterexample, OpFilter, OpShape,
};
pub use support::{
    certificate_margin, check_certificate, in_support, in_support_among, is_fractional_polymorphism,
    separating_instance, CertificateEntry, FarkasCertificate, Membership, Refutation,
};
