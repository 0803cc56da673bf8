//! Gap instances for SA(k, k) over Abelian group equations.
//!
//! The torus instance `I_n` is unsatisfiable, yet for `n > 2k` the uniform
//! distributions over solutions of the closed sets `X̄` form a feasible
//! SA(k, k) point of value 0.

mod group;
mod torus;

pub use group::{
    eq_relation_name, express_r0_rg, make_eqs_language, shifted_sum_gadget, shifted_sum_relation, sum_relation,
    AbelianGroup,
};
pub use torus::{build_gap_solution, closure_xbar, Closure, TorusInstance, TorusVar, R0, RG};
