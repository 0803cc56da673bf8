use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::Language;
use crate::error::{invalid, Error, Result, DEFAULT_BUDGET};
use crate::gadgets::express;
use crate::instance::Instance;
use crate::relation::WeightedRelation;

/// A finite Abelian group on `{0, …, order-1}` given by its addition table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianGroup {
    name: String,
    order: usize,
    table: Vec<usize>,
    zero: usize,
    negation: Vec<usize>,
    g: usize,
}

impl AbelianGroup {
    /// Build from an addition table, checking the group axioms.
    pub fn from_table(name: &str, order: usize, table: Vec<usize>, g: usize) -> Result<Self> {
        if order < 2 {
            return Err(invalid!("group must be non-trivial"));
        }
        if table.len() != order * order || table.iter().any(|&v| v >= order) {
            return Err(invalid!("addition table must be {order}x{order} with entries below {order}"));
        }
        let add = |a: usize, b: usize| table[a * order + b];
        let zero = (0..order)
            .find(|&e| (0..order).all(|a| add(e, a) == a))
            .ok_or_else(|| invalid!("no identity element"))?;
        let mut negation = vec![0; order];
        for a in 0..order {
            negation[a] = (0..order)
                .find(|&b| add(a, b) == zero)
                .ok_or_else(|| invalid!("element {a} has no inverse"))?;
            for b in 0..order {
                if add(a, b) != add(b, a) {
                    return Err(invalid!("addition is not commutative at ({a}, {b})"));
                }
                for c in 0..order {
                    if add(add(a, b), c) != add(a, add(b, c)) {
                        return Err(invalid!("addition is not associative at ({a}, {b}, {c})"));
                    }
                }
            }
        }
        if g >= order || g == zero {
            return Err(invalid!("designated element must be a non-zero group element"));
        }
        Ok(AbelianGroup {
            name: String::from(name),
            order,
            table,
            zero,
            negation,
            g,
        })
    }

    /// `Z_p` with `g = 1`.
    pub fn cyclic(p: usize) -> Result<Self> {
        Self::product(&[p])
    }

    /// `Z_{p_1} × ⋯ × Z_{p_t}`, elements in mixed radix with the first factor
    /// most significant; `g` is the generator of the last factor.
    pub fn product(factors: &[usize]) -> Result<Self> {
        if factors.is_empty() || factors.iter().any(|&p| p < 2) {
            return Err(invalid!("every factor must have order at least 2"));
        }
        let order = factors
            .iter()
            .try_fold(1usize, |acc, &p| acc.checked_mul(p))
            .filter(|&o| o <= 1 << 12)
            .ok_or_else(|| invalid!("group order too large"))?;
        let digits = |mut a: usize| {
            let mut out = vec![0; factors.len()];
            for (slot, &p) in out.iter_mut().zip(factors).rev() {
                *slot = a % p;
                a /= p;
            }
            out
        };
        let mut table = Vec::with_capacity(order * order);
        for a in 0..order {
            let da = digits(a);
            for b in 0..order {
                let db = digits(b);
                table.push(
                    factors
                        .iter()
                        .zip(da.iter().zip(&db))
                        .fold(0, |acc, (&p, (&x, &y))| acc * p + (x + y) % p),
                );
            }
        }
        let name = factors.iter().map(|p| format!("Z{p}")).collect::<Vec<_>>().join("x");
        Self::from_table(&name, order, table, 1)
    }

    /// Parse names like `Z2`, `Z5` or `Z2xZ3`.
    pub fn parse(name: &str) -> Result<Self> {
        let factors = name
            .split('x')
            .map(|f| {
                f.strip_prefix('Z')
                    .and_then(|p| p.parse::<usize>().ok())
                    .ok_or_else(|| invalid!("unrecognised group `{name}`; expected e.g. Z2 or Z2xZ3"))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::product(&factors)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn zero(&self) -> usize {
        self.zero
    }

    /// The designated non-zero element.
    pub fn g(&self) -> usize {
        self.g
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }

    #[inline]
    pub fn neg(&self, a: usize) -> usize {
        self.negation[a]
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    pub fn sum(&self, xs: impl IntoIterator<Item = usize>) -> usize {
        xs.into_iter().fold(self.zero, |acc, x| self.add(acc, x))
    }
}

/// Name of `R^m_a = {x_1 + ⋯ + x_m = a}` in generated languages and files.
pub fn eq_relation_name(m: usize, a: usize) -> String {
    format!("R{m}_{a}")
}

/// `{(x_1, …, x_m) : x_1 + ⋯ + x_m = a}`.
pub fn sum_relation(group: &AbelianGroup, m: usize, a: usize) -> Result<WeightedRelation> {
    WeightedRelation::crisp(group.order(), m, |t| group.sum(t.iter().copied()) == a)
}

/// The language of all `R^m_a` with `1 ≤ m ≤ r` and `a ∈ G`.
pub fn make_eqs_language(group: &AbelianGroup, r: usize) -> Result<Language> {
    if r == 0 {
        return Err(invalid!("r must be at least 1"));
    }
    let mut lang = Language::new(group.order());
    for m in 1..=r {
        for a in 0..group.order() {
            lang.add(&eq_relation_name(m, a), sum_relation(group, m, a)?)?;
        }
    }
    Ok(lang)
}

/// `{(x, y, z) : x = y + z + c}`.
pub fn shifted_sum_relation(group: &AbelianGroup, c: usize) -> Result<WeightedRelation> {
    WeightedRelation::crisp(group.order(), 3, |t| t[0] == group.sum([t[1], t[2], c]))
}

/// `x = y + z + c` as `R^3_c(x, y', z') + R^2_0(y', y) + R^2_0(z', z)` with
/// `y', z'` auxiliary; variables are `x, y, z, y', z'`.
pub fn shifted_sum_gadget(group: &AbelianGroup, c: usize) -> Result<Instance> {
    let mut inst = Instance::new(group.order(), 5);
    let three = inst.add_named_relation(&eq_relation_name(3, c), sum_relation(group, 3, c)?)?;
    let two = inst.add_named_relation(&eq_relation_name(2, group.zero()), sum_relation(group, 2, group.zero())?)?;
    inst.add_constraint(three, vec![0, 3, 4])?;
    inst.add_constraint(two, vec![3, 1])?;
    inst.add_constraint(two, vec![4, 2])?;
    Ok(inst)
}

/// `R_0` and `R_g` obtained by minimising out the gadget auxiliaries.
///
/// Both are checked against the tables computed directly from the group law.
pub fn express_r0_rg(group: &AbelianGroup) -> Result<(WeightedRelation, WeightedRelation)> {
    let mut out = Vec::with_capacity(2);
    for c in [group.zero(), group.g()] {
        let expressed = express(&shifted_sum_gadget(group, c)?, &[0, 1, 2], DEFAULT_BUDGET)?;
        if expressed != shifted_sum_relation(group, c)? {
            return Err(Error::Internal(format!("expressed R_{c} differs from its direct table")));
        }
        out.push(expressed);
    }
    let rg = out.pop().unwrap();
    let r0 = out.pop().unwrap();
    Ok((r0, rg))
}
