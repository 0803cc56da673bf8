//! Valued constraint languages: finite sets of weighted relations on one domain.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::instance::Instance;
use crate::relation::WeightedRelation;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Language {
    domain_size: usize,
    relations: Vec<WeightedRelation>,
    names: Vec<String>,
}

impl Language {
    pub fn new(domain_size: usize) -> Self {
        Language {
            domain_size,
            relations: Vec::new(),
            names: Vec::new(),
        }
    }

    /// Every relation in the instance's relation store.
    pub fn from_instance(instance: &Instance) -> Self {
        let mut lang = Language::new(instance.domain_size());
        for (id, rel) in instance.relations().iter().enumerate() {
            lang.relations.push(rel.clone());
            lang.names.push(instance.relation_name(id).into());
        }
        lang
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn relations(&self) -> &[WeightedRelation] {
        &self.relations
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn add(&mut self, name: &str, rel: WeightedRelation) -> Result<usize> {
        if rel.domain_size() != self.domain_size {
            return Err(invalid!(
                "relation `{name}` has domain {}, language has {}",
                rel.domain_size(),
                self.domain_size
            ));
        }
        self.relations.push(rel);
        self.names.push(name.into());
        Ok(self.relations.len() - 1)
    }

    pub fn contains(&self, rel: &WeightedRelation) -> bool {
        self.relations.contains(rel)
    }

    pub fn is_crisp(&self) -> bool {
        self.relations.iter().all(WeightedRelation::is_crisp)
    }

    /// The language together with every constant relation `{(a)}`.
    pub fn with_constants(&self) -> Self {
        let mut out = self.clone();
        for a in 0..self.domain_size {
            let c = WeightedRelation::constant(self.domain_size, a).expect("label in range");
            if !out.contains(&c) {
                out.relations.push(c);
                out.names.push(format!("const{a}"));
            }
        }
        out
    }

    /// Restrict every relation to the sorted sub-domain `sub`, relabelled to `0..|sub|`.
    pub fn restrict(&self, sub: &[usize]) -> Result<Self> {
        Ok(Language {
            domain_size: sub.len(),
            relations: self
                .relations
                .iter()
                .map(|r| r.restrict(sub))
                .collect::<Result<_>>()?,
            names: self.names.clone(),
        })
    }
}
