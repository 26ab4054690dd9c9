//! Minimal 3-CNF representation for the satisfiability reduction: every
//! clause has exactly three literal slots, and the reduction additionally
//! requires each literal to fill at most two slots across the formula.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit {
    /// Zero-based variable index.
    pub var: u32,
    pub negated: bool,
}

impl Lit {
    pub fn pos(var: u32) -> Lit {
        Lit { var, negated: false }
    }

    pub fn neg(var: u32) -> Lit {
        Lit { var, negated: true }
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        assignment[self.var as usize] != self.negated
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CnfError {
    #[error("clause {clause} references variable {var} out of range (n = {n})")]
    VarOutOfRange { clause: usize, var: u32, n: usize },
    #[error("literal {lit} fills {count} clause slots, more than two")]
    OccurrenceBound { lit: String, count: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    n_vars: usize,
    clauses: Vec<[Lit; 3]>,
}

impl Cnf {
    pub fn new(n_vars: usize, clauses: Vec<[Lit; 3]>) -> Result<Cnf, CnfError> {
        for (i, clause) in clauses.iter().enumerate() {
            for lit in clause {
                if lit.var as usize >= n_vars {
                    return Err(CnfError::VarOutOfRange { clause: i, var: lit.var, n: n_vars });
                }
            }
        }
        Ok(Cnf { n_vars, clauses })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn clauses(&self) -> &[[Lit; 3]] {
        &self.clauses
    }

    /// Number of clause slots each literal fills; repeats inside one clause
    /// count separately. Indexed [var][0] positive, [var][1] negated.
    pub fn slot_counts(&self) -> Vec<[usize; 2]> {
        let mut counts = vec![[0usize; 2]; self.n_vars];
        for clause in &self.clauses {
            for lit in clause {
                counts[lit.var as usize][usize::from(lit.negated)] += 1;
            }
        }
        counts
    }

    /// Errs on the first literal filling more than two slots.
    pub fn check_occurrence_bound(&self) -> Result<(), CnfError> {
        for (var, counts) in self.slot_counts().iter().enumerate() {
            for (neg, &count) in counts.iter().enumerate() {
                if count > 2 {
                    let name = if neg == 1 { format!("-x{var}") } else { format!("x{var}") };
                    return Err(CnfError::OccurrenceBound { lit: name, count });
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|clause| clause.iter().any(|lit| lit.eval(assignment)))
    }
}
