//! Seeded random CNF instances for self-tests and sweeps.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::formula::{Clause, CnfFormula, Literal, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomCnfParams {
    pub num_vars: u32,
    pub num_clauses: usize,
    pub min_width: usize,
    pub max_width: usize,
}

/// Uniform clause widths in `min_width..=max_width`, uniform variables and
/// signs. Repeated and complementary literals are left in.
pub fn random_cnf<R: Rng>(rng: &mut R, params: RandomCnfParams) -> CnfFormula {
    let clauses = (0..params.num_clauses)
        .map(|_| {
            let width = if params.num_vars == 0 {
                0
            } else {
                rng.gen_range(params.min_width..=params.max_width)
            };
            (0..width)
                .map(|_| {
                    let var = VarId::new(rng.gen_range(1..=params.num_vars)).expect("index >= 1");
                    Literal {
                        var,
                        negated: rng.gen_bool(0.5),
                    }
                })
                .collect::<Clause>()
        })
        .collect();
    CnfFormula::with_num_vars(clauses, params.num_vars).expect("literals drawn within range")
}

/// Deterministic generator for a seed.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` instances with `1..=max_vars` variables, `0..=max_clauses`
/// clauses and widths `1..=max_width`. Roughly one instance in fifty also
/// gets an empty clause.
pub fn sweep(
    seed: u64,
    count: usize,
    max_vars: u32,
    max_clauses: usize,
    max_width: usize,
) -> Vec<CnfFormula> {
    let mut rng = seeded(seed);
    (0..count)
        .map(|_| {
            let params = RandomCnfParams {
                num_vars: rng.gen_range(1..=max_vars),
                num_clauses: rng.gen_range(0..=max_clauses),
                min_width: 1,
                max_width,
            };
            let f = random_cnf(&mut rng, params);
            if rng.gen_ratio(1, 50) {
                let mut clauses = f.clauses().to_vec();
                let at = rng.gen_range(0..=clauses.len());
                clauses.insert(at, Clause::empty());
                CnfFormula::with_num_vars(clauses, f.num_vars()).expect("same variables")
            } else {
                f
            }
        })
        .collect()
}
