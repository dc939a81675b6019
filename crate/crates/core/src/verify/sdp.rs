use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::operator::{any_rank_state, layout};
use super::{check_rng, CheckResult, Tally};
use crate::entropy::{hmax_program, hmax_rel_program, hmin_program, prepare, Prepared};
use crate::error::Result;
use crate::operator::{QuantumState, Split};
use crate::sdp::{check_weak_duality, solve, SdpProblem};

const SUITE: &str = "sdp";

/// Random ρ_AB with d_A, d_B ∈ {2, 3} and a random full-rank σ_B, prepared for the programs.
fn instance(r: &mut ChaCha8Rng) -> Result<(Prepared, QuantumState)> {
    let (da, db) = (r.random_range(2..=3), r.random_range(2..=3));
    let l = layout(&[("A", da), ("B", db)]);
    let rho = any_rank_state(&l, r)?;
    let sigma = crate::operator::random::random_state_with(&layout(&[("B", db)]), db, r)?;
    Ok((prepare(&rho, &Split::parse("A|B")?)?, sigma))
}

/// The min-entropy, relative max-entropy and max-entropy programs of one instance.
fn programs(p: &Prepared, sigma: &QuantumState) -> Result<Vec<(&'static str, SdpProblem)>> {
    let sab = sigma.op().embed(p.ab())?;
    Ok(vec![
        ("hmin", hmin_program(p)?.0),
        ("hmax-rel", hmax_rel_program(p, &sab)?.0),
        ("hmax", hmax_program(p)?.0),
    ])
}

/// ⟨X, S⟩ ≥ 0 at every iterate and weak duality at the returned point.
pub fn iterate_weak_duality(trials: usize, seed: u64) -> CheckResult {
    let mut t = Tally::new(SUITE, "iterate-weak-duality", 0.0);
    let mut r = check_rng(seed, "iterate-weak-duality");
    for k in 0..trials {
        t.guard(|| format!("trial {k}"), |t| {
            let (p, sigma) = instance(&mut r)?;
            for (name, prob) in programs(&p, &sigma)? {
                let sol = solve(&prob)?;
                let worst = sol.log.iter().map(|it| -it.complementarity).fold(f64::NEG_INFINITY, f64::max);
                t.record(worst, || format!("trial {k}, {name}: negative complementarity"));
                t.record_bool(check_weak_duality(&sol)?, || format!("trial {k}, {name}: dual exceeds primal"));
            }
            Ok(())
        });
    }
    t.finish()
}

/// |primal − dual| ≤ 1e-6 at the optimum of the relative and optimized max-entropy programs.
pub fn program_gap(trials: usize, seed: u64) -> CheckResult {
    let mut t = Tally::new(SUITE, "zero-duality-gap", 1e-6);
    let mut r = check_rng(seed, "zero-duality-gap");
    for k in 0..trials {
        t.guard(|| format!("trial {k}"), |t| {
            let (p, sigma) = instance(&mut r)?;
            for (name, prob) in programs(&p, &sigma)?.into_iter().skip(1) {
                let sol = solve(&prob)?.require_optimal(name)?;
                t.record_eq(sol.primal_objective, sol.dual_objective, || format!("trial {k}, {name}"));
            }
            Ok(())
        });
    }
    t.finish()
}

/// The explicit points Z̄ = 2‖ρ‖·1 are strictly dual feasible.
pub fn slater_probes(trials: usize, seed: u64) -> CheckResult {
    let mut t = Tally::new(SUITE, "slater-probe", 0.0);
    let mut r = check_rng(seed, "slater-probe");
    for k in 0..trials {
        t.guard(|| format!("trial {k}"), |t| {
            let (p, sigma) = instance(&mut r)?;
            let (_, rel) = hmax_rel_program(&p, &sigma.op().embed(p.ab())?)?;
            let (_, _, opt) = hmax_program(&p)?;
            t.record_bool(rel > 0.0 && opt > 0.0, || format!("trial {k}: margins {rel:.3e}, {opt:.3e}"));
            Ok(())
        });
    }
    t.finish()
}

/// Identical problems give identical solutions and iterate logs.
pub fn determinism(trials: usize, seed: u64) -> CheckResult {
    let mut t = Tally::new(SUITE, "solver-determinism", 0.0);
    let mut r = check_rng(seed, "solver-determinism");
    for k in 0..trials {
        t.guard(|| format!("trial {k}"), |t| {
            let (p, sigma) = instance(&mut r)?;
            for (name, prob) in programs(&p, &sigma)? {
                let a = serde_json::to_string(&solve(&prob)?)?;
                let b = serde_json::to_string(&solve(&prob.clone())?)?;
                t.record_bool(a == b, || format!("trial {k}, {name}"));
            }
            Ok(())
        });
    }
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_checks_pass_on_small_runs() {
        for c in [iterate_weak_duality(2, 3), program_gap(3, 3), slater_probes(3, 3), determinism(1, 3)] {
            assert!(c.passed, "{c:#?}");
        }
    }
}
