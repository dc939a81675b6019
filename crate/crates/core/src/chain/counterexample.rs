use serde::Serialize;

use super::terms::error_f;
use crate::entropy::{self, Bits};
use crate::error::{Error, Result};
use crate::operator::{CMat, PureState, QuantumState, Split, SystemLayout};
use crate::smoothing::smooth_hmin;

/// Label of the classical register.
pub const REGISTER: &str = "C'";

/// Largest block dimension evaluated by a direct SDP; larger blocks use additivity over their
/// tensor factors.
const DIRECT_BLOCK_DIM: usize = 27;

/// Σ_i p_i ρ_i ⊗ |i⟩⟨i|_R for blocks on a common layout.
pub fn classical_mixture(blocks: &[(QuantumState, f64)], register: &str) -> Result<QuantumState> {
    let first = blocks.first().ok_or_else(|| Error::invalid("no blocks"))?;
    let layout = first.0.layout().clone();
    let n = blocks.len();
    let full = layout.concat(&SystemLayout::single(register, n)?)?;
    let d = layout.dim();
    let mut m = CMat::zeros(d * n, d * n);
    for (i, (rho, p)) in blocks.iter().enumerate() {
        if rho.layout() != &layout {
            return Err(Error::Layout("classical blocks must share one layout".into()));
        }
        for r in 0..d {
            for c in 0..d {
                m[(r * n + i, c * n + i)] = rho.matrix()[(r, c)] * *p;
            }
        }
    }
    QuantumState::from_matrix(full, m)
}

fn check_probabilities(ps: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    let mut any = false;
    for p in ps {
        if !(0.0..=1.0 + 1e-12).contains(&p) {
            return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
        }
        total += p;
        any = true;
    }
    if !any {
        return Err(Error::invalid("empty block list"));
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("probabilities sum to {total}")));
    }
    Ok(())
}

/// −log₂ Σ_i p_i 2^{−H_i} from per-block min-entropies.
pub fn combine_classical_hmin(values: &[(Bits, f64)]) -> Result<Bits> {
    check_probabilities(values.iter().map(|v| v.1))?;
    let mut sum = 0.0;
    for &(h, p) in values {
        if p == 0.0 {
            continue;
        }
        match h {
            Bits::Finite(v) => sum += p * (-v).exp2(),
            Bits::NegInf => return Ok(Bits::NegInf),
            Bits::PosInf => {}
        }
    }
    Ok(Bits::neg_log2_of(sum))
}

/// H_min(A|B C_reg) of Σ p_i ρ_i ⊗ |i⟩⟨i| via the per-block values H_min(A|B)_{ρ_i}.
pub fn classical_conditional_hmin(blocks: &[(QuantumState, f64)], split: &Split) -> Result<Bits> {
    check_probabilities(blocks.iter().map(|b| b.1))?;
    let mut values = Vec::with_capacity(blocks.len());
    for (rho, p) in blocks {
        values.push((entropy::hmin_auto(rho, split)?.bits, *p));
    }
    combine_classical_hmin(&values)
}

/// Min-entropy of a tensor product of states on disjoint systems, by additivity.
/// Factors with nothing on the left contribute 0 (normalized factors).
pub fn hmin_of_product(factors: &[QuantumState], split: &Split) -> Result<Bits> {
    let mut total = Bits::Finite(0.0);
    for f in factors {
        let labels = f.layout().labels();
        let a: Vec<String> = split.a.iter().filter(|l| labels.contains(l)).cloned().collect();
        let b: Vec<String> = split.b.iter().filter(|l| labels.contains(l)).cloned().collect();
        if a.is_empty() {
            // H_min(∅|B) = −log₂ tr ρ
            total = total.shift(-f.trace().log2());
            continue;
        }
        let v = entropy::hmin_auto(f, &Split::new(a, b)?)?.bits;
        total = match (total, v) {
            (Bits::Finite(x), Bits::Finite(y)) => Bits::Finite(x + y),
            (Bits::Finite(_), inf) => inf,
            (t, _) => t,
        };
    }
    Ok(total)
}

fn maximally_mixed(label: &str, d: usize) -> Result<QuantumState> {
    Ok(QuantumState::maximally_mixed(SystemLayout::single(label, d)?))
}

/// The two blocks of the counterexample as tensor factors: φ_AB ⊗ π_C and π_A ⊗ φ_BC.
pub fn counterexample_blocks(d: usize) -> Result<[Vec<QuantumState>; 2]> {
    if d < 2 {
        return Err(Error::invalid(format!("counterexample needs d ≥ 2, got {d}")));
    }
    let phi_ab = PureState::maximally_entangled("A", "B", d)?.density();
    let phi_bc = PureState::maximally_entangled("B", "C", d)?.density();
    Ok([vec![phi_ab, maximally_mixed("C", d)?], vec![maximally_mixed("A", d)?, phi_bc]])
}

fn assemble(factors: &[QuantumState]) -> Result<QuantumState> {
    let mut it = factors.iter();
    let mut acc = it.next().expect("non-empty").clone();
    for f in it {
        acc = acc.tensor(f)?;
    }
    acc.permute(&["A", "B", "C"])
}

/// ρ_ABCC′ = ½ Σ_i ρ^i_ABC ⊗ |i⟩⟨i|_C′ with ρ⁰ = φ_AB ⊗ π_C and ρ¹ = π_A ⊗ φ_BC.
pub fn counterexample_state(d: usize) -> Result<QuantumState> {
    let [b0, b1] = counterexample_blocks(d)?;
    classical_mixture(&[(assemble(&b0)?, 0.5), (assemble(&b1)?, 0.5)], REGISTER)
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockValues {
    pub split: String,
    /// H_min on ρ⁰ and ρ¹.
    pub blocks: [Bits; 2],
    /// Classical combination over C′.
    pub combined: Bits,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothCounterexample {
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// H^ε_min(AB|CC′).
    pub lhs: Bits,
    /// H^{ε′}_min(A|BCC′) + H^{ε″}_min(B|CC′).
    pub rhs_without_h: Bits,
    pub gap: Bits,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub d: usize,
    pub trace: f64,
    /// H_min(AB|CC′).
    pub hmin_ab_given_ccp: BlockValues,
    /// H_min(A|BCC′).
    pub hmin_a_given_bccp: BlockValues,
    /// H_min(B|CC′).
    pub hmin_b_given_ccp: BlockValues,
    /// −log₂((d + 1/d)/2).
    pub exact_formula: f64,
    /// −log₂ d.
    pub approximation: f64,
    /// H_min(AB|CC′) − H_min(A|BCC′) − H_min(B|CC′).
    pub gap: Bits,
    /// Error term h of the reversed rule.
    pub h: f64,
    /// The reversed rule H_min(AB|CC′) ≤ H_min(A|BCC′) + H_min(B|CC′) + h fails.
    pub reversed_rule_violated: bool,
    /// Block values computed by SDP on the assembled blocks rather than by additivity.
    pub direct_blocks: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smooth: Option<SmoothCounterexample>,
}

/// Default reversed-rule error term h = 4 f(0.3).
pub fn default_h() -> f64 {
    4.0 * error_f(0.3).expect("f(0.3)")
}

fn block_values(blocks: &[Vec<QuantumState>; 2], split: &Split, direct: bool) -> Result<BlockValues> {
    let mut vals = [Bits::Finite(0.0); 2];
    for (i, b) in blocks.iter().enumerate() {
        vals[i] = if direct { entropy::hmin_auto(&assemble(b)?, split)?.bits } else { hmin_of_product(b, split)? };
    }
    let combined = combine_classical_hmin(&[(vals[0], 0.5), (vals[1], 0.5)])?;
    let with_reg = Split::new(split.a.clone(), split.b.iter().cloned().chain([REGISTER.to_string()]).collect::<Vec<_>>())?;
    Ok(BlockValues { split: with_reg.to_string(), blocks: vals, combined })
}

/// Evaluates the counterexample at dimension d with reversed-rule error term h. With `smooth`
/// = (ε, ε′, ε″) the smooth entropies of the joint state are computed as well (d = 2 only).
pub fn counterexample_report(d: usize, h: f64, smooth: Option<(f64, f64, f64)>) -> Result<CounterexampleReport> {
    let blocks = counterexample_blocks(d)?;
    let direct = d * d * d <= DIRECT_BLOCK_DIM;
    let ab = block_values(&blocks, &Split::parse("AB|C")?, direct)?;
    let a = block_values(&blocks, &Split::parse("A|BC")?, direct)?;
    let b = block_values(&blocks, &Split::parse("B|C")?, direct)?;
    let gap = match (ab.combined, a.combined, b.combined) {
        (Bits::Finite(x), Bits::Finite(y), Bits::Finite(z)) => Bits::Finite(x - y - z),
        _ => return Err(Error::Precondition("counterexample entropies must be finite".into())),
    };
    let smooth = match smooth {
        None => None,
        Some((eps, eps1, eps2)) => {
            if d != 2 {
                return Err(Error::invalid("smooth counterexample entropies are limited to d = 2"));
            }
            let rho = counterexample_state(d)?;
            let lhs = smooth_hmin(&rho, &Split::parse("AB|C,C'")?, eps)?.value.bits;
            let r1 = smooth_hmin(&rho, &Split::parse("A|B,C,C'")?, eps1)?.value.bits;
            let r2 = smooth_hmin(&rho, &Split::parse("B|C,C'")?, eps2)?.value.bits;
            let (l, s1, s2) = (lhs.to_f64(), r1.to_f64(), r2.to_f64());
            Some(SmoothCounterexample {
                eps,
                eps1,
                eps2,
                lhs,
                rhs_without_h: Bits::Finite(s1 + s2),
                gap: Bits::Finite(l - s1 - s2),
            })
        }
    };
    let df = d as f64;
    Ok(CounterexampleReport {
        d,
        trace: 1.0,
        exact_formula: -((df + 1.0 / df) / 2.0).log2(),
        approximation: -df.log2(),
        reversed_rule_violated: gap > Bits::Finite(h),
        gap,
        h,
        hmin_ab_given_ccp: ab,
        hmin_a_given_bccp: a,
        hmin_b_given_ccp: b,
        direct_blocks: direct,
        smooth,
    })
}
