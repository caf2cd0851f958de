//! Critical indices, colinearity classes, critical set, discriminant,
//! radial weights and the fibration verdict of a diagonal mixed polynomial.

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::mixed_poly::DiagonalMixedPolynomial;
use crate::rational::{format_rational, to_f64, ComplexRational, Rational};

pub const SCHEMA: &str = "milnor-scope/1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("weight undefined: variable z{var} carries no term")]
    WeightUndefined { var: usize },
}

fn serialize_rationals<S: serde::Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(format_rational))
}

fn angle_of(c: &ComplexRational) -> f64 {
    let t = to_f64(&c.im).atan2(to_f64(&c.re));
    if t < 0.0 {
        t + std::f64::consts::TAU
    } else {
        t
    }
}

/// `k` with `c = k·dir`, assuming the two are colinear and `dir ≠ 0`.
fn ratio_along(c: &ComplexRational, dir: &ComplexRational) -> Rational {
    if !dir.re.is_zero() {
        &c.re / &dir.re
    } else {
        &c.im / &dir.im
    }
}

/// One class of colinear critical indices. `direction` is the coefficient of
/// the smallest index, so that index always has a positive scalar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalClass {
    pub indices: Vec<usize>,
    pub direction: ComplexRational,
    pub theta: f64,
    /// λ_j = ratio_j · direction, exactly.
    #[serde(serialize_with = "serialize_rationals")]
    pub ratios: Vec<Rational>,
    /// λ_j = mu_j · e^{iθ}.
    pub mu: Vec<f64>,
    pub all_same_argument: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalIndexPartition {
    pub critical: Vec<usize>,
    pub classes: Vec<CriticalClass>,
}

impl CriticalIndexPartition {
    pub fn class_of(&self, j: usize) -> Option<&CriticalClass> {
        self.classes.iter().find(|c| c.indices.contains(&j))
    }
}

pub fn critical_indices(psi: &DiagonalMixedPolynomial) -> Vec<usize> {
    psi.terms().iter().filter(|t| t.is_critical()).map(|t| t.var).collect()
}

pub fn colinear(a: &ComplexRational, b: &ComplexRational) -> bool {
    a.cross(b).is_zero()
}

pub fn colinearity_classes(psi: &DiagonalMixedPolynomial) -> CriticalIndexPartition {
    let critical = critical_indices(psi);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &j in &critical {
        let lj = &psi.term(j).unwrap().coeff;
        match groups.iter_mut().find(|g| colinear(&psi.term(g[0]).unwrap().coeff, lj)) {
            Some(g) => g.push(j),
            None => groups.push(vec![j]),
        }
    }
    let classes = groups
        .into_iter()
        .map(|indices| {
            let direction = psi.term(indices[0]).unwrap().coeff.clone();
            let modulus = to_f64(&direction.norm_sqr()).sqrt();
            let ratios: Vec<Rational> =
                indices.iter().map(|&j| ratio_along(&psi.term(j).unwrap().coeff, &direction)).collect();
            let mu = ratios.iter().map(|k| to_f64(k) * modulus).collect();
            let all_same_argument = ratios.iter().all(|k| k.is_positive());
            CriticalClass { theta: angle_of(&direction), indices, direction, ratios, mu, all_same_argument }
        })
        .collect();
    CriticalIndexPartition { critical, classes }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalSubspace {
    /// Free coordinates z_j; every other coordinate is zero.
    pub free: Vec<usize>,
    pub real_dimension: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalSetDescription {
    pub subspaces: Vec<CriticalSubspace>,
    pub notes: Vec<String>,
}

pub fn critical_set(psi: &DiagonalMixedPolynomial) -> CriticalSetDescription {
    let part = colinearity_classes(psi);
    let mut notes = Vec::new();
    if part.critical.is_empty() {
        notes.push("isolated critical point".to_string());
    } else if part.critical.len() == psi.n() {
        notes.push("outside the range 0 < |C| < n".to_string());
    }
    if !psi.absent_vars().is_empty() {
        notes.push(format!("variables without a term: {:?}", psi.absent_vars()));
    }
    let subspaces = part
        .classes
        .iter()
        .map(|c| CriticalSubspace { free: c.indices.clone(), real_dimension: 2 * c.indices.len() })
        .collect();
    CriticalSetDescription { subspaces, notes }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Ray,
    FullLine,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminantComponent {
    /// Spans the component's line; a ray points this way.
    pub direction: ComplexRational,
    pub theta: f64,
    pub kind: ComponentKind,
    pub class: Vec<usize>,
}

impl DiscriminantComponent {
    /// Angle between `w` and the nearest direction the component allows.
    pub fn angular_distance(&self, w: Complex64) -> f64 {
        let d = self.direction.to_complex64();
        let forward = (w / d).arg().abs();
        match self.kind {
            ComponentKind::Ray => forward,
            ComponentKind::FullLine => forward.min(std::f64::consts::PI - forward),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminantGeometry {
    pub components: Vec<DiscriminantComponent>,
    pub has_complete_line: bool,
    pub notes: Vec<String>,
}

pub fn discriminant(psi: &DiagonalMixedPolynomial) -> DiscriminantGeometry {
    let part = colinearity_classes(psi);
    let components: Vec<DiscriminantComponent> = part
        .classes
        .iter()
        .map(|c| DiscriminantComponent {
            direction: c.direction.clone(),
            theta: c.theta,
            kind: if c.all_same_argument { ComponentKind::Ray } else { ComponentKind::FullLine },
            class: c.indices.clone(),
        })
        .collect();
    let mut notes = Vec::new();
    if components.is_empty() {
        notes.push("no critical indices: discriminant is {0}".to_string());
    }
    DiscriminantGeometry {
        has_complete_line: components.iter().any(|c| c.kind == ComponentKind::FullLine),
        components,
        notes,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RadialWeights {
    pub a: u64,
    pub p: Vec<u64>,
}

pub fn radial_weights(psi: &DiagonalMixedPolynomial) -> Result<RadialWeights, StructureError> {
    if let Some(&var) = psi.absent_vars().first() {
        return Err(StructureError::WeightUndefined { var });
    }
    let degrees: Vec<u64> = psi.terms().iter().map(|t| t.degree() as u64).collect();
    let a = degrees.iter().fold(1u64, |acc, d| acc.lcm(d));
    Ok(RadialWeights { a, p: degrees.iter().map(|d| a / d).collect() })
}

/// Shape of the special family: every index but `last` is critical, the term at
/// `last` is `z²z̄` (or `zz̄²` when `conjugate_last`), and all coefficients lie
/// on one real line through 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecialFamily {
    pub last: usize,
    pub conjugate_last: bool,
    pub direction: ComplexRational,
    /// λ_j = ratio_j · direction for j = 1..n.
    #[serde(serialize_with = "serialize_rationals")]
    pub ratios: Vec<Rational>,
    /// Signed real coefficients after rotating the common line onto ℝ.
    pub scalars: Vec<f64>,
    pub exponents: Vec<u32>,
}

pub fn special_family(psi: &DiagonalMixedPolynomial) -> Option<SpecialFamily> {
    if psi.n() < 2 || !psi.absent_vars().is_empty() {
        return None;
    }
    let noncritical: Vec<_> = psi.terms().iter().filter(|t| !t.is_critical()).collect();
    let [last] = noncritical.as_slice() else { return None };
    let conjugate_last = match (last.a, last.b) {
        (2, 1) => false,
        (1, 2) => true,
        _ => return None,
    };
    let direction = psi.terms()[0].coeff.clone();
    if !psi.terms().iter().all(|t| colinear(&direction, &t.coeff)) {
        return None;
    }
    let modulus = to_f64(&direction.norm_sqr()).sqrt();
    let ratios: Vec<Rational> = psi.terms().iter().map(|t| ratio_along(&t.coeff, &direction)).collect();
    Some(SpecialFamily {
        last: last.var,
        conjugate_last,
        scalars: ratios.iter().map(|k| to_f64(k) * modulus).collect(),
        exponents: psi.terms().iter().map(|t| t.a).collect(),
        ratios,
        direction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    Submersion,
    IsolatedCriticalPoint,
    FibrationMainTheorem,
    FibrationSpecialCase,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Preconditions {
    pub critical_count_in_range: bool,
    pub exponents_positive: bool,
    pub all_variables_present: bool,
    /// Every class has all its coefficients on one ray.
    pub condition_ii: bool,
    /// No complete line in the discriminant; derived from (ii).
    pub condition_i: bool,
    pub submersion_pattern: bool,
    pub special_family_pattern: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FibrationVerdict {
    pub kind: VerdictKind,
    pub reasons: Vec<String>,
    pub preconditions_checked: Preconditions,
}

pub fn fibration_verdict(psi: &DiagonalMixedPolynomial) -> FibrationVerdict {
    let part = colinearity_classes(psi);
    let disc = discriminant(psi);
    let c = part.critical.len();
    let n = psi.n();
    let pre = Preconditions {
        critical_count_in_range: c > 0 && c < n,
        exponents_positive: psi.terms().iter().all(|t| t.a > 0 && t.b > 0),
        all_variables_present: psi.absent_vars().is_empty(),
        condition_ii: part.classes.iter().all(|k| k.all_same_argument),
        condition_i: !disc.has_complete_line,
        submersion_pattern: psi.terms().iter().all(|t| {
            matches!((t.a, t.b), (1, 0) | (0, 1)) && !t.coeff.re.is_zero() && !t.coeff.im.is_zero()
        }),
        special_family_pattern: special_family(psi).is_some(),
    };
    let verdict = |kind, reasons: Vec<String>| FibrationVerdict {
        kind,
        reasons,
        preconditions_checked: pre.clone(),
    };

    if pre.submersion_pattern {
        return verdict(VerdictKind::Submersion, vec!["every term is linear in z_j or z̄_j with Re λ_j, Im λ_j ≠ 0".into()]);
    }
    if !pre.all_variables_present {
        return verdict(
            VerdictKind::Undetermined,
            vec![format!("variables {:?} carry no term; the critical set is not a union of Σ_J", psi.absent_vars())],
        );
    }
    if c == 0 {
        return verdict(VerdictKind::IsolatedCriticalPoint, vec!["no critical index: a_j ≠ b_j for all j".into()]);
    }
    if pre.critical_count_in_range && pre.exponents_positive && pre.condition_ii {
        return verdict(
            VerdictKind::FibrationMainTheorem,
            vec!["0 < |C| < n, all a_j, b_j > 0, and every class of colinear critical indices has one argument".into()],
        );
    }
    if pre.special_family_pattern {
        return verdict(
            VerdictKind::FibrationSpecialCase,
            vec!["one non-critical term z²z̄ or zz̄², all coefficients colinear".into()],
        );
    }
    let mut reasons = Vec::new();
    if !pre.critical_count_in_range {
        reasons.push("0 < |C| < n violated".to_string());
    }
    if !pre.exponents_positive {
        reasons.push("some a_j or b_j is zero".to_string());
    }
    for k in part.classes.iter().filter(|k| !k.all_same_argument) {
        reasons.push(format!("class {:?} spans a complete line in the discriminant", k.indices));
    }
    reasons.push("special-family pattern not matched".to_string());
    verdict(VerdictKind::Undetermined, reasons)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSigns {
    pub class: Vec<usize>,
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaCapV {
    pub trivial: bool,
    pub signs: Vec<ClassSigns>,
    /// A nonzero point of Σ_ψ ∩ V in real coordinates (x1, y1, ..., xn, yn).
    pub witness: Option<Vec<f64>>,
}

pub fn sigma_cap_v_trivial(psi: &DiagonalMixedPolynomial) -> SigmaCapV {
    let part = colinearity_classes(psi);
    let mut signs = Vec::new();
    let mut witness = None;
    for class in &part.classes {
        let (pos, neg): (Vec<_>, Vec<_>) =
            class.indices.iter().zip(&class.ratios).partition(|(_, k)| k.is_positive());
        let positive: Vec<usize> = pos.iter().map(|(j, _)| **j).collect();
        let negative: Vec<usize> = neg.iter().map(|(j, _)| **j).collect();
        if witness.is_none() && !negative.is_empty() {
            // k_j |z_j|^{2a_j} + k_k |z_k|^{2a_k} = 0 with z_j = 1+i, z_k on the same ray.
            let (j, kj) = pos[0];
            let (k, kk) = neg[0];
            let aj = psi.term(*j).unwrap().a as i32;
            let ak = psi.term(*k).unwrap().a as f64;
            let rk = (to_f64(kj) / -to_f64(kk) * 2f64.powi(aj)).powf(1.0 / (2.0 * ak));
            let mut x = vec![0.0; 2 * psi.n()];
            x[2 * (j - 1)] = 1.0;
            x[2 * (j - 1) + 1] = 1.0;
            x[2 * (k - 1)] = rk / 2f64.sqrt();
            x[2 * (k - 1) + 1] = rk / 2f64.sqrt();
            witness = Some(x);
        }
        signs.push(ClassSigns { class: class.indices.clone(), positive, negative });
    }
    SigmaCapV { trivial: witness.is_none(), signs, witness }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub schema: &'static str,
    pub polynomial: String,
    pub n: usize,
    pub critical_indices: Vec<usize>,
    pub classes: Vec<CriticalClass>,
    pub critical_set: CriticalSetDescription,
    pub discriminant: DiscriminantGeometry,
    pub radial_weights: Option<RadialWeights>,
    pub sigma_cap_v: SigmaCapV,
    pub verdict: FibrationVerdict,
}

pub fn analyze(psi: &DiagonalMixedPolynomial) -> StructureReport {
    let part = colinearity_classes(psi);
    StructureReport {
        schema: SCHEMA,
        polynomial: psi.render(),
        n: psi.n(),
        critical_indices: part.critical,
        classes: part.classes,
        critical_set: critical_set(psi),
        discriminant: discriminant(psi),
        radial_weights: radial_weights(psi).ok(),
        sigma_cap_v: sigma_cap_v_trivial(psi),
        verdict: fibration_verdict(psi),
    }
}
