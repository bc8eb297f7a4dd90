//! Real-coefficient polynomials (ascending coefficient order), a
//! Durand-Kerner root finder with multiplicity-aware Newton polishing, and
//! the Routh-Hurwitz test for monic cubics.

use super::{Complex, NumericsError};

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    /// `coeffs[i]` multiplies `s^i`. Trailing zero coefficients are trimmed
    /// on construction; the zero polynomial is stored as an empty vec.
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Polynomial {
        while coeffs.last().is_some_and(|c| *c == 0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Polynomial {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Polynomial {
        Polynomial::new(vec![c])
    }

    /// Monic polynomial with the given roots (real).
    pub fn from_roots(roots: &[f64]) -> Polynomial {
        let mut p = Polynomial::constant(1.0);
        for r in roots {
            p = p.mul(&Polynomial::new(vec![-r, 1.0]));
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports degree 0 by convention.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn eval_complex(&self, s: Complex) -> Complex {
        self.coeffs.iter().rev().fold(Complex::ZERO, |acc, c| acc * s + *c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        Polynomial::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, c)| (i as f64 + 1.0) * c)
                .collect(),
        )
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    /// Divides every coefficient by the leading one.
    pub fn monic(&self) -> Polynomial {
        let lead = self.leading();
        assert!(lead != 0.0, "monic() on the zero polynomial");
        self.scale(1.0 / lead)
    }
}

/// All complex roots, sorted by (re, im) for deterministic output.
///
/// Durand-Kerner simultaneous iteration on the monic normalization, followed
/// by a multiplicity-aware Newton polish (`z -= m p / p'` with `m` estimated
/// from `p p'' / p'^2`), which restores full accuracy at repeated roots where
/// plain iteration stalls at ~eps^(1/m). Residuals are verified to 1e-9
/// relative to the evaluated coefficient scale.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex>, NumericsError> {
    if p.is_zero() {
        return Err(NumericsError::ZeroPolynomial);
    }
    if p.degree() == 0 {
        return Ok(Vec::new());
    }
    let monic = p.monic();
    let mut coeffs = monic.coeffs().to_vec();

    // Factor exact roots at the origin so the iteration works on a
    // polynomial with a nonzero constant term.
    let mut roots: Vec<Complex> = Vec::new();
    while coeffs.len() > 1 && coeffs[0] == 0.0 {
        roots.push(Complex::ZERO);
        coeffs.remove(0);
    }
    let n = coeffs.len() - 1;
    if n > 0 {
        let work = Polynomial::new(coeffs.clone());
        let radius = 1.0 + coeffs[..n].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let mut z: Vec<Complex> = (0..n)
            .map(|k| {
                Complex::from_polar(
                    radius * 0.65,
                    2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.7,
                )
            })
            .collect();
        for _ in 0..500 {
            let mut worst = 0.0_f64;
            for k in 0..n {
                let mut denom = Complex::ONE;
                for j in 0..n {
                    if j != k {
                        denom = denom * (z[k] - z[j]);
                    }
                }
                let step = work.eval_complex(z[k]) / denom;
                z[k] = z[k] - step;
                worst = worst.max(step.abs() / (1.0 + z[k].abs()));
            }
            if worst < 1e-14 {
                break;
            }
        }
        // Simultaneous iteration stalls at ~eps^(1/m) around an m-fold root,
        // but the centroid of the stalled cluster is accurate to ~eps (the
        // coefficients pin the symmetric functions). Collapse a cluster to
        // its centroid when the centroid's residual is itself negligible;
        // close-but-resolvable roots fail that gate and keep their positions.
        let coeff_scale = |at: Complex| -> f64 {
            work.coeffs()
                .iter()
                .enumerate()
                .map(|(i, c)| c.abs() * at.abs().max(1.0).powi(i as i32))
                .sum()
        };
        let mut collapsed: Vec<Complex> = Vec::with_capacity(n);
        let mut taken = vec![false; n];
        for k in 0..n {
            if taken[k] {
                continue;
            }
            let mut members = vec![k];
            for j in (k + 1)..n {
                if !taken[j] && (z[j] - z[k]).abs() <= 1e-3 * (1.0 + z[k].abs()) {
                    members.push(j);
                }
            }
            if members.len() > 1 {
                let mut mean = Complex::ZERO;
                for &idx in &members {
                    mean = mean + z[idx];
                }
                let mut mean = mean.scale(1.0 / members.len() as f64);
                // An m-fold root of p is a simple root of p^(m-1), which
                // evaluates without the cancellation that stalls iteration
                // on p itself; polish the centroid there.
                let mut dm = work.clone();
                for _ in 1..members.len() {
                    dm = dm.derivative();
                }
                let dmp = dm.derivative();
                if !dmp.is_zero() {
                    for _ in 0..5 {
                        let dv = dmp.eval_complex(mean);
                        if dv.abs() == 0.0 {
                            break;
                        }
                        let step = dm.eval_complex(mean) / dv;
                        mean = mean - step;
                        if step.abs() <= 1e-15 * (1.0 + mean.abs()) {
                            break;
                        }
                    }
                }
                if work.eval_complex(mean).abs() <= 1e-12 * coeff_scale(mean) {
                    for &idx in &members {
                        taken[idx] = true;
                        collapsed.push(mean);
                    }
                    continue;
                }
            }
            taken[k] = true;
            collapsed.push(z[k]);
        }
        let mut z = collapsed;
        let dp = work.derivative();
        for zk in &mut z {
            for _ in 0..3 {
                let pv = work.eval_complex(*zk);
                let dv = dp.eval_complex(*zk);
                if dv.abs() == 0.0 {
                    break;
                }
                let cand = *zk - pv / dv;
                if work.eval_complex(cand).abs() < pv.abs() {
                    *zk = cand;
                } else {
                    break;
                }
            }
            // Snap near-real roots of this real polynomial onto the axis.
            if zk.im.abs() < 1e-10 * (1.0 + zk.re.abs()) {
                let real = Complex::new(zk.re, 0.0);
                if work.eval_complex(real).abs() <= work.eval_complex(*zk).abs() * 4.0 {
                    *zk = real;
                }
            }
        }
        roots.extend(z);
    }

    let mut worst_rel = 0.0_f64;
    for r in &roots {
        let scale: f64 = monic
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| c.abs() * r.abs().max(1.0).powi(i as i32))
            .sum();
        worst_rel = worst_rel.max(monic.eval_complex(*r).abs() / scale.max(f64::MIN_POSITIVE));
    }
    if worst_rel > 1e-9 {
        return Err(NumericsError::RootsNotConverged(worst_rel));
    }
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(roots)
}

/// Routh-Hurwitz stability of the monic cubic
/// `s^3 + a2 s^2 + a1 s + a0`: all roots lie strictly in the open left half
/// plane iff `a2 > 0`, `a0 > 0` and `a2 * a1 > a0`.
pub fn routh_hurwitz_cubic(a2: f64, a1: f64, a0: f64) -> bool {
    a2 > 0.0 && a0 > 0.0 && a2 * a1 > a0
}
