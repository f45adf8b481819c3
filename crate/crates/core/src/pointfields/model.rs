use crate::error::{Error, Result};
use crate::geometry::Point;
use serde::{Deserialize, Serialize};

/// Equilibrium random point field and its interaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// sine_β on R, β ∈ {1, 2, 4}.
    Sine { beta: u32 },
    /// Bessel_{2,α} on [0, ∞), α ≥ 1.
    Bessel { alpha: f64 },
    /// Ginibre field on R² (β = 2).
    Ginibre,
    /// Canonical Gibbs field of a Ruelle-class pair potential.
    Ruelle { beta: f64, dim: usize, potential: PairPotential },
}

impl ModelSpec {
    pub fn sine(beta: u32) -> Result<Self> {
        let m = ModelSpec::Sine { beta };
        m.validate()?;
        Ok(m)
    }

    pub fn bessel(alpha: f64) -> Result<Self> {
        let m = ModelSpec::Bessel { alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn ruelle(beta: f64, dim: usize, potential: PairPotential) -> Result<Self> {
        let m = ModelSpec::Ruelle { beta, dim, potential };
        m.validate()?;
        Ok(m)
    }

    /// Free particles: Ruelle model with Ψ ≡ 0.
    pub fn free(dim: usize) -> Self {
        ModelSpec::Ruelle { beta: 1.0, dim, potential: PairPotential::Zero }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Sine { beta } if ![1, 2, 4].contains(beta) => Err(Error::invalid(
                "beta",
                format!("sine_beta supports beta in {{1, 2, 4}}, got {beta}"),
            )),
            ModelSpec::Bessel { alpha } if !(*alpha >= 1.0 && alpha.is_finite()) => {
                Err(Error::invalid("alpha", format!("Bessel field needs 1 <= alpha < inf, got {alpha}")))
            }
            ModelSpec::Ruelle { beta, dim, potential } => {
                if !(*beta > 0.0 && beta.is_finite()) {
                    return Err(Error::invalid("beta", format!("inverse temperature must be positive, got {beta}")));
                }
                if !(1..=2).contains(dim) {
                    return Err(Error::invalid("dim", format!("{dim} not in {{1, 2}}")));
                }
                potential.validate()
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::Sine { .. } | ModelSpec::Bessel { .. } => 1,
            ModelSpec::Ginibre => 2,
            ModelSpec::Ruelle { dim, .. } => *dim,
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            ModelSpec::Sine { beta } => *beta as f64,
            ModelSpec::Bessel { .. } | ModelSpec::Ginibre => 2.0,
            ModelSpec::Ruelle { beta, .. } => *beta,
        }
    }

    /// Determinantal fields with a scalar kernel.
    pub fn is_determinantal(&self) -> bool {
        matches!(self, ModelSpec::Sine { beta: 2 } | ModelSpec::Bessel { .. } | ModelSpec::Ginibre)
    }

    /// Short identifier used in file names and manifests.
    pub fn name(&self) -> String {
        match self {
            ModelSpec::Sine { beta } => format!("sine{beta}"),
            ModelSpec::Bessel { alpha } => format!("bessel{alpha}"),
            ModelSpec::Ginibre => "ginibre".into(),
            ModelSpec::Ruelle { potential, .. } => format!("ruelle-{}", potential.name()),
        }
    }

    /// Closed-form one-point density where known.
    pub fn intensity(&self, x: &Point) -> Option<f64> {
        match self {
            ModelSpec::Sine { .. } => Some(1.0),
            ModelSpec::Ginibre => Some(std::f64::consts::FRAC_1_PI),
            ModelSpec::Bessel { .. } => super::kernel::kernel_eval(self, x, x).ok().map(|k| k.re),
            ModelSpec::Ruelle { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    /// C³ with compact support.
    CompactC3,
    /// Smooth away from the origin.
    SmoothOffOrigin,
}

/// Radially symmetric pair potential Ψ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PairPotential {
    Zero,
    /// 4ε((σ/r)¹² − (σ/r)⁶).
    LennardJones { epsilon: f64, sigma: f64 },
    /// A·r^{−n}, repulsive for A > 0.
    InversePower { strength: f64, exponent: f64 },
    /// A(1 − r²/ρ²)⁴ for r < ρ, zero beyond.
    Bump { amplitude: f64, range: f64 },
}

impl PairPotential {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PairPotential::Zero => true,
            PairPotential::LennardJones { epsilon, sigma } => epsilon > 0.0 && sigma > 0.0,
            PairPotential::InversePower { strength, exponent } => strength > 0.0 && exponent > 2.0,
            PairPotential::Bump { amplitude, range } => amplitude.is_finite() && range > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("potential", format!("{self:?} has out-of-range parameters")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PairPotential::Zero => "zero",
            PairPotential::LennardJones { .. } => "lj",
            PairPotential::InversePower { .. } => "power",
            PairPotential::Bump { .. } => "bump",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PairPotential::Zero)
    }

    pub fn smoothness(&self) -> Smoothness {
        match self {
            PairPotential::Zero | PairPotential::Bump { .. } => Smoothness::CompactC3,
            _ => Smoothness::SmoothOffOrigin,
        }
    }

    /// Ψ as a function of the distance.
    pub fn radial(&self, r: f64) -> f64 {
        match *self {
            PairPotential::Zero => 0.0,
            PairPotential::LennardJones { epsilon, sigma } => {
                if r == 0.0 {
                    return f64::INFINITY;
                }
                let s6 = (sigma / r).powi(6);
                4.0 * epsilon * (s6 * s6 - s6)
            }
            PairPotential::InversePower { strength, exponent } => {
                if r == 0.0 {
                    return f64::INFINITY;
                }
                strength * r.powf(-exponent)
            }
            PairPotential::Bump { amplitude, range } => {
                if r >= range {
                    0.0
                } else {
                    let u = 1.0 - (r / range).powi(2);
                    amplitude * u.powi(4)
                }
            }
        }
    }

    /// Ψ(x).
    pub fn value(&self, x: &Point) -> f64 {
        self.radial(x.norm())
    }

    /// ∇Ψ(x); undefined (non-finite) at the origin for singular potentials.
    pub fn grad(&self, x: &Point) -> Point {
        let r2 = x.norm_sq();
        match *self {
            PairPotential::Zero => Point::zero(x.dim()),
            PairPotential::LennardJones { epsilon, sigma } => {
                // dΨ/dr / r = 4ε(−12σ¹²/r¹⁴ + 6σ⁶/r⁸)
                let s2 = sigma * sigma / r2;
                let s6 = s2 * s2 * s2;
                *x * (4.0 * epsilon * (-12.0 * s6 * s6 + 6.0 * s6) / r2)
            }
            PairPotential::InversePower { strength, exponent } => {
                *x * (-exponent * strength * r2.powf(-0.5 * exponent - 1.0))
            }
            PairPotential::Bump { amplitude, range } => {
                let rho2 = range * range;
                if r2 >= rho2 {
                    Point::zero(x.dim())
                } else {
                    let u = 1.0 - r2 / rho2;
                    *x * (-8.0 * amplitude * u * u * u / rho2)
                }
            }
        }
    }

    /// Radius R₀ of the regularity bound: Ψ ≤ ψ(|x|) for |x| ≥ R₀.
    pub fn r0(&self) -> f64 {
        match *self {
            PairPotential::Zero | PairPotential::Bump { .. } => 0.0,
            PairPotential::LennardJones { sigma, .. } => 4f64.powf(1.0 / 6.0) * sigma,
            PairPotential::InversePower { .. } => 1.0,
        }
    }

    /// Positive decreasing integrable ψ with Ψ ≥ −ψ everywhere and
    /// Ψ ≤ ψ beyond R₀.
    pub fn regular_bound(&self, t: f64) -> f64 {
        match *self {
            PairPotential::Zero => 0.0,
            PairPotential::LennardJones { epsilon, sigma } => {
                let t_star = self.r0();
                if t < t_star {
                    epsilon
                } else {
                    4.0 * epsilon * (sigma / t).powi(6)
                }
            }
            PairPotential::InversePower { strength, exponent } => strength * t.max(1.0).powf(-exponent),
            PairPotential::Bump { amplitude, range } => {
                amplitude.abs() * if t < range { 1.0 } else { (range - t).exp() }
            }
        }
    }

    /// Distance beyond which |Ψ| stays below `eps`.
    pub fn tail_range(&self, eps: f64) -> f64 {
        match *self {
            PairPotential::Zero => 0.0,
            PairPotential::LennardJones { epsilon, sigma } => {
                (sigma * (4.0 * epsilon / eps).powf(1.0 / 6.0)).max(self.r0())
            }
            PairPotential::InversePower { strength, exponent } => (strength / eps).powf(1.0 / exponent),
            PairPotential::Bump { range, .. } => range,
        }
    }
}
