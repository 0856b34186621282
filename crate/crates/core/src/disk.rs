//! Geometry of the unit disk: the hyperbolic density, disk automorphisms,
//! the pseudo-hyperbolic distance and a few closed-form normalized Riemann
//! maps onto the disk.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points within this distance of the unit circle count as boundary points.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// A point of the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub re: f64,
    pub im: f64,
}

impl DiskPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.norm() < 1.0) {
            return Err(Error::Domain(format!("{z} is not inside the unit disk")));
        }
        Ok(DiskPoint { re: z.re, im: z.im })
    }

    pub fn z(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<DiskPoint> for Complex64 {
    fn from(p: DiskPoint) -> Self {
        p.z()
    }
}

pub fn require_interior(z: Complex64) -> Result<()> {
    if z.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("|{z}| >= 1")))
    }
}

/// Rescales a nonzero complex number onto the unit circle.
pub fn unimodular(w: Complex64) -> Result<Complex64> {
    let n = w.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Domain(format!("cannot normalize {w} to modulus one")));
    }
    Ok(w / n)
}

/// Density of the Poincaré metric, `1/(1-|z|^2)`.
pub fn hyperbolic_density(z: Complex64) -> Result<f64> {
    require_interior(z)?;
    Ok(1.0 / (1.0 - z.norm_sqr()))
}

/// `|(z-w)/(1-conj(w) z)|`
pub fn pseudo_hyperbolic_distance(z: Complex64, w: Complex64) -> f64 {
    ((z - w) / (Complex64::new(1.0, 0.0) - w.conj() * z)).norm()
}

/// `T(z) = rotation · (center - z) / (1 - conj(center) z)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskAutomorphism {
    #[serde(with = "crate::record::complex_record")]
    rotation: Complex64,
    #[serde(with = "crate::record::complex_record")]
    center: Complex64,
}

impl DiskAutomorphism {
    pub fn new(rotation: Complex64, center: Complex64) -> Result<Self> {
        require_interior(center)?;
        Ok(DiskAutomorphism {
            rotation: unimodular(rotation)?,
            center,
        })
    }

    pub fn identity() -> Self {
        // -(0 - z) = z
        DiskAutomorphism {
            rotation: Complex64::new(-1.0, 0.0),
            center: Complex64::new(0.0, 0.0),
        }
    }

    /// Rotation `z ↦ ω z`.
    pub fn rotation_by(omega: Complex64) -> Result<Self> {
        Self::new(-omega, Complex64::new(0.0, 0.0))
    }

    /// The automorphism `e^{iθ}(z - a)/(1 - conj(a) z)`.
    pub fn from_zero(theta_rotation: Complex64, a: Complex64) -> Result<Self> {
        Self::new(-theta_rotation, a)
    }

    pub fn rotation(&self) -> Complex64 {
        self.rotation
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn apply(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() > 1.0 + BOUNDARY_TOL {
            return Err(Error::Domain(format!("|{z}| > 1")));
        }
        Ok(self.eval(z))
    }

    /// Evaluates without the domain check (valid off the pole `1/conj(center)`).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.rotation * (self.center - z) / (Complex64::new(1.0, 0.0) - self.center.conj() * z)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let d = Complex64::new(1.0, 0.0) - self.center.conj() * z;
        self.rotation * (self.center.norm_sqr() - 1.0) / (d * d)
    }

    /// Coefficients `[[a, b], [c, d]]` of `(a z + b)/(c z + d)`.
    fn matrix(&self) -> [Complex64; 4] {
        let one = Complex64::new(1.0, 0.0);
        [-self.rotation, self.rotation * self.center, -self.center.conj(), one]
    }

    fn from_matrix(m: [Complex64; 4]) -> Result<Self> {
        let [a, b, _, d] = m;
        let center = -b / a;
        let rotation = -a / d;
        Self::new(rotation, center)
    }

    /// `self ∘ inner`
    pub fn compose(&self, inner: &DiskAutomorphism) -> Result<Self> {
        let [a1, b1, c1, d1] = self.matrix();
        let [a2, b2, c2, d2] = inner.matrix();
        Self::from_matrix([
            a1 * a2 + b1 * c2,
            a1 * b2 + b1 * d2,
            c1 * a2 + d1 * c2,
            c1 * b2 + d1 * d2,
        ])
    }

    pub fn inverse(&self) -> Result<Self> {
        let [a, b, c, d] = self.matrix();
        Self::from_matrix([d, -b, -c, a])
    }

    /// The unique automorphism sending `w0 ↦ v0` and `w1 ↦ v1`, provided the
    /// pseudo-hyperbolic distances of the two pairs agree. The rotation is
    /// fitted from the second pair; callers validate the fit elsewhere.
    pub fn fit(w0: Complex64, v0: Complex64, w1: Complex64, v1: Complex64) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        let to_origin_w = Self::from_zero(one, w0)?;
        let to_origin_v = Self::from_zero(one, v0)?;
        let sw = to_origin_w.eval(w1);
        let sv = to_origin_v.eval(v1);
        let omega = if sw.norm() < 1e-14 {
            one
        } else {
            unimodular(sv / sw)?
        };
        let rot = Self::rotation_by(omega)?;
        to_origin_v.inverse()?.compose(&rot.compose(&to_origin_w)?)
    }
}

/// Closed-form normalized Riemann maps `Ψ: Ω → 𝔻` with `Ψ(0) = 0`, `Ψ'(0) > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RiemannMap {
    Identity,
    /// Ω = {|z| < radius}, Ψ(z) = z / radius.
    ScaledDisk { radius: f64 },
    /// Ω = {|z - center| < radius} with |center| < radius; Ψ is the affine
    /// map onto 𝔻 followed by the disk automorphism returning 0 to the origin.
    OffsetDisk {
        #[serde(with = "crate::record::complex_record")]
        center: Complex64,
        radius: f64,
    },
    /// Ω = {Re z > -offset}, Ψ(z) = z / (z + 2·offset).
    HalfPlane { offset: f64 },
}

impl RiemannMap {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RiemannMap::Identity => Ok(()),
            RiemannMap::ScaledDisk { radius } if radius > 0.0 => Ok(()),
            RiemannMap::OffsetDisk { center, radius } if radius > 0.0 && center.norm() < radius => {
                Ok(())
            }
            RiemannMap::HalfPlane { offset } if offset > 0.0 => Ok(()),
            other => Err(Error::InvalidInput(format!(
                "{other:?} does not contain the origin"
            ))),
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            RiemannMap::Identity => z.norm() < 1.0,
            RiemannMap::ScaledDisk { radius } => z.norm() < radius,
            RiemannMap::OffsetDisk { center, radius } => (z - center).norm() < radius,
            RiemannMap::HalfPlane { offset } => z.re > -offset,
        }
    }

    fn check(&self, z: Complex64) -> Result<()> {
        self.validate()?;
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::Domain(format!("{z} lies outside the domain of {self:?}")))
        }
    }

    pub fn apply(&self, z: Complex64) -> Result<Complex64> {
        self.check(z)?;
        Ok(match *self {
            RiemannMap::Identity => z,
            RiemannMap::ScaledDisk { radius } => z / radius,
            RiemannMap::OffsetDisk { center, radius } => {
                let w = -center / radius;
                let zeta = (z - center) / radius;
                (zeta - w) / (Complex64::new(1.0, 0.0) - w.conj() * zeta)
            }
            RiemannMap::HalfPlane { offset } => z / (z + 2.0 * offset),
        })
    }

    /// `Ψ^{-1}(w)` for `|w| < 1`.
    pub fn inverse(&self, w: Complex64) -> Result<Complex64> {
        self.validate()?;
        require_interior(w)?;
        let one = Complex64::new(1.0, 0.0);
        Ok(match *self {
            RiemannMap::Identity => w,
            RiemannMap::ScaledDisk { radius } => w * radius,
            RiemannMap::OffsetDisk { center, radius } => {
                let w0 = -center / radius;
                let zeta = (w + w0) / (one + w0.conj() * w);
                center + zeta * radius
            }
            RiemannMap::HalfPlane { offset } => w * (2.0 * offset) / (one - w),
        })
    }

    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        self.check(z)?;
        let one = Complex64::new(1.0, 0.0);
        Ok(match *self {
            RiemannMap::Identity => one,
            RiemannMap::ScaledDisk { radius } => one / radius,
            RiemannMap::OffsetDisk { center, radius } => {
                let w = -center / radius;
                let zeta = (z - center) / radius;
                let d = one - w.conj() * zeta;
                (one - w.norm_sqr()) / (d * d) / radius
            }
            RiemannMap::HalfPlane { offset } => {
                let d = z + 2.0 * offset;
                Complex64::new(2.0 * offset, 0.0) / (d * d)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_disk_point(rng: &mut ChaCha8Rng, rmax: f64) -> Complex64 {
        let r = rmax * rng.random::<f64>().sqrt();
        Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
    }

    #[test]
    fn hyperbolic_density_values() {
        assert_eq!(hyperbolic_density(c(0.0, 0.0)).unwrap(), 1.0);
        assert!((hyperbolic_density(c(0.5, 0.0)).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((hyperbolic_density(c(0.0, 0.9)).unwrap() - 1.0 / 0.19).abs() < 1e-12);
        assert!(matches!(hyperbolic_density(c(1.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn automorphism_examples() {
        let a = c(0.3, -0.4);
        let t = DiskAutomorphism::new(c(1.0, 0.0), a).unwrap();
        assert!(t.apply(a).unwrap().norm() < 1e-16);
        let t0 = DiskAutomorphism::new(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let w = c(0.2, 0.7);
        assert!((t0.apply(w).unwrap() + w).norm() < 1e-16);
        let th = DiskAutomorphism::new(c(1.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((th.apply(c(0.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-16);
        assert!(DiskAutomorphism::identity().apply(c(1.5, 0.0)).is_err());
    }

    #[test]
    fn pseudo_hyperbolic_examples() {
        assert_eq!(pseudo_hyperbolic_distance(c(0.0, 0.0), c(0.0, 0.0)), 0.0);
        let w = c(0.3, 0.4);
        assert!((pseudo_hyperbolic_distance(c(0.0, 0.0), w) - 0.5).abs() < 1e-15);
        assert!((pseudo_hyperbolic_distance(c(0.5, 0.0), c(-0.5, 0.0)) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn riemann_map_examples() {
        let s = RiemannMap::ScaledDisk { radius: 2.0 };
        assert_eq!(s.apply(c(1.0, 0.0)).unwrap(), c(0.5, 0.0));
        assert_eq!(s.derivative(c(0.3, 1.2)).unwrap(), c(0.5, 0.0));
        assert_eq!(RiemannMap::Identity.apply(c(0.3, 0.1)).unwrap(), c(0.3, 0.1));
        assert!(s.apply(c(2.5, 0.0)).is_err());
    }

    #[test]
    fn riemann_maps_are_normalized() {
        let maps = [
            RiemannMap::Identity,
            RiemannMap::ScaledDisk { radius: 3.0 },
            RiemannMap::OffsetDisk { center: c(0.4, -0.2), radius: 1.5 },
            RiemannMap::HalfPlane { offset: 0.7 },
        ];
        for m in maps {
            let z0 = m.apply(c(0.0, 0.0)).unwrap();
            let d0 = m.derivative(c(0.0, 0.0)).unwrap();
            assert!(z0.norm() < 1e-15, "{m:?}");
            assert!(d0.re > 0.0 && d0.im.abs() < 1e-15, "{m:?}");
            // finite-difference check of the derivative
            let z = c(0.1, 0.05);
            let h = 1e-6;
            let fd = (m.apply(z + h).unwrap() - m.apply(z - h).unwrap()) / (2.0 * h);
            assert!((fd - m.derivative(z).unwrap()).norm() < 1e-8, "{m:?}");
            let back = m.inverse(m.apply(z).unwrap()).unwrap();
            assert!((back - z).norm() < 1e-14, "{m:?}");
        }
    }

    #[test]
    fn composition_closure() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let t1 = DiskAutomorphism::new(
                Complex64::from_polar(1.0, rng.random_range(0.0..6.3)),
                random_disk_point(&mut rng, 0.9),
            )
            .unwrap();
            let t2 = DiskAutomorphism::new(
                Complex64::from_polar(1.0, rng.random_range(0.0..6.3)),
                random_disk_point(&mut rng, 0.9),
            )
            .unwrap();
            let t = t2.compose(&t1).unwrap();
            for _ in 0..1000 {
                let z = random_disk_point(&mut rng, 1.0);
                let lhs = t2.eval(t1.eval(z));
                assert!((lhs - t.eval(z)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn schwarz_pick_equality_and_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let t = DiskAutomorphism::new(
                Complex64::from_polar(1.0, rng.random_range(0.0..6.3)),
                random_disk_point(&mut rng, 0.95),
            )
            .unwrap();
            let z = random_disk_point(&mut rng, 0.95);
            let w = random_disk_point(&mut rng, 0.95);
            let q = (1.0 - z.norm_sqr()) * t.derivative(z).norm() / (1.0 - t.eval(z).norm_sqr());
            assert!((q - 1.0).abs() < 1e-12, "{q}");
            let d0 = pseudo_hyperbolic_distance(z, w);
            let d1 = pseudo_hyperbolic_distance(t.eval(z), t.eval(w));
            assert!((d0 - d1).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_recovers_automorphism() {
        let t = DiskAutomorphism::new(c(0.6, 0.8), c(-0.3, 0.25)).unwrap();
        let (w0, w1) = (c(0.0, 0.0), c(0.25, 0.0));
        let f = DiskAutomorphism::fit(w0, t.eval(w0), w1, t.eval(w1)).unwrap();
        for z in [c(0.1, 0.2), c(-0.7, 0.1), c(0.0, -0.95)] {
            assert!((f.eval(z) - t.eval(z)).norm() < 1e-13);
        }
    }
}
