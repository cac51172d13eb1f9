use num_complex::Complex64;

use crate::spectral::RefractiveIndex;

/// Thin-film stack on an opaque substrate, listed from the ambient side.
#[derive(Clone, Debug)]
pub struct MultilayerStack {
    /// `(thickness in m, index)` per layer.
    pub layers: Vec<(f64, RefractiveIndex)>,
    pub substrate: RefractiveIndex,
    pub ambient: RefractiveIndex,
}

impl MultilayerStack {
    pub fn bare(substrate: RefractiveIndex) -> Self {
        MultilayerStack {
            layers: Vec::new(),
            substrate,
            ambient: RefractiveIndex::VACUUM,
        }
    }
}

type M2 = [[Complex64; 2]; 2];

fn mul(a: &M2, b: &M2) -> M2 {
    let mut r = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

fn cos_in(n0: Complex64, sin0: f64, n: Complex64) -> Complex64 {
    let s = n0 * sin0 / n;
    let mut c = (Complex64::new(1.0, 0.0) - s * s).sqrt();
    if c.im < 0.0 {
        c = -c;
    }
    c
}

/// Amplitude reflection coefficients `(r_s, r_p)` of the stack, using the
/// same sign convention as [`crate::polarimetry::fresnel_amplitudes`].
pub fn tmm_reflectance(stack: &MultilayerStack, cos_i: f64, lambda_nm: f64) -> (Complex64, Complex64) {
    let cos_i = cos_i.clamp(0.0, 1.0);
    let sin0 = (1.0 - cos_i * cos_i).sqrt();
    let n0 = stack.ambient.eval(lambda_nm);
    let c0 = Complex64::new(cos_i, 0.0);
    let k0 = 2.0 * std::f64::consts::PI / (lambda_nm * 1e-9);
    let i = Complex64::new(0.0, 1.0);

    let mut result = [Complex64::new(0.0, 0.0); 2];
    for (pol, r) in result.iter_mut().enumerate() {
        let admittance = |n: Complex64, c: Complex64| if pol == 0 { n * c } else { n / c };
        let one = Complex64::new(1.0, 0.0);
        let mut m: M2 = [[one, Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), one]];
        for (d, ior) in &stack.layers {
            let n = ior.eval(lambda_nm);
            let c = cos_in(n0, sin0, n);
            let delta = k0 * n * c * *d;
            let eta = admittance(n, c);
            let layer = [
                [delta.cos(), i * delta.sin() / eta],
                [i * eta * delta.sin(), delta.cos()],
            ];
            m = mul(&m, &layer);
        }
        let ns = stack.substrate.eval(lambda_nm);
        let eta_s = admittance(ns, cos_in(n0, sin0, ns));
        let eta_0 = admittance(n0, c0);
        let b = m[0][0] + m[0][1] * eta_s;
        let cc = m[1][0] + m[1][1] * eta_s;
        *r = (eta_0 * b - cc) / (eta_0 * b + cc);
    }
    // The p admittance convention gives the opposite sign to the Fresnel r_p.
    (result[0], -result[1])
}
