//! Third-order symplectic integrator for `H = ½|p|² + V(q)`.

/// Kick weights, applied before the matching drift.
pub const RUTH3_KICKS: [f64; 3] = [1.0, -2.0 / 3.0, 2.0 / 3.0];
/// Drift weights.
pub const RUTH3_DRIFTS: [f64; 3] = [-1.0 / 24.0, 0.75, 7.0 / 24.0];

/// One step of Ruth's third-order composition: three kick/drift pairs, each
/// kick `p += c·dt·force(q)` followed by a drift `q += d·dt·p`.
///
/// Every substep is a shear, so the step preserves phase-space volume
/// exactly and conserves any momentum the force conserves.
pub fn ruth3_step<const N: usize>(
    q: &mut [f64; N],
    p: &mut [f64; N],
    dt: f64,
    mut force: impl FnMut(&[f64; N]) -> [f64; N],
) {
    for (c, d) in RUTH3_KICKS.iter().zip(RUTH3_DRIFTS) {
        let f = force(q);
        for i in 0..N {
            p[i] += c * dt * f[i];
        }
        for i in 0..N {
            q[i] += d * dt * p[i];
        }
    }
}
