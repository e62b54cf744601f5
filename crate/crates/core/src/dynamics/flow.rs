use crate::error::{CoordError, Result};

/// Integrates `dK/dl = −y_K·(K − K₀)` from `l = 0` to `l_max` with classical
/// RK4. Returns `(l, K)` samples including both endpoints; the final step is
/// shortened to land on `l_max`.
pub fn rg_flow(k_init: f64, k0: f64, y_k: f64, l_max: f64, dl: f64) -> Result<Vec<(f64, f64)>> {
    if !(y_k > 0.0) {
        return Err(CoordError::invalid("y_k", format!("must be positive, got {y_k}")));
    }
    if !(dl > 0.0) {
        return Err(CoordError::invalid("dl", format!("must be positive, got {dl}")));
    }
    if !(l_max >= 0.0 && l_max.is_finite()) {
        return Err(CoordError::invalid(
            "l_max",
            format!("must be nonnegative, got {l_max}"),
        ));
    }
    let f = |k: f64| -y_k * (k - k0);
    let steps = (l_max / dl).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut k = k_init;
    out.push((0.0, k));
    for i in 0..steps {
        let l = i as f64 * dl;
        let h = dl.min(l_max - l);
        let k1 = f(k);
        let k2 = f(k + 0.5 * h * k1);
        let k3 = f(k + 0.5 * h * k2);
        let k4 = f(k + h * k3);
        k += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push((if i + 1 == steps { l_max } else { (i + 1) as f64 * dl }, k));
    }
    Ok(out)
}

/// `K(l) = K₀ + (K_init − K₀)·e^(−y_K·l)`.
pub fn rg_flow_exact(k_init: f64, k0: f64, y_k: f64, l: f64) -> f64 {
    k0 + (k_init - k0) * (-y_k * l).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_agreement() {
        for (k_init, k0) in [(100.0, 10.0), (2.0, 10.0), (10.0, 10.0)] {
            let traj = rg_flow(k_init, k0, 1.0, 10.0, 1e-3).unwrap();
            assert_eq!(traj.len(), 10_001);
            assert_eq!(traj.last().unwrap().0, 10.0);
            for &(l, k) in &traj {
                let exact = rg_flow_exact(k_init, k0, 1.0, l);
                assert!(((k - exact) / exact).abs() < 1e-10);
            }
            let towards = traj.windows(2).all(|w| (w[1].1 - k0).abs() <= (w[0].1 - k0).abs());
            assert!(towards);
        }
    }

    #[test]
    fn reaches_twenty_at_ln_nine() {
        let l = 9f64.ln();
        assert!((rg_flow_exact(100.0, 10.0, 1.0, l) - 20.0).abs() < 1e-12);
        let k = rg_flow(100.0, 10.0, 1.0, l, 1e-3).unwrap().last().unwrap().1;
        assert!((k - 20.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_point_and_errors() {
        assert!(rg_flow(10.0, 10.0, 2.0, 1.0, 0.1)
            .unwrap()
            .iter()
            .all(|&(_, k)| k == 10.0));
        assert!(rg_flow(1.0, 1.0, 0.0, 1.0, 0.1).is_err());
        assert!(rg_flow(1.0, 1.0, 1.0, 1.0, 0.0).is_err());
    }
}
