//! Closed-form geometry of the unit sphere S^d in R^{d+1}.

/// Tangent frame at `x`: the Householder reflection taking the north pole to `x`
/// applied to the first `d` coordinate axes.
pub(crate) fn tangent_frame(x: &[f64]) -> Vec<Vec<f64>> {
    let p = x.len();
    let mut u = x.to_vec();
    u[p - 1] -= 1.0;
    let uu: f64 = u.iter().map(|a| a * a).sum();
    (0..p - 1)
        .map(|i| {
            let mut b = vec![0.0; p];
            b[i] = 1.0;
            if uu > 1e-300 {
                let s = 2.0 * u[i] / uu;
                for (bk, uk) in b.iter_mut().zip(&u) {
                    *bk -= s * uk;
                }
            }
            b
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Great-circle distance, accurate at both small and large separations.
pub(crate) fn great_circle(x: &[f64], y: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (a, b) in x.iter().zip(y) {
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

pub(crate) fn exp(x: &[f64], v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    if n == 0.0 {
        return x.to_vec();
    }
    let frame = tangent_frame(x);
    let mut dir = vec![0.0; x.len()];
    for (vi, b) in v.iter().zip(&frame) {
        for (dk, bk) in dir.iter_mut().zip(b) {
            *dk += vi * bk;
        }
    }
    let (s, c) = n.sin_cos();
    let mut y: Vec<f64> = x.iter().zip(&dir).map(|(xk, dk)| c * xk + s * dk / n).collect();
    let ny = norm(&y);
    y.iter_mut().for_each(|a| *a /= ny);
    y
}

/// Normal coordinates of `y` around `x`; `None` at the antipode.
pub(crate) fn log(x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    let c = dot(x, y);
    let w: Vec<f64> = y.iter().zip(x).map(|(yk, xk)| yk - c * xk).collect();
    let s = norm(&w);
    let theta = great_circle(x, y);
    let frame = tangent_frame(x);
    if s == 0.0 {
        return if c > 0.0 { Some(vec![0.0; x.len() - 1]) } else { None };
    }
    Some(frame.iter().map(|b| theta * dot(b, &w) / s).collect())
}

/// Riemannian volume density in normal coordinates, (sin r / r)^(d-1).
pub(crate) fn volume_density(d: usize, r: f64) -> f64 {
    if r == 0.0 {
        1.0
    } else {
        (r.sin() / r).powi(d as i32 - 1)
    }
}

/// Area of the unit sphere S^{k-1} in R^k.
pub fn unit_sphere_area(k: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 2.0) * unit_sphere_area(k - 2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_orthonormal_and_tangent() {
        let x = [0.3, -0.4, (1.0f64 - 0.25).sqrt()];
        let f = tangent_frame(&x);
        for e in &f {
            assert!(dot(e, &x).abs() < 1e-14);
            assert!((dot(e, e) - 1.0).abs() < 1e-14);
        }
        assert!(dot(&f[0], &f[1]).abs() < 1e-14);
    }

    #[test]
    fn south_pole_frame() {
        let f = tangent_frame(&[0.0, 0.0, -1.0]);
        assert_eq!(f[0], vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }
}
