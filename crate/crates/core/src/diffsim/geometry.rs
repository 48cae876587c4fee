use crate::autodiff::Real;

/// Planar pose: position (m) and heading (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
}

impl Pose2 {
    pub const fn new(x: f64, y: f64, phi: f64) -> Self {
        Pose2 { x, y, phi }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.phi.is_finite()
    }

    /// Maps a point given in this pose's frame to the world frame.
    pub fn transform_point(&self, local: [f64; 2]) -> [f64; 2] {
        let (s, c) = (crate::math::sin(self.phi), crate::math::cos(self.phi));
        [
            self.x + c * local[0] - s * local[1],
            self.y + s * local[0] + c * local[1],
        ]
    }
}

/// Signed distance from `p` (box frame) to a box with half extents `half`
/// inflated by `radius`, together with the outward unit normal.
///
/// The inflated box has circular corners of radius `radius`, so the field is
/// continuously differentiable everywhere outside the core box.
pub fn rounded_box<S: Real>(p: [S; 2], half: [f64; 2], radius: f64) -> (S, [S; 2]) {
    let (ax, sx) = if p[0].value() >= 0.0 { (p[0], 1.0) } else { (-p[0], -1.0) };
    let (ay, sy) = if p[1].value() >= 0.0 { (p[1], 1.0) } else { (-p[1], -1.0) };
    let qx = ax - half[0];
    let qy = ay - half[1];
    if qx.value() > 0.0 && qy.value() > 0.0 {
        let len = (qx.square() + qy.square()).sqrt();
        (len - radius, [qx * sx / len, qy * sy / len])
    } else if qx.value() >= qy.value() {
        (qx - radius, [qx.constant_like(sx), qx.constant_like(0.0)])
    } else {
        (qy - radius, [qy.constant_like(0.0), qy.constant_like(sy)])
    }
}

/// Expresses the world point `p` in the frame with origin `origin` and
/// heading given by `(cos, sin)`.
pub fn to_local<S: Real>(p: [S; 2], origin: [S; 2], cos: S, sin: S) -> [S; 2] {
    let dx = p[0] - origin[0];
    let dy = p[1] - origin[1];
    [cos * dx + sin * dy, cos * dy - sin * dx]
}

/// Rotates a local vector into the world frame.
pub fn rotate<S: Real>(v: [S; 2], cos: S, sin: S) -> [S; 2] {
    [cos * v[0] - sin * v[1], sin * v[0] + cos * v[1]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_and_boundary() {
        let (d, _) = rounded_box([0.0, 0.0], [0.1, 0.05], 0.02);
        assert!((d - (-0.05 - 0.02)).abs() < 1e-15);
        let (d, n) = rounded_box([0.12, 0.0], [0.1, 0.05], 0.02);
        assert!(d.abs() < 1e-15);
        assert_eq!(n, [1.0, 0.0]);
        let (d, n) = rounded_box([-0.1 - 0.03, 0.05 + 0.04], [0.1, 0.05], 0.0);
        assert!((d - 0.05).abs() < 1e-15);
        assert!((n[0] + 0.6).abs() < 1e-12 && (n[1] - 0.8).abs() < 1e-12);
    }
}
