//! Vector arithmetic on a square torus.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A 2D vector in meters (positions) or a dimensionless direction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Unit vector along `self`, or `None` when the norm is below `eps`.
    #[inline]
    pub fn normalized(self, eps: f64) -> Option<Vec2> {
        let n = self.norm();
        if n < eps || !n.is_finite() {
            None
        } else {
            Some(Vec2::new(self.x / n, self.y / n))
        }
    }

    /// Angle with the positive x-axis, in degrees within `[0, 360)`.
    #[inline]
    pub fn angle_deg(self) -> f64 {
        wrap_degrees(self.y.atan2(self.x).to_degrees())
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Unit vector `(cos θ, sin θ)` for an angle in degrees.
#[inline]
pub fn unit_from_angle(theta_deg: f64) -> Vec2 {
    let (s, c) = theta_deg.to_radians().sin_cos();
    Vec2::new(c, s)
}

/// Maps any finite angle into `[0, 360)`.
#[inline]
pub fn wrap_degrees(theta: f64) -> f64 {
    let w = theta.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Square world of side `side_length` with periodic edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusSpec {
    side_length: f64,
}

impl TorusSpec {
    /// Returns `None` unless `side_length` is positive and finite.
    pub fn new(side_length: f64) -> Option<Self> {
        (side_length > 0.0 && side_length.is_finite()).then_some(Self { side_length })
    }

    #[inline]
    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.side_length * self.side_length
    }

    #[inline]
    pub fn center(&self) -> Vec2 {
        Vec2::new(self.side_length / 2.0, self.side_length / 2.0)
    }

    /// Wraps one coordinate into `[0, L)`.
    #[inline]
    pub fn wrap_coord(&self, c: f64) -> f64 {
        let l = self.side_length;
        if (0.0..l).contains(&c) {
            return c;
        }
        let w = c.rem_euclid(l);
        if w >= l {
            0.0
        } else {
            w
        }
    }

    #[inline]
    pub fn wrap(&self, p: Vec2) -> Vec2 {
        Vec2::new(self.wrap_coord(p.x), self.wrap_coord(p.y))
    }

    /// Minimal-image component in `[-L/2, L/2)`.
    #[inline]
    fn min_image(&self, d: f64) -> f64 {
        let l = self.side_length;
        let half = 0.5 * l;
        let mut d = d;
        if d >= half || d < -half {
            d -= l * ((d + half) / l).floor();
            // floating point can leave the value a hair outside the range
            if d >= half {
                d -= l;
            } else if d < -half {
                d += l;
            }
        }
        d
    }

    /// Shortest displacement from `a` to `b` under wraparound.
    #[inline]
    pub fn delta(&self, a: Vec2, b: Vec2) -> Vec2 {
        let a = self.wrap(a);
        let b = self.wrap(b);
        Vec2::new(self.min_image(b.x - a.x), self.min_image(b.y - a.y))
    }

    #[inline]
    pub fn distance(&self, a: Vec2, b: Vec2) -> f64 {
        self.delta(a, b).norm()
    }

    #[inline]
    pub fn distance_sq(&self, a: Vec2, b: Vec2) -> f64 {
        self.delta(a, b).norm_sq()
    }
}

/// Free-function form of [`TorusSpec::delta`].
#[inline]
pub fn torus_delta(a: Vec2, b: Vec2, world: &TorusSpec) -> Vec2 {
    world.delta(a, b)
}

/// Free-function form of [`TorusSpec::distance`].
#[inline]
pub fn torus_distance(a: Vec2, b: Vec2, world: &TorusSpec) -> f64 {
    world.distance(a, b)
}
