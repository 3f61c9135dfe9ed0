use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// A point (or vector) in the plane, serialized as `[x, y]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub [f64; 2]);

impl Point {
    pub const ORIGIN: Point = Point([0.0, 0.0]);

    pub const fn new(x: f64, y: f64) -> Self {
        Point([x, y])
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Point([r * theta.cos(), r * theta.sin()])
    }

    pub fn x(self) -> f64 {
        self.0[0]
    }

    pub fn y(self) -> f64 {
        self.0[1]
    }

    pub fn norm(self) -> f64 {
        self.0[0].hypot(self.0[1])
    }

    pub fn angle(self) -> f64 {
        self.0[1].atan2(self.0[0])
    }

    pub fn dot(self, other: Point) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1]
    }

    /// z-component of the cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.0[0] * other.0[1] - self.0[1] * other.0[0]
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point([0.5 * (self.0[0] + other.0[0]), 0.5 * (self.0[1] + other.0[1])])
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Unsigned angle between the directions of two nonzero vectors.
    pub fn angle_distance(self, other: Point) -> f64 {
        self.cross(other).atan2(self.dot(other)).abs()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, p: Point) -> Point {
        Point([self * p.0[0], self * p.0[1]])
    }
}

/// Twice the signed area of the triangle `(a, b, c)`.
pub fn signed_area2(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}
