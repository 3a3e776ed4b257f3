//! Plane geometry primitives shared by the lattice and crossing modules.

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Slack used when testing whether an embedded point lies inside real bounds,
/// so that e.g. `[-2*sqrt(3), 2*sqrt(3)]` includes its endpoint columns.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn is_empty(&self) -> bool {
        self.x1 - self.x0 <= GEOM_EPS || self.y1 - self.y0 <= GEOM_EPS
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x0 - GEOM_EPS
            && p.x <= self.x1 + GEOM_EPS
            && p.y >= self.y0 - GEOM_EPS
            && p.y <= self.y1 + GEOM_EPS
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

impl std::fmt::Display for Rect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{}]x[{},{}]", self.x0, self.x1, self.y0, self.y1)
    }
}

/// Clip the segment `a-b` to `rect`. Returns the clipped parameter interval
/// `(t0, t1)` with `0 <= t0 <= t1 <= 1`, or `None` when the segment misses
/// the rectangle entirely.
pub fn clip_segment(a: &Point, b: &Point, rect: &Rect) -> Option<(f64, f64)> {
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let checks = [
        (-dx, a.x - rect.x0 + GEOM_EPS),
        (dx, rect.x1 - a.x + GEOM_EPS),
        (-dy, a.y - rect.y0 + GEOM_EPS),
        (dy, rect.y1 - a.y + GEOM_EPS),
    ];
    for (p, q) in checks {
        if p.abs() < 1e-15 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                if r > t1 {
                    return None;
                }
                if r > t0 {
                    t0 = r;
                }
            } else {
                if r < t0 {
                    return None;
                }
                if r < t1 {
                    t1 = r;
                }
            }
        }
    }
    Some((t0, t1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_inside_and_crossing() {
        let r = Rect::new(0.0, 1.0, 0.0, 1.0);
        let (t0, t1) = clip_segment(&Point::new(0.2, 0.2), &Point::new(0.8, 0.8), &r).unwrap();
        assert!(t0 <= 1e-9 && (t1 - 1.0).abs() <= 1e-9);

        let (t0, t1) = clip_segment(&Point::new(-1.0, 0.5), &Point::new(2.0, 0.5), &r).unwrap();
        assert!((t0 - 1.0 / 3.0).abs() < 1e-6 && (t1 - 2.0 / 3.0).abs() < 1e-6);

        assert!(clip_segment(&Point::new(-1.0, 2.0), &Point::new(-0.5, 3.0), &r).is_none());
    }
}
