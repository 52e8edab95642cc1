//! Thin float helpers over `libm`.

#[inline]
pub(crate) fn pow(x: f64, e: f64) -> f64 {
    libm::pow(x, e)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// `x^e` for `x ≥ 0` with an exact multiplication path for small integer
/// exponents (the common `p = 3`, `q = 2` runs spend most time here).
#[derive(Clone, Copy, Debug)]
pub(crate) struct Pow {
    e: f64,
    /// `e = int + half/2` when `e` is a small multiple of 1/2.
    int: Option<(u32, bool)>,
}

impl Pow {
    pub(crate) fn new(e: f64) -> Self {
        let twice = 2.0 * e;
        let int = if (0.0..=16.0).contains(&twice) && libm::floor(twice) == twice {
            let k = twice as u32;
            Some((k / 2, k % 2 == 1))
        } else {
            None
        };
        Self { e, int }
    }

    #[inline]
    pub(crate) fn of(self, x: f64) -> f64 {
        match self.int {
            Some((k, half)) => {
                let mut r = if half { libm::sqrt(x) } else { 1.0 };
                for _ in 0..k {
                    r *= x;
                }
                r
            }
            None => {
                if x == 0.0 {
                    if self.e == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    libm::pow(x, self.e)
                }
            }
        }
    }

    /// `|d|^e · sign(d)`.
    #[inline]
    pub(crate) fn signed(self, d: f64) -> f64 {
        let m = self.of(d.abs());
        if d < 0.0 {
            -m
        } else {
            m
        }
    }
}

/// Surface measure of the unit sphere S^{N−1} in R^N.
pub(crate) fn sphere_area(dim: usize) -> f64 {
    use core::f64::consts::PI;
    match dim {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        d => 2.0 * PI / (d as f64 - 2.0) * sphere_area(d - 2),
    }
}
