// Transcendentals go through libm in every build so that results are
// bit-identical with or without std.

pub(crate) use libm::{exp, fabs, lgamma, log, sqrt};

pub(crate) const LN_2: f64 = core::f64::consts::LN_2;

#[inline]
pub(crate) fn log2_1p(x: f64) -> f64 {
    libm::log1p(x) / LN_2
}

/// `Σ log2(1 + x_i)` accumulated as a product, with one logarithm per
/// 10²⁰⁰ of growth instead of one per term.
#[derive(Clone, Copy)]
pub(crate) struct Log2Sum {
    prod: f64,
    logs: f64,
}

impl Log2Sum {
    pub(crate) fn new() -> Self {
        Self { prod: 1.0, logs: 0.0 }
    }

    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        self.prod *= 1.0 + x;
        if self.prod > 1e200 {
            self.logs += log(self.prod);
            self.prod = 1.0;
        }
    }

    pub(crate) fn value(&self) -> f64 {
        (self.logs + log(self.prod)) / LN_2
    }
}
