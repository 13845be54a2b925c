//! Power-law interaction beta(rho) = lambda * rho^p and its derivatives.

/// The cubic case is p = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity {
    pub lambda: f64,
    pub p: f64,
}

impl Nonlinearity {
    pub fn new(lambda: f64, p: f64) -> Self {
        assert!(p > 0.0, "power must be positive");
        Nonlinearity { lambda, p }
    }

    pub fn cubic(lambda: f64) -> Self {
        Nonlinearity { lambda, p: 1.0 }
    }

    pub fn beta(&self, rho: f64) -> f64 {
        if self.p == 1.0 {
            self.lambda * rho
        } else {
            self.lambda * rho.powf(self.p)
        }
    }

    pub fn beta_prime(&self, rho: f64) -> f64 {
        if self.p == 1.0 {
            self.lambda
        } else {
            self.lambda * self.p * rho.powf(self.p - 1.0)
        }
    }

    pub fn beta_double_prime(&self, rho: f64) -> f64 {
        if self.p == 1.0 || self.p == 2.0 {
            // p (p-1) rho^(p-2) is 0 identically for p = 1, constant for p = 2.
            self.lambda * self.p * (self.p - 1.0)
        } else {
            self.lambda * self.p * (self.p - 1.0) * rho.powf(self.p - 2.0)
        }
    }
}
