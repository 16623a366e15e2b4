use crate::error::{Error, Result};
use crate::linalg::Signal;

/// `k · Σ_{t<k} ‖x^{t+1} - x^t‖² > B²`; never fires at `k = 0`.
pub fn restart_check(k: usize, sumsq: f64, budget: f64) -> bool {
    k > 0 && (k as f64) * sumsq > budget * budget
}

/// Bookkeeping of one restart epoch.
#[derive(Clone, Debug)]
pub struct EpochState {
    pub x_prev: Signal,
    pub x_curr: Signal,
    /// Epoch-local iteration index.
    pub k: usize,
    /// `Σ_{t<k} ‖x^{t+1} - x^t‖²`
    pub sumsq: f64,
    /// Extrapolated points `z^0 .. z^{k-1}`; only filled when requested.
    pub z_buffer: Vec<Signal>,
    /// `‖x^{t+1} - x^t‖` for `t < k`.
    pub residual_buffer: Vec<f64>,
    keep_z: bool,
}

impl EpochState {
    pub fn new(x0: Signal, keep_z: bool) -> Self {
        Self {
            x_prev: x0.clone(),
            x_curr: x0,
            k: 0,
            sumsq: 0.0,
            z_buffer: Vec::new(),
            residual_buffer: Vec::new(),
            keep_z,
        }
    }

    /// `z^k = x^k + (1 - θ)(x^k - x^{k-1})`
    pub fn extrapolate(&self, theta: f64) -> Signal {
        self.x_curr.axpy(1.0 - theta, &self.x_curr.sub(&self.x_prev))
    }

    /// Accepts `x^{k+1}` computed from `z^k`; returns `‖x^{k+1} - x^k‖`.
    pub fn advance(&mut self, z: Signal, next: Signal) -> f64 {
        let r = next.distance(&self.x_curr);
        self.sumsq += r * r;
        self.residual_buffer.push(r);
        if self.keep_z {
            self.z_buffer.push(z);
        }
        self.x_prev = std::mem::replace(&mut self.x_curr, next);
        self.k += 1;
        r
    }

    /// `x^{-1} = x^0 = x^k`, `k = 0`, buffers cleared.
    pub fn restart(&mut self) {
        self.x_prev = self.x_curr.clone();
        self.k = 0;
        self.sumsq = 0.0;
        self.z_buffer.clear();
        self.residual_buffer.clear();
    }
}

/// `K₀ = argmin_{⌊K/2⌋ ≤ k ≤ K-1} ‖x^{k+1} - x^k‖` (earliest on ties) and
/// `ẑ = (z^0 + .. + z^{K₀}) / (K₀ + 1)`.
pub fn select_output(epoch: &EpochState, cap: usize) -> Result<(usize, Signal)> {
    let have = epoch.residual_buffer.len().min(epoch.z_buffer.len());
    if cap == 0 || have < cap {
        return Err(Error::InsufficientEpoch { have, need: cap.max(1) });
    }
    let mut k0 = cap / 2;
    for k in cap / 2..cap {
        if epoch.residual_buffer[k] < epoch.residual_buffer[k0] {
            k0 = k;
        }
    }
    let mut sum = epoch.z_buffer[0].clone();
    for z in &epoch.z_buffer[1..=k0] {
        sum = sum.add(z);
    }
    Ok((k0, sum.scale(1.0 / (k0 + 1) as f64)))
}
