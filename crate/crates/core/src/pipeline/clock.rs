//! Stage timer. wasm32-unknown-unknown has no monotonic clock in std, so
//! there every reading is zero.

#[cfg(not(target_arch = "wasm32"))]
#[derive(Clone, Copy)]
pub struct Instant(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Instant {
    pub fn now() -> Self {
        Self(std::time::Instant::now())
    }

    pub fn ms_since(self, earlier: Self) -> f64 {
        (self.0 - earlier.0).as_secs_f64() * 1e3
    }
}

#[cfg(target_arch = "wasm32")]
#[derive(Clone, Copy)]
pub struct Instant;

#[cfg(target_arch = "wasm32")]
impl Instant {
    pub fn now() -> Self {
        Self
    }

    pub fn ms_since(self, _earlier: Self) -> f64 {
        0.0
    }
}
