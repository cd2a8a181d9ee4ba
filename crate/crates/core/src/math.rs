// Thin wrappers over libm. The std float intrinsics are unavailable without
// std and may differ in the last ulp between platforms anyway.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn tan(x: f64) -> f64 {
    libm::tan(x)
}

#[inline]
pub(crate) fn atan(x: f64) -> f64 {
    libm::atan(x)
}

#[inline]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub(crate) fn to_radians(deg: f64) -> f64 {
    deg * (core::f64::consts::PI / 180.0)
}

#[inline]
pub(crate) fn to_degrees(rad: f64) -> f64 {
    rad * (180.0 / core::f64::consts::PI)
}

/// Rounds and clamps an intensity into `u8`.
#[inline]
pub(crate) fn to_u8(v: f64) -> u8 {
    let r = round(v);
    if r <= 0.0 {
        0
    } else if r >= 255.0 {
        255
    } else {
        r as u8
    }
}
