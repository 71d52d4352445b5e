use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{input, Result};

/// A class index in `[0, N)`; the information unit carried by one waveform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassMessage(usize);

impl ClassMessage {
    pub fn new(class_id: usize, num_classes: usize) -> Result<Self> {
        if class_id >= num_classes {
            return Err(input(format!(
                "class id {class_id} out of range [0, {num_classes})"
            )));
        }
        Ok(Self(class_id))
    }

    pub fn id(self) -> usize {
        self.0
    }

    /// Big-endian bits of this class for an alphabet of `num_classes`.
    pub fn to_bits(self, num_classes: usize) -> Vec<bool> {
        let width = num_classes.trailing_zeros();
        (0..width).rev().map(|b| (self.0 >> b) & 1 == 1).collect()
    }
}

/// Maps `log2(N)` big-endian information bits to their class.
pub fn map_bits_to_class(bits: &[bool], num_classes: usize) -> Result<ClassMessage> {
    let width = num_classes.trailing_zeros() as usize;
    if !num_classes.is_power_of_two() || bits.len() != width {
        return Err(input(format!(
            "expected {width} bits for {num_classes} classes, got {}",
            bits.len()
        )));
    }
    let id = bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
    ClassMessage::new(id, num_classes)
}

pub fn map_class_to_bits(msg: ClassMessage, num_classes: usize) -> Vec<bool> {
    msg.to_bits(num_classes)
}

/// Length-N indicator vector of one class.
#[derive(Clone, Debug, PartialEq)]
pub struct OneHotLabel(Vec<f64>);

impl OneHotLabel {
    pub fn new(msg: ClassMessage, num_classes: usize) -> Result<Self> {
        ClassMessage::new(msg.id(), num_classes)?;
        let mut v = vec![0.0; num_classes];
        v[msg.id()] = 1.0;
        Ok(Self(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn class(&self) -> ClassMessage {
        ClassMessage(self.0.iter().position(|&v| v == 1.0).expect("one-hot"))
    }

    /// Stacks labels for `classes` into a `[B x N]` tensor.
    pub fn batch(classes: &[ClassMessage], num_classes: usize) -> Result<Tensor> {
        if classes.is_empty() {
            return Err(input("empty label batch"));
        }
        let mut v = vec![0.0; classes.len() * num_classes];
        for (r, c) in classes.iter().enumerate() {
            ClassMessage::new(c.id(), num_classes)?;
            v[r * num_classes + c.id()] = 1.0;
        }
        Tensor::new(vec![classes.len(), num_classes], v)
    }
}

/// Information bits carried per complex sample.
pub fn bits_per_sample(num_classes: usize, samples_per_class: usize) -> f64 {
    f64::from(num_classes.trailing_zeros()) / samples_per_class as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_all_ones() {
        assert_eq!(map_bits_to_class(&[false; 8], 256).unwrap().id(), 0);
        assert_eq!(map_bits_to_class(&[true; 8], 256).unwrap().id(), 255);
    }

    #[test]
    fn big_endian_order() {
        let c = ClassMessage::new(0b1000_0001, 256).unwrap();
        let bits = c.to_bits(256);
        assert!(bits[0] && bits[7] && !bits[1]);
    }

    #[test]
    fn round_trip_all_classes() {
        for id in 0..256 {
            let c = ClassMessage::new(id, 256).unwrap();
            assert_eq!(map_bits_to_class(&map_class_to_bits(c, 256), 256).unwrap(), c);
        }
    }

    #[test]
    fn wrong_bit_count_is_rejected() {
        assert!(map_bits_to_class(&[true; 7], 256).is_err());
        assert!(map_bits_to_class(&[true; 9], 256).is_err());
    }

    #[test]
    fn one_hot_has_single_unit_entry() {
        let l = OneHotLabel::new(ClassMessage::new(5, 16).unwrap(), 16).unwrap();
        assert_eq!(l.as_slice().iter().sum::<f64>(), 1.0);
        assert_eq!(l.class().id(), 5);
    }

    #[test]
    fn spectral_efficiency_at_defaults() {
        assert_eq!(bits_per_sample(256, 8), 1.0);
    }
}
