use super::array::NumArray;

/// A named trainable tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGroup {
    pub id: String,
    pub value: NumArray,
    pub grad: NumArray,
}

impl ParamGroup {
    pub fn new(id: impl Into<String>, value: NumArray) -> Self {
        let grad = NumArray::zeros(value.shape());
        Self {
            id: id.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    /// Little-endian bytes of the value, for hashing and checkpoints.
    pub fn value_bytes(&self) -> Vec<u8> {
        self.value.data().iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}
