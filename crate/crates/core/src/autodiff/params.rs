use serde::{Deserialize, Serialize};

use super::tape::{Gradients, Tape, Var};
use super::tensor::Tensor;
use crate::error::{config, Error, Result};

/// One learnable tensor and its accumulated gradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    /// Set once a backward pass (or an explicit `set_grad`) has populated `grad`.
    pub grad_ready: bool,
}

/// Ordered, uniquely named parameters of one network.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    entries: Vec<Param>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<()> {
        let name = name.into();
        if self.index_of(&name).is_some() {
            return Err(config(format!("duplicate parameter name `{name}`")));
        }
        let grad = Tensor::zeros(value.shape());
        self.entries.push(Param {
            name,
            value,
            grad,
            grad_ready: false,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.entries.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|p| p.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|p| p.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.entries.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> &Tensor {
        &self
            .get(name)
            .unwrap_or_else(|| panic!("no parameter named `{name}`"))
            .value
    }

    pub fn value_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries
            .iter_mut()
            .find(|p| p.name == name)
            .map(|p| &mut p.value)
    }

    pub fn param(&self, index: usize) -> &Param {
        &self.entries[index]
    }

    pub fn param_mut(&mut self, index: usize) -> &mut Param {
        &mut self.entries[index]
    }

    /// Replaces the gradient of `name`, marking it populated.
    pub fn set_grad(&mut self, name: &str, grad: Tensor) -> Result<()> {
        let p = self
            .entries
            .iter_mut()
            .find(|p| p.name == name)
            .ok_or_else(|| config(format!("no parameter named `{name}`")))?;
        if grad.shape() != p.value.shape() {
            return Err(config(format!(
                "gradient shape {:?} does not match parameter `{name}` {:?}",
                grad.shape(),
                p.value.shape()
            )));
        }
        p.grad = grad;
        p.grad_ready = true;
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.entries {
            p.grad.fill(0.0);
            p.grad_ready = false;
        }
    }

    /// Registers every parameter as a leaf on `tape`, in order.
    pub fn bind(&self, tape: &mut Tape) -> Vec<Var> {
        self.entries
            .iter()
            .map(|p| tape.leaf(p.value.clone()))
            .collect()
    }

    /// Adds the gradients of `vars` (as produced by [`ParamSet::bind`]) into this set.
    ///
    /// Parameters the backward pass never reached receive an explicit zero gradient.
    pub fn accumulate(&mut self, grads: &Gradients, vars: &[Var]) -> Result<()> {
        if vars.len() != self.entries.len() {
            return Err(Error::Internal(format!(
                "{} bound vars for {} parameters",
                vars.len(),
                self.entries.len()
            )));
        }
        for (p, &v) in self.entries.iter_mut().zip(vars) {
            if let Some(g) = grads.get(v) {
                if g.shape() != p.value.shape() {
                    return Err(Error::Internal(format!(
                        "gradient for `{}` has shape {:?}, expected {:?}",
                        p.name,
                        g.shape(),
                        p.value.shape()
                    )));
                }
                p.grad.add_assign(g);
            }
            p.grad_ready = true;
        }
        Ok(())
    }

    /// Reads the gradient of each bound var, zero-filled where the backward pass never reached.
    pub fn gradients_of(&self, grads: &Gradients, vars: &[Var]) -> Vec<Tensor> {
        self.entries
            .iter()
            .zip(vars)
            .map(|(p, &v)| {
                grads
                    .get(v)
                    .cloned()
                    .unwrap_or_else(|| Tensor::zeros(p.value.shape()))
            })
            .collect()
    }

    /// Replaces every gradient, in parameter order.
    pub fn set_grads(&mut self, grads: Vec<Tensor>) -> Result<()> {
        if grads.len() != self.entries.len() {
            return Err(Error::Internal(format!(
                "{} gradients for {} parameters",
                grads.len(),
                self.entries.len()
            )));
        }
        for (p, g) in self.entries.iter_mut().zip(grads) {
            if g.shape() != p.value.shape() {
                return Err(Error::Internal(format!(
                    "gradient for `{}` has shape {:?}, expected {:?}",
                    p.name,
                    g.shape(),
                    p.value.shape()
                )));
            }
            p.grad = g;
            p.grad_ready = true;
        }
        Ok(())
    }

    pub fn num_values(&self) -> usize {
        self.entries.iter().map(|p| p.value.len()).sum()
    }
}
