use crate::equalizer::EqualizerModel;
use crate::error::{Error, Result};

/// Trainable/frozen flag per parameter group id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreezeMask {
    entries: Vec<(String, bool)>,
}

impl FreezeMask {
    pub fn from_fn(model: &EqualizerModel, trainable: impl Fn(&str) -> bool) -> Self {
        Self {
            entries: model.group_ids().map(|id| (id.to_string(), trainable(id))).collect(),
        }
    }

    pub fn all_trainable(model: &EqualizerModel) -> Self {
        Self::from_fn(model, |_| true)
    }

    pub fn all_frozen(model: &EqualizerModel) -> Self {
        Self::from_fn(model, |_| false)
    }

    pub fn entries(&self) -> &[(String, bool)] {
        &self.entries
    }

    pub fn is_trainable(&self, id: &str) -> Option<bool> {
        self.entries.iter().find(|(k, _)| k == id).map(|&(_, t)| t)
    }

    /// Flags aligned with `model.params`; fails unless the mask names every
    /// group exactly once.
    pub fn flags_for(&self, model: &EqualizerModel) -> Result<Vec<bool>> {
        if self.entries.len() != model.params.len() {
            return Err(Error::Config(format!(
                "mask has {} entries, model has {} groups",
                self.entries.len(),
                model.params.len()
            )));
        }
        model
            .params
            .iter()
            .map(|p| {
                let mut hits = self.entries.iter().filter(|(k, _)| *k == p.id);
                match (hits.next(), hits.next()) {
                    (Some(&(_, t)), None) => Ok(t),
                    _ => Err(Error::Config(format!("mask must name group '{}' exactly once", p.id))),
                }
            })
            .collect()
    }

    pub fn trainable_count(&self, model: &EqualizerModel) -> Result<usize> {
        let flags = self.flags_for(model)?;
        Ok(model.params.iter().zip(flags).filter(|(_, t)| *t).map(|(p, _)| p.len()).sum())
    }
}

/// Conv kernel and bias trainable; every biLSTM and dense group frozen.
pub fn make_transfer_mask(model: &EqualizerModel) -> FreezeMask {
    FreezeMask::from_fn(model, EqualizerModel::is_conv_group)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equalizer::EqualizerTopology;

    #[test]
    fn transfer_mask_trains_only_conv() {
        let model = EqualizerModel::build(EqualizerTopology::default(), 1).unwrap();
        let mask = make_transfer_mask(&model);
        assert_eq!(mask.trainable_count(&model).unwrap(), model.topology.conv_param_count());
        assert_eq!(mask.flags_for(&model).unwrap().len(), model.params.len());
        assert_eq!(mask.is_trainable("conv.kernel"), Some(true));
        assert_eq!(mask.is_trainable("bilstm.bwd.U_g"), Some(false));
        assert_eq!(mask.is_trainable("dense.bias"), Some(false));
    }

    #[test]
    fn incomplete_or_duplicate_masks_rejected() {
        let model = EqualizerModel::build(EqualizerTopology::default(), 1).unwrap();
        let mut mask = FreezeMask::all_frozen(&model);
        mask.entries.pop();
        assert!(mask.flags_for(&model).is_err());
        mask.entries.push(("conv.kernel".into(), true));
        assert!(mask.flags_for(&model).is_err());
    }
}
