//! First-layer energy estimates for conventional and spiking networks.
//!
//! Energies are in joules. An ANN layer costs one multiply-accumulate per
//! synaptic operation; a spiking layer costs one accumulate per operation
//! that receives a spike, over `T` timesteps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Energy per 32-bit floating-point MAC.
pub const E_MAC: f64 = 4.6e-12;
/// Energy per accumulate.
pub const E_AC: f64 = 0.9e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kernel: u64,
    pub c_in: u64,
    pub c_out: u64,
    pub h_out: u64,
    pub w_out: u64,
}

impl LayerSpec {
    /// 7x7 stride-2 stem on a 224x224 input, 64 output channels.
    pub fn resnet_stem(c_in: u64) -> Self {
        Self {
            kernel: 7,
            c_in,
            c_out: 64,
            h_out: 112,
            w_out: 112,
        }
    }

    /// The conversion itself viewed as a 1x1 layer with one output channel
    /// per timestep at full resolution.
    pub fn conversion(timesteps: u64, height: u64, width: u64) -> Self {
        Self {
            kernel: 1,
            c_in: 1,
            c_out: timesteps,
            h_out: height,
            w_out: width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub e_mac: f64,
    pub e_ac: f64,
    /// Mean firing rate of the layer input.
    pub fr: f64,
    pub timesteps: u64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            e_mac: E_MAC,
            e_ac: E_AC,
            fr: 0.05,
            timesteps: 8,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_mac > 0.0 && self.e_ac > 0.0) {
            return Err(Error::InvalidConfig("operation energies must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.fr) {
            return Err(Error::InvalidConfig(format!(
                "firing rate must be in [0, 1], got {}",
                self.fr
            )));
        }
        Ok(())
    }
}

/// `K^2 * C_in * C_out * H_out * W_out`.
pub fn n_ops(spec: &LayerSpec) -> Result<u64> {
    [spec.kernel, spec.c_in, spec.c_out, spec.h_out, spec.w_out]
        .into_iter()
        .try_fold(spec.kernel, |acc, f| acc.checked_mul(f))
        .ok_or(Error::Overflow("operation count"))
}

pub fn energy_ann(spec: &LayerSpec, model: &EnergyModel) -> Result<f64> {
    Ok(n_ops(spec)? as f64 * model.e_mac)
}

pub fn energy_snn(spec: &LayerSpec, model: &EnergyModel) -> Result<f64> {
    Ok(n_ops(spec)? as f64 * model.fr * model.timesteps as f64 * model.e_ac)
}

pub fn energy_i2e(timesteps: u64, height: u64, width: u64, model: &EnergyModel) -> Result<f64> {
    Ok(n_ops(&LayerSpec::conversion(timesteps, height, width))? as f64 * model.e_ac)
}

/// First-layer comparison between an RGB ANN stem and an event-driven SNN
/// stem fed by the conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub model: EnergyModel,
    pub ann_ops: u64,
    pub snn_ops: u64,
    pub conversion_ops: u64,
    pub e_ann: f64,
    pub e_snn: f64,
    pub e_i2e: f64,
    /// `e_snn + e_i2e`.
    pub e_total: f64,
    /// `e_ann / e_total`.
    pub reduction: f64,
    /// `e_ann / e_snn`, ignoring the conversion cost.
    pub reduction_snn_only: f64,
}

impl EnergyReport {
    /// `ann` takes RGB input, `snn` takes the two polarity channels, and the
    /// conversion runs at `height x width`.
    pub fn first_layer(
        ann: &LayerSpec,
        snn: &LayerSpec,
        height: u64,
        width: u64,
        model: &EnergyModel,
    ) -> Result<Self> {
        model.validate()?;
        let e_ann = energy_ann(ann, model)?;
        let e_snn = energy_snn(snn, model)?;
        let e_i2e = energy_i2e(model.timesteps, height, width, model)?;
        let e_total = e_snn + e_i2e;
        Ok(Self {
            model: *model,
            ann_ops: n_ops(ann)?,
            snn_ops: n_ops(snn)?,
            conversion_ops: n_ops(&LayerSpec::conversion(model.timesteps, height, width))?,
            e_ann,
            e_snn,
            e_i2e,
            e_total,
            reduction: e_ann / e_total,
            reduction_snn_only: e_ann / e_snn,
        })
    }

    /// ImageNet-sized stem: 3-channel ANN vs 2-channel SNN on 224x224.
    pub fn imagenet(model: &EnergyModel) -> Result<Self> {
        Self::first_layer(
            &LayerSpec::resnet_stem(3),
            &LayerSpec::resnet_stem(2),
            224,
            224,
            model,
        )
    }

    pub fn to_markdown(&self) -> String {
        let uj = |j: f64| j * 1e6;
        let mut s = String::new();
        s.push_str(&format!(
            "fr = {:.4}, T = {}, E_mac = {:.2} pJ, E_ac = {:.2} pJ\n\n",
            self.model.fr,
            self.model.timesteps,
            self.model.e_mac * 1e12,
            self.model.e_ac * 1e12
        ));
        s.push_str("| quantity | ops | energy (uJ) |\n|---|---:|---:|\n");
        s.push_str(&format!("| E_ANN | {} | {:.2} |\n", self.ann_ops, uj(self.e_ann)));
        s.push_str(&format!("| E_SNN | {} | {:.2} |\n", self.snn_ops, uj(self.e_snn)));
        s.push_str(&format!(
            "| E_I2E | {} | {:.3} |\n",
            self.conversion_ops,
            uj(self.e_i2e)
        ));
        s.push_str(&format!("| E_SNN + E_I2E | | {:.2} |\n", uj(self.e_total)));
        s.push_str(&format!(
            "\nreduction: {:.1}x (with conversion), {:.1}x (SNN layer only)\n",
            self.reduction, self.reduction_snn_only
        ));
        s
    }
}
