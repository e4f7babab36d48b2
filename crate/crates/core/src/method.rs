//! Bound methods behind one trait, looked up by name at runtime.

use std::time::Instant;

use crate::anderson::{anderson_bound, AndersonOptions};
use crate::eigen::LanczosOptions;
use crate::error::{Error, Result};
use crate::hamiltonian::ModelSpec;
use crate::marginal::{solve_marginal, Field, MarginalMode, MarginalProblemSpec, Placement};
use crate::moment::ti_moment_bound;
use crate::report::{BoundKind, BoundRow, Columns, Source};
use crate::sdp::SdpOptions;
use crate::upper::{product_state_upper, ring_reference};

/// Union of the parameters any method may read. Each method checks for the
/// ones it needs.
#[derive(Clone, Debug)]
pub struct MethodParams {
    pub m: Option<usize>,
    pub s: Option<usize>,
    pub ell: Option<usize>,
    pub n: Option<usize>,
    pub mode: MarginalMode,
    pub placement: Placement,
    pub field: Field,
    /// `None` keeps the mode's default.
    pub shift_invariance: Option<bool>,
    pub lanczos: LanczosOptions,
    pub sdp: SdpOptions,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            m: None,
            s: None,
            ell: None,
            n: None,
            mode: MarginalMode::Consecutive,
            placement: Placement::Middle,
            field: Field::Auto,
            shift_invariance: None,
            lanczos: LanczosOptions::default(),
            sdp: SdpOptions::default(),
            restarts: 8,
            seed: 0,
        }
    }
}

fn need(v: Option<usize>, name: &str, method: &str) -> Result<usize> {
    v.ok_or_else(|| Error::invalid(format!("method {method} needs parameter {name}")))
}

pub trait BoundMethod: Send + Sync {
    fn name(&self) -> &'static str;
    fn kind(&self) -> BoundKind;
    fn description(&self) -> &'static str;
    /// Parameters a sweep may range over.
    fn sweep_axes(&self) -> &'static [&'static str];
    fn columns(&self) -> Columns;
    /// Row with parameters filled in, before evaluation.
    fn skeleton(&self, model: &ModelSpec, params: &MethodParams) -> BoundRow;
    fn evaluate(&self, model: &ModelSpec, params: &MethodParams) -> Result<BoundRow>;

    /// Like `evaluate`, but failures become rows carrying the error.
    fn evaluate_row(&self, model: &ModelSpec, params: &MethodParams) -> BoundRow {
        match self.evaluate(model, params) {
            Ok(row) => row,
            Err(e) => self.skeleton(model, params).failed(&e),
        }
    }
}

pub struct Anderson;

impl BoundMethod for Anderson {
    fn name(&self) -> &'static str {
        "anderson"
    }
    fn kind(&self) -> BoundKind {
        BoundKind::Lower
    }
    fn description(&self) -> &'static str {
        "patch ground energy over (m-1)^D, with guarantee width"
    }
    fn sweep_axes(&self) -> &'static [&'static str] {
        &["m"]
    }
    fn columns(&self) -> Columns {
        &[
            ("model", Source::Model),
            ("D", Source::Param("D")),
            ("m", Source::Param("m")),
            ("lambda_min_patch", Source::Extra("lambda_min_patch")),
            ("bound", Source::Estimate),
            ("certified_bound", Source::Value),
            ("guarantee_width", Source::Width),
            ("residual", Source::Residual),
            ("seconds", Source::Seconds),
        ]
    }
    fn skeleton(&self, model: &ModelSpec, p: &MethodParams) -> BoundRow {
        BoundRow::new(self.name(), self.kind(), &model.name).param("D", model.dim).param("m", p.m)
    }
    fn evaluate(&self, model: &ModelSpec, p: &MethodParams) -> Result<BoundRow> {
        let m = need(p.m, "m", self.name())?;
        let opts = AndersonOptions { lanczos: p.lanczos.clone(), ..Default::default() };
        let r = anderson_bound(model, m, model.dim, &opts)?;
        let mut row = self.skeleton(model, p).extra("lambda_min_patch", r.lambda_min_patch);
        row.certified = true;
        row.value = Some(r.certified_bound);
        row.estimate = Some(r.bound);
        row.guarantee_width = Some(r.guarantee_width);
        row.diagnostics.residual = Some(r.residual);
        row.diagnostics.iterations = Some(r.iterations);
        row.diagnostics.seconds = r.seconds;
        Ok(row)
    }
}

pub struct Marginal;

impl Marginal {
    fn spec(model: &ModelSpec, p: &MethodParams) -> Result<MarginalProblemSpec> {
        let m = need(p.m, "m", "marginal")?;
        let s = need(p.s, "s", "marginal")?;
        let mut spec = MarginalProblemSpec::new(model.clone(), m, s, p.mode)
            .with_placement(p.placement)
            .with_field(p.field);
        if let Some(on) = p.shift_invariance {
            spec = spec.with_shift_invariance(on);
        }
        Ok(spec)
    }
}

impl BoundMethod for Marginal {
    fn name(&self) -> &'static str {
        "marginal"
    }
    fn kind(&self) -> BoundKind {
        BoundKind::Lower
    }
    fn description(&self) -> &'static str {
        "patch state and window state tied by marginal constraints (SDP)"
    }
    fn sweep_axes(&self) -> &'static [&'static str] {
        &["m", "s"]
    }
    fn columns(&self) -> Columns {
        &[
            ("model", Source::Model),
            ("m", Source::Param("m")),
            ("s", Source::Param("s")),
            ("mode", Source::Param("mode")),
            ("placement", Source::Param("placement")),
            ("z", Source::Extra("z")),
            ("density_bound", Source::Value),
            ("gap", Source::Gap),
            ("seconds", Source::Seconds),
        ]
    }
    fn skeleton(&self, model: &ModelSpec, p: &MethodParams) -> BoundRow {
        let shift = p.shift_invariance.unwrap_or(p.mode == MarginalMode::Consecutive);
        BoundRow::new(self.name(), self.kind(), &model.name)
            .param("m", p.m)
            .param("s", p.s)
            .param("mode", p.mode.to_string())
            .param("placement", p.placement.to_string())
            .param("shift_invariance", shift)
    }
    fn evaluate(&self, model: &ModelSpec, p: &MethodParams) -> Result<BoundRow> {
        let spec = Self::spec(model, p)?;
        let (r, _, _) = solve_marginal(&spec, &p.sdp)?;
        let mut row = self
            .skeleton(model, p)
            .extra("z", r.z)
            .extra("field", if r.complex { "complex" } else { "real" })
            .extra("constraints", r.constraints)
            .extra("dropped_constraints", r.dropped_constraints);
        // only consecutive windows are satisfied by the true state
        row.certified = spec.mode == MarginalMode::Consecutive && r.certified_density_bound.is_some();
        row.value = r.certified_density_bound;
        row.estimate = r.density_bound;
        row.diagnostics.gap = Some(r.gap);
        row.diagnostics.residual = Some(r.feas_dual);
        row.diagnostics.iterations = Some(r.iterations);
        row.diagnostics.status = Some(format!("{:?}", r.status).to_lowercase());
        row.diagnostics.seconds = r.seconds;
        Ok(row)
    }
}

pub struct Moment;

impl BoundMethod for Moment {
    fn name(&self) -> &'static str {
        "moment"
    }
    fn kind(&self) -> BoundKind {
        BoundKind::Lower
    }
    fn description(&self) -> &'static str {
        "translation-invariant Pauli moment matrix on an l-site window (SDP)"
    }
    fn sweep_axes(&self) -> &'static [&'static str] {
        &["l"]
    }
    fn columns(&self) -> Columns {
        &[
            ("model", Source::Model),
            ("l", Source::Param("l")),
            ("variables", Source::Extra("variables")),
            ("matrix_size", Source::Extra("matrix_size")),
            ("bound", Source::Value),
            ("gap", Source::Gap),
            ("seconds", Source::Seconds),
        ]
    }
    fn skeleton(&self, model: &ModelSpec, p: &MethodParams) -> BoundRow {
        BoundRow::new(self.name(), self.kind(), &model.name).param("l", p.ell)
    }
    fn evaluate(&self, model: &ModelSpec, p: &MethodParams) -> Result<BoundRow> {
        let ell = need(p.ell, "l", self.name())?;
        let r = ti_moment_bound(model, ell, &p.sdp)?;
        let mut row = self
            .skeleton(model, p)
            .extra("variables", r.variables)
            .extra("matrix_size", r.matrix_size);
        row.certified = true;
        row.value = Some(r.bound);
        row.estimate = Some(r.relaxation_value);
        row.diagnostics.gap = Some(r.gap);
        row.diagnostics.iterations = Some(r.iterations);
        row.diagnostics.status = Some(format!("{:?}", r.status).to_lowercase());
        row.diagnostics.seconds = r.seconds;
        Ok(row)
    }
}

pub struct ProductUpper;

impl BoundMethod for ProductUpper {
    fn name(&self) -> &'static str {
        "product_upper"
    }
    fn kind(&self) -> BoundKind {
        BoundKind::Upper
    }
    fn description(&self) -> &'static str {
        "best two-sublattice product state (variational upper bound)"
    }
    fn sweep_axes(&self) -> &'static [&'static str] {
        &[]
    }
    fn columns(&self) -> Columns {
        &[
            ("model", Source::Model),
            ("D", Source::Param("D")),
            ("restarts", Source::Param("restarts")),
            ("seed", Source::Param("seed")),
            ("upper", Source::Value),
            ("seconds", Source::Seconds),
        ]
    }
    fn skeleton(&self, model: &ModelSpec, p: &MethodParams) -> BoundRow {
        BoundRow::new(self.name(), self.kind(), &model.name)
            .param("D", model.dim)
            .param("restarts", p.restarts)
            .param("seed", p.seed)
    }
    fn evaluate(&self, model: &ModelSpec, p: &MethodParams) -> Result<BoundRow> {
        let start = Instant::now();
        let r = product_state_upper(model, p.restarts, p.seed)?;
        let mut row = self.skeleton(model, p);
        row.certified = true;
        row.value = Some(r.value);
        row.diagnostics.iterations = Some(r.sweeps);
        row.diagnostics.seconds = start.elapsed().as_secs_f64();
        Ok(row)
    }
}

pub struct RingReference;

impl BoundMethod for RingReference {
    fn name(&self) -> &'static str {
        "ring_reference"
    }
    fn kind(&self) -> BoundKind {
        BoundKind::Reference
    }
    fn description(&self) -> &'static str {
        "ground energy per site of a finite periodic ring (reference, not certified)"
    }
    fn sweep_axes(&self) -> &'static [&'static str] {
        &["n"]
    }
    fn columns(&self) -> Columns {
        &[
            ("model", Source::Model),
            ("D", Source::Param("D")),
            ("n", Source::Param("n")),
            ("density", Source::Value),
            ("seconds", Source::Seconds),
        ]
    }
    fn skeleton(&self, model: &ModelSpec, p: &MethodParams) -> BoundRow {
        BoundRow::new(self.name(), self.kind(), &model.name)
            .param("D", model.dim)
            .param("n", p.n)
            .extra("note", "reference, not certified")
    }
    fn evaluate(&self, model: &ModelSpec, p: &MethodParams) -> Result<BoundRow> {
        let n = need(p.n, "n", self.name())?;
        let start = Instant::now();
        let v = ring_reference(model, n)?;
        let mut row = self.skeleton(model, p);
        row.value = Some(v);
        row.diagnostics.seconds = start.elapsed().as_secs_f64();
        Ok(row)
    }
}

pub struct Registry {
    methods: Vec<Box<dyn BoundMethod>>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Self { methods: Vec::new() };
        r.register(Box::new(Anderson));
        r.register(Box::new(Marginal));
        r.register(Box::new(Moment));
        r.register(Box::new(ProductUpper));
        r.register(Box::new(RingReference));
        r
    }
}

impl Registry {
    /// Adds a method; a later registration under an existing name replaces it.
    pub fn register(&mut self, method: Box<dyn BoundMethod>) {
        self.methods.retain(|m| m.name() != method.name());
        self.methods.push(method);
    }

    pub fn get(&self, name: &str) -> Result<&dyn BoundMethod> {
        self.methods
            .iter()
            .find(|m| m.name() == name)
            .map(|m| m.as_ref())
            .ok_or_else(|| Error::invalid(format!("unknown method {name:?} (known: {})", self.names().join(", "))))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.iter().map(|m| m.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn BoundMethod> {
        self.methods.iter().map(|m| m.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::builtin_model;

    #[test]
    fn lookup_by_name() {
        let reg = Registry::default();
        assert_eq!(reg.names(), vec!["anderson", "marginal", "moment", "product_upper", "ring_reference"]);
        assert!(reg.get("nope").is_err());
        assert_eq!(reg.get("moment").unwrap().kind(), BoundKind::Lower);
    }

    #[test]
    fn rows_carry_parameters_and_diagnostics() {
        let reg = Registry::default();
        let h = builtin_model("heisenberg", &[]).unwrap();
        let p = MethodParams { m: Some(3), ..Default::default() };
        let row = reg.get("anderson").unwrap().evaluate_row(&h, &p);
        assert!(row.certified && row.error.is_none());
        assert_eq!(row.params["m"], 3);
        assert!((row.estimate.unwrap() + 1.0).abs() < 1e-12);
        assert!(row.diagnostics.residual.is_some());
    }

    #[test]
    fn missing_parameter_becomes_error_row() {
        let reg = Registry::default();
        let h = builtin_model("heisenberg", &[]).unwrap();
        let row = reg.get("marginal").unwrap().evaluate_row(&h, &MethodParams::default());
        assert!(row.error.is_some() && row.value.is_none() && !row.certified);
    }

    #[test]
    fn wrap_rows_are_not_certified() {
        let reg = Registry::default();
        let h = builtin_model("heisenberg", &[]).unwrap();
        let p = MethodParams { m: Some(3), s: Some(1), mode: MarginalMode::Wrap, ..Default::default() };
        let row = reg.get("marginal").unwrap().evaluate(&h, &p).unwrap();
        assert!(!row.certified);
        assert_eq!(row.params["shift_invariance"], false);
    }

    #[test]
    fn replacing_a_method() {
        let mut reg = Registry::default();
        reg.register(Box::new(Anderson));
        assert_eq!(reg.names().len(), 5);
        assert_eq!(reg.names().last(), Some(&"anderson"));
    }
}
