//! Pass thresholds and runtime budgets of the acceptance battery.
//!
//! Every field has a documented default; a run config may override any of
//! them, but the defaults are the published acceptance values.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Closed-form curvature values on the space forms.
    pub curvature_exact: f64,
    /// Curvature from central differences of the warps.
    pub curvature_fd: f64,
    /// Relative error of the comparison ODE against `sinh`.
    pub ode_relative: f64,
    /// Lower bound on `h″ - H h` for the power supersolution.
    pub supersolution_defect: f64,
    /// Catenoid profile against `arccosh`.
    pub catenoid_abs: f64,
    /// Expected error ratio per grid halving and its relative band.
    pub order_ratio: f64,
    pub order_band: f64,
    /// Relative flux drift of radial minimal graphs.
    pub flux_drift: f64,
    /// Relative error of the canonical-parameter identities.
    pub identity_relative: f64,
    /// Relative gap between the entire bound and the large-R corollary.
    pub entire_limit: f64,
    /// Heat mass drift over unit time.
    pub mass_drift: f64,
    /// Relative error of the Euclidean heat kernel.
    pub kernel_relative: f64,
    /// Upper bound on `∂ₜu` along supersolution flows.
    pub monotone: f64,
    /// Relative gap of ball averages to `inf f` at the largest radius.
    pub ball_average: f64,
    /// Final weighted Laplacian average as a fraction of its peak.
    pub lap_average_ratio: f64,
    /// Bisected against closed-form appendix constant.
    pub appendix_c0: f64,
    /// Residual of the affine t-graph.
    pub t_graph_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            curvature_exact: 1e-9,
            curvature_fd: 1e-6,
            ode_relative: 1e-8,
            supersolution_defect: -1e-10,
            catenoid_abs: 1e-8,
            order_ratio: 4.0,
            order_band: 0.25,
            flux_drift: 1e-9,
            identity_relative: 1e-12,
            entire_limit: 1e-6,
            mass_drift: 1e-8,
            kernel_relative: 1e-3,
            monotone: 1e-10,
            ball_average: 0.02,
            lap_average_ratio: 0.1,
            appendix_c0: 1e-8,
            t_graph_residual: 1e-10,
        }
    }
}

/// Wall-time budget in seconds of each criterion, indexed by id − 1.
pub const RUNTIME_BUDGET: [f64; 9] = [1.0, 1.0, 5.0, 10.0, 60.0, 1.0, 30.0, 2.0, 120.0];

/// Budget of the full battery.
pub const SUITE_BUDGET: f64 = 120.0;
