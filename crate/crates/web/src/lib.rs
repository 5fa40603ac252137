//! Browser bindings: the regularity threshold, the pressure potential with its
//! lower bounds, and a steppable free-decay run.

use plateflow::coupling::{validate_initial_data, CoupledState, InitialData, SchemeConfig, Stepper};
use plateflow::diagnostics::{dissipation_rates, energy, Dissipation};
use plateflow::fluid::{pressure_potential, pressure_potential_bounds, FluidParams};
use plateflow::plate::PlateModel;
use plateflow::regularity::threshold_s;
use plateflow::{Grid, PlateField, ScalarField, VectorField};
use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Supremum of the admissible s for (γ, d, α > 0).
#[wasm_bindgen]
pub fn threshold(gamma: f64, d: usize, alpha_positive: bool) -> Result<f64, JsError> {
    threshold_s(gamma, d, alpha_positive).map_err(js)
}

/// f(x, y) at `n` points x ∈ [0, x_max], followed by the scanned constants
/// c_near, c_far and c for the band y ∈ [0.5, 2].
#[wasm_bindgen]
pub fn potential_curve(y: f64, gamma: f64, x_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let mut out = Vec::with_capacity(n + 3);
    for i in 0..n {
        let x = x_max * i as f64 / (n.max(2) - 1) as f64;
        out.push(pressure_potential(x, y, gamma).map_err(js)?);
    }
    let b = pressure_potential_bounds(0.5, 2.0, gamma).map_err(js)?;
    out.extend([b.c_near, b.c_far, b.c]);
    Ok(out)
}

/// Free decay of w₀ = a·sin x over a fluid at rest on a periodic nx × nx/2 grid.
#[wasm_bindgen]
pub struct Simulation {
    state: CoupledState,
    params: FluidParams,
    model: PlateModel,
    config: SchemeConfig,
    grid: Grid,
    dissipated: Dissipation,
    last_rate: Dissipation,
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(nx: usize, alpha: f64, gamma: f64, amplitude: f64, dt: f64) -> Result<Simulation, JsError> {
        let grid = Grid::periodic(nx, (nx / 2).max(4), 2.0 * std::f64::consts::PI).map_err(js)?;
        let params = FluidParams::new(gamma, 1.0, 0.0).map_err(js)?;
        let model = PlateModel::new(plateflow::plate::PlateKind::Linear, alpha, None).map_err(js)?;
        let config = SchemeConfig::new(dt, dt);
        config.validate().map_err(js)?;
        let data = InitialData {
            rho0: ScalarField::constant(grid, 1.0),
            momentum0: VectorField::zeros(grid),
            w0: PlateField::from_fn(grid, |x, _| amplitude * x.sin()),
            v0: PlateField::zeros(grid),
            theta0: None,
        };
        let state = validate_initial_data(&data).map_err(js)?;
        let last_rate = dissipation_rates(&state, &params, &model).map_err(js)?;
        Ok(Simulation {
            state,
            params,
            model,
            config,
            grid,
            dissipated: Dissipation::default(),
            last_rate,
        })
    }

    /// Advances `steps` time steps.
    pub fn advance(&mut self, steps: usize) -> Result<(), JsError> {
        let mut stepper = Stepper::new(&self.grid, self.config, self.params, &self.model, None).map_err(js)?;
        for _ in 0..steps {
            let next = stepper.advance(&self.state, self.config.dt).map_err(js)?;
            let rate = dissipation_rates(&next, &self.params, &self.model).map_err(js)?;
            let h = 0.5 * (next.time - self.state.time);
            self.dissipated.viscous += h * (self.last_rate.viscous + rate.viscous);
            self.dissipated.plate += h * (self.last_rate.plate + rate.plate);
            self.last_rate = rate;
            self.state = next;
        }
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    /// Plate displacement at the nx plate nodes.
    pub fn displacement(&self) -> Vec<f64> {
        self.state.plate.w.values().to_vec()
    }

    /// kinetic, internal, plate_kinetic, bending, viscous and plate dissipation so far, total.
    pub fn energy(&self) -> Result<Vec<f64>, JsError> {
        let e = energy(&self.state, self.dissipated, &self.params, &self.model).map_err(js)?;
        Ok(e.columns().to_vec())
    }
}
