//! Shared input flags: where the graph comes from and how a landscape is
//! turned into rates.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use firemap::graph::format::parse_graph;
use firemap::graph::{build_dynamics, grid16_fixture, DynamicsMatrix, SpreadGraph};
use firemap::landscape::{demo_landscape, load_grid, to_graph, RateParams, WindField};
use firemap::surveillance::min_discount;

use crate::manifest::Manifest;

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct Source {
    /// Built-in 16-node example graph.
    #[arg(long)]
    pub grid16: bool,
    /// Built-in 25x40 demo landscape.
    #[arg(long)]
    pub demo: bool,
    /// Landscape grid file.
    #[arg(long, value_name = "FILE")]
    pub grid: Option<PathBuf>,
    /// Graph interchange file.
    #[arg(long, value_name = "FILE")]
    pub graph: Option<PathBuf>,
}

/// Unset flags take the library defaults.
#[derive(Debug, Args)]
pub struct LandscapeArgs {
    /// Baseline spreading rate [default: 0.5].
    #[arg(long)]
    pub beta0: Option<f64>,
    /// Recovery rate of every cell [default: 0.2].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Rate multiplier for diagonal neighbors [default: 0.785].
    #[arg(long)]
    pub diag_factor: Option<f64>,
    /// Cost weight of non-city cells [default: 0.01].
    #[arg(long)]
    pub landscape_cost: Option<f64>,
    /// Wind speed in m/s [default: 0].
    #[arg(long)]
    pub wind_speed: Option<f64>,
    /// Compass direction the wind comes from, degrees (0 = north, 90 = east)
    /// [default: 0].
    #[arg(long)]
    pub wind_from: Option<f64>,
    /// Wind model constant c1 [default: 0.045].
    #[arg(long)]
    pub wind_c1: Option<f64>,
    /// Wind model constant c2 [default: 0.131].
    #[arg(long)]
    pub wind_c2: Option<f64>,
}

impl LandscapeArgs {
    fn any(&self) -> bool {
        [
            self.beta0,
            self.delta,
            self.diag_factor,
            self.landscape_cost,
            self.wind_speed,
            self.wind_from,
            self.wind_c1,
            self.wind_c2,
        ]
        .iter()
        .any(Option::is_some)
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub landscape: LandscapeArgs,
}

pub struct Loaded {
    pub graph: SpreadGraph,
    pub a: DynamicsMatrix,
}

impl InputArgs {
    fn is_landscape(&self) -> bool {
        self.source.demo || self.source.grid.is_some()
    }

    pub fn load(&self, manifest: &mut Manifest) -> Result<Loaded> {
        let l = &self.landscape;
        if l.any() && !self.is_landscape() {
            bail!("landscape and wind flags apply only to --demo or --grid inputs");
        }

        let graph = if self.source.grid16 {
            manifest.set("input", "grid16");
            grid16_fixture()
        } else if let Some(path) = &self.source.graph {
            manifest.set("input", format!("graph:{}", path.display()));
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_graph(&text).with_context(|| format!("parsing {}", path.display()))?
        } else {
            let grid = match &self.source.grid {
                Some(path) => {
                    manifest.set("input", format!("grid:{}", path.display()));
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    load_grid(&text).with_context(|| format!("parsing {}", path.display()))?
                }
                None => {
                    manifest.set("input", "demo");
                    demo_landscape()
                }
            };
            let base = RateParams::default();
            let params = RateParams {
                beta0: l.beta0.unwrap_or(base.beta0),
                delta: l.delta.unwrap_or(base.delta),
                diag_factor: l.diag_factor.unwrap_or(base.diag_factor),
                ..base
            }
            .with_landscape_cost(l.landscape_cost.unwrap_or(base.cost.grassland));
            let speed = l.wind_speed.unwrap_or(0.0);
            let from = l.wind_from.unwrap_or(0.0);
            if !(speed.is_finite() && speed >= 0.0) || !from.is_finite() {
                bail!("wind speed must be >= 0 and direction finite");
            }
            let wind = WindField {
                c1: l.wind_c1.unwrap_or(WindField::DEFAULT_C1),
                c2: l.wind_c2.unwrap_or(WindField::DEFAULT_C2),
                ..WindField::from_degrees(speed, from)
            };
            params.validate().map_err(anyhow::Error::msg)?;
            manifest.set("beta0", params.beta0);
            manifest.set("delta", params.delta);
            manifest.set("diag_factor", params.diag_factor);
            manifest.set("landscape_cost", params.cost.grassland);
            manifest.set("wind_speed", wind.speed);
            manifest.set("wind_from", from);
            manifest.set("wind_c1", wind.c1);
            manifest.set("wind_c2", wind.c2);
            to_graph(&grid, &params, (wind.speed > 0.0).then_some(&wind))?
        };
        let a = build_dynamics(&graph)?;
        manifest.set("nodes", graph.n());
        Ok(Loaded { graph, a })
    }
}

#[derive(Debug, Args)]
#[group(id = "rate", required = true, multiple = false)]
pub struct RateArgs {
    /// Discount rate.
    #[arg(long)]
    pub r: Option<f64>,
    /// Use the smallest admissible rate plus this margin.
    #[arg(long, value_name = "MARGIN")]
    pub auto_r: Option<f64>,
}

impl RateArgs {
    pub fn resolve(&self, a: &DynamicsMatrix, manifest: &mut Manifest) -> Result<f64> {
        let r = match (self.r, self.auto_r) {
            (Some(r), _) => r,
            (None, Some(margin)) => {
                if !(margin.is_finite() && margin > 0.0) {
                    bail!("--auto-r margin must be > 0");
                }
                let s = min_discount(a)?;
                manifest.set("abscissa", s);
                manifest.set("auto_r_margin", margin);
                s + margin
            }
            (None, None) => unreachable!("clap enforces one of --r and --auto-r"),
        };
        if !r.is_finite() {
            bail!("discount rate must be finite");
        }
        manifest.set("r", r);
        Ok(r)
    }
}
