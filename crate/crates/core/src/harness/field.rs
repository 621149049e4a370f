use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::derivkit::eval_bundle;
use crate::error::{Error, Result};
use crate::games::GameDefinition;
use crate::learners::{joint_step, modified_losses, LearnerConfig, Rule};

/// Uniform `nx × ny` grid over `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        Self {
            x: [lo, hi],
            y: [lo, hi],
            nx: n,
            ny: n,
        }
    }

    fn coord(range: [f64; 2], n: usize, k: usize) -> f64 {
        if n == 1 {
            0.5 * (range[0] + range[1])
        } else {
            range[0] + (range[1] - range[0]) * k as f64 / (n - 1) as f64
        }
    }
}

/// One grid point; `update` is `None` where the rule failed (a hole).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub theta: [f64; 2],
    pub update: Option<[f64; 2]>,
}

impl FieldSample {
    /// Unit-length update direction; zero stays zero.
    pub fn direction(&self) -> Option<[f64; 2]> {
        self.update.map(|[dx, dy]| {
            let n = dx.hypot(dy);
            if n > 0.0 {
                [dx / n, dy / n]
            } else {
                [0.0, 0.0]
            }
        })
    }
}

/// The one-step update Δθ of `rule` (preferences at `cfg.c_init`) at every
/// point of the grid, row by row in θ2 then θ1.
pub fn emit_vector_field(game: &GameDefinition, rule: Rule, cfg: &LearnerConfig, grid: &GridSpec) -> Result<Vec<FieldSample>> {
    if game.dims() != (1, 1) {
        return Err(Error::Config(format!(
            "vector fields need scalar parameters; {} has dims {:?}",
            game.name,
            game.dims()
        )));
    }
    if grid.nx == 0 || grid.ny == 0 {
        return Err(Error::Config("grid must have at least one point per axis".into()));
    }
    cfg.validate()?;
    let mut out = Vec::with_capacity(grid.nx * grid.ny);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let theta = [GridSpec::coord(grid.x, grid.nx, i), GridSpec::coord(grid.y, grid.ny, j)];
            let update = sample(game, rule, cfg, theta).ok().filter(|u| u.iter().all(|v| v.is_finite()));
            out.push(FieldSample { theta, update });
        }
    }
    Ok(out)
}

fn sample(game: &GameDefinition, rule: Rule, cfg: &LearnerConfig, theta: [f64; 2]) -> Result<[f64; 2]> {
    let raw = eval_bundle(game, &[theta[0]], &[theta[1]])?;
    let view = if rule.uses_preferences() {
        modified_losses(&raw, cfg.c_init[0], cfg.c_init[1])
    } else {
        raw
    };
    let (d, _) = joint_step(rule, &view, cfg)?;
    Ok([d[0], d[1]])
}

/// CSV with columns `theta1,theta2,dx,dy,ux,uy,hole`; holes leave the
/// update columns empty.
pub fn write_field_csv<W: Write>(out: W, samples: &[FieldSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta1", "theta2", "dx", "dy", "ux", "uy", "hole"])?;
    for s in samples {
        let mut row = vec![s.theta[0].to_string(), s.theta[1].to_string()];
        match (s.update, s.direction()) {
            (Some(u), Some(n)) => {
                row.extend([u[0], u[1], n[0], n[1]].iter().map(|v| v.to_string()));
                row.push("false".into());
            }
            _ => {
                row.extend(std::iter::repeat_n(String::new(), 4));
                row.push("true".into());
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{ipd, tandem};

    #[test]
    fn naive_tandem_at_one_one() {
        let grid = GridSpec::square(-2.0, 2.0, 5);
        let field = emit_vector_field(&tandem(), Rule::Naive, &LearnerConfig::default(), &grid).unwrap();
        assert_eq!(field.len(), 25);
        let s = field.iter().find(|s| s.theta == [1.0, 1.0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let d = s.direction().unwrap();
        assert!((d[0] + h).abs() < 1e-12 && (d[1] + h).abs() < 1e-12);
    }

    #[test]
    fn single_point_grid() {
        let field = emit_vector_field(&tandem(), Rule::Sos, &LearnerConfig::default(), &GridSpec::square(0.0, 1.0, 1)).unwrap();
        assert_eq!(field.len(), 1);
        assert_eq!(field[0].theta, [0.5, 0.5]);
    }

    #[test]
    fn sos_vanishes_on_fixed_point_line() {
        for k in 0..9 {
            let x = -2.0 + 0.5 * k as f64;
            let g = GridSpec {
                x: [x, x],
                y: [1.0 - x, 1.0 - x],
                nx: 1,
                ny: 1,
            };
            let s = emit_vector_field(&tandem(), Rule::Sos, &LearnerConfig::default(), &g).unwrap()[0];
            let u = s.update.unwrap();
            assert!(u[0].abs() < 1e-9 && u[1].abs() < 1e-9, "{s:?}");
        }
    }

    #[test]
    fn singular_cgd_points_are_holes() {
        // M is singular on Tandem when α = 1/2
        let cfg = LearnerConfig {
            alpha: 0.5,
            ..LearnerConfig::default()
        };
        let field = emit_vector_field(&tandem(), Rule::Cgd, &cfg, &GridSpec::square(-1.0, 1.0, 3)).unwrap();
        assert!(field.iter().all(|s| s.update.is_none()));
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &field).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",,,,true"));
    }

    #[test]
    fn multi_parameter_games_rejected() {
        assert!(emit_vector_field(&ipd(), Rule::Naive, &LearnerConfig::default(), &GridSpec::square(0.0, 1.0, 2)).is_err());
    }
}
