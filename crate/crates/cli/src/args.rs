use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "stationary", version, about = "Evaluate, generate and verify alpha-stationary surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Residual of H = alpha <N, p> / |p|^2 over a parameter grid.
    Verify {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value = "64x64", value_parser = parse_grid)]
        grid: (usize, usize),
        /// Report file: `.csv` writes the sample rows, anything else JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weighted area by Gauss-Legendre / trapezoid quadrature.
    Energy {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value = "64x64", value_parser = parse_grid)]
        grid: (usize, usize),
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coefficients A0..A4 of a ruled surface along its directrix.
    Coeffs {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 33)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Harmonics of the weighted defect along the v-circles of a patch.
    Fourier {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 4)]
        n_max: usize,
        #[arg(long, default_value_t = 64)]
        nv: usize,
        #[arg(long, default_value_t = 9)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a family (integrating ODEs where needed) and save it as a
    /// self-contained spec.
    Generate {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, default_value = "generated.json")]
        out: PathBuf,
        /// Solution table of an integrated family.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        export: Option<PathBuf>,
        #[arg(long, default_value = "64x64", value_parser = parse_grid)]
        grid: (usize, usize),
    },
    /// Spec of the image under p -> p / |p|^2.
    Invert {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Also check the image at the transported exponent.
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long, default_value = "64x64", value_parser = parse_grid)]
        grid: (usize, usize),
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Residuals of a surface and of its inversion.
    VerifyShift {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value = "64x64", value_parser = parse_grid)]
        grid: (usize, usize),
        #[arg(long, value_enum, default_value_t = Direction::Forward)]
        direction: Direction,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gradient descent of the discrete weighted area on a closed mesh.
    Flow {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Start from an OBJ mesh instead of sampling a family.
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value = "32x64", value_parser = parse_grid)]
        grid: (usize, usize),
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Rule::Backtracking)]
        rule: Rule,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        #[arg(long, default_value_t = 10.0)]
        dt_max: f64,
        /// Relative radial noise added before the run.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Energy trace CSV (step, energy, grad_max, dt).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Triangulate a family and write it as OBJ.
    Export {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, default_value = "32x64", value_parser = parse_grid)]
        grid: (usize, usize),
        #[arg(long, alias = "out")]
        export: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Rule {
    Fixed,
    Backtracking,
}

/// Either a JSON spec file or a family name with parameter flags.
#[derive(Debug, Default, Args)]
pub struct SurfaceArgs {
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, conflicts_with = "family")]
    pub spec: Option<PathBuf>,
    /// Wrap the surface in the inversion.
    #[arg(long)]
    pub inverted: bool,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub center: Option<[f64; 3]>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub normal: Option<[f64; 3]>,
    #[arg(long, allow_hyphen_values = true)]
    pub offset: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub pitch: Option<f64>,
    #[arg(long)]
    pub waist: Option<f64>,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub axis_offset: Option<[f64; 3]>,
    #[arg(long)]
    pub major: Option<f64>,
    #[arg(long)]
    pub minor: Option<f64>,
    /// Curvature of the centre curve, e.g. `1/u`.
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    /// First parameter range `a:b`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub u: Option<[f64; 2]>,
    /// Second parameter range `a:b`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub t: Option<[f64; 2]>,
    #[arg(long, allow_hyphen_values = true)]
    pub a0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub da0: Option<f64>,
    #[arg(long)]
    pub r0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub dr0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c_drift: Option<f64>,
    #[arg(long)]
    pub span: Option<f64>,
    /// Exponent of the Euler directrix of a cylinder.
    #[arg(long, allow_hyphen_values = true)]
    pub curve_alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub heading: Option<f64>,
    #[arg(long)]
    pub length: Option<f64>,
}

pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got '{s}'"))?;
    let n = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("bad grid size '{x}'"));
    let (nu, nv) = (n(a)?, n(b)?);
    if nu < 2 || nv < 2 {
        return Err(format!("grid must be at least 2x2, got {nu}x{nv}"));
    }
    Ok((nu, nv))
}

pub fn parse_range(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got '{s}'"))?;
    let x = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}'"));
    Ok([x(a)?, x(b)?])
}

pub fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}'")))
        .collect::<Result<_, _>>()?;
    xs.try_into().map_err(|_| format!("expected x,y,z, got '{s}'"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_parsers() {
        assert_eq!(parse_grid("64x32"), Ok((64, 32)));
        assert!(parse_grid("64").is_err());
        assert!(parse_grid("1x8").is_err());
        assert_eq!(parse_range("1:2.5"), Ok([1.0, 2.5]));
        assert_eq!(parse_range("-1:1"), Ok([-1.0, 1.0]));
        assert_eq!(parse_vec3("0,0,-1"), Ok([0.0, 0.0, -1.0]));
        assert!(parse_vec3("0,1").is_err());
    }
}
