//! INI-style experiment configuration: parsing with line-numbered errors,
//! validation of the ladder/mesh invariants, and a canonical echo format
//! for reproducible reruns.

use crate::error::{Error, Result};
use crate::fem::Nonlinearity;
use crate::geometry::{Curve, Profile, StripRegion};
use crate::quad::ScalarField;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Boundary curve preset.
#[derive(Clone, Debug, PartialEq)]
pub enum CurvePreset {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
}

impl CurvePreset {
    pub fn build(&self) -> Result<Curve> {
        match self {
            CurvePreset::Circle { radius } => Curve::circle(*radius),
            CurvePreset::Ellipse { a, b } => Curve::ellipse(*a, *b),
        }
    }
}

/// Concentrated potential V as a function of boundary arclength.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialPreset {
    Zero,
    Constant { value: f64 },
    /// amp · (1 + sin s): sign determined by amp.
    Sin { amp: f64 },
}

impl PotentialPreset {
    pub fn build(&self) -> ScalarField {
        match self {
            PotentialPreset::Zero => ScalarField::constant(0.0),
            PotentialPreset::Constant { value } => ScalarField::constant(*value),
            PotentialPreset::Sin { amp } => {
                let a = *amp;
                ScalarField::of_arclength(move |s| a * (1.0 + s.sin()))
            }
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match self {
            PotentialPreset::Zero => true,
            PotentialPreset::Constant { value } => *value >= 0.0,
            PotentialPreset::Sin { amp } => *amp >= 0.0,
        }
    }
}

/// λ either fixed or calibrated at run time by the bistable-window bisection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaSpec {
    Fixed(f64),
    Auto,
}

/// Everything a study needs; one section per concern in the INI file.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub curve: CurvePreset,
    pub profile: Profile,
    pub potential: PotentialPreset,
    pub reaction: Nonlinearity,
    pub lambda: LambdaSpec,
    /// λ for the bistable scenario; `Auto` calibrates from the limit
    /// problem's instability window at run time.
    pub scenario_lambda: LambdaSpec,
    /// Main ε ladder (concentration, coercivity, operators, semigroups).
    pub epsilons: Vec<f64>,
    /// Mesh for the main ladder.
    pub h_interior: f64,
    pub h_boundary: f64,
    /// ε ladder for the bistable scenario (equilibria, attractors,
    /// manifolds), which needs smaller ε to sit inside the persistence range.
    pub scenario_epsilons: Vec<f64>,
    pub scenario_h_interior: f64,
    pub scenario_h_boundary: f64,
    /// Time stepping.
    pub dt: f64,
    pub t_end: f64,
    pub t_transient: f64,
    pub t_sample: f64,
    pub attractor_dt: f64,
    pub t_grow: f64,
    /// Tolerances.
    pub newton_tol: f64,
    pub gap_tol: f64,
    pub delta: f64,
    pub manifold_delta: f64,
    /// Attractor sampling grid: modes, coefficient range, h1 scale, dedup.
    pub grid_modes: usize,
    pub grid_range: i32,
    pub grid_scale: f64,
    pub dedup_tol: f64,
    /// Run plumbing.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            curve: CurvePreset::Circle { radius: 1.0 },
            profile: Profile::TwoPlusCos,
            potential: PotentialPreset::Sin { amp: 0.3 },
            reaction: Nonlinearity::CutoffCubic,
            lambda: LambdaSpec::Fixed(1.0),
            scenario_lambda: LambdaSpec::Auto,
            epsilons: vec![0.2, 0.1, 0.05, 0.025],
            h_interior: 0.1,
            h_boundary: 0.00625,
            scenario_epsilons: vec![0.05, 0.0125, 0.00625],
            scenario_h_interior: 0.1,
            scenario_h_boundary: 0.0015625,
            dt: 1e-3,
            t_end: 2.0,
            t_transient: 24.0,
            t_sample: 6.0,
            attractor_dt: 0.05,
            t_grow: 40.0,
            newton_tol: 1e-9,
            gap_tol: 1e-3,
            delta: 1.0,
            manifold_delta: 0.1,
            grid_modes: 4,
            grid_range: 2,
            grid_scale: 5.0,
            dedup_tol: 1e-3,
            seed: 42,
            out_dir: PathBuf::from("out"),
            threads: None,
        }
    }
}

fn parse_val<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::ConfigParse {
        line,
        msg: format!("cannot parse value {raw:?} for key {key}"),
    })
}

fn parse_list(line: usize, key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|tok| parse_val::<f64>(line, key, tok.trim()))
        .collect()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        let cfg = Self::parse(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse INI text: `[section]` headers, `key = value` entries, comments
    /// with `#` or `;`. Unknown sections or keys are rejected with their
    /// line number.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        // Presets needing parameters gathered after the section pass.
        let mut pending: BTreeMap<(String, String), (usize, String)> = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw_line.find(['#', ';']) {
                Some(p) => &raw_line[..p],
                None => raw_line,
            };
            let trimmed = stripped.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(name) = trimmed.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(Error::ConfigParse {
                    line,
                    msg: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                const SECTIONS: [&str; 9] = [
                    "curve", "profile", "potential", "reaction", "problem", "mesh",
                    "time", "tolerances", "run",
                ];
                if !SECTIONS.contains(&section.as_str()) {
                    return Err(Error::ConfigParse {
                        line,
                        msg: format!("unknown section [{section}]"),
                    });
                }
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or(Error::ConfigParse {
                line,
                msg: format!("expected key = value, got {trimmed:?}"),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if section.is_empty() {
                return Err(Error::ConfigParse {
                    line,
                    msg: format!("key {key} appears before any [section]"),
                });
            }
            if pending.insert((section.clone(), key.clone()), (line, value)).is_some() {
                return Err(Error::ConfigParse {
                    line,
                    msg: format!("duplicate key {key} in section [{section}]"),
                });
            }
        }

        let mut take = |sec: &str, key: &str| pending.remove(&(sec.into(), key.into()));

        if let Some((line, v)) = take("curve", "preset") {
            cfg.curve = match v.as_str() {
                "circle" => CurvePreset::Circle { radius: 1.0 },
                "ellipse" => CurvePreset::Ellipse { a: 1.3, b: 0.8 },
                other => {
                    return Err(Error::ConfigParse {
                        line,
                        msg: format!("unknown curve preset {other:?}"),
                    })
                }
            };
        }
        if let Some((line, v)) = take("curve", "radius") {
            match &mut cfg.curve {
                CurvePreset::Circle { radius } => *radius = parse_val(line, "radius", &v)?,
                _ => {
                    return Err(Error::ConfigParse {
                        line,
                        msg: "radius only applies to the circle preset".into(),
                    })
                }
            }
        }
        if let Some((line, v)) = take("curve", "a") {
            match &mut cfg.curve {
                CurvePreset::Ellipse { a, .. } => *a = parse_val(line, "a", &v)?,
                _ => {
                    return Err(Error::ConfigParse {
                        line,
                        msg: "a only applies to the ellipse preset".into(),
                    })
                }
            }
        }
        if let Some((line, v)) = take("curve", "b") {
            match &mut cfg.curve {
                CurvePreset::Ellipse { b, .. } => *b = parse_val(line, "b", &v)?,
                _ => {
                    return Err(Error::ConfigParse {
                        line,
                        msg: "b only applies to the ellipse preset".into(),
                    })
                }
            }
        }

        let profile_param = take("profile", "value").or_else(|| take("profile", "amp"));
        if let Some((line, v)) = take("profile", "preset") {
            cfg.profile = match v.as_str() {
                "constant" => Profile::Constant {
                    value: match &profile_param {
                        Some((l, raw)) => parse_val(*l, "value", raw)?,
                        None => 1.0,
                    },
                },
                "two-plus-cos" => Profile::TwoPlusCos,
                "sin-shifted-cos" => Profile::SinShiftedCos {
                    amp: match &profile_param {
                        Some((l, raw)) => parse_val(*l, "amp", raw)?,
                        None => 0.3,
                    },
                },
                other => {
                    return Err(Error::ConfigParse {
                        line,
                        msg: format!("unknown profile preset {other:?}"),
                    })
                }
            };
        } else if let Some((line, _)) = profile_param {
            return Err(Error::ConfigParse {
                line,
                msg: "profile parameter given without a preset".into(),
            });
        }

        let pot_param = take("potential", "value").or_else(|| take("potential", "amp"));
        if let Some((line, v)) = take("potential", "preset") {
            cfg.potential = match v.as_str() {
                "zero" => PotentialPreset::Zero,
                "constant" => PotentialPreset::Constant {
                    value: match &pot_param {
                        Some((l, raw)) => parse_val(*l, "value", raw)?,
                        None => 1.0,
                    },
                },
                "sin" => PotentialPreset::Sin {
                    amp: match &pot_param {
                        Some((l, raw)) => parse_val(*l, "amp", raw)?,
                        None => 0.3,
                    },
                },
                other => {
                    return Err(Error::ConfigParse {
                        line,
                        msg: format!("unknown potential preset {other:?}"),
                    })
                }
            };
        } else if let Some((line, _)) = pot_param {
            return Err(Error::ConfigParse {
                line,
                msg: "potential parameter given without a preset".into(),
            });
        }

        let reaction_param = take("reaction", "value");
        if let Some((line, v)) = take("reaction", "preset") {
            cfg.reaction = match v.as_str() {
                "zero" => Nonlinearity::Zero,
                "constant" => Nonlinearity::Constant(match &reaction_param {
                    Some((l, raw)) => parse_val(*l, "value", raw)?,
                    None => 1.0,
                }),
                "cutoff-cubic" => Nonlinearity::CutoffCubic,
                other => {
                    return Err(Error::ConfigParse {
                        line,
                        msg: format!("unknown reaction preset {other:?}"),
                    })
                }
            };
        } else if let Some((line, _)) = reaction_param {
            return Err(Error::ConfigParse {
                line,
                msg: "reaction parameter given without a preset".into(),
            });
        }

        if let Some((line, v)) = take("problem", "lambda") {
            cfg.lambda = if v == "auto" {
                LambdaSpec::Auto
            } else {
                LambdaSpec::Fixed(parse_val(line, "lambda", &v)?)
            };
        }
        if let Some((line, v)) = take("problem", "scenario_lambda") {
            cfg.scenario_lambda = if v == "auto" {
                LambdaSpec::Auto
            } else {
                LambdaSpec::Fixed(parse_val(line, "scenario_lambda", &v)?)
            };
        }
        if let Some((line, v)) = take("problem", "epsilons") {
            cfg.epsilons = parse_list(line, "epsilons", &v)?;
        }
        if let Some((line, v)) = take("problem", "scenario_epsilons") {
            cfg.scenario_epsilons = parse_list(line, "scenario_epsilons", &v)?;
        }

        macro_rules! scalar_keys {
            ($sec:literal, $($key:literal => $field:ident),+ $(,)?) => {
                $(if let Some((line, v)) = take($sec, $key) {
                    cfg.$field = parse_val(line, $key, &v)?;
                })+
            };
        }
        scalar_keys!("mesh",
            "h_interior" => h_interior,
            "h_boundary" => h_boundary,
            "scenario_h_interior" => scenario_h_interior,
            "scenario_h_boundary" => scenario_h_boundary,
        );
        scalar_keys!("time",
            "dt" => dt,
            "t_end" => t_end,
            "t_transient" => t_transient,
            "t_sample" => t_sample,
            "attractor_dt" => attractor_dt,
            "t_grow" => t_grow,
        );
        scalar_keys!("tolerances",
            "newton_tol" => newton_tol,
            "gap_tol" => gap_tol,
            "delta" => delta,
            "manifold_delta" => manifold_delta,
            "grid_scale" => grid_scale,
            "dedup_tol" => dedup_tol,
            "grid_modes" => grid_modes,
            "grid_range" => grid_range,
        );

        if let Some((line, v)) = take("run", "seed") {
            cfg.seed = parse_val(line, "seed", &v)?;
        }
        if let Some((_, v)) = take("run", "out_dir") {
            cfg.out_dir = PathBuf::from(v);
        }
        if let Some((line, v)) = take("run", "threads") {
            cfg.threads = Some(parse_val(line, "threads", &v)?);
        }

        if let Some(((section, key), (line, _))) = pending.into_iter().next() {
            return Err(Error::ConfigParse {
                line,
                msg: format!("unknown key {key} in section [{section}]"),
            });
        }
        Ok(cfg)
    }

    /// Enforce the structural invariants with field-specific messages.
    pub fn validate(&self) -> Result<()> {
        for (name, ladder, h_b) in [
            ("epsilons", &self.epsilons, self.h_boundary),
            ("scenario_epsilons", &self.scenario_epsilons, self.scenario_h_boundary),
        ] {
            if ladder.is_empty() {
                return Err(Error::Config(format!("{name}: epsilon ladder is empty")));
            }
            if ladder.iter().any(|&e| !(e > 0.0)) {
                return Err(Error::Config(format!("{name}: epsilons must be positive")));
            }
            for w in ladder.windows(2) {
                if w[1] >= w[0] {
                    return Err(Error::Config(format!("{name}: epsilon ladder must descend")));
                }
            }
            let e_min = *ladder.last().unwrap();
            if h_b > e_min / 4.0 {
                return Err(Error::Config(format!(
                    "mesh cannot resolve the thinnest strip of {name}: \
                     h_boundary {h_b} exceeds epsilon_min/4 = {}",
                    e_min / 4.0
                )));
            }
            // Largest ε must stay below the injectivity bound of the strip.
            let curve = self.curve.build()?;
            StripRegion::new(curve, self.profile.clone(), ladder[0])?;
        }
        for (name, v) in [
            ("h_interior", self.h_interior),
            ("h_boundary", self.h_boundary),
            ("scenario_h_interior", self.scenario_h_interior),
            ("scenario_h_boundary", self.scenario_h_boundary),
            ("dt", self.dt),
            ("t_end", self.t_end),
            ("t_transient", self.t_transient),
            ("t_sample", self.t_sample),
            ("attractor_dt", self.attractor_dt),
            ("t_grow", self.t_grow),
            ("newton_tol", self.newton_tol),
            ("gap_tol", self.gap_tol),
            ("delta", self.delta),
            ("manifold_delta", self.manifold_delta),
            ("grid_scale", self.grid_scale),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, spec) in [("lambda", self.lambda), ("scenario_lambda", self.scenario_lambda)] {
            if let LambdaSpec::Fixed(l) = spec {
                if !(l > 0.0) {
                    return Err(Error::Config(format!("{name} must be positive, got {l}")));
                }
            }
        }
        if self.dedup_tol < 0.0 {
            return Err(Error::Config("dedup_tol must be nonnegative".into()));
        }
        if self.grid_modes == 0 || self.grid_range <= 0 {
            return Err(Error::Config("grid_modes and grid_range must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical INI echo: parsing it back reproduces this config.
    pub fn to_ini_string(&self) -> String {
        let mut s = String::new();
        use std::fmt::Write;
        let _ = writeln!(s, "[curve]");
        match &self.curve {
            CurvePreset::Circle { radius } => {
                let _ = writeln!(s, "preset = circle\nradius = {radius}");
            }
            CurvePreset::Ellipse { a, b } => {
                let _ = writeln!(s, "preset = ellipse\na = {a}\nb = {b}");
            }
        }
        let _ = writeln!(s, "\n[profile]");
        match &self.profile {
            Profile::Constant { value } => {
                let _ = writeln!(s, "preset = constant\nvalue = {value}");
            }
            Profile::TwoPlusCos => {
                let _ = writeln!(s, "preset = two-plus-cos");
            }
            Profile::SinShiftedCos { amp } => {
                let _ = writeln!(s, "preset = sin-shifted-cos\namp = {amp}");
            }
        }
        let _ = writeln!(s, "\n[potential]");
        match &self.potential {
            PotentialPreset::Zero => {
                let _ = writeln!(s, "preset = zero");
            }
            PotentialPreset::Constant { value } => {
                let _ = writeln!(s, "preset = constant\nvalue = {value}");
            }
            PotentialPreset::Sin { amp } => {
                let _ = writeln!(s, "preset = sin\namp = {amp}");
            }
        }
        let _ = writeln!(s, "\n[reaction]");
        match &self.reaction {
            Nonlinearity::Zero => {
                let _ = writeln!(s, "preset = zero");
            }
            Nonlinearity::Constant(c) => {
                let _ = writeln!(s, "preset = constant\nvalue = {c}");
            }
            Nonlinearity::CutoffCubic => {
                let _ = writeln!(s, "preset = cutoff-cubic");
            }
        }
        let join = |v: &[f64]| {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        };
        let _ = writeln!(s, "\n[problem]");
        for (key, spec) in [("lambda", self.lambda), ("scenario_lambda", self.scenario_lambda)] {
            match spec {
                LambdaSpec::Fixed(l) => {
                    let _ = writeln!(s, "{key} = {l}");
                }
                LambdaSpec::Auto => {
                    let _ = writeln!(s, "{key} = auto");
                }
            }
        }
        let _ = writeln!(s, "epsilons = {}", join(&self.epsilons));
        let _ = writeln!(s, "scenario_epsilons = {}", join(&self.scenario_epsilons));
        let _ = writeln!(
            s,
            "\n[mesh]\nh_interior = {}\nh_boundary = {}\nscenario_h_interior = {}\n\
             scenario_h_boundary = {}",
            self.h_interior, self.h_boundary, self.scenario_h_interior, self.scenario_h_boundary
        );
        let _ = writeln!(
            s,
            "\n[time]\ndt = {}\nt_end = {}\nt_transient = {}\nt_sample = {}\n\
             attractor_dt = {}\nt_grow = {}",
            self.dt, self.t_end, self.t_transient, self.t_sample, self.attractor_dt, self.t_grow
        );
        let _ = writeln!(
            s,
            "\n[tolerances]\nnewton_tol = {}\ngap_tol = {}\ndelta = {}\nmanifold_delta = {}\n\
             grid_modes = {}\ngrid_range = {}\ngrid_scale = {}\ndedup_tol = {}",
            self.newton_tol,
            self.gap_tol,
            self.delta,
            self.manifold_delta,
            self.grid_modes,
            self.grid_range,
            self.grid_scale,
            self.dedup_tol
        );
        let _ = writeln!(s, "\n[run]\nseed = {}", self.seed);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        if let Some(t) = self.threads {
            let _ = writeln!(s, "threads = {t}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_ini() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let echoed = cfg.to_ini_string();
        let back = ExperimentConfig::parse(&echoed).unwrap();
        assert_eq!(back.epsilons, cfg.epsilons);
        assert_eq!(back.scenario_epsilons, cfg.scenario_epsilons);
        assert_eq!(back.potential, cfg.potential);
        assert_eq!(back.lambda, cfg.lambda);
        assert_eq!(back.seed, cfg.seed);
        assert_eq!(back.h_boundary, cfg.h_boundary);
        assert_eq!(back.to_ini_string(), echoed, "echo is canonical");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "[problem]\nepsilons = 0.1, 0.2\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("must descend"), "{err}");

        let bad = "[problem]\nlambda = twelve\n";
        match ExperimentConfig::parse(bad) {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }

        let unknown = "[problem]\nwavelength = 3\n";
        match ExperimentConfig::parse(unknown) {
            Err(Error::ConfigParse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("wavelength"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        let orphan = "epsilons = 0.1\n";
        assert!(matches!(
            ExperimentConfig::parse(orphan),
            Err(Error::ConfigParse { line: 1, .. })
        ));

        let dup = "[run]\nseed = 1\nseed = 2\n";
        assert!(matches!(
            ExperimentConfig::parse(dup),
            Err(Error::ConfigParse { line: 3, .. })
        ));

        let badsec = "[warp]\nspeed = 9\n";
        assert!(matches!(
            ExperimentConfig::parse(badsec),
            Err(Error::ConfigParse { line: 1, .. })
        ));
    }

    #[test]
    fn strip_resolution_is_enforced() {
        let mut cfg = ExperimentConfig::default();
        cfg.h_boundary = cfg.epsilons.last().unwrap() / 2.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("resolve the thinnest strip"), "{err}");

        let mut cfg = ExperimentConfig::default();
        cfg.epsilons = vec![0.9]; // beyond the injectivity bound of the unit circle strip
        cfg.h_boundary = 0.2;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn comments_and_spacing_are_tolerated() {
        let text = "\n; leading comment\n[run]  \nseed = 7  # trailing\n\n[mesh]\n\
                    h_boundary = 0.00625\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.h_boundary, 0.00625);
    }
}
