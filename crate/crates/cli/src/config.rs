//! Run configuration: JSON schema, defaults, range checks and hashing.

use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use carnot_core::algebra::{abelian, BracketSpec, StratifiedAlgebra};
use carnot_core::coarse::AlphaParams;
use carnot_core::decompose::{CertifyMode, DecomposeParams, LRule};
use carnot_core::discrete::parse_qsqrt2;
use carnot_core::presets::parse_preset;
use carnot_core::scalar::QSqrt2;
use num_rational::BigRational;
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// A structure constant or matrix entry in `Q(√2)`. Accepts JSON integers,
/// floats (taken at their exact binary value) and strings such as `"1/2"`,
/// `"sqrt2"` or `"1-3/2*sqrt2"`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coeff(pub QSqrt2);

impl Serialize for Coeff {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Coeff {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Coeff;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string like \"1/2\" or \"sqrt2\"")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Coeff, E> {
                Ok(Coeff(QSqrt2::rational(BigRational::from_integer(v.into()))))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Coeff, E> {
                Ok(Coeff(QSqrt2::rational(BigRational::from_integer(v.into()))))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Coeff, E> {
                BigRational::from_float(v)
                    .map(|r| Coeff(QSqrt2::rational(r)))
                    .ok_or_else(|| E::custom(format!("{v} is not finite")))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Coeff, E> {
                parse_qsqrt2(v).map(Coeff).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    #[serde(rename = "rational")]
    Rational,
    #[serde(rename = "rational-adjoin-sqrt2", alias = "sqrt2")]
    RationalSqrt2,
    /// Coefficients are read as floats and used at their exact binary value.
    #[serde(rename = "float")]
    Float,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub step: usize,
    pub layer_dims: Vec<usize>,
    /// `[a, b, coeffs]`: `[e_a, e_b] = Σ coeffs_k e_k`.
    pub brackets: Vec<(usize, usize, Vec<Coeff>)>,
    #[serde(default = "default_field")]
    pub field: Field,
}

fn default_field() -> Field {
    Field::Rational
}

/// A preset name or an explicit structure-constant table.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupSource {
    Preset(String),
    Spec(GroupSpec),
}

impl Serialize for GroupSource {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GroupSource::Preset(name) => s.serialize_str(name),
            GroupSource::Spec(spec) => spec.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for GroupSource {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = GroupSource;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a preset name or a group spec object")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<GroupSource, E> {
                Ok(GroupSource::Preset(v.to_string()))
            }
            fn visit_map<A: MapAccess<'de>>(self, map: A) -> std::result::Result<GroupSource, A::Error> {
                GroupSpec::deserialize(de::value::MapAccessDeserializer::new(map)).map(GroupSource::Spec)
            }
        }
        d.deserialize_any(V)
    }
}

impl GroupSource {
    pub fn build(&self) -> Result<StratifiedAlgebra<QSqrt2>> {
        match self {
            GroupSource::Preset(name) => Ok(parse_preset(name)?),
            GroupSource::Spec(spec) => {
                if spec.step != spec.layer_dims.len() {
                    bail!("step is {} but layer_dims has {} entries", spec.step, spec.layer_dims.len());
                }
                if spec.field == Field::Rational {
                    if let Some((a, b, _)) = spec.brackets.iter().find(|(_, _, c)| c.iter().any(|x| !x.0.is_rational())) {
                        bail!("bracket [{a}, {b}] has an irrational coefficient but field is \"rational\"");
                    }
                }
                let brackets: Vec<BracketSpec<QSqrt2>> = spec
                    .brackets
                    .iter()
                    .map(|(a, b, c)| BracketSpec {
                        a: *a,
                        b: *b,
                        coeffs: c.iter().map(|x| x.0.clone()).collect(),
                    })
                    .collect();
                Ok(StratifiedAlgebra::new(spec.layer_dims.clone(), &brackets)?)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            GroupSource::Preset(name) => name.clone(),
            GroupSource::Spec(s) => format!("spec{:?}", s.layer_dims),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum MapSpec {
    Identity,
    Constant,
    /// Absolute value of first-layer coordinate `axis`, into the abelian
    /// group on the first layer.
    Fold {
        #[serde(default)]
        axis: usize,
    },
    /// First-layer matrix (codomain rows × domain columns), extended to a
    /// homomorphism and rescaled to be 1-Lipschitz.
    Hom { matrix: Vec<Vec<Coeff>> },
    /// Like `hom`; defaults to the projection onto the first coordinate of
    /// the line `abelian:1`.
    Collapse {
        #[serde(default)]
        matrix: Option<Vec<Vec<Coeff>>>,
    },
}

impl Default for MapSpec {
    fn default() -> Self {
        MapSpec::Identity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    /// Drives `b`, α, and sampled certification.
    pub pipeline: u64,
    pub triangle: u64,
    pub lipschitz: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            pipeline: 0,
            triangle: 1,
            lipschitz: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Certify {
    Auto,
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LRuleName {
    Separation,
    Strict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Mode {
    pub certify: Certify,
    pub l_rule: LRuleName,
    /// Run on every cube of this scale instead of the root.
    pub union_scale: Option<i32>,
}

impl Default for Mode {
    fn default() -> Self {
        Mode {
            certify: Certify::Auto,
            l_rule: LRuleName::Separation,
            union_scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlphaSampling {
    pub directions: usize,
    pub translates: usize,
    pub segment_nodes: usize,
    pub scan_nodes: usize,
    pub slab_factor: f64,
}

impl Default for AlphaSampling {
    fn default() -> Self {
        let a = AlphaParams::default();
        AlphaSampling {
            directions: a.directions,
            translates: a.translates,
            segment_nodes: a.segment_nodes,
            scan_nodes: a.scan_nodes,
            slab_factor: a.slab_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Limits {
    /// Largest lattice the builder will attempt.
    pub budget: u64,
    pub triangle_samples: usize,
    pub lipschitz_pairs: usize,
    pub b_pairs: usize,
    pub content_levels: usize,
    /// Pieces with at most this many pairs are certified exhaustively in
    /// `auto` mode.
    pub pair_cap: u64,
    pub sample_pairs: usize,
}

impl Default for Limits {
    fn default() -> Self {
        let d = DecomposeParams::default();
        Limits {
            budget: carnot_core::lattice::DEFAULT_BUDGET,
            triangle_samples: 20_000,
            lipschitz_pairs: 20_000,
            b_pairs: d.b_pairs,
            content_levels: d.content_levels,
            pair_cap: d.pair_cap,
            sample_pairs: d.sample_pairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub domain: GroupSource,
    /// Defaults depend on the map: the domain for `identity`, `hom` and
    /// `constant`, the first-layer abelian group for `fold`, `abelian:1`
    /// for `collapse`.
    pub codomain: Option<GroupSource>,
    /// Layer weights of the domain norm; all ones when absent.
    pub lambdas: Option<Vec<f64>>,
    pub codomain_lambdas: Option<Vec<f64>>,
    pub map: MapSpec,
    #[serde(rename = "R")]
    pub r: f64,
    pub h: f64,
    pub delta: f64,
    pub p: f64,
    pub tau: f64,
    pub c1: f64,
    pub alpha_threshold: f64,
    #[serde(rename = "L_scale")]
    pub l_scale: f64,
    /// `null` picks the smallest cap with `|R2| < δ|S|`.
    #[serde(rename = "L_mult")]
    pub l_mult: Option<usize>,
    /// Net radii `ε·R` for `net-cover`.
    pub net_eps: Vec<f64>,
    pub seeds: Seeds,
    pub mode: Mode,
    pub alpha: AlphaSampling,
    pub limits: Limits,
    /// Output directory; not part of the hash.
    #[serde(skip_serializing)]
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let d = DecomposeParams::default();
        RunConfig {
            domain: GroupSource::Preset("heisenberg".into()),
            codomain: None,
            lambdas: None,
            codomain_lambdas: None,
            map: MapSpec::Identity,
            r: 1.0,
            h: 0.125,
            delta: d.delta,
            p: d.alpha.p,
            tau: 4.0,
            c1: d.c1,
            alpha_threshold: d.alpha_threshold,
            l_scale: d.alpha.l_scale,
            l_mult: d.l_mult,
            net_eps: vec![0.25, 0.125, 0.0625],
            seeds: Seeds::default(),
            mode: Mode::default(),
            alpha: AlphaSampling::default(),
            limits: Limits::default(),
            output: None,
        }
    }
}

fn range(field: &str, ok: bool, want: &str, got: impl fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(anyhow!("{field}: must be {want}, got {got}"))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        range("R", self.r.is_finite() && self.r > 0.0, "positive", self.r)?;
        range("h", self.h.is_finite() && self.h > 0.0 && self.h < self.r, "in (0, R)", self.h)?;
        range("delta", self.delta > 0.0 && self.delta < 1.0, "in (0, 1)", self.delta)?;
        range("p", self.p.is_finite() && self.p >= 1.0, "at least 1", self.p)?;
        range("tau", self.tau.is_finite() && self.tau > 1.0, "greater than 1", self.tau)?;
        range("c1", self.c1.is_finite() && self.c1 > 0.0, "positive", self.c1)?;
        range("alpha_threshold", self.alpha_threshold.is_finite() && self.alpha_threshold > 0.0, "positive", self.alpha_threshold)?;
        range("L_scale", self.l_scale.is_finite() && self.l_scale >= 1.0, "at least 1", self.l_scale)?;
        if let Some(l) = self.l_mult {
            range("L_mult", l >= 1, "at least 1", l)?;
        }
        for (i, e) in self.net_eps.iter().enumerate() {
            range(&format!("net_eps[{i}]"), *e > 0.0 && *e <= 1.0, "in (0, 1]", e)?;
        }
        for (name, ls) in [("lambdas", &self.lambdas), ("codomain_lambdas", &self.codomain_lambdas)] {
            for (i, l) in ls.iter().flatten().enumerate() {
                range(&format!("{name}[{i}]"), l.is_finite() && *l > 0.0, "positive", l)?;
            }
        }
        let a = &self.alpha;
        range("alpha.directions", a.directions > 0, "positive", a.directions)?;
        range("alpha.translates", a.translates > 0, "positive", a.translates)?;
        range("alpha.segment_nodes", a.segment_nodes >= 2, "at least 2", a.segment_nodes)?;
        range("alpha.scan_nodes", a.scan_nodes >= 3, "at least 3", a.scan_nodes)?;
        range("alpha.slab_factor", a.slab_factor > 0.0, "positive", a.slab_factor)?;
        let l = &self.limits;
        range("limits.triangle_samples", l.triangle_samples > 0, "positive", l.triangle_samples)?;
        range("limits.lipschitz_pairs", l.lipschitz_pairs > 0, "positive", l.lipschitz_pairs)?;
        range("limits.b_pairs", l.b_pairs > 0, "positive", l.b_pairs)?;
        self.domain.build().context("domain")?;
        if let Some(c) = &self.codomain {
            c.build().context("codomain")?;
        }
        Ok(())
    }

    pub fn alpha_params(&self) -> AlphaParams {
        AlphaParams {
            p: self.p,
            l_scale: self.l_scale,
            directions: self.alpha.directions,
            translates: self.alpha.translates,
            segment_nodes: self.alpha.segment_nodes,
            scan_nodes: self.alpha.scan_nodes,
            slab_factor: self.alpha.slab_factor,
        }
    }

    pub fn decompose_params(&self) -> DecomposeParams {
        DecomposeParams {
            delta: self.delta,
            c1: self.c1,
            alpha_threshold: self.alpha_threshold,
            l_mult: self.l_mult,
            l_rule: match self.mode.l_rule {
                LRuleName::Separation => LRule::Separation,
                LRuleName::Strict => LRule::Strict,
            },
            alpha: self.alpha_params(),
            seed: self.seeds.pipeline,
            b_pairs: self.limits.b_pairs,
            content_levels: self.limits.content_levels,
            certify: match self.mode.certify {
                Certify::Auto => CertifyMode::Auto,
                Certify::Exhaustive => CertifyMode::Exhaustive,
                Certify::Sampled => CertifyMode::Sampled,
            },
            pair_cap: self.limits.pair_cap,
            sample_pairs: self.limits.sample_pairs,
            union_scale: self.mode.union_scale,
        }
    }

    /// Canonical JSON of the populated config (fixed field order, no output
    /// path).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`RunConfig::canonical_json`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// The codomain algebra implied by the map when none is given.
    pub fn codomain_source(&self, domain: &StratifiedAlgebra<QSqrt2>) -> Result<Option<GroupSource>> {
        Ok(match (&self.codomain, &self.map) {
            (Some(c), _) => Some(c.clone()),
            (None, MapSpec::Collapse { .. }) => Some(GroupSource::Preset("abelian:1".into())),
            (None, MapSpec::Fold { .. }) => {
                abelian::<QSqrt2>(domain.layer_dims()[0])?;
                Some(GroupSource::Preset(format!("abelian:{}", domain.layer_dims()[0])))
            }
            (None, _) => None,
        })
    }
}

/// Applies `key.path=value` overrides to a JSON object. Values are parsed as
/// JSON when possible and taken as strings otherwise.
pub fn apply_overrides(root: &mut Value, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (key, raw) = o.split_once('=').ok_or_else(|| anyhow!("override '{o}' is not of the form key=value"))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut node = &mut *root;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| anyhow!("override '{key}': '{}' is not an object", parts[..i].join(".")))?;
            if i + 1 == parts.len() {
                obj.insert(part.to_string(), value.clone());
                break;
            }
            node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
        }
    }
    Ok(())
}

/// Parses and validates a config from JSON text plus overrides.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut root: Value = serde_json::from_str(text).context("config is not valid JSON")?;
    if !root.is_object() {
        bail!("config must be a JSON object");
    }
    apply_overrides(&mut root, overrides)?;
    let cfg: RunConfig = serde_path_to_error::deserialize(root).map_err(|e| {
        let path = e.path().to_string();
        anyhow!("{path}: {}", e.into_inner())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Loads a config file, or the defaults when `path` is `None`.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => "{}".to_string(),
    };
    parse_config(&text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("{}", &[]).unwrap();
        assert_eq!(cfg, RunConfig::default());
        let echoed: Value = serde_json::from_str(&cfg.canonical_json()).unwrap();
        assert_eq!(echoed["delta"], 0.05);
        assert_eq!(echoed["L_mult"], Value::Null);
        assert_eq!(echoed["seeds"]["pipeline"], 0);
    }

    #[test]
    fn negative_delta_names_the_field() {
        let err = parse_config(r#"{"delta": -0.1}"#, &[]).unwrap_err().to_string();
        assert!(err.starts_with("delta:"), "{err}");
    }

    #[test]
    fn type_errors_carry_the_path() {
        let err = parse_config(r#"{"seeds": {"pipeline": "x"}}"#, &[]).unwrap_err().to_string();
        assert!(err.starts_with("seeds.pipeline:"), "{err}");
        let err = parse_config(r#"{"mode": {"certify": "maybe"}}"#, &[]).unwrap_err().to_string();
        assert!(err.starts_with("mode.certify:"), "{err}");
    }

    #[test]
    fn unknown_preset_lists_presets() {
        let err = format!("{:#}", parse_config(r#"{"domain": "nope"}"#, &[]).unwrap_err());
        assert!(err.contains("heisenberg") && err.contains("abelian:n"), "{err}");
    }

    #[test]
    fn group_spec_round_trips() {
        let text = r#"{"domain": {"step": 2, "layer_dims": [2, 1], "brackets": [[0, 1, [0, 0, "1/2"]]], "field": "rational"}}"#;
        let cfg = parse_config(text, &[]).unwrap();
        let again = parse_config(&cfg.canonical_json(), &[]).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.domain.build().unwrap().dim(), 3);
    }

    #[test]
    fn irrational_coefficients_need_the_quadratic_field() {
        let text = r#"{"domain": {"step": 2, "layer_dims": [2, 1], "brackets": [[0, 1, [0, 0, "sqrt2"]]]}}"#;
        assert!(parse_config(text, &[]).is_err());
        let text = text.replace("]]]}", "]]], \"field\": \"rational-adjoin-sqrt2\"}");
        assert!(parse_config(&text, &[]).is_ok());
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = parse_config("{}", &["seeds.pipeline=7".into(), "map={\"name\":\"fold\"}".into(), "h=0.25".into()]).unwrap();
        assert_eq!(cfg.seeds.pipeline, 7);
        assert_eq!(cfg.map, MapSpec::Fold { axis: 0 });
        assert_eq!(cfg.h, 0.25);
    }

    #[test]
    fn hash_tracks_content_not_output() {
        let a = parse_config(r#"{"output": "x"}"#, &[]).unwrap();
        let b = parse_config(r#"{"output": "y"}"#, &[]).unwrap();
        let c = parse_config(r#"{"delta": 0.1}"#, &[]).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
