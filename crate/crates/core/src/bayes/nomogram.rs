//! Nomograms: Naive Bayes as additive log-odds points.
//!
//! For a target class against the prior-weighted rest, each feature value
//! contributes `ln P(v | target) - ln P(v | rest)` to the log odds. Display
//! points rescale contributions so the largest magnitude is 100. The
//! probability of a record is the logistic of the prior log odds plus the raw
//! contributions of its defined values, which is exactly the posterior of the
//! binarized model.

use std::fmt::Write as _;
use std::str::FromStr;

use super::NaiveBayesModel;
use crate::corpus::ObjectRecord;
use crate::error::{Error, Result};

/// Probabilities annotated on the probability axis.
pub const PROBABILITY_MARKS: [f64; 9] = [0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99];

const FULL_SCALE_POINTS: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NomogramFeature {
    pub name: String,
    /// `(value, log-odds contribution)` in vocabulary order.
    pub values: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nomogram {
    pub target: String,
    pub reference: String,
    pub prior_log_odds: f64,
    pub features: Vec<NomogramFeature>,
    /// Zero when every contribution is zero.
    pub points_per_log_odds: f64,
    /// Largest attainable total points (best value of every feature).
    pub max_points: f64,
    /// Smallest attainable total points.
    pub min_points: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NomogramScore {
    pub points: f64,
    pub probability: f64,
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn build_nomogram(model: &NaiveBayesModel, target: &str) -> Result<Nomogram> {
    let binary = model.binarize(target)?;
    let features: Vec<NomogramFeature> = binary
        .features
        .iter()
        .map(|table| NomogramFeature {
            name: table.name.clone(),
            values: table
                .vocabulary
                .iter()
                .enumerate()
                .map(|(v, name)| {
                    (
                        name.clone(),
                        table.conditional[0][v].ln() - table.conditional[1][v].ln(),
                    )
                })
                .collect(),
        })
        .collect();

    let largest = features
        .iter()
        .flat_map(|f| f.values.iter().map(|(_, c)| c.abs()))
        .fold(0.0, f64::max);
    let scale = if largest > 0.0 { FULL_SCALE_POINTS / largest } else { 0.0 };
    let (mut max_points, mut min_points) = (0.0, 0.0);
    for f in &features {
        let pts = f.values.iter().map(|(_, c)| c * scale);
        if f.values.is_empty() {
            continue;
        }
        max_points += pts.clone().fold(f64::NEG_INFINITY, f64::max);
        min_points += pts.fold(f64::INFINITY, f64::min);
    }

    Ok(Nomogram {
        target: binary.class_names[0].clone(),
        reference: binary.class_names[1].clone(),
        prior_log_odds: binary.priors[0].ln() - binary.priors[1].ln(),
        features,
        points_per_log_odds: scale,
        max_points,
        min_points,
    })
}

impl Nomogram {
    pub fn points(&self, feature: usize, value: usize) -> f64 {
        self.features[feature].values[value].1 * self.points_per_log_odds
    }

    /// Total points at which the probability axis reads `p`, or `None` when
    /// the axis is degenerate (all contributions zero).
    pub fn points_for_probability(&self, p: f64) -> Option<f64> {
        (self.points_per_log_odds > 0.0)
            .then(|| ((p / (1.0 - p)).ln() - self.prior_log_odds) * self.points_per_log_odds)
    }
}

pub fn nomogram_score(nomogram: &Nomogram, record: &ObjectRecord) -> Result<NomogramScore> {
    if record.values.len() != nomogram.features.len() {
        return Err(Error::DimensionMismatch {
            expected: nomogram.features.len(),
            found: record.values.len(),
        });
    }
    let mut log_odds = 0.0;
    for (feature, value) in nomogram.features.iter().zip(&record.values) {
        if let Some(v) = *value {
            let (_, c) = feature.values.get(v).ok_or_else(|| {
                Error::InvalidRecord(format!("value index {v} out of range for `{}`", feature.name))
            })?;
            log_odds += c;
        }
    }
    Ok(NomogramScore {
        points: log_odds * nomogram.points_per_log_odds,
        probability: logistic(nomogram.prior_log_odds + log_odds),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Text,
    Svg,
}

impl FromStr for RenderFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Self::Text),
            "svg" => Ok(Self::Svg),
            other => Err(Error::InvalidArgument(format!(
                "unknown nomogram format `{other}` (expected text or svg)"
            ))),
        }
    }
}

pub fn render_nomogram(nomogram: &Nomogram, format: RenderFormat) -> String {
    match format {
        RenderFormat::Text => render_text(nomogram),
        RenderFormat::Svg => render_svg(nomogram),
    }
}

fn percent(p: f64) -> String {
    format!("{}%", (p * 100.0).round())
}

/// Ticks sorted along the axis, ties kept in vocabulary order.
fn sorted_ticks(nomogram: &Nomogram, f: usize) -> Vec<(&str, f64)> {
    let mut ticks: Vec<(&str, f64)> = nomogram.features[f]
        .values
        .iter()
        .enumerate()
        .map(|(v, (name, _))| (name.as_str(), nomogram.points(f, v)))
        .collect();
    ticks.sort_by(|a, b| a.1.total_cmp(&b.1));
    ticks
}

fn render_text(n: &Nomogram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<24}{}", "target", n.target);
    let _ = writeln!(out, "{:<24}{}", "reference", n.reference);
    let _ = writeln!(out, "{:<24}{:+.6}", "prior_log_odds", n.prior_log_odds);
    let _ = writeln!(out, "{:<24}{:.6}", "points_per_log_odds", n.points_per_log_odds);
    let _ = writeln!(out, "{:<24}{:+.1}", "min_points", n.min_points);
    let _ = writeln!(out, "{:<24}{:+.1}", "max_points", n.max_points);
    for f in 0..n.features.len() {
        let _ = write!(out, "{:<24}", n.features[f].name);
        for (value, pts) in sorted_ticks(n, f) {
            let _ = write!(out, " {value}:{pts:+.1}");
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<24}", "probability_axis");
    for p in PROBABILITY_MARKS {
        match n.points_for_probability(p) {
            Some(pts) => {
                let _ = write!(out, " {}:{pts:+.1}", percent(p));
            }
            None => {
                let _ = write!(out, " {}:n/a", percent(p));
            }
        }
    }
    out.push('\n');
    out
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn render_svg(n: &Nomogram) -> String {
    const WIDTH: f64 = 900.0;
    const LEFT: f64 = 200.0;
    const RIGHT: f64 = 40.0;
    const ROW: f64 = 50.0;
    const TOP: f64 = 60.0;

    let axis_len = WIDTH - LEFT - RIGHT;
    let n_rows = n.features.len();
    let height = TOP + ROW * (n_rows as f64 + 2.0) + 40.0;

    // Feature rows share one point scale.
    let (mut lo, mut hi) = (-FULL_SCALE_POINTS, FULL_SCALE_POINTS);
    for f in 0..n_rows {
        for (_, p) in sorted_ticks(n, f) {
            lo = lo.min(p);
            hi = hi.max(p);
        }
    }
    let x_feat = |p: f64| LEFT + (p - lo) / (hi - lo) * axis_len;

    // The totals axis must also reach every annotated probability.
    let (mut tlo, mut thi) = (n.min_points, n.max_points);
    for p in PROBABILITY_MARKS {
        if let Some(t) = n.points_for_probability(p) {
            tlo = tlo.min(t);
            thi = thi.max(t);
        }
    }
    if thi - tlo < 1e-9 {
        tlo -= 1.0;
        thi += 1.0;
    }
    let x_total = |p: f64| LEFT + (p - tlo) / (thi - tlo) * axis_len;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-size="16">{} vs {}</text>"#,
        LEFT,
        xml_escape(&n.target),
        xml_escape(&n.reference)
    );

    for f in 0..n_rows {
        let y = TOP + ROW * f as f64;
        let ticks = sorted_ticks(n, f);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 16.0,
            y + 4.0,
            xml_escape(&n.features[f].name)
        );
        if let (Some(first), Some(last)) = (ticks.first(), ticks.last()) {
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{y:.1}" x2="{:.2}" y2="{y:.1}" stroke="black"/>"#,
                x_feat(first.1),
                x_feat(last.1)
            );
        }
        for (k, (value, pts)) in ticks.iter().enumerate() {
            let x = x_feat(*pts);
            let label_y = if k % 2 == 0 { y - 8.0 } else { y + 18.0 };
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.1}" x2="{x:.2}" y2="{:.1}" stroke="black"/>"#,
                y - 5.0,
                y + 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{label_y:.1}" text-anchor="middle" font-size="10">{}</text>"#,
                xml_escape(value)
            );
        }
    }

    let y_total = TOP + ROW * n_rows as f64;
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end">Total points</text>"#,
        LEFT - 16.0,
        y_total + 4.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{y_total:.1}" x2="{:.2}" y2="{y_total:.1}" stroke="black"/>"#,
        x_total(tlo),
        x_total(thi)
    );
    let steps = 10;
    for k in 0..=steps {
        let p = tlo + (thi - tlo) * k as f64 / steps as f64;
        let x = x_total(p);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.1}" x2="{x:.2}" y2="{:.1}" stroke="black"/>"#,
            y_total - 4.0,
            y_total + 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle" font-size="10">{p:.0}</text>"#,
            y_total - 8.0
        );
    }

    let y_prob = y_total + ROW;
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end">Probability</text>"#,
        LEFT - 16.0,
        y_prob + 4.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{y_prob:.1}" x2="{:.2}" y2="{y_prob:.1}" stroke="black"/>"#,
        x_total(tlo),
        x_total(thi)
    );
    for p in PROBABILITY_MARKS {
        let Some(t) = n.points_for_probability(p) else {
            continue;
        };
        let x = x_total(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.1}" x2="{x:.2}" y2="{:.1}" stroke="black"/>"#,
            y_prob - 4.0,
            y_prob + 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"#,
            y_prob + 18.0,
            percent(p)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::{nb_fit, nb_posterior};
    use crate::corpus::{Corpus, RawRow};

    fn three_one() -> Corpus {
        let pairs = [
            ("v", "c"), ("v", "c"), ("v", "c"), ("w", "c"),
            ("v", "d"), ("w", "d"), ("w", "d"), ("w", "d"),
        ];
        let rows = pairs.iter().enumerate().map(|(i, (v, l))| RawRow {
            id: format!("o{i}"),
            values: vec![Some(v.to_string()), Some("same".to_string())],
            label: Some(l.to_string()),
        });
        Corpus::from_rows("id", "y", vec!["f".into(), "flat".into()], rows).unwrap()
    }

    #[test]
    fn hand_example_contributions() {
        let corpus = three_one();
        let model = nb_fit(&corpus, 1.0).unwrap();
        let nom = build_nomogram(&model, "c").unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((nom.features[0].values[0].1 - ln2).abs() < 1e-12);
        assert!((nom.features[0].values[1].1 + ln2).abs() < 1e-12);
        assert!((nom.points(0, 0) - 100.0).abs() < 1e-9);
        assert!((nom.points(0, 1) + 100.0).abs() < 1e-9);
        assert_eq!(nom.features[1].values[0].1, 0.0);
        assert_eq!(nom.prior_log_odds, 0.0);

        let v = corpus.make_record("q", &[("f", "v")], None).unwrap();
        let score = nomogram_score(&nom, &v).unwrap();
        assert!((score.probability - 2.0 / 3.0).abs() < 1e-15);
        assert!((score.points - 100.0).abs() < 1e-9);
        let post = nb_posterior(&model, &v).unwrap();
        assert!((score.probability - post[0]).abs() < 1e-12);

        let empty = corpus.make_record("q", &[], None).unwrap();
        let score = nomogram_score(&nom, &empty).unwrap();
        assert!((score.probability - model.priors[0]).abs() < 1e-15);
        assert_eq!(score.points, 0.0);
    }

    #[test]
    fn unknown_target_and_format() {
        let model = nb_fit(&three_one(), 1.0).unwrap();
        assert!(matches!(build_nomogram(&model, "zz"), Err(Error::UnknownClass(_))));
        assert!("pdf".parse::<RenderFormat>().is_err());
        assert_eq!("svg".parse::<RenderFormat>().unwrap(), RenderFormat::Svg);
    }

    #[test]
    fn text_rendering_places_ticks() {
        let model = nb_fit(&three_one(), 1.0).unwrap();
        let nom = build_nomogram(&model, "c").unwrap();
        let text = render_nomogram(&nom, RenderFormat::Text);
        let f_line = text.lines().find(|l| l.starts_with("f ")).unwrap();
        assert!(f_line.contains("v:+100.0") && f_line.contains("w:-100.0"), "{f_line}");
        let flat = text.lines().find(|l| l.starts_with("flat ")).unwrap();
        assert!(flat.contains("same:+0.0"), "{flat}");
        let axis = text.lines().find(|l| l.starts_with("probability_axis")).unwrap();
        for mark in ["1%:", "5%:", "10%:", "25%:", "50%:", "75%:", "90%:", "95%:", "99%:"] {
            assert!(axis.contains(mark));
        }
        assert_eq!(text, render_nomogram(&nom, RenderFormat::Text));
    }

    #[test]
    fn all_zero_contributions() {
        let rows = (0..4).map(|i| RawRow {
            id: format!("o{i}"),
            values: vec![Some("x".into())],
            label: Some(if i % 2 == 0 { "a" } else { "b" }.into()),
        });
        let corpus = Corpus::from_rows("id", "y", vec!["f".into()], rows).unwrap();
        let nom = build_nomogram(&nb_fit(&corpus, 1.0).unwrap(), "a").unwrap();
        assert_eq!(nom.points_per_log_odds, 0.0);
        let text = render_nomogram(&nom, RenderFormat::Text);
        assert!(text.contains("x:+0.0"));
        assert!(text.contains("50%:n/a"));
        let svg = render_nomogram(&nom, RenderFormat::Svg);
        assert!(svg.ends_with("</svg>\n"));
    }
}
