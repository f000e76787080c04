//! Synthetic stand-in for the clinical cohort: 13 independent columns plus
//! the `Medications` target, labelled by a planted decision list.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Xorshift64Star;
use crate::tabular::{Column, ColumnKind, ColumnRole, ColumnSchema, Table};

pub const DEFAULT_ROWS: usize = 9483;
pub const DEFAULT_NOISE_RATE: f64 = 0.05;

pub const NAME: &str = "Name of patient";
pub const AGE: &str = "Age";
pub const SEX: &str = "Sex";
pub const FASTING: &str = "Fasting";
pub const TWO_HOUR: &str = "2 Hours after Glucose Load";
pub const BMI: &str = "BMI";
pub const DURATION: &str = "Duration";
pub const BLOOD_PRESSURE: &str = "Blood Pressure";
pub const CHOLESTEROL: &str = "High Cholesterols";
pub const HEART: &str = "Heart Diseases";
pub const KIDNEY: &str = "Kidney Diseases";
pub const CREATININE: &str = "Plasma Creatinine";
pub const VISION: &str = "Blurred Vision";
pub const MEDICATIONS: &str = "Medications";

/// Fraction of cells left empty in each of the two columns with gaps.
pub const MISSING_RATE: f64 = 0.02;

/// The four treatment classes, in planted-rule priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Medication {
    Diet,
    Secretagogues,
    Biguanides,
    Insulin,
}

impl Medication {
    pub const ALL: [Medication; 4] = [
        Medication::Diet,
        Medication::Secretagogues,
        Medication::Biguanides,
        Medication::Insulin,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Medication::Diet => "Diet and Lifestyle Modification",
            Medication::Secretagogues => "Secretagogues",
            Medication::Biguanides => "Biguanides",
            Medication::Insulin => "Insulin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSettings {
    pub n_rows: usize,
    pub noise_rate: f64,
    pub seed: u64,
}

impl Default for GeneratorSettings {
    fn default() -> Self {
        Self {
            n_rows: DEFAULT_ROWS,
            noise_rate: DEFAULT_NOISE_RATE,
            seed: 0,
        }
    }
}

impl GeneratorSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(Error::Config("generator n_rows must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return Err(Error::Config(format!(
                "generator noise_rate must lie in [0, 1), got {}",
                self.noise_rate
            )));
        }
        Ok(())
    }
}

/// The seven rule inputs of one patient, after rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleInputs {
    pub fasting: f64,
    pub two_hour: f64,
    pub bmi: f64,
    pub duration: f64,
    pub cholesterol: bool,
    pub heart: bool,
    pub kidney: bool,
}

/// The planted decision list, first match wins:
///
/// 1. kidney disease, fasting ≥ 200 or 2-hour ≥ 300 → Insulin
/// 2. fasting < 126 → Diet and Lifestyle Modification
/// 3. heart disease or duration ≥ 10 → Secretagogues
/// 4. BMI ≥ 30 or high cholesterol → Biguanides
/// 5. otherwise → Secretagogues
pub fn planted_medication(p: &RuleInputs) -> Medication {
    if p.kidney || p.fasting >= 200.0 || p.two_hour >= 300.0 {
        Medication::Insulin
    } else if p.fasting < 126.0 {
        Medication::Diet
    } else if p.heart || p.duration >= 10.0 {
        Medication::Secretagogues
    } else if p.bmi >= 30.0 || p.cholesterol {
        Medication::Biguanides
    } else {
        Medication::Secretagogues
    }
}

/// Schema of the generated table; `Name of patient` is an identifier.
pub fn cohort_schema() -> Vec<ColumnSchema> {
    use ColumnKind::{Categorical as C, Numeric as N};
    use ColumnRole::{Feature as F, Identifier, Target};
    vec![
        ColumnSchema::new(NAME, C, Identifier),
        ColumnSchema::new(FASTING, N, F),
        ColumnSchema::new(TWO_HOUR, N, F),
        ColumnSchema::new(BMI, N, F),
        ColumnSchema::new(DURATION, N, F),
        ColumnSchema::new(AGE, N, F),
        ColumnSchema::new(SEX, C, F),
        ColumnSchema::new(BLOOD_PRESSURE, N, F),
        ColumnSchema::new(CHOLESTEROL, C, F),
        ColumnSchema::new(HEART, C, F),
        ColumnSchema::new(KIDNEY, C, F),
        ColumnSchema::new(CREATININE, N, F),
        ColumnSchema::new(VISION, C, F),
        ColumnSchema::new(MEDICATIONS, C, Target),
    ]
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (x * s).round() / s
}

fn clipped_normal(rng: &mut Xorshift64Star, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    (mean + sd * rng.normal()).clamp(lo, hi)
}

/// `(weight, mean, sd)` per component; weights sum to 1.
type Mixture = [(f64, f64, f64)];

const FASTING_MIX: &Mixture = &[(0.35, 100.0, 8.0), (0.40, 162.0, 11.0), (0.25, 228.0, 9.0)];
const BMI_MIX: &Mixture = &[(0.60, 24.5, 2.0), (0.40, 35.0, 2.2)];
const DURATION_MIX: &Mixture = &[(0.55, 3.5, 1.8), (0.45, 17.0, 3.0)];

/// Picks a component with one uniform draw, then draws from it.
fn clipped_mixture(rng: &mut Xorshift64Star, mix: &Mixture, lo: f64, hi: f64) -> f64 {
    let u = rng.next_f64();
    let mut acc = 0.0;
    let mut chosen = mix[mix.len() - 1];
    for &c in mix {
        acc += c.0;
        if u < acc {
            chosen = c;
            break;
        }
    }
    clipped_normal(rng, chosen.1, chosen.2, lo, hi)
}

fn yes_no(b: bool) -> String {
    if b { "Yes" } else { "No" }.to_string()
}

/// Marginals (all draws from one generator seeded with `settings.seed`, row
/// by row in column order). Fasting, BMI and duration are mixtures of
/// clinical subgroups, each a clipped normal picked by its weight:
///
/// | column | draw |
/// |---|---|
/// | Fasting | 0.35 N(100, 8²), 0.40 N(162, 11²), 0.25 N(228, 9²); clipped to [70, 250], 1 decimal |
/// | 2 Hours after Glucose Load | 1.3 · fasting + N(0, 45²) clipped to [90, 400], 1 decimal |
/// | BMI | 0.60 N(24.5, 2²), 0.40 N(35, 2.2²); clipped to [15, 45], 1 decimal |
/// | Duration (years) | 0.55 N(3.5, 1.8²), 0.45 N(17, 3²); clipped to [0.5, 25], 1 decimal |
/// | Age | U(30, 75), whole years |
/// | Sex | Female / Male, 1/2 each |
/// | Blood Pressure | N(130, 15²) clipped to [90, 200], whole mmHg |
/// | High Cholesterols / Heart / Kidney | Yes with probability 0.35 / 0.20 / 0.15 |
/// | Plasma Creatinine | N(1.1, 0.3²) clipped to [0.4, 3.0], 2 decimals |
/// | Blurred Vision | Yes with probability 0.25 |
///
/// Blood Pressure and Plasma Creatinine are then blanked with probability
/// [`MISSING_RATE`] each. The label is the planted rule applied to the
/// rounded values; with probability `noise_rate` it is replaced by one of the
/// other three classes chosen uniformly.
pub fn generate_cohort(settings: &GeneratorSettings) -> Result<Table> {
    settings.validate()?;
    let n = settings.n_rows;
    let mut rng = Xorshift64Star::new(settings.seed);
    let mut names = Vec::with_capacity(n);
    let mut fasting = Vec::with_capacity(n);
    let mut two_hour = Vec::with_capacity(n);
    let mut bmi = Vec::with_capacity(n);
    let mut duration = Vec::with_capacity(n);
    let mut age = Vec::with_capacity(n);
    let mut sex = Vec::with_capacity(n);
    let mut bp = Vec::with_capacity(n);
    let mut chol = Vec::with_capacity(n);
    let mut heart = Vec::with_capacity(n);
    let mut kidney = Vec::with_capacity(n);
    let mut creat = Vec::with_capacity(n);
    let mut vision = Vec::with_capacity(n);
    let mut meds = Vec::with_capacity(n);
    for i in 0..n {
        let f = round_to(clipped_mixture(&mut rng, FASTING_MIX, 70.0, 250.0), 1);
        let g = round_to((1.3 * f + 45.0 * rng.normal()).clamp(90.0, 400.0), 1);
        let b = round_to(clipped_mixture(&mut rng, BMI_MIX, 15.0, 45.0), 1);
        let d = round_to(clipped_mixture(&mut rng, DURATION_MIX, 0.5, 25.0), 1);
        let a = rng.uniform(30.0, 75.0).floor();
        let s = if rng.bernoulli(0.5) { "Female" } else { "Male" };
        let p = clipped_normal(&mut rng, 130.0, 15.0, 90.0, 200.0).round();
        let c = rng.bernoulli(0.35);
        let h = rng.bernoulli(0.20);
        let k = rng.bernoulli(0.15);
        let cr = round_to(clipped_normal(&mut rng, 1.1, 0.3, 0.4, 3.0), 2);
        let v = rng.bernoulli(0.25);
        let bp_missing = rng.bernoulli(MISSING_RATE);
        let cr_missing = rng.bernoulli(MISSING_RATE);

        let planted = planted_medication(&RuleInputs {
            fasting: f,
            two_hour: g,
            bmi: b,
            duration: d,
            cholesterol: c,
            heart: h,
            kidney: k,
        });
        let label = if rng.bernoulli(settings.noise_rate) {
            let others: Vec<Medication> = Medication::ALL
                .into_iter()
                .filter(|&m| m != planted)
                .collect();
            others[rng.below(others.len())]
        } else {
            planted
        };

        names.push(Some(format!("Patient {:05}", i + 1)));
        fasting.push(Some(f));
        two_hour.push(Some(g));
        bmi.push(Some(b));
        duration.push(Some(d));
        age.push(Some(a));
        sex.push(Some(s.to_string()));
        bp.push((!bp_missing).then_some(p));
        chol.push(Some(yes_no(c)));
        heart.push(Some(yes_no(h)));
        kidney.push(Some(yes_no(k)));
        creat.push((!cr_missing).then_some(cr));
        vision.push(Some(yes_no(v)));
        meds.push(Some(label.label().to_string()));
    }
    let columns = vec![
        Column::Categorical(names),
        Column::Numeric(fasting),
        Column::Numeric(two_hour),
        Column::Numeric(bmi),
        Column::Numeric(duration),
        Column::Numeric(age),
        Column::Categorical(sex),
        Column::Numeric(bp),
        Column::Categorical(chol),
        Column::Categorical(heart),
        Column::Categorical(kidney),
        Column::Numeric(creat),
        Column::Categorical(vision),
        Column::Categorical(meds),
    ];
    Ok(Table::new(cohort_schema(), columns)?)
}

/// Rule inputs of row `i` of a generated (or same-schema) table.
pub fn rule_inputs(table: &Table, i: usize) -> Result<RuleInputs> {
    let num = |name: &str| -> Result<f64> {
        table.numeric_values(name)?[i]
            .ok_or_else(|| Error::Config(format!("row {i}: '{name}' is missing")))
    };
    let flag = |name: &str| -> Result<bool> {
        Ok(table.categorical_values(name)?[i].as_deref() == Some("Yes"))
    };
    Ok(RuleInputs {
        fasting: num(FASTING)?,
        two_hour: num(TWO_HOUR)?,
        bmi: num(BMI)?,
        duration: num(DURATION)?,
        cholesterol: flag(CHOLESTEROL)?,
        heart: flag(HEART)?,
        kidney: flag(KIDNEY)?,
    })
}
