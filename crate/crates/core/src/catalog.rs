//! Local product database: records, coupons, per-type feature scales and
//! axis normalization.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Built-in features read from record fields rather than `specs`.
pub const PRICE: &str = "price";
pub const RATING: &str = "rating";
pub const REVIEW_COUNT: &str = "review_count";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog parse error at {path} (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("catalog validation error: {0}")]
    Validation(String),
    #[error("no scale for feature `{0}`")]
    MissingScale(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Whether larger raw values are better (`asc`) or worse (`desc`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecValue {
    pub value: f64,
    pub unit: String,
    #[serde(default)]
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductRecord {
    pub product_id: String,
    pub name: String,
    pub brand: String,
    pub product_type: String,
    pub price: f64,
    pub rating: f64,
    pub review_count: u64,
    #[serde(default)]
    pub specs: BTreeMap<String, SpecValue>,
}

impl ProductRecord {
    /// Looks up a feature by name. `price`, `rating` and `review_count` come
    /// from the record fields unless `specs` overrides them.
    pub fn feature(&self, name: &str) -> Option<SpecValue> {
        if let Some(v) = self.specs.get(name) {
            return Some(v.clone());
        }
        let (value, unit, direction) = match name {
            PRICE => (self.price, "USD", Direction::Desc),
            RATING => (self.rating, "stars", Direction::Asc),
            REVIEW_COUNT => (self.review_count as f64, "reviews", Direction::Asc),
            _ => return None,
        };
        Some(SpecValue {
            value,
            unit: unit.into(),
            direction,
        })
    }

    pub fn feature_value(&self, name: &str) -> Option<f64> {
        self.feature(name).map(|s| s.value)
    }

    fn problems(&self) -> Vec<String> {
        let id = &self.product_id;
        let mut out = Vec::new();
        if id.is_empty() {
            out.push("product with empty product_id".to_string());
        }
        if !(self.price.is_finite() && self.price >= 0.0) {
            out.push(format!("{id}: price must be >= 0, got {}", self.price));
        }
        if !(0.0..=5.0).contains(&self.rating) {
            out.push(format!("{id}: rating {} outside [0, 5]", self.rating));
        }
        for (name, spec) in &self.specs {
            if !spec.value.is_finite() {
                out.push(format!("{id}: spec `{name}` is not finite"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupon {
    pub coupon_id: String,
    pub product_id: String,
    pub description: String,
    pub discount: f64,
    pub valid_from: DateTime<Utc>,
    pub valid_until: DateTime<Utc>,
}

impl Coupon {
    /// Closed on both ends.
    pub fn is_active(&self, now: DateTime<Utc>) -> bool {
        self.valid_from <= now && now <= self.valid_until
    }
}

/// Range of one feature across every catalog product of one type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale {
    pub product_type: String,
    pub feature: String,
    pub min_value: f64,
    pub max_value: f64,
    pub direction: Direction,
}

/// One normalized radar axis value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisValue {
    pub value: f64,
    pub missing: bool,
}

impl AxisValue {
    pub const MISSING: AxisValue = AxisValue {
        value: 0.0,
        missing: true,
    };
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CatalogDocument {
    #[serde(default)]
    products: Vec<ProductRecord>,
    #[serde(default)]
    coupons: Vec<Coupon>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryResult<'a> {
    pub records: Vec<&'a ProductRecord>,
    pub missing: Vec<String>,
}

/// Immutable, validated product catalog.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    products: Vec<ProductRecord>,
    coupons: Vec<Coupon>,
    by_id: HashMap<String, usize>,
}

impl Catalog {
    pub fn from_reader(reader: impl Read) -> Result<Self, CatalogError> {
        let mut de = serde_json::Deserializer::from_reader(reader);
        let doc: CatalogDocument = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CatalogError::Parse {
                path,
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })?;
        Self::from_parts(doc.products, doc.coupons)
    }

    pub fn from_json_str(s: &str) -> Result<Self, CatalogError> {
        Self::from_reader(s.as_bytes())
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self, CatalogError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn from_parts(products: Vec<ProductRecord>, coupons: Vec<Coupon>) -> Result<Self, CatalogError> {
        let mut by_id = HashMap::with_capacity(products.len());
        for (i, p) in products.iter().enumerate() {
            if let Some(problem) = p.problems().into_iter().next() {
                return Err(CatalogError::Validation(problem));
            }
            if by_id.insert(p.product_id.clone(), i).is_some() {
                return Err(CatalogError::Validation(format!(
                    "duplicate product_id \"{}\"",
                    p.product_id
                )));
            }
        }

        // A feature must point the same way for every product of a type.
        let mut directions: HashMap<(&str, &str), Direction> = HashMap::new();
        for p in &products {
            for (name, spec) in &p.specs {
                let seen = directions
                    .entry((p.product_type.as_str(), name.as_str()))
                    .or_insert(spec.direction);
                if *seen != spec.direction {
                    return Err(CatalogError::Validation(format!(
                        "feature `{name}` has conflicting directions within type `{}`",
                        p.product_type
                    )));
                }
            }
        }

        let mut coupon_ids = HashMap::new();
        for c in &coupons {
            if coupon_ids.insert(c.coupon_id.as_str(), ()).is_some() {
                return Err(CatalogError::Validation(format!(
                    "duplicate coupon_id \"{}\"",
                    c.coupon_id
                )));
            }
            if !by_id.contains_key(&c.product_id) {
                return Err(CatalogError::Validation(format!(
                    "coupon \"{}\" references unknown product \"{}\"",
                    c.coupon_id, c.product_id
                )));
            }
            if c.valid_from > c.valid_until {
                return Err(CatalogError::Validation(format!(
                    "coupon \"{}\": valid_from is after valid_until",
                    c.coupon_id
                )));
            }
            if !(c.discount.is_finite() && c.discount >= 0.0) {
                return Err(CatalogError::Validation(format!(
                    "coupon \"{}\": discount must be >= 0",
                    c.coupon_id
                )));
            }
        }

        Ok(Self {
            products,
            coupons,
            by_id,
        })
    }

    pub fn to_json(&self) -> String {
        let doc = CatalogDocument {
            products: self.products.clone(),
            coupons: self.coupons.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("catalog serializes")
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn products(&self) -> &[ProductRecord] {
        &self.products
    }

    pub fn coupons(&self) -> &[Coupon] {
        &self.coupons
    }

    pub fn get(&self, product_id: &str) -> Option<&ProductRecord> {
        self.by_id.get(product_id).map(|&i| &self.products[i])
    }

    pub fn contains(&self, product_id: &str) -> bool {
        self.by_id.contains_key(product_id)
    }

    /// Records in input order, repeats kept; unknown ids go to `missing`.
    pub fn query<S: AsRef<str>>(&self, ids: &[S]) -> QueryResult<'_> {
        let mut out = QueryResult::default();
        for id in ids {
            match self.get(id.as_ref()) {
                Some(r) => out.records.push(r),
                None => out.missing.push(id.as_ref().to_string()),
            }
        }
        out
    }

    pub fn active_coupons<S: AsRef<str>>(&self, ids: &[S], now: DateTime<Utc>) -> Vec<&Coupon> {
        self.coupons
            .iter()
            .filter(|c| ids.iter().any(|id| id.as_ref() == c.product_id) && c.is_active(now))
            .collect()
    }

    /// Min/max of each feature over the products of `product_type` that have
    /// it. Features no such product has are left out.
    pub fn feature_scales<S: AsRef<str>>(&self, product_type: &str, features: &[S]) -> Vec<FeatureScale> {
        let of_type: Vec<&ProductRecord> = self
            .products
            .iter()
            .filter(|p| p.product_type == product_type)
            .collect();
        features
            .iter()
            .filter_map(|feature| {
                let feature = feature.as_ref();
                let mut scale: Option<FeatureScale> = None;
                for spec in of_type.iter().filter_map(|p| p.feature(feature)) {
                    let s = scale.get_or_insert_with(|| FeatureScale {
                        product_type: product_type.to_string(),
                        feature: feature.to_string(),
                        min_value: spec.value,
                        max_value: spec.value,
                        direction: spec.direction,
                    });
                    s.min_value = s.min_value.min(spec.value);
                    s.max_value = s.max_value.max(spec.value);
                }
                scale
            })
            .collect()
    }
}

/// Maps each requested feature of `record` onto `[0, 1]` using `scales`.
///
/// Degenerate scales give 0.5, `desc` features are flipped so that 1 is
/// always the desirable end, and a feature the record lacks gives 0 flagged
/// as missing.
pub fn normalize<S: AsRef<str>>(
    record: &ProductRecord,
    scales: &[FeatureScale],
    features: &[S],
) -> Result<Vec<AxisValue>, CatalogError> {
    features
        .iter()
        .map(|feature| {
            let feature = feature.as_ref();
            let scale = scales
                .iter()
                .find(|s| s.feature == feature && s.product_type == record.product_type)
                .or_else(|| scales.iter().find(|s| s.feature == feature))
                .ok_or_else(|| CatalogError::MissingScale(feature.to_string()))?;
            let Some(v) = record.feature_value(feature) else {
                return Ok(AxisValue::MISSING);
            };
            let span = scale.max_value - scale.min_value;
            let value = if span == 0.0 {
                0.5
            } else {
                let t = ((v - scale.min_value) / span).clamp(0.0, 1.0);
                match scale.direction {
                    Direction::Asc => t,
                    Direction::Desc => 1.0 - t,
                }
            };
            Ok(AxisValue { value, missing: false })
        })
        .collect()
}
