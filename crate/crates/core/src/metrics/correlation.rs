use std::collections::BTreeMap;

use crate::corpus::{EntityId, PropertyValue};
use crate::error::{Error, Result};

/// Two-dimensional count table over integer property values. Bin `(i, j)`
/// covers `x in [i*x_width, (i+1)*x_width)` and likewise for y.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinnedTable {
    pub x_width: i64,
    pub y_width: i64,
    pub cells: BTreeMap<(i64, i64), u64>,
}

impl BinnedTable {
    pub fn total(&self) -> u64 {
        self.cells.values().sum()
    }

    pub fn x_marginal(&self) -> BTreeMap<i64, u64> {
        let mut m = BTreeMap::new();
        for ((x, _), c) in &self.cells {
            *m.entry(*x).or_default() += c;
        }
        m
    }

    pub fn y_marginal(&self) -> BTreeMap<i64, u64> {
        let mut m = BTreeMap::new();
        for ((_, y), c) in &self.cells {
            *m.entry(*y).or_default() += c;
        }
        m
    }

    /// CSV rows `x_lo,x_hi,y_lo,y_hi,count` for nonzero bins.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_lo,x_hi,y_lo,y_hi,count\n");
        for ((x, y), c) in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                x * self.x_width,
                (x + 1) * self.x_width,
                y * self.y_width,
                (y + 1) * self.y_width,
                c
            ));
        }
        out
    }
}

/// Bins methods that have integer values for both properties.
pub fn property_correlation_report(
    xs: &BTreeMap<EntityId, PropertyValue>,
    ys: &BTreeMap<EntityId, PropertyValue>,
    x_width: i64,
    y_width: i64,
) -> Result<BinnedTable> {
    if x_width < 1 || y_width < 1 {
        return Err(Error::InvalidArgument("bin widths must be positive".into()));
    }
    let mut cells = BTreeMap::new();
    for (id, xv) in xs {
        let (Some(x), Some(y)) = (xv.as_int(), ys.get(id).and_then(PropertyValue::as_int)) else {
            continue;
        };
        *cells
            .entry((x.div_euclid(x_width), y.div_euclid(y_width)))
            .or_default() += 1;
    }
    Ok(BinnedTable {
        x_width,
        y_width,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assign_id, EntityKind};

    fn id(n: u32) -> EntityId {
        assign_id(EntityKind::Method, &format!("m{n}")).unwrap()
    }

    #[test]
    fn single_method_single_bin() {
        let xs = BTreeMap::from([(id(1), PropertyValue::Integer(7))]);
        let ys = BTreeMap::from([(id(1), PropertyValue::Integer(2))]);
        let t = property_correlation_report(&xs, &ys, 5, 1).unwrap();
        assert_eq!(t.cells, BTreeMap::from([((1, 2), 1)]));
        assert!(t.to_csv().ends_with("5,10,2,3,1\n"));
    }

    #[test]
    fn empty_intersection() {
        let xs = BTreeMap::from([(id(1), PropertyValue::Integer(7))]);
        let ys = BTreeMap::from([(id(2), PropertyValue::Integer(2))]);
        assert_eq!(property_correlation_report(&xs, &ys, 1, 1).unwrap().total(), 0);
    }
}
