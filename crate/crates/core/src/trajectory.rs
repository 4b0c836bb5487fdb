use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{common_dim, Point};

/// A sampled path of a dynamical system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    id: String,
    states: Vec<Point>,
    dt: f64,
    class_label: Option<String>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>, states: Vec<Point>, dt: f64) -> Result<Self> {
        common_dim(&states)?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("sampling interval must be positive, got {dt}")));
        }
        Ok(Trajectory {
            id: id.into(),
            states,
            dt,
            class_label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.class_label = Some(label.into());
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn states(&self) -> &[Point] {
        &self.states
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn class_label(&self) -> Option<&str> {
        self.class_label.as_deref()
    }

    pub fn set_class_label(&mut self, label: Option<String>) {
        self.class_label = label;
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(move |k| k as f64 * self.dt)
    }

    /// Same trajectory with every state multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Trajectory {
        Trajectory {
            states: self.states.iter().map(|p| p.scaled(factor)).collect(),
            ..self.clone()
        }
    }

    pub(crate) fn replace_states(&self, states: Vec<Point>) -> Result<Trajectory> {
        common_dim(&states)?;
        Ok(Trajectory {
            states,
            ..self.clone()
        })
    }
}

/// States at `start, start + stride, ...`, `count` of them.
pub fn thin(traj: &Trajectory, stride: usize, start: usize, count: usize) -> Result<Vec<Point>> {
    if stride == 0 {
        return Err(Error::invalid("thinning stride must be positive"));
    }
    if count == 0 {
        return Err(Error::invalid("thinning count must be positive"));
    }
    let len = traj.len();
    let last = start.checked_add((count - 1).saturating_mul(stride));
    match last {
        Some(last) if last < len => Ok((0..count).map(|i| traj.states[start + i * stride].clone()).collect()),
        _ => Err(Error::ThinningOutOfRange {
            len,
            start,
            stride,
            max_count: if start < len { (len - 1 - start) / stride + 1 } else { 0 },
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Trajectory {
        let states = (0..n).map(|k| Point::scalar(k as f64).unwrap()).collect();
        Trajectory::new("ramp", states, 0.5).unwrap()
    }

    #[test]
    fn thin_indices() {
        let t = ramp(100);
        let v: Vec<f64> = thin(&t, 10, 0, 5).unwrap().iter().map(|p| p.coords()[0]).collect();
        assert_eq!(v, vec![0.0, 10.0, 20.0, 30.0, 40.0]);
        let v: Vec<f64> = thin(&t, 1, 7, 3).unwrap().iter().map(|p| p.coords()[0]).collect();
        assert_eq!(v, vec![7.0, 8.0, 9.0]);
    }

    #[test]
    fn thin_out_of_range_reports_capacity() {
        let t = ramp(100);
        match thin(&t, 10, 5, 11) {
            Err(Error::ThinningOutOfRange { max_count, .. }) => assert_eq!(max_count, 10),
            other => panic!("unexpected {other:?}"),
        }
        assert!(thin(&t, 10, 5, 10).is_ok());
        assert!(matches!(
            thin(&t, 1, 200, 1),
            Err(Error::ThinningOutOfRange { max_count: 0, .. })
        ));
    }

    #[test]
    fn constructor_invariants() {
        assert!(Trajectory::new("e", vec![], 1.0).is_err());
        let p = vec![Point::scalar(1.0).unwrap()];
        assert!(Trajectory::new("z", p.clone(), 0.0).is_err());
        let mixed = vec![Point::scalar(1.0).unwrap(), Point::new(vec![1.0, 2.0]).unwrap()];
        assert!(Trajectory::new("m", mixed, 1.0).is_err());
        let t = Trajectory::new("a", p, 0.1).unwrap().with_label("x");
        assert_eq!(t.class_label(), Some("x"));
    }
}
