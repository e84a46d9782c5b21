use serde::{Deserialize, Serialize};

use super::SceneError;

/// Largest grid coordinate on the x/y axes.
pub const XY_MAX: u32 = 100;
/// Largest grid coordinate on the w/h axes.
pub const WH_MAX: u32 = 10;
/// Grid units per w/h unit when a pose is turned back into a box.
pub const WH_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: f64,
    pub height: f64,
}

impl ImageSize {
    pub fn new(width: f64, height: f64) -> Result<Self, SceneError> {
        if !(width.is_finite() && height.is_finite() && width > 0.0 && height > 0.0) {
            return Err(SceneError::DegenerateImage { width, height });
        }
        Ok(Self { width, height })
    }

    /// Grid units per pixel: the longer side spans 100 units.
    pub fn scale(&self) -> f64 {
        f64::from(XY_MAX) / self.width.max(self.height)
    }

    /// Extent of the image in grid units, as (width, height).
    pub fn grid_extent(&self) -> (f64, f64) {
        let s = self.scale();
        (self.width * s, self.height * s)
    }
}

/// Labeled pixel box, top-left corner plus size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub object_id: String,
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl SceneObject {
    pub fn new(object_id: impl Into<String>, label: impl Into<String>, x: f64, y: f64, w: f64, h: f64) -> Self {
        Self {
            object_id: object_id.into(),
            label: label.into(),
            x,
            y,
            w,
            h,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let finite = [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite());
        let reason = if self.label.trim().is_empty() {
            Some("empty label")
        } else if !finite {
            Some("non-finite coordinates")
        } else if self.w <= 0.0 || self.h <= 0.0 {
            Some("non-positive size")
        } else if self.x < 0.0 || self.y < 0.0 {
            Some("negative corner")
        } else {
            None
        };
        match reason {
            Some(r) => Err(SceneError::InvalidObject {
                object_id: self.object_id.clone(),
                reason: r.to_string(),
            }),
            None => Ok(()),
        }
    }
}

/// Pose on the clean-up grid: x, y in [0, 100], w, h in [0, 10].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPose {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl GridPose {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, SceneError> {
        let p = Self { x, y, w, h };
        if p.is_valid() {
            Ok(p)
        } else {
            Err(SceneError::PoseOutOfRange(p))
        }
    }

    pub fn is_valid(&self) -> bool {
        let xy = f64::from(XY_MAX);
        let wh = f64::from(WH_MAX);
        [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite())
            && (0.0..=xy).contains(&self.x)
            && (0.0..=xy).contains(&self.y)
            && (0.0..=wh).contains(&self.w)
            && (0.0..=wh).contains(&self.h)
    }

    /// Box in grid units with w, h expanded by the w/h scale.
    pub fn to_box(&self) -> GridBox {
        GridBox {
            x: self.x,
            y: self.y,
            w: self.w * WH_SCALE,
            h: self.h * WH_SCALE,
        }
    }

    /// Box centre in x/y grid units.
    pub fn center(&self) -> (f64, f64) {
        let b = self.to_box();
        (b.x + b.w / 2.0, b.y + b.h / 2.0)
    }

    /// Nearest on-grid pose, the value an exact decode returns.
    pub fn snapped(&self) -> GridPose {
        let r = |v: f64, max: u32| v.round().clamp(0.0, f64::from(max));
        GridPose {
            x: r(self.x, XY_MAX),
            y: r(self.y, XY_MAX),
            w: r(self.w, WH_MAX),
            h: r(self.h, WH_MAX),
        }
    }

    pub fn is_on_grid(&self) -> bool {
        [self.x, self.y, self.w, self.h].iter().all(|v| v.fract() == 0.0)
    }
}

/// Axis-aligned box in x/y grid units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl GridBox {
    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn intersection(&self, o: &GridBox) -> f64 {
        let ix = (self.x + self.w).min(o.x + o.w) - self.x.max(o.x);
        let iy = (self.y + self.h).min(o.y + o.h) - self.y.max(o.y);
        ix.max(0.0) * iy.max(0.0)
    }

    /// Intersection over union; 0 when both boxes are empty.
    pub fn iou(&self, o: &GridBox) -> f64 {
        let inter = self.intersection(o);
        let union = self.area() + o.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// Maps one pixel box to a grid pose, clamping into the valid ranges.
pub fn normalize_object(image: ImageSize, o: &SceneObject) -> Result<GridPose, SceneError> {
    o.validate()?;
    let s = image.scale();
    let xy = f64::from(XY_MAX);
    let wh = f64::from(WH_MAX);
    Ok(GridPose {
        x: (o.x * s).clamp(0.0, xy),
        y: (o.y * s).clamp(0.0, xy),
        w: (o.w * s / WH_SCALE).clamp(0.0, wh),
        h: (o.h * s / WH_SCALE).clamp(0.0, wh),
    })
}

pub fn normalize_scene(
    image_w: f64,
    image_h: f64,
    objects: &[SceneObject],
) -> Result<Vec<(String, GridPose)>, SceneError> {
    let image = ImageSize::new(image_w, image_h)?;
    objects
        .iter()
        .map(|o| Ok((o.label.clone(), normalize_object(image, o)?)))
        .collect()
}
