use crate::dataset::BoundingBox;
use crate::Scalar;

/// Intersection over union of two boxes; 0 when they do not overlap.
pub fn iou<T: Scalar>(a: &BoundingBox<T>, b: &BoundingBox<T>) -> T {
    let iw = a.right().min(b.right()) - a.x.max(b.x);
    let ih = a.bottom().min(b.bottom()) - a.y.max(b.y);
    if iw <= T::zero() || ih <= T::zero() {
        return T::zero();
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    (inter / union).min(T::one())
}

/// A prediction is correct when its IoU with the ground truth exceeds 0.5.
pub fn is_correct<T: Scalar>(pred: &BoundingBox<T>, gt: &BoundingBox<T>) -> bool {
    iou(pred, gt) > T::from_param(0.5)
}
