#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "shb/linalg.hpp"

namespace shb {

/// A nonempty compact convex set in R^1, R^2 or R^3, stored by its extreme
/// points:
///   dim 1: {lo} or {lo, hi} with lo < hi
///   dim 2: counterclockwise hull vertices (1 = point, 2 = segment)
///   dim 3: extreme points, unordered (at most kMaxHullPoints)
class ConvexSet {
public:
    static constexpr std::size_t kMaxDim = 3;
    static constexpr std::size_t kMaxHullPoints = 1000;

    static ConvexSet interval(double lo, double hi);
    static ConvexSet point(const Vec& p);
    /// Convex hull of a nonempty point cloud. Throws CapabilityError when
    /// dim > 3 or the 3D hull exceeds kMaxHullPoints.
    static ConvexSet hull(std::size_t dim, std::vector<Vec> points);

    std::size_t dim() const { return dim_; }
    const std::vector<Vec>& vertices() const { return vertices_; }
    bool is_point() const { return vertices_.size() == 1; }

    // 1D accessors.
    double lo() const;
    double hi() const;

    ConvexSet scaled(double c) const;
    /// this ⊕ other, all-pairs vertex sums followed by hull normalization.
    ConvexSet minkowski_sum(const ConvexSet& other) const;
    /// conv(this ∪ extra)
    ConvexSet hull_with(const std::vector<Vec>& extra) const;

    Vec nearest_point(const Vec& q) const;
    double distance(const Vec& q) const;
    bool contains(const Vec& q, double tol) const { return distance(q) <= tol; }
    Vec least_norm_point() const { return nearest_point(Vec(dim_, 0.0)); }

private:
    ConvexSet(std::size_t dim, std::vector<Vec> v) : dim_(dim), vertices_(std::move(v)) {}

    std::size_t dim_ = 1;
    std::vector<Vec> vertices_;
};

/// Minimum-norm point of conv(points) by Wolfe's active-set method. Works in
/// any dimension and needs no hull; used for 3D sets and as an independent
/// cross-check of the exact 1D/2D routines.
Vec min_norm_point(std::span<const Vec> points, double tol = 1e-14);

/// Euclidean distance from q to conv(points), via min_norm_point.
double hull_distance(std::span<const Vec> points, const Vec& q);

/// Vertices approximating the closed ball B(0, radius): interval endpoints in
/// 1D, a regular 32-gon in 2D, a 64-point spherical lattice in 3D.
std::vector<Vec> ball_vertices(std::size_t dim, double radius);

} // namespace shb
