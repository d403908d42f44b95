#include "shb/convex_set.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "shb/errors.hpp"

namespace shb {

namespace {

double cross2(const Vec& o, const Vec& a, const Vec& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Andrew's monotone chain. Collinear points are dropped, output is CCW.
std::vector<Vec> hull2d(std::vector<Vec> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() <= 2) return pts;

    std::vector<Vec> h(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross2(h[k - 2], h[k - 1], p) <= 0.0) --k;
        h[k++] = p;
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = pts.size() - 1; i-- > 0;) {
        while (k >= lower && cross2(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

Vec project_segment(const Vec& a, const Vec& b, const Vec& q) {
    const Vec ab = sub(b, a);
    const double len2 = norm2(ab);
    if (len2 == 0.0) return a;
    const double t = dot(sub(q, a), ab) / len2;
    if (t <= 0.0) return a;
    if (t >= 1.0) return b;
    // Exact membership in 2D returns q itself so equilibria stay bit-exact.
    if (a.size() == 2 && cross2(a, b, q) == 0.0) return q;
    Vec out = a;
    axpy(t, ab, out);
    return out;
}

Vec nearest_polygon(const std::vector<Vec>& v, const Vec& q) {
    if (v.size() == 1) return v[0];
    if (v.size() == 2) return project_segment(v[0], v[1], q);

    bool inside = true;
    for (std::size_t i = 0; i < v.size() && inside; ++i)
        inside = cross2(v[i], v[(i + 1) % v.size()], q) >= 0.0;
    if (inside) return q;

    Vec best;
    double best_d = INFINITY;
    for (std::size_t i = 0; i < v.size(); ++i) {
        Vec c = project_segment(v[i], v[(i + 1) % v.size()], q);
        const double d = distance(c, q);
        if (d < best_d) {
            best_d = d;
            best = std::move(c);
        }
    }
    return best;
}

// Solve the small dense system A x = b in place (partial pivoting).
// Returns false when A is numerically singular.
bool solve_dense(std::vector<std::vector<double>>& a, std::vector<double>& b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        if (std::fabs(a[piv][c]) < 1e-300) return false;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            if (f == 0.0) continue;
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    for (std::size_t c = n; c-- > 0;) {
        double s = b[c];
        for (std::size_t k = c + 1; k < n; ++k) s -= a[c][k] * b[k];
        b[c] = s / a[c][c];
    }
    return true;
}

// Affine minimizer of ||sum_i a_i p_i|| subject to sum_i a_i = 1.
bool affine_min(std::span<const Vec> pts, const std::vector<std::size_t>& s,
                std::vector<double>& alpha) {
    const std::size_t k = s.size();
    std::vector<std::vector<double>> kkt(k + 1, std::vector<double>(k + 1, 0.0));
    std::vector<double> rhs(k + 1, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) kkt[i][j] = dot(pts[s[i]], pts[s[j]]);
        kkt[i][k] = 1.0;
        kkt[k][i] = 1.0;
    }
    rhs[k] = 1.0;
    if (!solve_dense(kkt, rhs)) return false;
    alpha.assign(rhs.begin(), rhs.begin() + static_cast<std::ptrdiff_t>(k));
    return true;
}

std::vector<Vec> prune_extreme_points(std::vector<Vec> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() <= 2) return pts;
    if (pts.size() > 50 * ConvexSet::kMaxHullPoints)
        throw CapabilityError("3D hull input of " + std::to_string(pts.size()) +
                              " points exceeds the supported size");

    double scale = 0.0;
    for (const auto& p : pts) scale = std::fmax(scale, max_abs(p));
    const double tol = 1e-12 * std::fmax(scale, 1.0);

    std::vector<Vec> kept;
    std::vector<Vec> others;
    others.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        others.clear();
        for (std::size_t j = 0; j < pts.size(); ++j)
            if (j != i) others.push_back(pts[j]);
        if (hull_distance(others, pts[i]) > tol) kept.push_back(pts[i]);
    }
    if (kept.size() > ConvexSet::kMaxHullPoints)
        throw CapabilityError("3D hull has " + std::to_string(kept.size()) +
                              " extreme points, limit is " +
                              std::to_string(ConvexSet::kMaxHullPoints));
    return kept;
}

} // namespace

ConvexSet ConvexSet::interval(double lo, double hi) {
    if (!(lo <= hi)) throw InputError("interval requires lo <= hi");
    if (lo == hi) return ConvexSet(1, {Vec{lo}});
    return ConvexSet(1, {Vec{lo}, Vec{hi}});
}

ConvexSet ConvexSet::point(const Vec& p) { return hull(p.size(), {p}); }

ConvexSet ConvexSet::hull(std::size_t dim, std::vector<Vec> points) {
    if (points.empty()) throw InputError("convex hull of an empty point set");
    if (dim == 0 || dim > kMaxDim)
        throw CapabilityError("exact convex sets are limited to dimension 1..3, got " +
                              std::to_string(dim));
    for (const auto& p : points)
        if (p.size() != dim) throw InputError("hull point has wrong dimension");

    if (dim == 1) {
        double lo = points[0][0], hi = points[0][0];
        for (const auto& p : points) {
            lo = std::fmin(lo, p[0]);
            hi = std::fmax(hi, p[0]);
        }
        return interval(lo, hi);
    }
    if (dim == 2) return ConvexSet(2, hull2d(std::move(points)));
    return ConvexSet(3, prune_extreme_points(std::move(points)));
}

double ConvexSet::lo() const {
    if (dim_ != 1) throw std::logic_error("lo() on a set of dimension != 1");
    return vertices_.front()[0];
}

double ConvexSet::hi() const {
    if (dim_ != 1) throw std::logic_error("hi() on a set of dimension != 1");
    return vertices_.back()[0];
}

ConvexSet ConvexSet::scaled(double c) const {
    std::vector<Vec> v;
    v.reserve(vertices_.size());
    for (const auto& p : vertices_) v.push_back(scale(c, p));
    return hull(dim_, std::move(v));
}

ConvexSet ConvexSet::minkowski_sum(const ConvexSet& other) const {
    if (other.dim_ != dim_) throw InputError("Minkowski sum of sets with different dimensions");
    if (dim_ == 1) return interval(lo() + other.lo(), hi() + other.hi());
    std::vector<Vec> sums;
    sums.reserve(vertices_.size() * other.vertices_.size());
    for (const auto& a : vertices_)
        for (const auto& b : other.vertices_) sums.push_back(add(a, b));
    return hull(dim_, std::move(sums));
}

ConvexSet ConvexSet::hull_with(const std::vector<Vec>& extra) const {
    std::vector<Vec> pts = vertices_;
    pts.insert(pts.end(), extra.begin(), extra.end());
    return hull(dim_, std::move(pts));
}

Vec ConvexSet::nearest_point(const Vec& q) const {
    if (q.size() != dim_) throw InputError("query point has wrong dimension");
    if (dim_ == 1) return Vec{std::clamp(q[0], lo(), hi())};
    if (dim_ == 2) return nearest_polygon(vertices_, q);

    std::vector<Vec> shifted;
    shifted.reserve(vertices_.size());
    double scale_ = 0.0;
    for (const auto& p : vertices_) {
        shifted.push_back(sub(p, q));
        scale_ = std::fmax(scale_, max_abs(shifted.back()));
    }
    const Vec x = min_norm_point(shifted);
    if (norm(x) <= 1e-13 * std::fmax(scale_, 1.0)) return q;
    return add(q, x);
}

double ConvexSet::distance(const Vec& q) const {
    if (dim_ == 1) {
        if (q.size() != 1) throw InputError("query point has wrong dimension");
        if (q[0] < lo()) return lo() - q[0];
        if (q[0] > hi()) return q[0] - hi();
        return 0.0;
    }
    return shb::distance(nearest_point(q), q);
}

Vec min_norm_point(std::span<const Vec> pts, double tol) {
    if (pts.empty()) throw InputError("min_norm_point of an empty set");
    const std::size_t m = pts.size();
    double max_n2 = 0.0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double n2 = norm2(pts[i]);
        max_n2 = std::fmax(max_n2, n2);
        if (n2 < norm2(pts[start])) start = i;
    }
    if (m == 1 || max_n2 == 0.0) return pts[start];

    std::vector<std::size_t> s{start};
    std::vector<double> lam{1.0};
    Vec x = pts[start];
    std::vector<double> alpha;

    for (int major = 0; major < 10000; ++major) {
        std::size_t j = 0;
        double best = INFINITY;
        for (std::size_t i = 0; i < m; ++i) {
            const double v = dot(x, pts[i]);
            if (v < best) {
                best = v;
                j = i;
            }
        }
        if (norm2(x) - best <= tol * max_n2) break;
        if (std::find(s.begin(), s.end(), j) != s.end()) break;
        s.push_back(j);
        lam.push_back(0.0);

        for (int minor = 0; minor < 1000; ++minor) {
            if (!affine_min(pts, s, alpha)) {
                // Affinely dependent support: drop the newest point and stop.
                s.pop_back();
                lam.pop_back();
                goto done;
            }
            bool positive = true;
            for (double a : alpha) positive = positive && a > 1e-15;
            if (positive) {
                lam = alpha;
                break;
            }
            double theta = 1.0;
            std::size_t leaving = 0;
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (alpha[i] <= 1e-15) {
                    const double t = lam[i] / (lam[i] - alpha[i]);
                    if (t < theta) {
                        theta = t;
                        leaving = i;
                    }
                }
            }
            for (std::size_t i = 0; i < s.size(); ++i)
                lam[i] = theta * alpha[i] + (1.0 - theta) * lam[i];
            lam[leaving] = 0.0;
            std::vector<std::size_t> s2;
            std::vector<double> lam2;
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (lam[i] > 1e-15) {
                    s2.push_back(s[i]);
                    lam2.push_back(lam[i]);
                }
            }
            s = std::move(s2);
            lam = std::move(lam2);
        }
        x.assign(pts[0].size(), 0.0);
        {
            double total = 0.0;
            for (double l : lam) total += l;
            for (std::size_t i = 0; i < s.size(); ++i) axpy(lam[i] / total, pts[s[i]], x);
        }
    }
done:
    x.assign(pts[0].size(), 0.0);
    double total = 0.0;
    for (double l : lam) total += l;
    for (std::size_t i = 0; i < s.size(); ++i) axpy(lam[i] / total, pts[s[i]], x);
    return x;
}

double hull_distance(std::span<const Vec> points, const Vec& q) {
    std::vector<Vec> shifted;
    shifted.reserve(points.size());
    for (const auto& p : points) shifted.push_back(sub(p, q));
    return norm(min_norm_point(shifted));
}

std::vector<Vec> ball_vertices(std::size_t dim, double radius) {
    std::vector<Vec> out;
    if (dim == 1) {
        out = {Vec{-radius}, Vec{radius}};
    } else if (dim == 2) {
        for (int k = 0; k < 32; ++k) {
            const double t = 2.0 * std::numbers::pi * k / 32.0;
            out.push_back({radius * std::cos(t), radius * std::sin(t)});
        }
    } else if (dim == 3) {
        const int n = 64;
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < n; ++k) {
            const double z = 1.0 - 2.0 * (k + 0.5) / n;
            const double rxy = std::sqrt(1.0 - z * z);
            const double t = golden * k;
            out.push_back({radius * rxy * std::cos(t), radius * rxy * std::sin(t), radius * z});
        }
    } else {
        throw CapabilityError("ball discretization limited to dimension 1..3");
    }
    return out;
}

} // namespace shb
