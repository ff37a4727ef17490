#include "ifs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "ifs/error.hpp"
#include "ifs/kdtree.hpp"
#include "ifs/parallel.hpp"

namespace ifs {

Eigen::Index Region::dim() const {
    return std::visit([](const auto& s) { return s.dim(); }, shape_);
}

Vec Region::center() const {
    return std::visit([](const auto& s) -> Vec { return s.center; }, shape_);
}

bool Region::contains(const Vec& x, double slack) const {
    return std::visit([&](const auto& s) { return s.contains(x, slack); }, shape_);
}

double Region::depth(const Vec& x) const {
    return std::visit([&](const auto& s) { return s.depth(x); }, shape_);
}

double Region::diameter() const {
    if (is_ball()) return 2 * ball().radius;
    return 2 * box().halfwidths.norm();
}

double Region::circumradius() const { return diameter() / 2; }

Vec Region::lower() const {
    if (is_ball()) return ball().center.array() - ball().radius;
    return box().center - box().halfwidths;
}

Vec Region::upper() const {
    if (is_ball()) return ball().center.array() + ball().radius;
    return box().center + box().halfwidths;
}

Vec Region::project(const Vec& x) const {
    if (is_ball()) {
        const Vec d = x - ball().center;
        const double n = d.norm();
        if (n <= ball().radius) return x;
        double scale = ball().radius / n;
        Vec y = ball().center + d * scale;
        while ((y - ball().center).norm() > ball().radius) {
            scale *= 1 - 1e-15;
            y = ball().center + d * scale;
        }
        return y;
    }
    return x.cwiseMax(lower()).cwiseMin(upper());
}

Balld Region::inscribed(const Balld& target) const {
    Vec c = project(target.center);
    double r = std::min(target.radius - (c - target.center).norm(), depth(c));
    if (r <= 0) {
        // Centre on the boundary: step inwards along the segment to the region centre.
        const Vec inward = center() - c;
        const double len = inward.norm();
        if (len > 0) {
            const double step = std::min(target.radius, len) / 2;
            c += inward * (step / len);
            r = std::min(target.radius - (c - target.center).norm(), depth(c));
        }
    }
    return Balld{c, std::max(r, 0.0)};
}

void PointCloud::append(const PointCloud& other) {
    if (other.empty()) return;
    if (empty() && dim_ == 0) dim_ = other.dim_;
    if (other.dim_ != dim_) throw Error("point cloud dimension mismatch");
    data_.insert(data_.end(), other.data_.begin(), other.data_.end());
}

PointCloud PointCloud::scaled(double factor) const {
    PointCloud out(dim_);
    out.data_ = data_;
    for (double& v : out.data_) v *= factor;
    return out;
}

Grid::Grid(Region d, double h) : domain(std::move(d)), spacing(h) {
    if (!(h > 0)) throw Error("grid spacing must be positive");
}

double Grid::resolution() const {
    return spacing * std::sqrt(static_cast<double>(domain.dim())) / 2;
}

PointCloud Grid::points() const {
    PointCloud out(domain.dim());
    for_each_chunk([&](const PointCloud& chunk) { out.append(chunk); });
    return out;
}

void Grid::for_each_chunk(const std::function<void(const PointCloud&)>& visit, std::size_t chunk) const {
    const Eigen::Index m = domain.dim();
    const Vec lo = domain.lower(), hi = domain.upper();
    std::vector<long> counts(static_cast<std::size_t>(m));
    Vec step(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double span = hi[i] - lo[i];
        const long n = static_cast<long>(std::ceil(span / spacing - 1e-9)) + 1;
        counts[static_cast<std::size_t>(i)] = std::max(n, 1L);
        step[i] = n > 1 ? span / static_cast<double>(n - 1) : 0.0;
    }
    PointCloud out(m);
    out.reserve(chunk);
    const double reach = resolution();
    std::vector<long> idx(static_cast<std::size_t>(m), 0);
    Vec p(m);
    for (;;) {
        for (Eigen::Index i = 0; i < m; ++i) p[i] = lo[i] + step[i] * static_cast<double>(idx[static_cast<std::size_t>(i)]);
        if (domain.is_box()) {
            out.push_back(p);
        } else if (domain.contains(p)) {
            out.push_back(p);
        } else if (domain.contains(p, reach)) {
            out.push_back(domain.project(p));
        }
        if (out.size() >= chunk) {
            visit(out);
            out.clear();
        }
        Eigen::Index k = 0;
        while (k < m && ++idx[static_cast<std::size_t>(k)] == counts[static_cast<std::size_t>(k)]) {
            idx[static_cast<std::size_t>(k)] = 0;
            ++k;
        }
        if (k == m) break;
    }
    if (!out.empty()) visit(out);
}

double default_spacing(Eigen::Index m) { return m <= 3 ? 0.01 : 0.05; }

bool lex_less(const Vec& a, const Vec& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

double directed_hausdorff(const PointCloud& from, const PointCloud& to) {
    if (from.empty() || to.empty()) throw Error("hausdorff_distance needs nonempty clouds");
    if (from.dim() != to.dim()) throw Error("hausdorff_distance: dimension mismatch");
    const KdTree tree(to);
    std::vector<double> d(from.size());
    parallel_for(from.size(), [&](std::size_t i) { d[i] = tree.nearest(from[i].data()).second; });
    return std::sqrt(*std::max_element(d.begin(), d.end()));
}

double hausdorff_distance(const PointCloud& a, const PointCloud& b) {
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

namespace {

PointCloud points_in_region(const Region& region, const Grid& grid) {
    PointCloud all = grid.points();
    PointCloud out(all.dim());
    out.reserve(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        const Vec p = all[i];
        if (region.contains(p, 1e-12)) out.push_back(p);
    }
    return out;
}

void check_dims(const Region& region, const Grid& grid) {
    if (region.dim() != grid.domain.dim()) throw Error("region and grid dimensions differ");
}

}  // namespace

CoverReport covering_test(const Region& region, const std::vector<Membership>& pieces, const Grid& grid) {
    check_dims(region, grid);
    CoverReport report;
    report.spacing = grid.spacing;
    std::vector<char> hit;
    grid.for_each_chunk([&](const PointCloud& chunk) {
        hit.assign(chunk.size(), 0);
        parallel_for(chunk.size(), [&](std::size_t i) {
            const Vec p = chunk[i];
            if (!region.contains(p, 1e-12)) {
                hit[i] = 2;
                return;
            }
            for (const auto& piece : pieces) {
                if (piece(p)) {
                    hit[i] = 1;
                    break;
                }
            }
        });
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            if (hit[i] == 2) continue;
            ++report.checked;
            if (!hit[i]) report.witnesses.emplace_back(chunk[i]);
        }
    });
    std::sort(report.witnesses.begin(), report.witnesses.end(), lex_less);
    report.covered = report.witnesses.empty();
    return report;
}

LebesgueRadius lebesgue_radius(const std::vector<Membership>& pieces, const Region& region, const Grid& grid) {
    check_dims(region, grid);
    const PointCloud pts = points_in_region(region, grid);
    const double diam = region.diameter();
    std::vector<double> best(pts.size(), 0.0);

    for (const auto& piece : pieces) {
        PointCloud outside(pts.dim());
        std::vector<char> inside(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            inside[i] = piece(Vec(pts[i])) ? 1 : 0;
            if (!inside[i]) outside.push_back(pts[i]);
        }
        if (outside.empty()) {
            std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
            break;
        }
        const KdTree tree(outside);
        parallel_for(pts.size(), [&](std::size_t i) {
            if (!inside[i]) return;
            best[i] = std::max(best[i], std::sqrt(tree.nearest(pts[i].data()).second));
        });
    }

    std::vector<Vec> uncovered;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (best[i] == 0.0) uncovered.emplace_back(pts[i]);
    if (!uncovered.empty()) {
        std::sort(uncovered.begin(), uncovered.end(), lex_less);
        nlohmann::json w = nlohmann::json::array();
        for (std::size_t i = 0; i < std::min<std::size_t>(uncovered.size(), 64); ++i)
            w.push_back(std::vector<double>(uncovered[i].data(), uncovered[i].data() + uncovered[i].size()));
        throw Error("lebesgue_radius: pieces do not cover the region",
                    {{"uncovered", uncovered.size()}, {"witnesses", w}});
    }

    const double grid_min = pts.empty() ? diam : *std::min_element(best.begin(), best.end());
    const double correction = grid.spacing * std::sqrt(static_cast<double>(region.dim()));
    return {std::clamp(grid_min - correction, 0.0, diam), grid.spacing};
}

double density_radius(const PointCloud& s, const Region& region, const Grid& grid) {
    check_dims(region, grid);
    if (s.empty()) throw Error("density_radius needs a nonempty set");
    if (s.dim() != region.dim()) throw Error("density_radius: dimension mismatch");
    const PointCloud pts = points_in_region(region, grid);
    const KdTree tree(s);
    std::vector<double> d(pts.size(), 0.0);
    parallel_for(pts.size(), [&](std::size_t i) { d[i] = tree.nearest(pts[i].data()).second; });
    return d.empty() ? 0.0 : std::sqrt(*std::max_element(d.begin(), d.end()));
}

void write_csv(std::ostream& out, const PointCloud& cloud) {
    for (Eigen::Index i = 0; i < cloud.dim(); ++i) out << (i ? "," : "") << 'x' << (i + 1);
    out << '\n';
    char buf[32];
    for (std::size_t p = 0; p < cloud.size(); ++p) {
        const auto pt = cloud[p];
        for (Eigen::Index i = 0; i < cloud.dim(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", pt[i]);
            out << (i ? "," : "") << buf;
        }
        out << '\n';
    }
}

PointCloud read_csv(std::istream& in) {
    std::string line;
    PointCloud cloud;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;  // header
            }
            throw Error("malformed CSV row: " + line);
        }
        first = false;
        if (cloud.dim() == 0) cloud = PointCloud(static_cast<Eigen::Index>(row.size()));
        if (static_cast<Eigen::Index>(row.size()) != cloud.dim()) throw Error("ragged CSV row: " + line);
        cloud.push_back(Eigen::Map<const Vec>(row.data(), cloud.dim()));
    }
    return cloud;
}

}  // namespace ifs
