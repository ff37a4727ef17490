#include "ifs/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ifs {

KdTree::KdTree(const PointCloud& cloud) : cloud_(cloud) {
    index_.resize(cloud.size());
    std::iota(index_.begin(), index_.end(), 0U);
    if (!index_.empty()) {
        nodes_.reserve(2 * index_.size() / kLeafSize + 2);
        build(0, static_cast<std::uint32_t>(index_.size()));
    }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    const Eigen::Index m = cloud_.dim();
    int axis = 0;
    double best_spread = -1;
    for (Eigen::Index d = 0; d < m; ++d) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (auto i = begin; i < end; ++i) {
            const double v = cloud_[index_[i]][d];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo > best_spread) {
            best_spread = hi - lo;
            axis = static_cast<int>(d);
        }
    }
    if (best_spread <= 0) return id;  // all duplicates: keep as leaf

    const auto mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return cloud_[a][axis] < cloud_[b][axis]; });
    const double split = cloud_[index_[mid]][axis];
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::search(std::int32_t id, const double* q, std::size_t& best, double& best_d2) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
        const Eigen::Index m = cloud_.dim();
        const double* base = cloud_.raw().data();
        for (auto i = n.begin; i < n.end; ++i) {
            const double* p = base + static_cast<std::size_t>(index_[i]) * m;
            double d2 = 0;
            for (Eigen::Index k = 0; k < m; ++k) {
                const double t = p[k] - q[k];
                d2 += t * t;
            }
            if (d2 < best_d2 || (d2 == best_d2 && index_[i] < best)) {
                best_d2 = d2;
                best = index_[i];
            }
        }
        return;
    }
    const double diff = q[n.axis] - n.split;
    const auto near = diff < 0 ? n.left : n.right;
    const auto far = diff < 0 ? n.right : n.left;
    search(near, q, best, best_d2);
    if (diff * diff <= best_d2) search(far, q, best, best_d2);
}

std::pair<std::size_t, double> KdTree::nearest(const double* query) const {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    double best_d2 = std::numeric_limits<double>::infinity();
    if (!nodes_.empty()) search(0, query, best, best_d2);
    return {best, best_d2};
}

double KdTree::nearest_distance(const Vec& query) const {
    return std::sqrt(nearest(query.data()).second);
}

}  // namespace ifs
