#pragma once

#include <cstdint>
#include <vector>

#include "ifs/geometry.hpp"

namespace ifs {

/// Static k-d tree over a PointCloud for nearest-neighbour distance queries.
/// The cloud must outlive the tree.
class KdTree {
public:
    explicit KdTree(const PointCloud& cloud);

    /// Index of the nearest point and its squared distance.
    std::pair<std::size_t, double> nearest(const double* query) const;
    double nearest_distance(const Vec& query) const;

private:
    struct Node {
        std::uint32_t begin, end;   // range into index_
        std::int32_t left{-1}, right{-1};
        int axis{-1};
        double split{0};
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node, const double* q, std::size_t& best, double& best_d2) const;

    const PointCloud& cloud_;
    std::vector<std::uint32_t> index_;
    std::vector<Node> nodes_;
    static constexpr std::uint32_t kLeafSize = 12;
};

}  // namespace ifs
