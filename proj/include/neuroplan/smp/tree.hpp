#pragma once

#include "neuroplan/cspace/types.hpp"

#include <json.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace neuroplan {

inline constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);

/// Rooted search tree with cached cost-to-root.
class Tree
{
  public:
    explicit Tree(Config root, double angle_weight = 1.0);

    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] const Config& node(std::size_t i) const { return nodes_[i]; }
    [[nodiscard]] std::size_t parent(std::size_t i) const { return parent_[i]; }
    [[nodiscard]] double cost(std::size_t i) const { return cost_[i]; }
    [[nodiscard]] const std::vector<std::size_t>& children(std::size_t i) const { return children_[i]; }
    [[nodiscard]] double angle_weight() const noexcept { return angle_weight_; }
    [[nodiscard]] const std::vector<Config>& nodes() const noexcept { return nodes_; }

    /// Appends a node under `parent`; returns its index.
    std::size_t add(Config c, std::size_t parent);

    /// Re-parents node i and refreshes the costs of its whole subtree.
    /// Throws std::invalid_argument if the new parent lies in i's subtree.
    void set_parent(std::size_t i, std::size_t new_parent);

    /// Root-to-node state sequence.
    [[nodiscard]] Path path_to(std::size_t i) const;

    /// Recomputes every cost from scratch and checks acyclicity and parent/child symmetry.
    [[nodiscard]] bool check_invariants(double tol = 1e-9) const;

    /// {"nodes": [[...]...], "parents": [...], "costs": [...]}, root parent = -1.
    [[nodiscard]] nlohmann::json to_json() const;

  private:
    void refresh_subtree(std::size_t i);

    std::vector<Config> nodes_;
    std::vector<std::size_t> parent_;
    std::vector<double> cost_;
    std::vector<std::vector<std::size_t>> children_;
    double angle_weight_ = 1.0;
};

/// Nearest-neighbour index over a growing tree: linear scan up to
/// `linear_limit` nodes, an incrementally built kd-tree (splitting on
/// translational axes only) beyond. Ties go to the lowest node index.
class NearestIndex
{
  public:
    explicit NearestIndex(const Tree& tree, std::size_t linear_limit = 64);

    [[nodiscard]] std::size_t nearest(const Config& q);
    /// Indices within distance r of q, in ascending order.
    void within(const Config& q, double r, std::vector<std::size_t>& out);

  private:
    struct KdNode
    {
        std::size_t point = 0;
        std::size_t axis = 0;
        std::size_t left = kNoParent;
        std::size_t right = kNoParent;
    };

    void sync();
    void nearest_rec(std::size_t n, const Config& q, double& best_d, std::size_t& best_i) const;
    void within_rec(std::size_t n, const Config& q, double r, std::vector<std::size_t>& out) const;
    [[nodiscard]] double dist(const Config& a, const Config& b) const;

    const Tree* tree_;
    std::size_t linear_limit_;
    std::vector<KdNode> kd_; ///< kd_[i].point == i; node 0 is the root
    std::vector<std::size_t> split_axes_;
};

/// Re-parents every neighbour whose cost through `new_idx` is strictly lower
/// and whose connecting segment passes steer_to at `step`.
void rewire(Tree& tree, std::size_t new_idx, std::span<const std::size_t> neighbors, const RobotModel& robot,
            const Workspace& ws, double step);

} // namespace neuroplan
