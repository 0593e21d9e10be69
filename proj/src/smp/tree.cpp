#include "neuroplan/smp/tree.hpp"

#include "neuroplan/cspace/json.hpp"
#include "neuroplan/cspace/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace neuroplan {

Tree::Tree(Config root, double angle_weight) : angle_weight_(angle_weight)
{
    nodes_.push_back(std::move(root));
    parent_.push_back(kNoParent);
    cost_.push_back(0.0);
    children_.emplace_back();
}

std::size_t Tree::add(Config c, std::size_t parent)
{
    if (parent >= nodes_.size())
        throw std::out_of_range("Tree::add: parent index out of range");
    const double cost = cost_[parent] + distance(nodes_[parent], c, angle_weight_);
    nodes_.push_back(std::move(c));
    parent_.push_back(parent);
    cost_.push_back(cost);
    children_.emplace_back();
    const std::size_t idx = nodes_.size() - 1;
    children_[parent].push_back(idx);
    return idx;
}

void Tree::set_parent(std::size_t i, std::size_t new_parent)
{
    if (i == 0 || i >= nodes_.size() || new_parent >= nodes_.size())
        throw std::invalid_argument("Tree::set_parent: bad node index");
    for (std::size_t a = new_parent; a != kNoParent; a = parent_[a])
        if (a == i)
            throw std::invalid_argument("Tree::set_parent: would create a cycle");
    auto& siblings = children_[parent_[i]];
    siblings.erase(std::find(siblings.begin(), siblings.end(), i));
    parent_[i] = new_parent;
    children_[new_parent].push_back(i);
    cost_[i] = cost_[new_parent] + distance(nodes_[new_parent], nodes_[i], angle_weight_);
    refresh_subtree(i);
}

void Tree::refresh_subtree(std::size_t i)
{
    std::vector<std::size_t> stack{i};
    while (!stack.empty())
    {
        const std::size_t n = stack.back();
        stack.pop_back();
        for (std::size_t c : children_[n])
        {
            cost_[c] = cost_[n] + distance(nodes_[n], nodes_[c], angle_weight_);
            stack.push_back(c);
        }
    }
}

Path Tree::path_to(std::size_t i) const
{
    Path p;
    for (std::size_t n = i; n != kNoParent; n = parent_[n])
        p.states.push_back(nodes_[n]);
    std::reverse(p.states.begin(), p.states.end());
    return p;
}

bool Tree::check_invariants(double tol) const
{
    const std::size_t n = nodes_.size();
    if (parent_[0] != kNoParent || cost_[0] != 0.0)
        return false;
    std::vector<double> fresh(n, std::numeric_limits<double>::quiet_NaN());
    fresh[0] = 0.0;
    std::vector<std::size_t> stack{0};
    std::size_t seen = 0;
    while (!stack.empty())
    {
        const std::size_t v = stack.back();
        stack.pop_back();
        ++seen;
        for (std::size_t c : children_[v])
        {
            if (parent_[c] != v || !std::isnan(fresh[c]))
                return false;
            fresh[c] = fresh[v] + distance(nodes_[v], nodes_[c], angle_weight_);
            stack.push_back(c);
        }
    }
    if (seen != n)
        return false;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(fresh[i] - cost_[i]) > tol * std::max(1.0, fresh[i]))
            return false;
    return true;
}

nlohmann::json Tree::to_json() const
{
    nlohmann::json nodes = nlohmann::json::array(), parents = nlohmann::json::array();
    for (std::size_t i = 0; i < nodes_.size(); ++i)
    {
        nodes.push_back(config_to_json(nodes_[i]));
        parents.push_back(parent_[i] == kNoParent ? -1 : static_cast<long long>(parent_[i]));
    }
    return {{"nodes", nodes}, {"parents", parents}, {"costs", cost_}};
}

NearestIndex::NearestIndex(const Tree& tree, std::size_t linear_limit) : tree_(&tree), linear_limit_(linear_limit)
{
    const Config& root = tree.node(0);
    for (std::size_t a = 0; a < root.dim(); ++a)
        if (!root.is_angular(a))
            split_axes_.push_back(a);
}

double NearestIndex::dist(const Config& a, const Config& b) const
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i)
    {
        double d = b[i] - a[i];
        if (a.is_angular(i))
            d = tree_->angle_weight() * wrap_angle(d);
        s += d * d;
    }
    return std::sqrt(s);
}

void NearestIndex::sync()
{
    while (kd_.size() < tree_->size())
    {
        const std::size_t i = kd_.size();
        kd_.push_back({i, 0, kNoParent, kNoParent});
        if (i == 0 || split_axes_.empty())
            continue;
        const Config& p = tree_->node(i);
        std::size_t n = 0;
        std::size_t depth = 0;
        for (;;)
        {
            KdNode& node = kd_[n];
            const bool go_left = p[node.axis] < tree_->node(node.point)[node.axis];
            std::size_t& next = go_left ? node.left : node.right;
            ++depth;
            if (next == kNoParent)
            {
                next = i;
                kd_[i].axis = split_axes_[depth % split_axes_.size()];
                break;
            }
            n = next;
        }
    }
}

void NearestIndex::nearest_rec(std::size_t n, const Config& q, double& best_d, std::size_t& best_i) const
{
    while (n != kNoParent)
    {
        const KdNode& node = kd_[n];
        const double d = dist(q, tree_->node(node.point));
        if (d < best_d || (d == best_d && node.point < best_i))
        {
            best_d = d;
            best_i = node.point;
        }
        const double diff = q[node.axis] - tree_->node(node.point)[node.axis];
        const std::size_t near = diff < 0 ? node.left : node.right;
        const std::size_t far = diff < 0 ? node.right : node.left;
        if (far != kNoParent && std::abs(diff) <= best_d)
        {
            nearest_rec(near, q, best_d, best_i);
            if (std::abs(diff) <= best_d)
                nearest_rec(far, q, best_d, best_i);
            return;
        }
        n = near;
    }
}

void NearestIndex::within_rec(std::size_t n, const Config& q, double r, std::vector<std::size_t>& out) const
{
    while (n != kNoParent)
    {
        const KdNode& node = kd_[n];
        if (dist(q, tree_->node(node.point)) <= r)
            out.push_back(node.point);
        const double diff = q[node.axis] - tree_->node(node.point)[node.axis];
        // Left subtree holds values < split, right subtree values >= split.
        if (diff > r)
        {
            n = node.right;
            continue;
        }
        if (diff < -r)
        {
            n = node.left;
            continue;
        }
        within_rec(node.left, q, r, out);
        n = node.right;
    }
}

std::size_t NearestIndex::nearest(const Config& q)
{
    sync();
    double best_d = std::numeric_limits<double>::infinity();
    std::size_t best_i = kNoParent;
    if (tree_->size() > linear_limit_ && !split_axes_.empty())
    {
        nearest_rec(0, q, best_d, best_i);
        return best_i;
    }
    for (std::size_t i = 0; i < tree_->size(); ++i)
    {
        const double d = dist(q, tree_->node(i));
        if (d < best_d)
        {
            best_d = d;
            best_i = i;
        }
    }
    return best_i;
}

void NearestIndex::within(const Config& q, double r, std::vector<std::size_t>& out)
{
    sync();
    out.clear();
    if (tree_->size() > linear_limit_ && !split_axes_.empty())
    {
        within_rec(0, q, r, out);
        std::sort(out.begin(), out.end());
        return;
    }
    for (std::size_t i = 0; i < tree_->size(); ++i)
        if (dist(q, tree_->node(i)) <= r)
            out.push_back(i);
}

void rewire(Tree& tree, std::size_t new_idx, std::span<const std::size_t> neighbors, const RobotModel& robot,
            const Workspace& ws, double step)
{
    const Config& x_new = tree.node(new_idx);
    for (std::size_t nb : neighbors)
    {
        if (nb == new_idx || nb == tree.parent(new_idx) || nb == 0)
            continue;
        const double through = tree.cost(new_idx) + distance(x_new, tree.node(nb), tree.angle_weight());
        if (through >= tree.cost(nb))
            continue;
        if (!steer_to(robot, x_new, tree.node(nb), ws, step))
            continue;
        tree.set_parent(nb, new_idx);
    }
}

} // namespace neuroplan
