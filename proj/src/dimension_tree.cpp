#include "htstep/dimension_tree.hpp"

#include "htstep/errors.hpp"

#include <deque>

namespace htstep {

template <typename Split>
DimensionTree DimensionTree::build(int d, Split split) {
    if (d < 2) throw InputError("dimension tree needs d >= 2, got " + std::to_string(d));
    DimensionTree tree;
    tree.order_ = d;
    tree.leaf_of_mode_.assign(static_cast<std::size_t>(d), -1);

    struct Pending {
        int lo, hi, parent, depth;
        bool is_left;
    };
    std::deque<Pending> queue{{0, d, -1, 0, false}};
    while (!queue.empty()) {
        const Pending p = queue.front();
        queue.pop_front();
        const int id = static_cast<int>(tree.nodes_.size());
        TreeNode node;
        node.modes = ModeSet::range(p.lo, p.hi);
        node.parent = p.parent;
        node.depth = p.depth;
        tree.nodes_.push_back(node);
        if (p.parent >= 0) {
            auto& parent = tree.nodes_[static_cast<std::size_t>(p.parent)];
            (p.is_left ? parent.left : parent.right) = id;
        }
        if (static_cast<int>(tree.layers_.size()) <= p.depth) tree.layers_.emplace_back();
        tree.layers_[static_cast<std::size_t>(p.depth)].push_back(id);
        if (p.hi - p.lo == 1) {
            tree.leaf_of_mode_[static_cast<std::size_t>(p.lo)] = id;
            continue;
        }
        const int mid = split(p.lo, p.hi);
        queue.push_back({p.lo, mid, id, p.depth + 1, true});
        queue.push_back({mid, p.hi, id, p.depth + 1, false});
    }
    return tree;
}

DimensionTree DimensionTree::balanced(int d) {
    return build(d, [](int lo, int hi) { return lo + (hi - lo + 1) / 2; });
}

DimensionTree DimensionTree::linear(int d) {
    return build(d, [](int lo, int) { return lo + 1; });
}

DimensionTree DimensionTree::by_name(const std::string& name, int d) {
    if (name == "balanced") return balanced(d);
    if (name == "linear") return linear(d);
    throw InputError("unknown dimension tree '" + name + "'");
}

bool DimensionTree::operator==(const DimensionTree& other) const {
    if (order_ != other.order_ || nodes_.size() != other.nodes_.size()) return false;
    for (std::size_t t = 0; t < nodes_.size(); ++t) {
        const auto& a = nodes_[t];
        const auto& b = other.nodes_[t];
        if (!(a.modes == b.modes) || a.left != b.left || a.right != b.right) return false;
    }
    return true;
}

TreePtr make_tree(const std::string& name, int d) {
    return std::make_shared<const DimensionTree>(DimensionTree::by_name(name, d));
}

}  // namespace htstep
