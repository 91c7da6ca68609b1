#pragma once

#include "htstep/dense_tensor.hpp"

#include <memory>
#include <string>
#include <vector>

namespace htstep {

struct TreeNode {
    ModeSet modes;
    int left = -1;
    int right = -1;
    int parent = -1;
    int depth = 0;

    bool is_leaf() const { return left < 0; }
};

/// Binary dimension tree over modes 0..d-1. Nodes are stored breadth-first with
/// the root at index 0, so parents always precede their children.
class DimensionTree {
public:
    /// Left child takes the larger half: d=3 gives {0,1},{2}.
    static DimensionTree balanced(int d);
    /// Caterpillar tree: each internal node splits off its first mode.
    static DimensionTree linear(int d);
    static DimensionTree by_name(const std::string& name, int d);

    int order() const { return order_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }
    const TreeNode& node(int t) const { return nodes_.at(static_cast<std::size_t>(t)); }
    const std::vector<TreeNode>& nodes() const { return nodes_; }

    /// Node indices per depth, root layer first.
    const std::vector<std::vector<int>>& layers() const { return layers_; }

    /// Node whose mode set is {k}.
    int leaf_of_mode(int k) const { return leaf_of_mode_.at(static_cast<std::size_t>(k)); }

    bool operator==(const DimensionTree& other) const;

private:
    template <typename Split>
    static DimensionTree build(int d, Split split);

    int order_ = 0;
    std::vector<TreeNode> nodes_;
    std::vector<std::vector<int>> layers_;
    std::vector<int> leaf_of_mode_;
};

using TreePtr = std::shared_ptr<const DimensionTree>;

TreePtr make_tree(const std::string& name, int d);

}  // namespace htstep
