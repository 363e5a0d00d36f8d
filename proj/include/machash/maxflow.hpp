#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace machash {

/**
 * s-t max-flow / min-cut on a graph with real capacities (Dinic's
 * augmenting-path algorithm). Nodes 0..n-1 are the inner nodes; the
 * terminals are implicit.
 */
class MaxFlow {
public:
  explicit MaxFlow(std::size_t nodes);

  /// Optional capacity hint: number of add_edge/add_terminal links.
  void reserve(std::size_t edges);

  /// Adds capacity source->node and node->sink. Both must be >= 0.
  void add_terminal(std::size_t node, double from_source, double to_sink);
  /// Adds capacity from->to and to->from.
  void add_edge(std::size_t from, std::size_t to, double capacity, double reverse_capacity = 0.0);

  double solve();

  /// After solve(): true if `node` ends on the source side of the minimum
  /// cut. The source side is the largest minimum-cut source set: every node
  /// that cannot reach the sink in the residual graph.
  bool source_side(std::size_t node) const { return source_side_[node]; }

private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  struct Edge {
    std::size_t to;
    std::size_t next;  // next arc out of the same node
    double cap;
  };

  void link(std::size_t a, std::size_t b, double cap_ab, double cap_ba);
  bool levels();
  double push(std::size_t u, double limit);

  std::size_t source_;
  std::size_t sink_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> head_;
  std::vector<int> level_;
  std::vector<std::size_t> next_;
  std::vector<std::size_t> queue_;
  std::vector<char> source_side_;
  double eps_ = 0.0;
  double max_cap_ = 0.0;
};

}  // namespace machash
