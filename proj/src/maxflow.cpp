#include "machash/maxflow.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace machash {

MaxFlow::MaxFlow(std::size_t nodes)
    : source_(nodes), sink_(nodes + 1), head_(nodes + 2, kNone), source_side_(nodes, 0) {}

void MaxFlow::reserve(std::size_t edges) { edges_.reserve(2 * edges); }

void MaxFlow::link(std::size_t a, std::size_t b, double cap_ab, double cap_ba) {
  if (cap_ab < 0 || cap_ba < 0) throw std::invalid_argument("negative capacity");
  if (cap_ab == 0 && cap_ba == 0) return;
  max_cap_ = std::max({max_cap_, cap_ab, cap_ba});
  // Paired arcs: arc e and e ^ 1 are each other's reverse.
  edges_.push_back({b, head_[a], cap_ab});
  head_[a] = edges_.size() - 1;
  edges_.push_back({a, head_[b], cap_ba});
  head_[b] = edges_.size() - 1;
}

void MaxFlow::add_terminal(std::size_t node, double from_source, double to_sink) {
  link(source_, node, from_source, 0.0);
  link(node, sink_, to_sink, 0.0);
}

void MaxFlow::add_edge(std::size_t from, std::size_t to, double capacity, double reverse_capacity) {
  if (from == to) return;
  link(from, to, capacity, reverse_capacity);
}

bool MaxFlow::levels() {
  std::fill(level_.begin(), level_.end(), -1);
  queue_.clear();
  level_[source_] = 0;
  queue_.push_back(source_);
  for (std::size_t qi = 0; qi < queue_.size(); ++qi) {
    const auto u = queue_[qi];
    for (auto e = head_[u]; e != kNone; e = edges_[e].next) {
      const auto& arc = edges_[e];
      if (arc.cap > eps_ && level_[arc.to] < 0) {
        level_[arc.to] = level_[u] + 1;
        queue_.push_back(arc.to);
      }
    }
  }
  return level_[sink_] >= 0;
}

double MaxFlow::push(std::size_t u, double limit) {
  if (u == sink_) return limit;
  double sent = 0.0;
  for (auto& e = next_[u]; e != kNone; e = edges_[e].next) {
    auto& arc = edges_[e];
    if (arc.cap <= eps_ || level_[arc.to] != level_[u] + 1) continue;
    const double got = push(arc.to, std::min(limit - sent, arc.cap));
    if (got > 0) {
      arc.cap -= got;
      edges_[e ^ 1].cap += got;
      sent += got;
      if (limit - sent <= eps_) return sent;
    }
  }
  return sent;
}

double MaxFlow::solve() {
  eps_ = 1e-13 * std::max(1.0, max_cap_);
  level_.assign(head_.size(), -1);
  double flow = 0.0;
  while (levels()) {
    next_ = head_;
    while (true) {
      const double f = push(source_, std::numeric_limits<double>::infinity());
      if (f <= 0) break;
      flow += f;
    }
  }
  // Nodes that can still reach the sink form the sink side.
  std::vector<char> reaches_sink(head_.size(), 0);
  queue_.clear();
  reaches_sink[sink_] = 1;
  queue_.push_back(sink_);
  for (std::size_t qi = 0; qi < queue_.size(); ++qi) {
    const auto v = queue_[qi];
    for (auto e = head_[v]; e != kNone; e = edges_[e].next) {
      // arc e ^ 1 runs from edges_[e].to into v
      const auto w = edges_[e].to;
      if (!reaches_sink[w] && edges_[e ^ 1].cap > eps_) {
        reaches_sink[w] = 1;
        queue_.push_back(w);
      }
    }
  }
  for (std::size_t n = 0; n < source_side_.size(); ++n) source_side_[n] = !reaches_sink[n];
  return flow;
}

}  // namespace machash
