#pragma once

// Accepting-lasso search over lazily generated graphs.
//
// A graph type G provides
//   using Node = ...;  using Hash = ...;   (Node equality-comparable)
//   std::vector<Node> initial() const;
//   std::vector<Node> successors(const Node&) const;
//   bool accepting(const Node&) const;

#include "mas/error.hpp"

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mas {

template <class Node>
struct Lasso {
  std::vector<Node> prefix;
  std::vector<Node> cycle;  // cycle.back() -> cycle.front() closes the loop
};

namespace detail {

// Interns nodes and caches successor lists in discovery order.
template <class G>
class NodeTable {
 public:
  using Node = typename G::Node;

  NodeTable(const G& g, std::size_t cap) : g_(g), cap_(cap) {}

  int intern(const Node& n) {
    auto [it, fresh] = ids_.try_emplace(n, static_cast<int>(nodes_.size()));
    if (fresh) {
      if (nodes_.size() >= cap_)
        throw Error(Errc::budget_exceeded,
                    "state budget of " + std::to_string(cap_) + " exhausted");
      nodes_.push_back(n);
      succ_.emplace_back();
      expanded_.push_back(false);
      accepting_.push_back(g_.accepting(n) ? 1 : 0);
    }
    return it->second;
  }

  const std::vector<int>& successors(int id) {
    if (!expanded_[static_cast<std::size_t>(id)]) {
      std::vector<int> out;
      // Copy: interning may reallocate nodes_.
      const Node n = nodes_[static_cast<std::size_t>(id)];
      for (const auto& s : g_.successors(n)) out.push_back(intern(s));
      succ_[static_cast<std::size_t>(id)] = std::move(out);
      expanded_[static_cast<std::size_t>(id)] = true;
    }
    return succ_[static_cast<std::size_t>(id)];
  }

  bool accepting(int id) const { return accepting_[static_cast<std::size_t>(id)] != 0; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return nodes_.size(); }

 private:
  const G& g_;
  std::size_t cap_;
  std::unordered_map<Node, int, typename G::Hash> ids_;
  std::vector<Node> nodes_;
  std::vector<std::vector<int>> succ_;
  std::vector<bool> expanded_;
  std::vector<char> accepting_;
};

}  // namespace detail

struct SearchStats {
  std::size_t states = 0;
};

// Nested depth-first search (blue search with postorder red searches that stop
// at any node still on the blue stack). Deterministic in successor order.
template <class G>
std::optional<Lasso<typename G::Node>> nested_dfs(const G& g, std::size_t max_states,
                                                  SearchStats* stats = nullptr) {
  using Node = typename G::Node;
  detail::NodeTable<G> table(g, max_states);
  std::vector<char> blue, cyan, red;
  auto grow = [&] {
    blue.resize(table.size(), 0);
    cyan.resize(table.size(), 0);
    red.resize(table.size(), 0);
  };
  struct Frame {
    int id;
    std::size_t next;
  };

  std::optional<Lasso<Node>> found;
  auto report = [&] {
    if (stats) stats->states = table.size();
  };

  for (const auto& init : g.initial()) {
    const int root = table.intern(init);
    grow();
    if (blue[root]) continue;
    std::vector<Frame> stack{{root, 0}};
    blue[root] = cyan[root] = 1;
    while (!stack.empty()) {
      Frame& top = stack.back();
      const auto& succ = table.successors(top.id);
      grow();
      if (top.next < succ.size()) {
        const int s = succ[top.next++];
        if (!blue[s]) {
          blue[s] = cyan[s] = 1;
          stack.push_back({s, 0});
        }
        continue;
      }
      const int seed = top.id;
      if (table.accepting(seed)) {
        // Red search from the seed for a node on the blue stack.
        std::vector<Frame> rstack{{seed, 0}};
        int hit = -1;
        while (!rstack.empty() && hit < 0) {
          Frame& rt = rstack.back();
          const auto& rs = table.successors(rt.id);
          grow();
          if (rt.next >= rs.size()) {
            rstack.pop_back();
            continue;
          }
          const int t = rs[rt.next++];
          if (cyan[t]) {
            hit = t;
          } else if (!red[t]) {
            red[t] = 1;
            rstack.push_back({t, 0});
          }
        }
        if (hit >= 0) {
          Lasso<Node> l;
          std::size_t k = 0;
          while (stack[k].id != hit) ++k;
          for (std::size_t i = 0; i < k; ++i) l.prefix.push_back(table.node(stack[i].id));
          for (std::size_t i = k; i < stack.size(); ++i) l.cycle.push_back(table.node(stack[i].id));
          for (std::size_t i = 1; i < rstack.size(); ++i)
            l.cycle.push_back(table.node(rstack[i].id));
          report();
          return l;
        }
      }
      cyan[seed] = 0;
      stack.pop_back();
    }
  }
  report();
  return found;
}

// All reachable nodes are explored breadth-first; for each accepting node, in
// order of discovery, the shortest prefix and shortest cycle through it form a
// lasso. Returns at most `limit` lassos ordered by prefix length.
template <class G>
std::vector<Lasso<typename G::Node>> enumerate_lassos(const G& g, std::size_t limit,
                                                      std::size_t max_states,
                                                      SearchStats* stats = nullptr) {
  using Node = typename G::Node;
  detail::NodeTable<G> table(g, max_states);
  std::vector<int> parent, order;
  std::deque<int> queue;
  auto reach = [&](int id, int from) {
    if (static_cast<std::size_t>(id) >= parent.size()) parent.resize(id + 1, -2);
    if (parent[id] != -2) return;
    parent[id] = from;
    order.push_back(id);
    queue.push_back(id);
  };
  for (const auto& init : g.initial()) reach(table.intern(init), -1);
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : table.successors(u)) reach(v, u);
  }
  if (stats) stats->states = table.size();

  std::vector<Lasso<Node>> out;
  for (int a : order) {
    if (out.size() >= limit) break;
    if (!table.accepting(a)) continue;
    // Shortest cycle a -> ... -> a.
    std::unordered_map<int, int> back;
    std::deque<int> q;
    for (int v : table.successors(a))
      if (back.try_emplace(v, a).second) q.push_back(v);
    bool closed = back.count(a) > 0;
    while (!q.empty() && !closed) {
      const int u = q.front();
      q.pop_front();
      for (int v : table.successors(u)) {
        if (!back.try_emplace(v, u).second) continue;
        if (v == a) {
          closed = true;
          break;
        }
        q.push_back(v);
      }
    }
    if (!closed) continue;
    Lasso<Node> l;
    std::vector<int> cyc;
    for (int u = back[a]; u != a; u = back[u]) cyc.push_back(u);
    cyc.push_back(a);
    for (auto it = cyc.rbegin(); it != cyc.rend(); ++it) l.cycle.push_back(table.node(*it));
    std::vector<int> pre;
    for (int u = parent[a]; u >= 0; u = parent[u]) pre.push_back(u);
    for (auto it = pre.rbegin(); it != pre.rend(); ++it) l.prefix.push_back(table.node(*it));
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace mas
