#include "rescal/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "rescal/errors.hpp"

namespace rescal {

DirectedGraph::DirectedGraph(std::size_t num_vertices, std::vector<Edge> edges)
    : num_vertices_(num_vertices), edges_(std::move(edges)) {
  if (num_vertices_ == 0) throw std::invalid_argument("graph needs at least one vertex");
  if (num_vertices_ > std::size_t{UINT32_MAX}) throw std::invalid_argument("too many vertices");
  for (const Edge& e : edges_) {
    if (e.sub >= num_vertices_ || e.obj >= num_vertices_)
      throw std::invalid_argument("edge endpoint out of range");
    if (e.sub == e.obj) throw InvalidInput("self-loop on vertex " + std::to_string(e.sub));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  row_offsets_.assign(num_vertices_ + 1, 0);
  targets_.reserve(edges_.size());
  for (const Edge& e : edges_) {
    ++row_offsets_[e.sub + 1];
    targets_.push_back(e.obj);
  }
  for (std::size_t v = 0; v < num_vertices_; ++v) row_offsets_[v + 1] += row_offsets_[v];
}

std::span<const EntityId> DirectedGraph::successors(EntityId v) const {
  if (v >= num_vertices_) throw std::invalid_argument("vertex out of range");
  return std::span<const EntityId>(targets_).subspan(row_offsets_[v], row_offsets_[v + 1] - row_offsets_[v]);
}

bool DirectedGraph::contains(Edge e) const {
  if (e.sub >= num_vertices_ || e.obj >= num_vertices_) return false;
  auto succ = successors(e.sub);
  return std::binary_search(succ.begin(), succ.end(), e.obj);
}

DirectedGraph build_complete_binary_tree(std::size_t depth) {
  if (depth == 0) throw std::invalid_argument("tree depth must be >= 1");
  if (depth > 31) throw std::invalid_argument("tree depth too large");
  const std::size_t n = (std::size_t{1} << depth) - 1;
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  for (std::size_t v = 1; v < n; ++v)
    edges.push_back({static_cast<EntityId>((v - 1) / 2), static_cast<EntityId>(v)});
  return DirectedGraph(n, std::move(edges));
}

std::size_t closed_tree_edge_count(std::size_t depth) {
  std::size_t total = 0;
  for (std::size_t k = 0; k < depth; ++k) total += k * (std::size_t{1} << k);
  return total;
}

bool is_acyclic(const DirectedGraph& g) {
  // Kahn's algorithm.
  std::vector<std::size_t> indegree(g.num_vertices(), 0);
  for (const Edge& e : g.edges()) ++indegree[e.obj];
  std::vector<EntityId> ready;
  for (std::size_t v = 0; v < g.num_vertices(); ++v)
    if (indegree[v] == 0) ready.push_back(static_cast<EntityId>(v));
  std::size_t visited = 0;
  while (!ready.empty()) {
    EntityId v = ready.back();
    ready.pop_back();
    ++visited;
    for (EntityId w : g.successors(v))
      if (--indegree[w] == 0) ready.push_back(w);
  }
  return visited == g.num_vertices();
}

namespace {

// Reachable set of every vertex in [first, last), appended per source in
// ascending source order, targets sorted.
std::vector<Edge> reach_range(const DirectedGraph& g, std::size_t first, std::size_t last) {
  const std::size_t n = g.num_vertices();
  std::vector<std::size_t> stamp(n, SIZE_MAX);
  std::vector<EntityId> stack;
  std::vector<EntityId> reached;
  std::vector<Edge> out;
  for (std::size_t src = first; src < last; ++src) {
    reached.clear();
    stack.assign(1, static_cast<EntityId>(src));
    while (!stack.empty()) {
      EntityId v = stack.back();
      stack.pop_back();
      for (EntityId w : g.successors(v)) {
        if (stamp[w] == src) continue;
        stamp[w] = src;
        reached.push_back(w);
        stack.push_back(w);
      }
    }
    std::sort(reached.begin(), reached.end());
    for (EntityId w : reached) out.push_back({static_cast<EntityId>(src), w});
  }
  return out;
}

}  // namespace

DirectedGraph transitive_closure(const DirectedGraph& g, unsigned threads) {
  if (!is_acyclic(g)) throw InvalidInput("transitive closure requires an acyclic graph");
  const std::size_t n = g.num_vertices();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));

  std::vector<std::vector<Edge>> parts(threads);
  if (threads == 1) {
    parts[0] = reach_range(g, 0, n);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      std::size_t first = n * t / threads, last = n * (t + 1) / threads;
      pool.emplace_back([&, t, first, last] { parts[t] = reach_range(g, first, last); });
    }
  }
  std::vector<Edge> edges;
  for (auto& p : parts) edges.insert(edges.end(), p.begin(), p.end());
  return DirectedGraph(n, std::move(edges));
}

EdgePartitions::EdgePartitions(DirectedGraph closed) : graph_(std::move(closed)) {
  reversed_.reserve(graph_.num_edges());
  for (const Edge& e : graph_.edges()) reversed_.push_back({e.obj, e.sub});
  std::sort(reversed_.begin(), reversed_.end());

  const std::size_t n = graph_.num_vertices();
  complement_offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v)
    complement_offsets_[v + 1] =
        complement_offsets_[v] + n - graph_.successors(static_cast<EntityId>(v)).size();
}

std::size_t EdgePartitions::complement_size() const noexcept { return complement_offsets_.back(); }

bool EdgePartitions::in_complement(Edge e) const {
  return e.sub < num_vertices() && e.obj < num_vertices() && !graph_.contains(e);
}

namespace {

// Column of the j-th non-successor in a row with sorted successors.
EntityId nth_gap_column(std::span<const EntityId> succ, std::size_t j) {
  std::size_t col = j;
  for (EntityId s : succ) {
    if (s <= col)
      ++col;
    else
      break;
  }
  return static_cast<EntityId>(col);
}

}  // namespace

Edge EdgePartitions::complement_at(std::size_t k) const {
  if (k >= complement_size()) throw std::out_of_range("complement rank out of range");
  auto it = std::upper_bound(complement_offsets_.begin(), complement_offsets_.end(), k);
  auto row = static_cast<EntityId>(std::distance(complement_offsets_.begin(), it) - 1);
  return {row, nth_gap_column(graph_.successors(row), k - complement_offsets_[row])};
}

std::vector<Edge> EdgePartitions::complement_at(std::span<const std::size_t> sorted_ranks) const {
  std::vector<Edge> out;
  out.reserve(sorted_ranks.size());
  EntityId row = 0;
  for (std::size_t k : sorted_ranks) {
    if (k >= complement_size()) throw std::out_of_range("complement rank out of range");
    while (complement_offsets_[row + 1] <= k) ++row;
    out.push_back({row, nth_gap_column(graph_.successors(row), k - complement_offsets_[row])});
  }
  return out;
}

std::vector<Edge> EdgePartitions::materialize_complement() const {
  std::vector<Edge> out;
  out.reserve(complement_size());
  const auto n = static_cast<EntityId>(num_vertices());
  for (EntityId u = 0; u < n; ++u) {
    auto succ = graph_.successors(u);
    auto it = succ.begin();
    for (EntityId v = 0; v < n; ++v) {
      if (it != succ.end() && *it == v) {
        ++it;
        continue;
      }
      out.push_back({u, v});
    }
  }
  return out;
}

EdgePartitions edge_partitions(const DirectedGraph& closed) { return EdgePartitions(closed); }

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed) {
  if (n > population) throw std::invalid_argument("sample size exceeds population");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out;
  out.reserve(n);
  if (2 * n >= population) {
    // Dense draw: partial Fisher-Yates over the full index range.
    std::vector<std::size_t> all(population);
    for (std::size_t i = 0; i < population; ++i) all[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, population - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    out.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
  } else {
    // Floyd's algorithm.
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(n * 2);
    for (std::size_t j = population - n; j < population; ++j) {
      std::uniform_int_distribution<std::size_t> pick(0, j);
      std::size_t t = pick(rng);
      if (!chosen.insert(t).second) chosen.insert(j);
    }
    out.assign(chosen.begin(), chosen.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Edge> sample_edges(std::span<const Edge> edges, std::size_t n, std::uint64_t seed) {
  if (n > edges.size()) throw std::invalid_argument("cannot sample more edges than the set holds");
  std::vector<Edge> sorted(edges.begin(), edges.end());
  if (!std::is_sorted(sorted.begin(), sorted.end())) std::sort(sorted.begin(), sorted.end());
  std::vector<Edge> out;
  out.reserve(n);
  for (std::size_t k : sample_indices(sorted.size(), n, seed)) out.push_back(sorted[k]);
  return out;
}

std::vector<Edge> sample_complement(const EdgePartitions& p, std::size_t n, std::uint64_t seed) {
  if (n > p.complement_size()) throw std::invalid_argument("cannot sample more edges than the set holds");
  auto ranks = sample_indices(p.complement_size(), n, seed);
  return p.complement_at(ranks);
}

EntityId Vocab::intern(std::string_view name) {
  std::string key(name);
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  auto id = static_cast<EntityId>(names_.size());
  names_.push_back(key);
  ids_.emplace(std::move(key), id);
  return id;
}

std::optional<EntityId> Vocab::find(std::string_view name) const {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  return std::nullopt;
}

Vocab Vocab::numeric(std::size_t n) {
  Vocab v;
  for (std::size_t i = 0; i < n; ++i) v.intern(std::to_string(i));
  return v;
}

IngestedGraph read_edge_list(std::istream& in) {
  Vocab vocab;
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(lineno, "expected subject<TAB>object");
    if (line.find('\t', tab + 1) != std::string::npos) throw ParseError(lineno, "more than two fields");
    std::string_view sub(line.data(), tab);
    std::string_view obj(line.data() + tab + 1, line.size() - tab - 1);
    if (sub.empty() || obj.empty()) throw ParseError(lineno, "empty entity name");
    if (sub == obj) throw InvalidInput("line " + std::to_string(lineno) + ": self-loop on '" + std::string(sub) + "'");
    EntityId s = vocab.intern(sub);
    EntityId o = vocab.intern(obj);
    edges.push_back({s, o});
  }
  if (edges.empty()) throw InvalidInput("edge list contains no edges");
  const std::size_t raw = edges.size();
  DirectedGraph g(vocab.size(), std::move(edges));
  const std::size_t dups = raw - g.num_edges();
  return {std::move(g), std::move(vocab), dups};
}

IngestedGraph ingest_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_edge_list(in);
}

void write_edge_list(std::ostream& out, const DirectedGraph& g, const Vocab& vocab) {
  if (vocab.size() < g.num_vertices()) throw std::invalid_argument("vocabulary smaller than graph");
  for (const Edge& e : g.edges()) out << vocab.name(e.sub) << '\t' << vocab.name(e.obj) << '\n';
}

void export_edge_list(const std::filesystem::path& path, const DirectedGraph& g, const Vocab& vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_edge_list(out, g, vocab);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace rescal
