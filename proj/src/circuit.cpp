#include "pcfuzz/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "pcfuzz/error.hpp"
#include "pcfuzz/learning.hpp"
#include "pcfuzz/text.hpp"

namespace pcfuzz {

Circuit::Circuit(Vocabulary vocab, std::size_t max_length,
                 std::vector<std::string> symbols)
    : vocab_(std::move(vocab)),
      max_length_(max_length),
      symbols_(std::move(symbols)) {}

NodeId Circuit::add_leaf(TokenId token, std::uint32_t position) {
  Node n;
  n.kind = NodeKind::kLeaf;
  n.token = token;
  n.begin = position;
  n.end = position + 1;
  n.edge_begin = static_cast<std::uint32_t>(edges_.size());
  nodes_.push_back(n);
  sum_label_index_.push_back(-1);
  product_label_index_.push_back(-1);
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Circuit::add_product(std::span<const NodeId> children) {
  Node n;
  n.kind = NodeKind::kProduct;
  n.edge_begin = static_cast<std::uint32_t>(edges_.size());
  n.edge_count = static_cast<std::uint32_t>(children.size());
  n.begin = UINT32_MAX;
  n.end = 0;
  for (NodeId c : children) {
    if (c >= nodes_.size()) throw UsageError("product child does not exist");
    n.begin = std::min(n.begin, nodes_[c].begin);
    n.end = std::max(n.end, nodes_[c].end);
    edges_.push_back(c);
    weights_.push_back(1.0);
  }
  if (children.empty()) n.begin = 0;
  nodes_.push_back(n);
  sum_label_index_.push_back(-1);
  product_label_index_.push_back(-1);
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Circuit::add_sum(std::span<const NodeId> children,
                        std::span<const double> weights) {
  if (children.size() != weights.size()) {
    throw UsageError("sum node needs one weight per child");
  }
  Node n;
  n.kind = NodeKind::kSum;
  n.edge_begin = static_cast<std::uint32_t>(edges_.size());
  n.edge_count = static_cast<std::uint32_t>(children.size());
  n.begin = UINT32_MAX;
  n.end = 0;
  for (std::size_t e = 0; e < children.size(); ++e) {
    NodeId c = children[e];
    if (c >= nodes_.size()) throw UsageError("sum child does not exist");
    n.begin = std::min(n.begin, nodes_[c].begin);
    n.end = std::max(n.end, nodes_[c].end);
    edges_.push_back(c);
    weights_.push_back(weights[e]);
  }
  if (children.empty()) n.begin = 0;
  nodes_.push_back(n);
  sum_label_index_.push_back(-1);
  product_label_index_.push_back(-1);
  return static_cast<NodeId>(nodes_.size() - 1);
}

void Circuit::set_root(NodeId root) {
  if (root >= nodes_.size()) throw UsageError("root does not exist");
  root_ = root;
  has_root_ = true;
}

void Circuit::add_sum_label(SumLabel label) {
  if (label.node >= nodes_.size()) throw UsageError("label for unknown node");
  sum_label_index_[label.node] = static_cast<std::int32_t>(sum_labels_.size());
  sum_labels_.push_back(label);
}

void Circuit::add_product_label(ProductLabel label) {
  if (label.node >= nodes_.size()) throw UsageError("label for unknown node");
  product_label_index_[label.node] =
      static_cast<std::int32_t>(product_labels_.size());
  product_labels_.push_back(label);
}

std::size_t Circuit::free_parameters() const {
  std::size_t k = 0;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::kSum && n.edge_count > 0) k += n.edge_count - 1;
  }
  return k;
}

std::span<const NodeId> Circuit::children(NodeId id) const {
  const Node& n = nodes_[id];
  return {edges_.data() + n.edge_begin, n.edge_count};
}

std::span<const double> Circuit::weights(NodeId id) const {
  const Node& n = nodes_[id];
  return {weights_.data() + n.edge_begin, n.edge_count};
}

std::span<double> Circuit::weights(NodeId id) {
  const Node& n = nodes_[id];
  return {weights_.data() + n.edge_begin, n.edge_count};
}

std::optional<NodeId> Circuit::find_sum(SymbolId symbol, std::uint32_t begin,
                                        std::uint32_t end) const {
  for (const auto& l : sum_labels_) {
    if (l.symbol == symbol && l.begin == begin && l.end == end) return l.node;
  }
  return std::nullopt;
}

const ProductLabel* Circuit::product_label(NodeId id) const {
  if (id >= product_label_index_.size() || product_label_index_[id] < 0) {
    return nullptr;
  }
  return &product_labels_[static_cast<std::size_t>(product_label_index_[id])];
}

const SumLabel* Circuit::sum_label(NodeId id) const {
  if (id >= sum_label_index_.size() || sum_label_index_[id] < 0) return nullptr;
  return &sum_labels_[static_cast<std::size_t>(sum_label_index_[id])];
}

std::string Circuit::describe(NodeId id) const {
  const Node& n = nodes_[id];
  const std::string scope =
      "[" + std::to_string(n.begin) + "," + std::to_string(n.end) + ")";
  switch (n.kind) {
    case NodeKind::kLeaf:
      return "leaf " +
             (n.token < vocab_.size() ? vocab_.name(n.token)
                                      : "#" + std::to_string(n.token)) +
             "@" + std::to_string(n.begin);
    case NodeKind::kProduct:
      if (const auto* l = product_label(id)) {
        return "product rule " + std::to_string(l->rule) + " split " +
               std::to_string(l->split) + " " + scope;
      }
      return "product " + scope;
    case NodeKind::kSum:
      if (has_root_ && id == root_) return "root";
      if (const auto* l = sum_label(id)) {
        std::string sym = l->symbol < symbols_.size()
                              ? symbols_[l->symbol]
                              : "#" + std::to_string(l->symbol);
        return "sum " + sym + " " + scope;
      }
      return "sum " + scope;
  }
  return {};
}

bool Circuit::operator==(const Circuit& o) const {
  if (!(vocab_ == o.vocab_) || max_length_ != o.max_length_ ||
      symbols_ != o.symbols_ || edges_ != o.edges_ || weights_ != o.weights_ ||
      root_ != o.root_ || has_root_ != o.has_root_ ||
      nodes_.size() != o.nodes_.size() ||
      sum_labels_.size() != o.sum_labels_.size() ||
      product_labels_.size() != o.product_labels_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& a = nodes_[i];
    const Node& b = o.nodes_[i];
    if (a.kind != b.kind || a.edge_begin != b.edge_begin ||
        a.edge_count != b.edge_count || a.token != b.token ||
        a.begin != b.begin || a.end != b.end) {
      return false;
    }
  }
  for (std::size_t i = 0; i < sum_labels_.size(); ++i) {
    const auto& a = sum_labels_[i];
    const auto& b = o.sum_labels_[i];
    if (a.symbol != b.symbol || a.begin != b.begin || a.end != b.end ||
        a.node != b.node) {
      return false;
    }
  }
  for (std::size_t i = 0; i < product_labels_.size(); ++i) {
    const auto& a = product_labels_[i];
    const auto& b = o.product_labels_[i];
    if (a.rule != b.rule || a.begin != b.begin || a.split != b.split ||
        a.end != b.end || a.node != b.node) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Compilation

namespace {

class SpanTable {
 public:
  SpanTable(std::size_t symbols, std::size_t n)
      : n_(n), data_(symbols * n * (n + 1), kAbsent) {}

  static constexpr std::int64_t kAbsent = -1;
  static constexpr std::int64_t kNeeded = -2;

  std::int64_t& at(SymbolId a, std::size_t i, std::size_t len) {
    return data_[(a * n_ + i) * (n_ + 1) + len];
  }

 private:
  std::size_t n_;
  std::vector<std::int64_t> data_;
};

}  // namespace

Circuit compile(const CnfGrammar& g, std::size_t n,
                const CompileOptions& options) {
  if (n == 0) throw UsageError("compile: max length must be >= 1");
  const std::size_t num_symbols = g.num_nonterminals();
  const std::size_t vocab_size = g.vocab().size();
  const auto derivable = g.derivable_lengths(n);
  const auto& binary = g.binary_rules();

  auto capacity_error = [&](std::size_t count) {
    return CapacityError(
        "circuit for max length " + std::to_string(n) + " needs more than " +
        std::to_string(options.max_nodes) + " nodes (reached " +
        std::to_string(count) + "); size grows as rules * n^3, lower the "
        "max length or simplify the grammar");
  };

  // Mark every (A, i, len) reachable from the root, longest spans first, and
  // count the nodes that will be created.
  SpanTable table(num_symbols, n);
  bool any_length = false;
  for (std::size_t len = 1; len <= n; ++len) {
    if (derivable[g.entry()][len]) {
      table.at(g.entry(), 0, len) = SpanTable::kNeeded;
      any_length = true;
    }
  }
  if (!any_length) {
    throw InputError("grammar derives no string of length <= " +
                     std::to_string(n));
  }
  std::size_t planned = 1;  // root
  std::vector<char> leaf_needed(n * vocab_size, 0);
  for (std::size_t len = n; len >= 1; --len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      for (SymbolId a = 0; a < num_symbols; ++a) {
        if (table.at(a, i, len) != SpanTable::kNeeded) continue;
        ++planned;
        for (std::size_t r : g.rules_of(a)) {
          if (g.is_binary(r)) {
            if (len < 2) continue;
            const auto& br = binary[r];
            for (std::size_t left = 1; left < len; ++left) {
              if (!derivable[br.left][left] || !derivable[br.right][len - left]) {
                continue;
              }
              ++planned;
              table.at(br.left, i, left) = SpanTable::kNeeded;
              table.at(br.right, i + left, len - left) = SpanTable::kNeeded;
            }
          } else if (len == 1) {
            const auto& tr = g.terminal_rules()[r - binary.size()];
            char& flag = leaf_needed[i * vocab_size + tr.token];
            if (!flag) {
              flag = 1;
              ++planned;
            }
          }
        }
        if (planned > options.max_nodes) throw capacity_error(planned);
      }
    }
  }

  Circuit c(g.vocab(), n, g.nonterminals());
  std::vector<NodeId> leaf_id(n * vocab_size, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (TokenId t = 0; t < vocab_size; ++t) {
      if (leaf_needed[i * vocab_size + t]) {
        leaf_id[i * vocab_size + t] =
            c.add_leaf(t, static_cast<std::uint32_t>(i));
      }
    }
  }

  std::vector<NodeId> kids;
  std::vector<double> w;
  for (std::size_t len = 1; len <= n; ++len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      const auto j = static_cast<std::uint32_t>(i + len);
      for (SymbolId a = 0; a < num_symbols; ++a) {
        if (table.at(a, i, len) != SpanTable::kNeeded) continue;
        kids.clear();
        for (std::size_t r : g.rules_of(a)) {
          if (g.is_binary(r)) {
            if (len < 2) continue;
            const auto& br = binary[r];
            for (std::size_t left = 1; left < len; ++left) {
              if (!derivable[br.left][left] || !derivable[br.right][len - left]) {
                continue;
              }
              const NodeId pc[2] = {
                  static_cast<NodeId>(table.at(br.left, i, left)),
                  static_cast<NodeId>(table.at(br.right, i + left, len - left))};
              NodeId p = c.add_product(pc);
              c.add_product_label({static_cast<std::uint32_t>(r),
                                   static_cast<std::uint32_t>(i),
                                   static_cast<std::uint32_t>(i + left), j, p});
              kids.push_back(p);
            }
          } else if (len == 1) {
            const auto& tr = g.terminal_rules()[r - binary.size()];
            kids.push_back(leaf_id[i * vocab_size + tr.token]);
          }
        }
        w.assign(kids.size(), 1.0 / static_cast<double>(kids.size()));
        NodeId s = c.add_sum(kids, w);
        c.add_sum_label({a, static_cast<std::uint32_t>(i), j, s});
        table.at(a, i, len) = s;
      }
    }
  }

  kids.clear();
  for (std::size_t len = 1; len <= n; ++len) {
    if (derivable[g.entry()][len]) {
      kids.push_back(static_cast<NodeId>(table.at(g.entry(), 0, len)));
    }
  }
  w.assign(kids.size(), 1.0 / static_cast<double>(kids.size()));
  c.set_root(c.add_sum(kids, w));
  return c;
}

// ---------------------------------------------------------------------------
// Weight initialization

void init_uniform(Circuit& c) {
  for (NodeId id = 0; id < c.size(); ++id) {
    if (c.node(id).kind != NodeKind::kSum) continue;
    auto w = c.weights(id);
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
  }
}

void init_random(Circuit& c, std::uint64_t seed) {
  Rng rng(seed);
  for (NodeId id = 0; id < c.size(); ++id) {
    if (c.node(id).kind != NodeKind::kSum) continue;
    auto w = c.weights(id);
    double total = 0.0;
    for (double& x : w) {
      x = 0.05 + rng.uniform();
      total += x;
    }
    for (double& x : w) x /= total;
  }
}

void init_tied_to_pcfg(Circuit& c, const Pcfg& p) {
  const CnfGrammar& g = p.grammar();
  if (!(g.vocab() == c.vocab()) || g.nonterminals() != c.symbols()) {
    throw UsageError("pCFG and circuit were built from different grammars");
  }
  const std::size_t n = c.max_length();
  const auto mass = p.length_masses(n);
  const std::size_t vocab_size = g.vocab().size();
  std::unordered_map<std::size_t, std::size_t> terminal_rule;
  for (std::size_t k = 0; k < g.terminal_rules().size(); ++k) {
    const auto& tr = g.terminal_rules()[k];
    terminal_rule[tr.lhs * vocab_size + tr.token] = g.binary_rules().size() + k;
  }

  auto set_uniform = [&](NodeId id) {
    auto w = c.weights(id);
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
  };

  for (const auto& label : c.sum_labels()) {
    const std::size_t len = label.end - label.begin;
    const double total = mass[label.symbol][len];
    if (!(total > 0.0)) {
      set_uniform(label.node);
      continue;
    }
    auto kids = c.children(label.node);
    auto w = c.weights(label.node);
    for (std::size_t e = 0; e < kids.size(); ++e) {
      const Node& child = c.node(kids[e]);
      double value = 0.0;
      if (child.kind == NodeKind::kLeaf) {
        auto it = terminal_rule.find(label.symbol * vocab_size + child.token);
        if (it != terminal_rule.end()) value = p.prob(it->second);
      } else if (const auto* pl = c.product_label(kids[e])) {
        const auto& br = g.binary_rules()[pl->rule];
        value = p.prob(pl->rule) * mass[br.left][pl->split - pl->begin] *
                mass[br.right][pl->end - pl->split];
      }
      w[e] = value / total;
    }
    double sum = 0.0;
    for (double x : w) sum += x;
    if (sum > 0.0) {
      for (double& x : w) x /= sum;
    } else {
      set_uniform(label.node);
    }
  }

  auto kids = c.children(c.root());
  auto w = c.weights(c.root());
  double total = 0.0;
  for (std::size_t e = 0; e < kids.size(); ++e) {
    const auto* l = c.sum_label(kids[e]);
    w[e] = l ? mass[l->symbol][l->end - l->begin] : 0.0;
    total += w[e];
  }
  if (total > 0.0) {
    for (double& x : w) x /= total;
  } else {
    set_uniform(c.root());
  }
}

// ---------------------------------------------------------------------------
// Validation

std::string ValidationReport::to_string() const {
  if (violations.empty()) return "ok\n";
  std::string out;
  for (const auto& v : violations) {
    out += "node " + std::to_string(v.node) + ": " + v.message + "\n";
  }
  return out;
}

ValidationReport validate(const Circuit& c) {
  ValidationReport report;
  auto add = [&](Violation::Kind k, NodeId id, std::string msg) {
    report.violations.push_back({k, id, c.describe(id) + ": " + std::move(msg)});
  };
  if (!c.has_root()) {
    report.violations.push_back({Violation::Kind::kRoot, 0, "no root node"});
    return report;
  }

  for (NodeId id = 0; id < c.size(); ++id) {
    const Node& node = c.node(id);
    auto kids = c.children(id);
    for (NodeId k : kids) {
      if (k >= id) {
        add(Violation::Kind::kCycle, id,
            "child " + std::to_string(k) + " does not precede its parent");
      }
    }
    switch (node.kind) {
      case NodeKind::kLeaf:
        if (node.token == Vocabulary::kEndMarker ||
            node.token >= c.vocab().size()) {
          add(Violation::Kind::kLeaf, id, "leaf token outside the vocabulary");
        }
        if (node.begin >= c.max_length()) {
          add(Violation::Kind::kLeaf, id, "leaf position beyond max length");
        }
        break;
      case NodeKind::kProduct: {
        if (kids.empty()) {
          add(Violation::Kind::kEmptyNode, id, "product without children");
          break;
        }
        std::vector<std::pair<std::uint32_t, std::uint32_t>> scopes;
        for (NodeId k : kids) scopes.emplace_back(c.node(k).begin, c.node(k).end);
        std::sort(scopes.begin(), scopes.end());
        for (std::size_t e = 1; e < scopes.size(); ++e) {
          if (scopes[e].first < scopes[e - 1].second) {
            add(Violation::Kind::kDecomposability, id,
                "children have overlapping scopes");
            break;
          }
        }
        break;
      }
      case NodeKind::kSum: {
        if (kids.empty()) {
          add(Violation::Kind::kEmptyNode, id, "sum without children");
          break;
        }
        if (id == c.root()) {
          std::vector<std::uint32_t> lengths;
          for (NodeId k : kids) {
            const Node& child = c.node(k);
            if (child.begin != 0) {
              add(Violation::Kind::kRoot, id, "root child does not start at 0");
            }
            lengths.push_back(child.end);
          }
          std::sort(lengths.begin(), lengths.end());
          if (std::adjacent_find(lengths.begin(), lengths.end()) !=
              lengths.end()) {
            add(Violation::Kind::kRoot, id, "two root children share a length");
          }
        } else {
          for (NodeId k : kids) {
            if (c.node(k).begin != node.begin || c.node(k).end != node.end) {
              add(Violation::Kind::kSmoothness, id,
                  "child " + std::to_string(k) + " has a different scope");
              break;
            }
          }
        }
        double total = 0.0;
        bool finite = true;
        for (double x : c.weights(id)) {
          if (!std::isfinite(x) || x < 0.0) finite = false;
          total += x;
        }
        if (!finite) {
          add(Violation::Kind::kNormalization, id,
              "weights must be finite and non-negative");
        } else if (std::abs(total - 1.0) > 1e-9) {
          add(Violation::Kind::kNormalization, id,
              "weights sum to " + text::format_double(total));
        }
        break;
      }
    }
  }

  std::vector<char> reached(c.size(), 0);
  reached[c.root()] = 1;
  for (NodeId id = static_cast<NodeId>(c.size()); id-- > 0;) {
    if (!reached[id]) continue;
    for (NodeId k : c.children(id)) {
      if (k < c.size()) reached[k] = 1;
    }
  }
  for (NodeId id = 0; id < c.size(); ++id) {
    if (!reached[id]) {
      add(Violation::Kind::kUnreachable, id, "not reachable from the root");
    }
  }
  return report;
}

}  // namespace pcfuzz
