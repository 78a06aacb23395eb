#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcfuzz/cnf.hpp"
#include "pcfuzz/vocabulary.hpp"

namespace pcfuzz {

class Pcfg;

using NodeId = std::uint32_t;

enum class NodeKind : std::uint8_t { kSum, kProduct, kLeaf };

// Scope of every node is the position interval [begin, end). Leaves cover one
// position; products the union of their children; sums the scope of their
// children.
struct Node {
  NodeKind kind = NodeKind::kLeaf;
  std::uint32_t edge_begin = 0;
  std::uint32_t edge_count = 0;
  TokenId token = 0;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
};

// Sum node computing symbol `symbol` over [begin, end).
struct SumLabel {
  SymbolId symbol;
  std::uint32_t begin;
  std::uint32_t end;
  NodeId node;
};

// Product node for binary rule `rule` (lhs -> left right) split at `split`.
struct ProductLabel {
  std::uint32_t rule;
  std::uint32_t begin;
  std::uint32_t split;
  std::uint32_t end;
  NodeId node;
};

// Sum/product/leaf DAG stored children-before-parents, so a single forward
// sweep over node ids is a valid bottom-up evaluation order. Sum edges carry
// weights; product edge weights are unused and fixed at 1.
//
// The root is a sum node over per-length subcircuits: each root child is the
// sum node (entry, 0, L) for one reachable length L.
class Circuit {
 public:
  Circuit() = default;
  Circuit(Vocabulary vocab, std::size_t max_length,
          std::vector<std::string> symbols = {});

  NodeId add_leaf(TokenId token, std::uint32_t position);
  NodeId add_product(std::span<const NodeId> children);
  NodeId add_sum(std::span<const NodeId> children,
                 std::span<const double> weights);
  void set_root(NodeId root);
  void add_sum_label(SumLabel label);
  void add_product_label(ProductLabel label);

  std::size_t size() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  // Sum edges minus one per sum node: the count of free weight parameters.
  std::size_t free_parameters() const;
  const Node& node(NodeId id) const { return nodes_[id]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::span<const NodeId> children(NodeId id) const;
  std::span<const double> weights(NodeId id) const;
  std::span<double> weights(NodeId id);
  const std::vector<double>& edge_weights() const { return weights_; }
  std::vector<double>& edge_weights() { return weights_; }
  const std::vector<NodeId>& edge_targets() const { return edges_; }

  NodeId root() const { return root_; }
  bool has_root() const { return has_root_; }
  std::size_t max_length() const { return max_length_; }
  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<std::string>& symbols() const { return symbols_; }
  const std::vector<SumLabel>& sum_labels() const { return sum_labels_; }
  const std::vector<ProductLabel>& product_labels() const {
    return product_labels_;
  }
  std::optional<NodeId> find_sum(SymbolId symbol, std::uint32_t begin,
                                 std::uint32_t end) const;
  const ProductLabel* product_label(NodeId id) const;
  const SumLabel* sum_label(NodeId id) const;
  std::string describe(NodeId id) const;

  bool operator==(const Circuit& other) const;

 private:
  Vocabulary vocab_;
  std::size_t max_length_ = 0;
  std::vector<std::string> symbols_;
  std::vector<Node> nodes_;
  std::vector<NodeId> edges_;
  std::vector<double> weights_;
  NodeId root_ = 0;
  bool has_root_ = false;
  std::vector<SumLabel> sum_labels_;
  std::vector<ProductLabel> product_labels_;
  std::vector<std::int32_t> sum_label_index_;
  std::vector<std::int32_t> product_label_index_;
};

struct CompileOptions {
  std::size_t max_nodes = 50'000'000;
};

// Builds the grammar-aware circuit for strings of length 1..n. Sum node
// (A, i, j) exists iff A derives a string of length j - i and the node is
// reachable from the root; its children are products (A -> B C, split k) with
// i < k < j, or leaves (t, i) for terminal rules A -> t when j = i + 1.
// Node count grows as O(|rules| * n^3); exceeding `max_nodes` throws
// CapacityError. Weights start uniform.
Circuit compile(const CnfGrammar& g, std::size_t n,
                const CompileOptions& options = {});

void init_uniform(Circuit& c);
void init_random(Circuit& c, std::uint64_t seed);
// Sets weights so the circuit reproduces `p` restricted to lengths <= n:
// edge (A,i,j) -> (A -> B C, k) gets p(A->BC) * in_B(k-i) * in_C(j-k) /
// in_A(j-i) where in_X(len) is the pCFG mass of X deriving a string of that
// length; root edges get in_entry(L) normalized over L <= n.
void init_tied_to_pcfg(Circuit& c, const Pcfg& p);

struct Violation {
  enum class Kind {
    kCycle,
    kDecomposability,
    kSmoothness,
    kNormalization,
    kLeaf,
    kEmptyNode,
    kUnreachable,
    kRoot,
  };
  Kind kind;
  NodeId node;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

ValidationReport validate(const Circuit& c);

// Versioned text format; weights written with 17 significant digits.
std::string save_circuit(const Circuit& c);
Circuit load_circuit(std::string_view text);

}  // namespace pcfuzz
