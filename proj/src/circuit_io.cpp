#include <cmath>

#include "pcfuzz/circuit.hpp"
#include "pcfuzz/error.hpp"
#include "pcfuzz/text.hpp"

namespace pcfuzz {

namespace {

constexpr std::string_view kMagic = "pcfuzz-circuit";
constexpr int kVersion = 1;

class LineReader {
 public:
  explicit LineReader(std::string_view text) : lines_(text::split(text, '\n')) {}

  // Next non-blank line split on whitespace.
  std::vector<std::string> next(const char* expecting) {
    while (pos_ < lines_.size()) {
      auto fields = text::split_whitespace(lines_[pos_++]);
      if (!fields.empty()) return fields;
    }
    throw InputError(std::string("circuit file ends early, expected ") +
                     expecting);
  }

  std::vector<std::string> keyword(const char* word) {
    auto f = next(word);
    if (f[0] != word) fail("expected '" + std::string(word) + "'");
    return f;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError("circuit file line " + std::to_string(pos_) + ": " + msg);
  }

  std::size_t size(const std::string& s) const {
    try {
      return text::parse_size(s);
    } catch (const Error&) {
      fail("bad integer '" + s + "'");
    }
  }

  double number(const std::string& s) const {
    try {
      return text::parse_double(s);
    } catch (const Error&) {
      fail("bad number '" + s + "'");
    }
  }

 private:
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string save_circuit(const Circuit& c) {
  if (!c.has_root()) throw UsageError("cannot save a circuit without a root");
  std::string out;
  out += std::string(kMagic) + " " + std::to_string(kVersion) + "\n";
  out += "max_length " + std::to_string(c.max_length()) + "\n";
  out += "tokens";
  for (const auto& name : c.vocab().names()) out += " " + name;
  out += "\nsymbols";
  for (const auto& s : c.symbols()) out += " " + s;
  out += "\nnodes " + std::to_string(c.size()) + "\n";
  for (NodeId id = 0; id < c.size(); ++id) {
    const Node& n = c.node(id);
    out += std::to_string(id);
    switch (n.kind) {
      case NodeKind::kLeaf:
        out += " L " + std::to_string(n.token) + " " + std::to_string(n.begin);
        break;
      case NodeKind::kProduct:
        out += " P " + std::to_string(n.edge_count);
        for (NodeId k : c.children(id)) out += " " + std::to_string(k);
        break;
      case NodeKind::kSum: {
        out += " S " + std::to_string(n.edge_count);
        auto kids = c.children(id);
        auto w = c.weights(id);
        for (std::size_t e = 0; e < kids.size(); ++e) {
          out += " " + std::to_string(kids[e]) + " " + text::format_double(w[e]);
        }
        break;
      }
    }
    out += "\n";
  }
  out += "root " + std::to_string(c.root()) + "\n";
  out += "sum_labels " + std::to_string(c.sum_labels().size()) + "\n";
  for (const auto& l : c.sum_labels()) {
    out += std::to_string(l.node) + " " + std::to_string(l.symbol) + " " +
           std::to_string(l.begin) + " " + std::to_string(l.end) + "\n";
  }
  out += "product_labels " + std::to_string(c.product_labels().size()) + "\n";
  for (const auto& l : c.product_labels()) {
    out += std::to_string(l.node) + " " + std::to_string(l.rule) + " " +
           std::to_string(l.begin) + " " + std::to_string(l.split) + " " +
           std::to_string(l.end) + "\n";
  }
  out += "end\n";
  return out;
}

Circuit load_circuit(std::string_view text_in) {
  LineReader r(text_in);
  auto header = r.next("header");
  if (header.size() != 2 || header[0] != kMagic) {
    r.fail("not a circuit file");
  }
  if (header[1] != std::to_string(kVersion)) {
    r.fail("unsupported circuit format version " + header[1]);
  }
  auto f = r.keyword("max_length");
  if (f.size() != 2) r.fail("expected max_length <n>");
  const std::size_t n = r.size(f[1]);

  f = r.keyword("tokens");
  if (f.size() < 2 || f[1] != Vocabulary::kEndMarkerName) {
    r.fail("token list must start with the end marker");
  }
  Vocabulary vocab(std::vector<std::string>(f.begin() + 2, f.end()));
  f = r.keyword("symbols");
  std::vector<std::string> symbols(f.begin() + 1, f.end());

  f = r.keyword("nodes");
  if (f.size() != 2) r.fail("expected nodes <count>");
  const std::size_t count = r.size(f[1]);
  Circuit c(vocab, n, symbols);
  std::vector<NodeId> kids;
  std::vector<double> w;
  for (std::size_t id = 0; id < count; ++id) {
    f = r.next("node");
    if (f.size() < 3 || r.size(f[0]) != id) r.fail("expected node " + std::to_string(id));
    const std::string& kind = f[1];
    if (kind == "L") {
      if (f.size() != 4) r.fail("leaf needs token and position");
      const std::size_t tok = r.size(f[2]);
      if (tok >= vocab.size()) r.fail("leaf token out of range");
      c.add_leaf(static_cast<TokenId>(tok),
                 static_cast<std::uint32_t>(r.size(f[3])));
      continue;
    }
    const std::size_t m = r.size(f[2]);
    const bool sum = kind == "S";
    if (!sum && kind != "P") r.fail("unknown node kind '" + kind + "'");
    if (f.size() != 3 + m * (sum ? 2 : 1)) r.fail("wrong number of fields");
    kids.clear();
    w.clear();
    for (std::size_t e = 0; e < m; ++e) {
      std::size_t k = r.size(f[3 + e * (sum ? 2 : 1)]);
      if (k >= id) r.fail("child " + std::to_string(k) + " must precede node");
      kids.push_back(static_cast<NodeId>(k));
      if (sum) {
        double x = r.number(f[4 + e * 2]);
        if (!std::isfinite(x)) r.fail("non-finite weight");
        w.push_back(x);
      }
    }
    if (sum) {
      c.add_sum(kids, w);
    } else {
      c.add_product(kids);
    }
  }
  f = r.keyword("root");
  if (f.size() != 2) r.fail("expected root <id>");
  const std::size_t root = r.size(f[1]);
  if (root >= count) r.fail("root out of range");
  c.set_root(static_cast<NodeId>(root));

  f = r.keyword("sum_labels");
  if (f.size() != 2) r.fail("expected sum_labels <count>");
  for (std::size_t k = r.size(f[1]); k > 0; --k) {
    auto l = r.next("sum label");
    if (l.size() != 4) r.fail("sum label needs node symbol begin end");
    const std::size_t node = r.size(l[0]);
    const std::size_t sym = r.size(l[1]);
    if (node >= count || sym >= symbols.size()) r.fail("sum label out of range");
    c.add_sum_label({static_cast<SymbolId>(sym),
                     static_cast<std::uint32_t>(r.size(l[2])),
                     static_cast<std::uint32_t>(r.size(l[3])),
                     static_cast<NodeId>(node)});
  }
  f = r.keyword("product_labels");
  if (f.size() != 2) r.fail("expected product_labels <count>");
  for (std::size_t k = r.size(f[1]); k > 0; --k) {
    auto l = r.next("product label");
    if (l.size() != 5) r.fail("product label needs node rule begin split end");
    const std::size_t node = r.size(l[0]);
    if (node >= count) r.fail("product label out of range");
    c.add_product_label({static_cast<std::uint32_t>(r.size(l[1])),
                         static_cast<std::uint32_t>(r.size(l[2])),
                         static_cast<std::uint32_t>(r.size(l[3])),
                         static_cast<std::uint32_t>(r.size(l[4])),
                         static_cast<NodeId>(node)});
  }
  r.keyword("end");
  return c;
}

}  // namespace pcfuzz
