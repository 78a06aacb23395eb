#include <cmath>
#include <map>

#include "pcfuzz/error.hpp"
#include "pcfuzz/inference.hpp"
#include "pcfuzz/learning.hpp"
#include "pcfuzz/text.hpp"

namespace pcfuzz {

double TrainReport::final_perplexity() const {
  if (loglik.empty() || tokens == 0) return 0.0;
  return std::exp(-loglik.back() / static_cast<double>(tokens));
}

std::string TrainReport::to_tsv() const {
  std::string out = "epoch\tloglik\n";
  for (std::size_t k = 0; k < loglik.size(); ++k) {
    out += std::to_string(k) + "\t" + text::format_double(loglik[k]) + "\n";
  }
  return out;
}

namespace {

struct UniqueItem {
  const TokenSeq* seq;
  std::size_t first_index;
  double count;
};

std::vector<UniqueItem> unique_items(const Corpus& corpus) {
  std::map<TokenSeq, std::size_t> index;
  std::vector<UniqueItem> out;
  for (std::size_t k = 0; k < corpus.items.size(); ++k) {
    auto [it, inserted] = index.emplace(corpus.items[k], out.size());
    if (inserted) {
      out.push_back({&corpus.items[k], k, 1.0});
    } else {
      out[it->second].count += 1.0;
    }
  }
  return out;
}

}  // namespace

TrainReport train_pc_em(Circuit& c, const Corpus& corpus,
                        const EmOptions& options) {
  if (options.epochs == 0) throw UsageError("training needs at least one epoch");
  if (options.smoothing < 0.0) throw UsageError("smoothing must be >= 0");
  for (std::size_t k = 0; k < corpus.items.size(); ++k) {
    const auto& item = corpus.items[k];
    if (item.empty() || item.size() > c.max_length()) {
      throw InputError("corpus item " + std::to_string(k + 1) + " has length " +
                       std::to_string(item.size()) + ", outside 1.." +
                       std::to_string(c.max_length()));
    }
  }
  const auto items = unique_items(corpus);

  TrainReport report;
  report.epochs = options.epochs;
  report.smoothing = options.smoothing;
  report.tokens = corpus.total_tokens();

  std::vector<double> counts(c.num_edges());
  // One E-step: returns the corpus log-likelihood under the current weights
  // and fills `counts` with expected edge flows.
  auto e_step = [&]() {
    std::fill(counts.begin(), counts.end(), 0.0);
    double ll = 0.0;
    for (const auto& u : items) {
      Evidence e = Evidence::full(*u.seq, c.max_length());
      NodeValues values = evaluate_nodes(c, e);
      const double p = values.root_probability(c.root());
      if (!(p > 0.0)) {
        throw InputError("corpus item " + std::to_string(u.first_index + 1) +
                         " ('" + c.vocab().render(*u.seq) +
                         "') has probability 0 under the circuit");
      }
      ll += u.count * (values.log_domain ? values.values[c.root()]
                                         : std::log(p));
      Flows f = compute_flows(c, e, values);
      for (std::size_t k = 0; k < counts.size(); ++k) {
        counts[k] += u.count * f.edge[k];
      }
    }
    return ll;
  };

  auto m_step = [&]() {
    auto& w = c.edge_weights();
    for (NodeId id = 0; id < c.size(); ++id) {
      const Node& node = c.node(id);
      if (node.kind != NodeKind::kSum || node.edge_count == 0) continue;
      const std::uint32_t eb = node.edge_begin;
      const std::uint32_t ee = eb + node.edge_count;
      double total = 0.0;
      for (std::uint32_t k = eb; k < ee; ++k) total += counts[k];
      const double denom = total + options.smoothing * node.edge_count;
      // A node that saw no flow and has no smoothing keeps its weights.
      if (!(denom > 0.0)) continue;
      for (std::uint32_t k = eb; k < ee; ++k) {
        w[k] = (counts[k] + options.smoothing) / denom;
      }
    }
  };

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    report.loglik.push_back(e_step());
    m_step();
  }
  report.loglik.push_back(e_step());
  return report;
}

}  // namespace pcfuzz
