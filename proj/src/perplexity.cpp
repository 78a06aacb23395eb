#include <cmath>

#include "pcfuzz/error.hpp"
#include "pcfuzz/learning.hpp"

namespace pcfuzz {

double perplexity(const LoglikFn& loglik, const Corpus& test,
                  const PerplexityOptions& options) {
  const double eps = options.smooth_eval;
  if (eps < 0.0 || eps >= 1.0) {
    throw UsageError("smooth-eval weight must lie in [0, 1)");
  }
  if (eps > 0.0 && (options.max_length == 0 || options.real_tokens == 0)) {
    throw UsageError("smooth-eval needs the max length and vocabulary size");
  }
  const std::size_t total = test.total_tokens();
  if (total == 0) throw InputError("perplexity of an empty test corpus");
  double sum = 0.0;
  for (std::size_t k = 0; k < test.items.size(); ++k) {
    const auto& item = test.items[k];
    double ll = loglik(item);
    if (eps > 0.0) {
      // log((1 - eps) P(w) + eps U(w)) with U uniform over lengths and tokens.
      const double lu = std::log(eps) -
                        std::log(static_cast<double>(options.max_length)) -
                        static_cast<double>(item.size()) *
                            std::log(static_cast<double>(options.real_tokens));
      const double lp = std::log1p(-eps) + ll;
      const double m = std::max(lp, lu);
      ll = m + std::log(std::exp(lp - m) + std::exp(lu - m));
    }
    if (!std::isfinite(ll)) {
      throw NumericError("test item " + std::to_string(k + 1) +
                         " has probability 0 under the model; enable "
                         "smooth-eval to score it");
    }
    sum += ll;
  }
  return std::exp(-sum / static_cast<double>(total));
}

}  // namespace pcfuzz
