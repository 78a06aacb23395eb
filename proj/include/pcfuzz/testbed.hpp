#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pcfuzz/circuit.hpp"
#include "pcfuzz/cnf.hpp"
#include "pcfuzz/corpus.hpp"
#include "pcfuzz/learning.hpp"
#include "pcfuzz/sampling.hpp"

namespace pcfuzz {

// Token-pattern stand-in for a fault-triggering condition.
struct BugOracle {
  std::string id;
  TokenSeq ordered;           // must occur as a subsequence, in order
  std::vector<TokenId> any;   // must all occur, in any order
  std::optional<std::pair<TokenId, std::size_t>> min_count;
};

bool check_oracle(const BugOracle& o, const TokenSeq& w);

// One oracle per line: `id<TAB>ordered=A,B<TAB>any=X,Y<TAB>min=T:5`; the
// three requirement fields are optional but at least one must be present.
std::vector<BugOracle> parse_oracles(std::string_view text,
                                     const Vocabulary& vocab);
std::vector<BugOracle> load_oracles(const std::filesystem::path& path,
                                    const Vocabulary& vocab);
std::string format_oracles(const std::vector<BugOracle>& oracles,
                           const Vocabulary& vocab);

// Source of candidate inputs. Returning nullopt or throwing pcfuzz::Error
// marks the draw as non-executable.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string name() const = 0;
  virtual std::optional<TokenSeq> generate(Rng& rng) = 0;
};

std::unique_ptr<Generator> make_pc_generator(const Circuit& c);
std::unique_ptr<Generator> make_conditioned_generator(
    const Circuit& c, const Constraint& q, const SamplerOptions& options = {});
std::unique_ptr<Generator> make_derivation_generator(const CnfGrammar& g,
                                                     std::size_t max_len);
std::unique_ptr<Generator> make_hmm_generator(const Hmm& h, std::size_t max_len);
std::unique_ptr<Generator> make_pcfg_generator(const Pcfg& p, std::size_t max_len);
std::unique_ptr<Generator> make_constant_generator(TokenSeq w);

struct CampaignConfig {
  std::size_t count = 10000;
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
  // Inputs must parse under this grammar to count as executable.
  const CnfGrammar* grammar = nullptr;
  // When set, inputs must also be concretizable.
  const ConcretizerSpec* concretizer = nullptr;
  std::vector<TokenId> sensitive_tokens;
  std::optional<TokenId> wildcard;
};

struct OracleMetrics {
  std::string id;
  double triggers = 0.0;  // mean over repeats
  double distinct = 0.0;  // mean over repeats
};

struct CampaignMetrics {
  std::string generator;
  std::size_t count = 0;
  std::size_t repeats = 0;
  double executable_rate = 0.0;
  double bug_coverage = 0.0;
  double total_triggers = 0.0;
  double distinct_inputs = 0.0;  // distinct inputs triggering any oracle
  double sensitive_rate = 0.0;
  std::vector<OracleMetrics> per_oracle;
  // distinct[r][i]: distinct triggering inputs of oracle i in repeat r.
  std::vector<std::vector<std::size_t>> per_repeat_distinct;
};

CampaignMetrics run_campaign(Generator& gen,
                             const std::vector<BugOracle>& oracles,
                             const CampaignConfig& config);

// Mean over repeats of the fraction of oracles triggered by at least one of
// the runs in that repeat.
double union_coverage(const std::vector<CampaignMetrics>& runs);

struct Comparison {
  std::string model;
  std::string baseline;
  std::vector<std::string> oracle_ids;
  std::vector<double> delta;  // D_M(i) - D_B(i)
  double mean_diversity = 0.0;
  std::vector<std::string> new_bugs;
  std::optional<double> alignment;
};

// Throws UsageError when the oracle sets differ or a target is unknown.
// Alignment is the fraction of `targets` the model triggers.
Comparison compare(const CampaignMetrics& model,
                   const CampaignMetrics& baseline,
                   const std::vector<std::string>& targets = {});

std::string format_metrics(const CampaignMetrics& m);
std::string format_comparison(const Comparison& c);
// Grid of mean distinct triggers: one row per oracle, one column per run.
std::string format_heatmap(const std::vector<CampaignMetrics>& runs);

}  // namespace pcfuzz
