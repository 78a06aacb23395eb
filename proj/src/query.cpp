#include "pcfuzz/query.hpp"

#include <algorithm>

#include "pcfuzz/error.hpp"
#include "pcfuzz/text.hpp"

namespace pcfuzz {

std::string QueryResult::value_string(const Vocabulary& vocab) const {
  if (const auto* p = std::get_if<double>(&value)) return text::format_double(*p);
  return vocab.name(std::get<TokenId>(value));
}

namespace {

using Words = std::vector<std::string>;

[[noreturn]] void bad_query(std::string_view line, const std::string& why) {
  throw UsageError("bad query '" + std::string(line) + "': " + why);
}

TokenId token(const Circuit& c, const std::string& name) {
  TokenId t = c.vocab().id(name);
  if (t == Vocabulary::kEndMarker) {
    throw InputError("the end marker cannot appear in a query");
  }
  return t;
}

TokenSeq tokens(const Circuit& c, Words::const_iterator b,
                Words::const_iterator e) {
  TokenSeq out;
  for (; b != e; ++b) out.push_back(token(c, *b));
  return out;
}

std::size_t position(std::string_view line, const std::string& s) {
  try {
    return text::parse_size(s);
  } catch (const InputError&) {
    bad_query(line, "expected a position, got '" + s + "'");
  }
}

}  // namespace

QueryResult run_query(const Circuit& c, std::string_view line, bool explain) {
  const Words w = text::split_whitespace(line);
  QueryResult r;
  r.query = text::join(w, " ");
  if (w.empty()) bad_query(line, "empty query");
  const std::string& op = w[0];
  if (op == "EVI") {
    if (w.size() < 2) bad_query(line, "EVI needs a token sequence");
    TokenSeq seq = tokens(c, w.begin() + 1, w.end());
    r.value = evi(c, seq);
    if (explain) r.trace = explain_evi(c, seq);
  } else if (op == "MAR") {
    if (w.size() != 2) bad_query(line, "MAR takes one token");
    r.value = mar_contains(c, token(c, w[1]));
  } else if (op == "MARSPAN") {
    if (w.size() < 3) bad_query(line, "MARSPAN needs a position and tokens");
    r.value = mar_span(c, tokens(c, w.begin() + 2, w.end()), position(line, w[1]));
  } else if (op == "COND") {
    if (w.size() != 4 || w[2] != "GIVEN") bad_query(line, "expected COND t2 GIVEN t1");
    r.value = cond_contains(c, token(c, w[1]), token(c, w[3]));
  } else if (op == "CONDAT") {
    auto given = std::find(w.begin(), w.end(), "GIVEN");
    if (given == w.end() || given - w.begin() < 3 || w.end() - given < 3) {
      bad_query(line, "expected CONDAT p2 tokens GIVEN p1 tokens");
    }
    r.value = cond_span(c, tokens(c, w.begin() + 2, given), position(line, w[1]),
                        tokens(c, given + 2, w.end()), position(line, *(given + 1)));
  } else if (op == "CONDAFTER") {
    if (w.size() < 5 || w[2] != "GIVEN") {
      bad_query(line, "expected CONDAFTER t GIVEN p tokens");
    }
    r.value = cond_after_span(c, token(c, w[1]), tokens(c, w.begin() + 4, w.end()),
                              position(line, w[3]));
  } else if (op == "MMAP") {
    if (w.size() == 3 && w[1] == "AFTER") {
      r.value = mmap_after(c, token(c, w[2]));
    } else if (w.size() == 4 && w[1] == "NEXT") {
      r.value = mmap_next_at(c, token(c, w[2]), position(line, w[3]));
    } else {
      bad_query(line, "expected MMAP AFTER t or MMAP NEXT t p");
    }
  } else {
    bad_query(line, "unknown query kind '" + op + "'");
  }
  return r;
}

std::vector<QueryResult> run_queries(const Circuit& c, std::string_view text_in,
                                     bool explain) {
  std::vector<QueryResult> out;
  auto lines = text::split(text_in, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (line.empty() || line[0] == '#') continue;
    try {
      out.push_back(run_query(c, line, explain));
    } catch (const Error& e) {
      const std::string msg = "query line " + std::to_string(i + 1) + ": " + e.what();
      switch (e.error_class()) {
        case ErrorClass::kUsage: throw UsageError(msg);
        case ErrorClass::kInput: throw InputError(msg);
        case ErrorClass::kCapacity: throw CapacityError(msg);
        case ErrorClass::kNumeric: throw NumericError(msg);
      }
    }
  }
  return out;
}

std::string format_results(const std::vector<QueryResult>& results,
                           const Vocabulary& vocab) {
  std::string out;
  for (const auto& r : results) {
    out += r.query + "\t" + r.value_string(vocab) + "\n";
    for (const auto& t : r.trace) {
      out += "#\t" + t.label + "\t" + text::format_double(t.flow) + "\n";
    }
  }
  return out;
}

}  // namespace pcfuzz
